#pragma once
// Greedy inference of the site influence network from time cascades.
//
// Each cascade is explained by its most likely propagation tree: every
// non-root event j picks the earlier event i maximizing
//   w(i,j) = beta * alpha * exp(-alpha (t_j - t_i))     if (i,j) is in G
//            epsilon * alpha * exp(-alpha (t_j - t_i))  otherwise.
// The objective F_C(G) is the summed log-likelihood improvement over the
// empty graph. F_C is monotone submodular in the edge set, so greedy edge
// selection with lazy re-evaluation picks the same edges as full
// re-evaluation.

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "nflow/cascade.hpp"
#include "nflow/corpus.hpp"

namespace nflow {

struct TransmissionModel {
  double alpha_t = 1.0;  // exponential rate per day
  double beta = 0.5;     // transmission probability on an edge
  double epsilon = 1e-9; // external infection floor

  void validate() const;
  /// log w(i,j) for a delay dt > 0.
  double log_weight(bool has_edge, double dt) const noexcept;
};

class EdgeSet {
 public:
  void insert(SiteIndex src, SiteIndex dst) { keys_.insert(key(src, dst)); }
  bool contains(SiteIndex src, SiteIndex dst) const { return keys_.contains(key(src, dst)); }
  std::size_t size() const noexcept { return keys_.size(); }

 private:
  static std::uint64_t key(SiteIndex s, SiteIndex d) {
    return (static_cast<std::uint64_t>(s) << 32) | d;
  }
  std::unordered_set<std::uint64_t> keys_;
};

struct InfluenceEdge {
  SiteIndex src = 0;
  SiteIndex dst = 0;
  double marginal_gain = 0.0;
  std::size_t copies = 0;
  double mean_delay_days = 0.0;
  double cum_gain_frac = 0.0;
};

struct InfluenceGraph {
  std::size_t node_count = 0;
  std::vector<InfluenceEdge> edges;      // greedy order, after the cut
  std::vector<double> cumulative_gain;   // per edge prefix
  double total_gain = 0.0;               // gain of the full greedy run
  std::size_t greedy_edges = 0;          // edges selected before the cut
  std::size_t cascades = 0;

  EdgeSet edge_set() const;
};

/// sum over non-root events of log max_i w(i,j); events with no strictly
/// earlier event contribute nothing.
double cascade_log_likelihood(const Cascade& cascade, const EdgeSet& graph,
                              const TransmissionModel& model);

/// F_C(G) = sum_c [LL(c, G) - LL(c, empty)].
double netinf_objective(const std::vector<Cascade>& cascades, const EdgeSet& graph,
                        const TransmissionModel& model);

struct NetinfOptions {
  std::size_t k_max = 1000;
  double cut_fraction = 0.9;
  bool lazy = true;  // priority-queue re-evaluation; false re-scores every candidate per step
};

/// Greedy edge selection up to k_max edges or until no edge has positive
/// gain, then the shortest prefix reaching cut_fraction of the achieved gain.
/// Equal gains break toward the lexicographically smaller (src, dst).
InfluenceGraph netinf_greedy(const std::vector<Cascade>& cascades, std::size_t node_count,
                             const TransmissionModel& model, const NetinfOptions& options);

/// Rows are destination ecosystems, columns source ecosystems, in
/// (reliable, mixed, unreliable) order.
struct CopyMatrix {
  std::array<std::array<std::size_t, kEcosystemCount>, kEcosystemCount> copies{};
  std::array<std::array<double, kEcosystemCount>, kEcosystemCount> share{};
  std::array<std::array<double, kEcosystemCount>, kEcosystemCount> mean_delay{};   // NaN when no copies
  std::array<std::array<double, kEcosystemCount>, kEcosystemCount> delay_delta{};  // vs global mean
  std::array<bool, kEcosystemCount> row_defined{};
  double global_mean_delay = 0.0;
};
CopyMatrix ecosystem_copy_matrix(const InfluenceGraph& graph, const SiteRegistry& sites);

std::string graph_to_tsv(const InfluenceGraph& graph, const SiteRegistry& sites);
InfluenceGraph graph_from_tsv(const std::filesystem::path& path, const SiteRegistry& sites);
std::string graph_manifest_json(const InfluenceGraph& graph, const TransmissionModel& model,
                                const NetinfOptions& options);
std::string copy_matrix_to_csv(const CopyMatrix& m);

}  // namespace nflow
