#pragma once
// Centralities, communities and correlations over the inferred influence
// graph and cluster volume series.

#include <cstdint>
#include <optional>
#include <tuple>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "nflow/bias.hpp"
#include "nflow/corpus.hpp"
#include "nflow/netinf.hpp"

namespace nflow {

/// Dense weighted adjacency, w[src * n + dst].
struct WeightedDigraph {
  std::size_t n = 0;
  std::vector<double> w;

  WeightedDigraph() = default;
  explicit WeightedDigraph(std::size_t nodes) : n(nodes), w(nodes * nodes, 0.0) {}
  double& at(std::size_t src, std::size_t dst) { return w[src * n + dst]; }
  double at(std::size_t src, std::size_t dst) const { return w[src * n + dst]; }
  bool all_zero() const noexcept;
};

/// Edge weight = copies, or 1 per edge when `weighted` is false.
WeightedDigraph to_digraph(const InfluenceGraph& graph, bool weighted = true);

enum class CentralityFlow {
  InLink,   // x = A^T x: a node scores high when high scorers point to it
  OutLink,  // x = A x
};

struct PowerIterationOptions {
  double tolerance = 1e-10;
  std::size_t max_iters = 1000;
  double damping = 1e-12;  // eta in A + eta J
};

/// L2-normalized nonnegative principal eigenvector of A^T + eta J (or
/// A + eta J). All-zero weights give uniform scores and a warning.
std::vector<double> eigenvector_centrality(const WeightedDigraph& g, CentralityFlow flow = CentralityFlow::InLink,
                                           const PowerIterationOptions& options = {});

struct HitsScores {
  std::vector<double> hub;
  std::vector<double> authority;
};
/// a = A^T h, h = A a, both L2-normalized every step.
HitsScores hits(const WeightedDigraph& g, const PowerIterationOptions& options = {});

struct CentralityReport {
  std::vector<double> eigenvector;
  std::vector<double> hub;
  std::vector<double> authority;
  std::vector<double> weighted_in_degree;
};
CentralityReport centrality_report(const WeightedDigraph& g, CentralityFlow flow = CentralityFlow::InLink);
std::string centrality_to_csv(const CentralityReport& r, const SiteRegistry& sites);

/// Undirected weighted graph; self-loops kept apart from neighbor lists.
struct UndirectedGraph {
  std::vector<std::vector<std::pair<std::uint32_t, double>>> adj;  // sorted by neighbor, no self entries
  std::vector<double> loop;                                        // w_uu
  std::size_t size() const noexcept { return adj.size(); }
  /// k_u = sum of neighbor weights + 2 w_uu.
  double degree(std::size_t u) const;
  double total_weight() const;  // 2m
};
/// w_uv = A_uv + A_vu.
UndirectedGraph undirected_projection(const WeightedDigraph& g);
UndirectedGraph undirected_from_edges(std::size_t n, std::span<const std::tuple<std::uint32_t, std::uint32_t, double>> edges);

/// Q = sum_c [in_c / 2m - (tot_c / 2m)^2]; 0 for a graph without weight.
double modularity(const UndirectedGraph& g, std::span<const std::uint32_t> community);

struct LouvainResult {
  std::vector<std::uint32_t> community;  // ids 0.. ordered by smallest member
  double modularity = 0.0;
  std::vector<double> phase_modularity;  // singletons first, then after each phase
};
/// Two-phase Louvain at resolution 1. Nodes are visited in id order; a node
/// moves only on strictly positive gain, and among equal best gains the
/// lowest community id wins, so no randomness is involved.
LouvainResult louvain(const UndirectedGraph& g);
std::string communities_to_csv(const LouvainResult& r, const SiteRegistry& sites);

/// Pearson r; nullopt when either series has zero variance. Throws Error on
/// length mismatch or fewer than two points.
std::optional<double> volume_correlation(std::span<const double> a, std::span<const double> b);

struct FeatureMatrix {
  std::vector<std::string> columns;  // "target:direction"
  std::vector<SiteIndex> rows;
  std::vector<std::vector<double>> values;
  std::vector<std::vector<bool>> covered;  // per row, per target
  std::vector<std::string> targets;
  std::vector<Reliability> labels;
};
/// Rows: every registry site with at least one aggregate. Targets: the
/// top_narratives targets by article count (ties by name), in name order.
FeatureMatrix reliability_feature_matrix(const std::vector<StanceAggregate>& aggregates, const SiteRegistry& sites,
                                         std::size_t top_narratives);
std::string feature_matrix_to_csv(const FeatureMatrix& m, const SiteRegistry& sites);
std::string feature_coverage_to_csv(const FeatureMatrix& m, const SiteRegistry& sites);

}  // namespace nflow
