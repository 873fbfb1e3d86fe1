#pragma once
// Story clusters as site-level time cascades, plus predominance and stance
// filters and the unreliable/reliable coverage ratio.

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "nflow/cluster.hpp"
#include "nflow/corpus.hpp"

namespace nflow {

struct CascadeEvent {
  SiteIndex site = 0;
  double t = 0.0;
  bool operator==(const CascadeEvent&) const = default;
};

/// One event per site, sorted by (t, site).
struct Cascade {
  std::uint64_t cluster_id = 0;
  std::vector<CascadeEvent> events;
  double horizon = 0.0;
  bool operator==(const Cascade&) const = default;
};

enum class Predominance { None, UnreliablePlurality, UnreliableAndMixedPlurality };
std::optional<Predominance> parse_predominance(std::string_view s) noexcept;

struct StanceSelector {
  Stance direction = Stance::Against;
  std::string target;
};

struct CascadeFilter {
  Predominance predominance = Predominance::None;
  std::optional<StanceSelector> stance;
  std::size_t min_sites = 2;
};

/// Distinct articles per ecosystem (reliable, mixed, unreliable).
using EcosystemCounts = std::array<std::size_t, kEcosystemCount>;
std::map<std::uint64_t, EcosystemCounts> cluster_ecosystem_counts(const std::vector<StoryCluster>& clusters,
                                                                  const Corpus& corpus);

/// Per (cluster, site): number of articles in the cluster and, per
/// (direction, target), how many of them carry that article-level stance.
struct SiteStanceTally {
  std::size_t articles = 0;
  std::map<std::pair<Stance, std::string>, std::size_t> carrying;
};
using StanceIndex = std::map<std::pair<std::uint64_t, SiteIndex>, SiteStanceTally>;

/// Article stance inside a cluster is the plurality over the article's
/// labeled passages in that cluster (ties Neutral). Labels for unknown
/// passages throw InputError.
StanceIndex build_stance_index(const std::vector<StoryCluster>& clusters, const Corpus& corpus,
                               const std::vector<StanceInput>& labels);

/// Non-pruned clusters only; clusters with fewer than min_sites sites dropped.
std::vector<Cascade> build_cascades(const std::vector<StoryCluster>& clusters, const Corpus& corpus,
                                    std::size_t min_sites = 2);

std::vector<Cascade> filter_cascades(const std::vector<Cascade>& cascades, const CascadeFilter& filter,
                                     const std::map<std::uint64_t, EcosystemCounts>& counts,
                                     const StanceIndex* stance_index);

struct EcosystemRatio {
  double ratio = 1.0;  // (unreliable + 1) / (reliable + 1)
  std::size_t unreliable = 0;
  std::size_t reliable = 0;
};

/// Articles (earliest passage day) with t0 <= day < t1.
EcosystemRatio ecosystem_ratio(const StoryCluster& cluster, const Corpus& corpus, double t0, double t1);

std::string cascades_to_jsonl(const std::vector<Cascade>& cascades, const SiteRegistry& sites);
std::vector<Cascade> cascades_from_jsonl(const std::filesystem::path& path, const SiteRegistry& sites);

}  // namespace nflow
