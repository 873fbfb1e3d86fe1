#pragma once
// Story identification: DP-Means with delayed cluster creation over unit
// passage embeddings, single-site pruning and per-ecosystem volume series.

#include <array>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "nflow/corpus.hpp"

namespace nflow {

struct ClusterParams {
  double min_cos = 0.50;
  std::size_t max_outer_iters = 50;
  double converge_frac = 0.001;
  std::size_t new_clusters_per_iter = 1;
  std::uint64_t seed = 0;

  /// Throws Error when out of range.
  void validate() const;
  /// DP-Means penalty on unit vectors: d^2 = 2(1 - cos).
  double penalty() const noexcept { return 2.0 * (1.0 - min_cos); }
};

struct DpMeansIteration {
  std::size_t clusters = 0;
  std::size_t changed = 0;
  std::size_t candidates = 0;
  double objective = 0.0;  // measured right after the assignment step
};

struct DpMeansResult {
  std::vector<std::vector<float>> centroids;  // unit vectors, index = cluster
  std::vector<std::uint32_t> assignment;      // row -> cluster
  std::vector<double> similarity;             // row -> cos to assigned centroid
  std::vector<DpMeansIteration> history;
  std::size_t iterations = 0;
  bool converged = false;
};

/// Rows must be unit norm. Argmax ties go to the lowest cluster index and
/// farthest-candidate ties to the lowest row index, so the result depends only
/// on the input order and seed, never on thread count.
///
/// `initial` seeds the run with existing centroids (daily batches); with
/// `freeze_initial` those centroids are never moved or deleted.
DpMeansResult dp_means(const EmbeddingMatrix& matrix, const ClusterParams& params,
                       std::span<const std::vector<float>> initial = {},
                       bool freeze_initial = false);

/// sum ||x - mu_a(x)||^2 + penalty * k for explicit centroids.
double dp_means_objective(const EmbeddingMatrix& matrix, std::span<const std::uint32_t> assignment,
                          std::span<const std::vector<float>> centroids, double min_cos);

struct StoryCluster {
  std::uint64_t cluster_id = 0;
  std::vector<float> centroid;
  std::vector<std::uint64_t> member_passages;  // sorted
  std::map<SiteIndex, std::size_t> site_histogram;
  bool pruned = false;

  std::size_t size() const noexcept { return member_passages.size(); }
  double max_site_share() const noexcept;
};

/// Builds clusters from a result whose rows are `row_passages` (passage
/// positions in the corpus).
std::vector<StoryCluster> make_story_clusters(const DpMeansResult& result, const Corpus& corpus,
                                              std::span<const std::size_t> row_passages);

/// pruned = max site share >= threshold.
void prune_single_site(std::vector<StoryCluster>& clusters, double threshold = 0.5);

/// Distinct-article counts per ecosystem per bucket. Buckets are aligned to
/// day 0: bucket b covers [b*bucket_days, (b+1)*bucket_days).
struct VolumeSeries {
  std::int64_t first_bucket = 0;
  std::array<std::vector<std::size_t>, kEcosystemCount> counts;
  bool empty() const noexcept { return counts[0].empty(); }
};
VolumeSeries cluster_volume_series(const StoryCluster& cluster, const Corpus& corpus,
                                   std::uint32_t bucket_days);

// Artifacts.
std::string clusters_to_jsonl(const std::vector<StoryCluster>& clusters);
std::vector<StoryCluster> clusters_from_jsonl(const std::filesystem::path& path, const Corpus& corpus);
/// u64 LE per passage in ascending passage_id order.
std::string encode_assignment(const std::vector<StoryCluster>& clusters, const Corpus& corpus);

}  // namespace nflow
