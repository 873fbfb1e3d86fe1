#pragma once
// PMI keyword labels for story clusters, PMI stance associations per
// ecosystem and stance-target selection.

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "nflow/cluster.hpp"
#include "nflow/corpus.hpp"
#include "nflow/text.hpp"

namespace nflow {

struct PmiEntry {
  std::string unit;
  double pmi = 0.0;
  double count = 0.0;  // unsmoothed joint count
};

/// log2 P(u,g) / (P(u) P(g)) over a sparse unit x group count table, with
/// alpha added to every cell of the full vocabulary x group grid.
class PmiTable {
 public:
  PmiTable(std::vector<std::map<std::string, double>> group_counts, double alpha);

  std::size_t groups() const noexcept { return counts_.size(); }
  std::size_t vocabulary() const noexcept { return unit_totals_.size(); }
  double alpha() const noexcept { return alpha_; }

  /// -inf when the smoothed joint count is zero.
  double score(const std::string& unit, std::size_t group) const;
  /// Units observed in `group` with count >= min_count, by PMI descending,
  /// ties lexicographic.
  std::vector<PmiEntry> ranked(std::size_t group, std::size_t top_k, double min_count = 0.0) const;

 private:
  std::vector<std::map<std::string, double>> counts_;
  std::map<std::string, double> unit_totals_;
  std::vector<double> group_totals_;
  double grand_total_ = 0.0;
  double alpha_ = 1.0;
};

struct ClusterKeywords {
  std::uint64_t cluster_id = 0;
  std::vector<PmiEntry> keywords;
};

struct PmiOptions {
  std::size_t top_k = 10;
  double alpha = 1.0;
  text::Normalizer normalizer = &text::stem;
};

/// Stopwords removed, remaining tokens normalized, token counts per cluster.
/// Pruned clusters are skipped and excluded from the PMI corpus.
std::vector<ClusterKeywords> pmi_keywords(const std::vector<StoryCluster>& clusters,
                                          const Corpus& corpus, const PmiOptions& options = {});

/// Article-level stance toward one target.
struct ArticleStance {
  std::uint64_t article_id = 0;
  SiteIndex site = 0;
  std::string target;
  Stance stance = Stance::Neutral;
};

struct StanceAssociation {
  Reliability ecosystem = Reliability::Reliable;
  std::size_t rank = 0;
  Stance direction = Stance::Pro;
  std::string target;
  double pmi = 0.0;
  std::size_t articles = 0;
};

/// PMI of (direction, target) tags against ecosystems. A tag is ranked for an
/// ecosystem only when it appears in at least min_articles of that
/// ecosystem's articles.
std::vector<StanceAssociation> pmi_stance_associations(const std::vector<ArticleStance>& stances,
                                                       const SiteRegistry& sites,
                                                       std::size_t min_articles = 500,
                                                       std::size_t top_k = 10, double alpha = 1.0);

/// Numbers, money, percentages, ordinals, month and weekday names.
bool is_blocked_pattern(std::string_view token);

/// Global targets ranked by how many clusters carry them among their top
/// scope_k keywords, after stopword, first-name and pattern filtering.
std::vector<std::string> select_stance_targets(const std::vector<ClusterKeywords>& keywords,
                                               const std::unordered_set<std::string>& stopwords,
                                               const std::unordered_set<std::string>& blocked_names,
                                               std::size_t top_n_entities = 5000,
                                               std::size_t scope_k = 10);

/// target -> clusters whose top scope_k keywords contain it.
std::map<std::string, std::set<std::uint64_t>> stance_scope(const std::vector<ClusterKeywords>& keywords,
                                                            const std::vector<std::string>& targets,
                                                            std::size_t scope_k = 10);

std::string keywords_to_csv(const std::vector<ClusterKeywords>& keywords);
std::vector<ClusterKeywords> keywords_from_csv(const std::filesystem::path& path);
std::string stance_associations_to_csv(const std::vector<StanceAssociation>& rows);

}  // namespace nflow
