#pragma once
// Stance aggregation per (site, target), simplistic bias scores, Bayesian
// ridge bias latents and Jensen-Shannon divergence.

#include <cstdint>
#include <map>
#include <set>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "nflow/corpus.hpp"
#include "nflow/labeler.hpp"
#include "nflow/linalg.hpp"

namespace nflow {

struct StanceAggregate {
  SiteIndex site = 0;
  std::string target;
  double pro_pct = 0.0;
  double against_pct = 0.0;
  double neutral_pct = 0.0;
  std::size_t article_count = 0;
};

/// Which passages may speak about a target: those in clusters that carry
/// the target among their top PMI keywords.
class StanceScope {
 public:
  StanceScope(const std::map<std::string, std::set<std::uint64_t>>& clusters_by_target,
              const std::vector<StoryCluster>& clusters);
  bool contains(std::uint64_t passage_id, const std::string& target) const;

 private:
  std::map<std::string, std::set<std::uint64_t>> clusters_by_target_;
  std::unordered_map<std::uint64_t, std::uint64_t> cluster_of_;
};

/// Plurality over each article's in-scope labeled passages (ties Neutral).
/// A null scope admits every label. Unknown passages throw InputError naming
/// the offending rows.
std::vector<ArticleStance> article_stances(const std::vector<StanceInput>& labels, const Corpus& corpus,
                                           const StanceScope* scope);

/// Sorted by (site, target).
std::vector<StanceAggregate> aggregate_stances(const std::vector<ArticleStance>& articles);
std::vector<StanceAggregate> aggregate_stances(const std::vector<StanceInput>& labels, const Corpus& corpus,
                                               const StanceScope* scope);

inline double simplistic_bias(const StanceAggregate& a) noexcept { return a.pro_pct - a.against_pct; }

/// Population z-scores. Throws Error for n < 2 or zero variance.
std::vector<double> zscore(std::span<const double> values);

struct RidgePosterior {
  std::vector<double> mean;
  std::vector<double> stddev;
  double lambda = 0.0;
  double noise_variance = 1.0;
};

/// w = (X^T X + lambda I)^{-1} X^T y, std = sqrt(noise_variance * diag((X^T X + lambda I)^{-1})).
RidgePosterior ridge_posterior(const linalg::Matrix& x, const std::vector<double>& y, double lambda,
                               double noise_variance);

struct BiasCoefficient {
  Stance direction = Stance::Pro;
  std::string feature_target;
  double coef = 0.0;
  double stddev = 0.0;
};

struct BiasLatent {
  std::string target;
  std::vector<SiteIndex> seed_sites;
  std::map<SiteIndex, double> z_scores;  // seeds observed, others predicted
  std::vector<BiasCoefficient> coefficients;  // |coef| descending
  double prior_precision = 1.0;
  double noise_variance = 1.0;
  double lambda = 1.0;

  bool is_seed(SiteIndex s) const;
};

/// Seeds: sites with >= min_articles articles on the target. Features: the
/// seeds' Pro and Against shares for every other target, centered over
/// covering seeds, missing entries at the column mean, constant columns
/// dropped. Noise variance starts at var(y) = 1 and is re-estimated once
/// from the residuals; lambda = prior_precision * noise_variance.
BiasLatent fit_bias_latent(const std::string& target, const std::vector<StanceAggregate>& aggregates,
                           std::size_t min_articles = 250, double prior_precision = 1.0);

/// Base-2 JS divergence in [0,1]. Throws Error on support mismatch or
/// inputs that are not distributions.
double js_divergence(std::span<const double> p, std::span<const double> q);

std::string aggregates_to_csv(const std::vector<StanceAggregate>& rows, const SiteRegistry& sites);
std::string latent_to_csv(const std::vector<BiasLatent>& latents, const SiteRegistry& sites);
std::string coefficients_to_csv(const std::vector<BiasLatent>& latents);

}  // namespace nflow
