#include "nflow/bias.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <tuple>

#include <spdlog/spdlog.h>

#include "nflow/error.hpp"
#include "nflow/io.hpp"

namespace nflow {

StanceScope::StanceScope(const std::map<std::string, std::set<std::uint64_t>>& clusters_by_target,
                         const std::vector<StoryCluster>& clusters)
    : clusters_by_target_(clusters_by_target) {
  for (const auto& c : clusters) {
    if (c.pruned) continue;
    for (auto pid : c.member_passages) cluster_of_[pid] = c.cluster_id;
  }
}

bool StanceScope::contains(std::uint64_t passage_id, const std::string& target) const {
  auto t = clusters_by_target_.find(target);
  if (t == clusters_by_target_.end()) return false;
  auto c = cluster_of_.find(passage_id);
  return c != cluster_of_.end() && t->second.contains(c->second);
}

std::vector<ArticleStance> article_stances(const std::vector<StanceInput>& labels, const Corpus& corpus,
                                           const StanceScope* scope) {
  std::vector<std::size_t> bad_rows;
  std::map<std::pair<std::uint64_t, std::string>, std::pair<SiteIndex, std::array<std::size_t, 3>>> votes;
  for (std::size_t row = 0; row < labels.size(); ++row) {
    const auto& l = labels[row];
    auto pos = corpus.find_passage(l.passage_id);
    if (!pos) {
      bad_rows.push_back(row);
      continue;
    }
    if (scope && !scope->contains(l.passage_id, l.target)) continue;
    const auto& p = corpus.passages[*pos];
    auto& v = votes[{p.article_id, l.target}];
    v.first = p.site;
    ++v.second[static_cast<std::size_t>(l.stance)];
  }
  if (!bad_rows.empty()) {
    std::string msg = "stance labels reference unknown passages:";
    for (std::size_t i = 0; i < std::min<std::size_t>(bad_rows.size(), 20); ++i) {
      // +2: header line and 1-based numbering
      msg += " row " + std::to_string(bad_rows[i] + 2) + " (passage_id " +
             std::to_string(labels[bad_rows[i]].passage_id) + ")";
    }
    if (bad_rows.size() > 20) msg += " ... (" + std::to_string(bad_rows.size()) + " total)";
    throw InputError(msg);
  }
  std::vector<ArticleStance> out;
  out.reserve(votes.size());
  for (const auto& [key, v] : votes) {
    out.push_back({key.first, v.first, key.second, majority_stance(v.second)});
  }
  return out;
}

std::vector<StanceAggregate> aggregate_stances(const std::vector<ArticleStance>& articles) {
  std::map<std::pair<SiteIndex, std::string>, std::array<std::size_t, 3>> tally;
  for (const auto& a : articles) ++tally[{a.site, a.target}][static_cast<std::size_t>(a.stance)];
  std::vector<StanceAggregate> out;
  out.reserve(tally.size());
  for (const auto& [key, t] : tally) {
    const std::size_t n = t[0] + t[1] + t[2];
    const double dn = static_cast<double>(n);
    StanceAggregate a;
    a.site = key.first;
    a.target = key.second;
    a.article_count = n;
    a.pro_pct = static_cast<double>(t[0]) / dn;
    a.against_pct = static_cast<double>(t[1]) / dn;
    a.neutral_pct = static_cast<double>(t[2]) / dn;
    out.push_back(std::move(a));
  }
  return out;
}

std::vector<StanceAggregate> aggregate_stances(const std::vector<StanceInput>& labels, const Corpus& corpus,
                                               const StanceScope* scope) {
  return aggregate_stances(article_stances(labels, corpus, scope));
}

std::vector<double> zscore(std::span<const double> values) {
  if (values.size() < 2) throw Error("zscore requires at least two values");
  const double n = static_cast<double>(values.size());
  const double mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  const double sd = std::sqrt(ss / n);
  if (!(sd > 0.0)) throw Error("zscore of constant input is undefined (zero variance)");
  std::vector<double> out(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) out[i] = (values[i] - mean) / sd;
  return out;
}

RidgePosterior ridge_posterior(const linalg::Matrix& x, const std::vector<double>& y, double lambda,
                               double noise_variance) {
  if (y.size() != x.rows) throw Error("ridge: response length does not match rows");
  if (!(lambda > 0.0)) throw Error("ridge: lambda must be positive");
  auto a = linalg::gram(x);
  for (std::size_t i = 0; i < a.rows; ++i) a(i, i) += lambda;
  const auto l = linalg::cholesky(a);
  RidgePosterior post;
  post.lambda = lambda;
  post.noise_variance = noise_variance;
  post.mean = linalg::cholesky_solve(l, linalg::xt_times(x, y));
  const auto diag = linalg::cholesky_inverse_diagonal(l);
  post.stddev.resize(diag.size());
  for (std::size_t i = 0; i < diag.size(); ++i) post.stddev[i] = std::sqrt(noise_variance * diag[i]);
  return post;
}

bool BiasLatent::is_seed(SiteIndex s) const {
  return std::binary_search(seed_sites.begin(), seed_sites.end(), s);
}

BiasLatent fit_bias_latent(const std::string& target, const std::vector<StanceAggregate>& aggregates,
                           std::size_t min_articles, double prior_precision) {
  if (!(prior_precision > 0.0)) throw Error("prior_precision must be positive");
  std::map<SiteIndex, std::map<std::string, const StanceAggregate*>> by_site;
  std::set<std::string> feature_targets;
  for (const auto& a : aggregates) {
    by_site[a.site][a.target] = &a;
    if (a.target != target) feature_targets.insert(a.target);
  }

  BiasLatent out;
  out.target = target;
  out.prior_precision = prior_precision;
  std::vector<double> raw;
  for (const auto& [site, targets] : by_site) {
    auto it = targets.find(target);
    if (it != targets.end() && it->second->article_count >= min_articles) {
      out.seed_sites.push_back(site);
      raw.push_back(simplistic_bias(*it->second));
    }
  }
  if (out.seed_sites.size() < 10) {
    throw Error("insufficient seed sites for '" + target + "': " + std::to_string(out.seed_sites.size()) +
                " sites have >= " + std::to_string(min_articles) + " articles (need 10)");
  }
  const auto y = zscore(raw);

  struct Column {
    std::string target;
    Stance direction;
    double mean;
  };
  auto value = [&](SiteIndex s, const std::string& t, Stance d) -> std::optional<double> {
    const auto& targets = by_site.at(s);
    auto it = targets.find(t);
    if (it == targets.end()) return std::nullopt;
    return d == Stance::Pro ? it->second->pro_pct : it->second->against_pct;
  };
  std::vector<Column> columns;
  for (const auto& t : feature_targets) {
    for (Stance d : {Stance::Pro, Stance::Against}) {
      double sum = 0.0;
      std::size_t covered = 0;
      for (auto s : out.seed_sites) {
        if (auto v = value(s, t, d)) {
          sum += *v;
          ++covered;
        }
      }
      if (covered == 0) continue;
      const double mean = sum / static_cast<double>(covered);
      double spread = 0.0;
      for (auto s : out.seed_sites) {
        const auto v = value(s, t, d);
        const double c = v ? *v - mean : 0.0;
        spread += c * c;
      }
      if (spread > 0.0) columns.push_back({t, d, mean});
    }
  }

  linalg::Matrix x(out.seed_sites.size(), columns.size());
  for (std::size_t r = 0; r < out.seed_sites.size(); ++r) {
    for (std::size_t c = 0; c < columns.size(); ++c) {
      const auto v = value(out.seed_sites[r], columns[c].target, columns[c].direction);
      x(r, c) = v ? *v - columns[c].mean : 0.0;
    }
  }

  // z-scored response: var(y) = 1 is the starting noise variance.
  double noise = 1.0;
  RidgePosterior post;
  if (!columns.empty()) {
    post = ridge_posterior(x, y, prior_precision * noise, noise);
    const auto fitted = linalg::times(x, post.mean);
    double rss = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) rss += (y[i] - fitted[i]) * (y[i] - fitted[i]);
    noise = std::max(rss / static_cast<double>(y.size()), 1e-12);
    post = ridge_posterior(x, y, prior_precision * noise, noise);
  } else {
    spdlog::warn("bias latent '{}': no non-constant feature columns; predictions are 0", target);
  }
  out.noise_variance = noise;
  out.lambda = prior_precision * noise;

  for (std::size_t c = 0; c < columns.size(); ++c) {
    out.coefficients.push_back({columns[c].direction, columns[c].target, post.mean[c], post.stddev[c]});
  }
  std::sort(out.coefficients.begin(), out.coefficients.end(), [](const BiasCoefficient& a, const BiasCoefficient& b) {
    if (std::abs(a.coef) != std::abs(b.coef)) return std::abs(a.coef) > std::abs(b.coef);
    if (a.feature_target != b.feature_target) return a.feature_target < b.feature_target;
    return a.direction < b.direction;
  });

  for (std::size_t r = 0; r < out.seed_sites.size(); ++r) out.z_scores[out.seed_sites[r]] = y[r];
  for (const auto& [site, targets] : by_site) {
    if (out.is_seed(site)) continue;
    double pred = 0.0;
    bool covered = false;
    for (std::size_t c = 0; c < columns.size(); ++c) {
      if (auto v = value(site, columns[c].target, columns[c].direction)) {
        pred += (*v - columns[c].mean) * post.mean[c];
        covered = true;
      }
    }
    if (covered) out.z_scores[site] = pred;
  }
  return out;
}

double js_divergence(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size()) throw Error("js_divergence: support size mismatch");
  if (p.empty()) throw Error("js_divergence: empty support");
  auto check = [](std::span<const double> d) {
    double s = 0.0;
    for (double v : d) {
      if (!(v >= 0.0) || !std::isfinite(v)) throw Error("js_divergence: negative or non-finite mass");
      s += v;
    }
    if (std::abs(s - 1.0) > 1e-9) throw Error("js_divergence: distribution does not sum to 1");
  };
  check(p);
  check(q);
  auto kl_to_mid = [&](std::span<const double> a, std::span<const double> b) {
    double kl = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
      if (a[i] == 0.0) continue;
      const double m = 0.5 * (a[i] + b[i]);
      kl += a[i] * std::log2(a[i] / m);
    }
    return kl;
  };
  // Summed in one fixed order so js(p,q) == js(q,p) exactly.
  const double a = kl_to_mid(p, q);
  const double b = kl_to_mid(q, p);
  const double js = 0.5 * (std::min(a, b) + std::max(a, b));
  return std::clamp(js, 0.0, 1.0);
}

std::string aggregates_to_csv(const std::vector<StanceAggregate>& rows, const SiteRegistry& sites) {
  std::string out = "domain,target,pro_pct,against_pct,neutral_pct,article_count\n";
  for (const auto& r : rows) {
    out += sites[r.site].domain + "," + io::csv_field(r.target) + "," + io::fmt_real(r.pro_pct) + "," +
           io::fmt_real(r.against_pct) + "," + io::fmt_real(r.neutral_pct) + "," +
           std::to_string(r.article_count) + "\n";
  }
  return out;
}

std::string latent_to_csv(const std::vector<BiasLatent>& latents, const SiteRegistry& sites) {
  std::string out = "domain,target,z_score,is_seed\n";
  for (const auto& l : latents) {
    for (const auto& [site, z] : l.z_scores) {
      out += sites[site].domain + "," + io::csv_field(l.target) + "," + io::fmt_real(z) + "," +
             (l.is_seed(site) ? "true" : "false") + "\n";
    }
  }
  return out;
}

std::string coefficients_to_csv(const std::vector<BiasLatent>& latents) {
  std::string out = "target,direction,feature_target,coef,std\n";
  for (const auto& l : latents) {
    for (const auto& c : l.coefficients) {
      out += io::csv_field(l.target) + "," + std::string(to_string(c.direction)) + "," +
             io::csv_field(c.feature_target) + "," + io::fmt_real(c.coef) + "," + io::fmt_real(c.stddev) + "\n";
    }
  }
  return out;
}

}  // namespace nflow
