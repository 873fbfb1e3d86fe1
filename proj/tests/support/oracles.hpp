#pragma once
// Reference computations the tests compare against. Each one is written
// from the textbook definition with no code shared with the library.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <random>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace oracle {

inline double choose2(double n) { return n * (n - 1.0) / 2.0; }

inline double adjusted_rand_index(std::span<const std::uint32_t> a, std::span<const std::uint32_t> b) {
  std::map<std::pair<std::uint32_t, std::uint32_t>, double> joint;
  std::map<std::uint32_t, double> ra, rb;
  for (std::size_t i = 0; i < a.size(); ++i) {
    joint[{a[i], b[i]}] += 1.0;
    ra[a[i]] += 1.0;
    rb[b[i]] += 1.0;
  }
  double index = 0.0, sa = 0.0, sb = 0.0;
  for (const auto& [k, v] : joint) index += choose2(v);
  for (const auto& [k, v] : ra) sa += choose2(v);
  for (const auto& [k, v] : rb) sb += choose2(v);
  const double expected = sa * sb / choose2(static_cast<double>(a.size()));
  const double max_index = 0.5 * (sa + sb);
  if (max_index == expected) return 1.0;
  return (index - expected) / (max_index - expected);
}

// ---------------------------------------------------------------------------
// DP-Means on the unit sphere. For a fixed partition the best unit centroid
// of cluster c is S_c/|S_c|, giving cost 2|c| - 2|S_c| + lambda.

using Points = std::vector<std::vector<double>>;

inline double partition_objective(const Points& x, std::span<const std::uint32_t> labels, double min_cos) {
  const double lambda = 2.0 * (1.0 - min_cos);
  std::map<std::uint32_t, std::vector<double>> sums;
  for (std::size_t i = 0; i < x.size(); ++i) {
    auto& s = sums[labels[i]];
    s.resize(x[i].size(), 0.0);
    for (std::size_t d = 0; d < x[i].size(); ++d) s[d] += x[i][d];
  }
  double total = 2.0 * static_cast<double>(x.size());
  for (const auto& [c, s] : sums) {
    double ss = 0.0;
    for (double v : s) ss += v * v;
    total += lambda - 2.0 * std::sqrt(ss);
  }
  return total;
}

/// Every point reaches min_cos against its cluster's normalized mean.
inline bool partition_feasible(const Points& x, std::span<const std::uint32_t> labels, double min_cos) {
  std::map<std::uint32_t, std::vector<double>> sums;
  for (std::size_t i = 0; i < x.size(); ++i) {
    auto& s = sums[labels[i]];
    s.resize(x[i].size(), 0.0);
    for (std::size_t d = 0; d < x[i].size(); ++d) s[d] += x[i][d];
  }
  for (std::size_t i = 0; i < x.size(); ++i) {
    const auto& s = sums[labels[i]];
    double dot = 0.0, ss = 0.0;
    for (std::size_t d = 0; d < s.size(); ++d) {
      dot += x[i][d] * s[d];
      ss += s[d] * s[d];
    }
    if (dot < min_cos * std::sqrt(ss) - 1e-12) return false;
  }
  return true;
}

struct PartitionOptimum {
  double objective = std::numeric_limits<double>::infinity();
  std::vector<std::uint32_t> labels;
  std::size_t partitions = 0;
};

/// Enumerates every set partition (restricted growth strings) and keeps the
/// best feasible one. Cluster sums are maintained incrementally.
inline PartitionOptimum brute_force_dp_means(const Points& x, double min_cos) {
  PartitionOptimum best;
  const std::size_t n = x.size();
  if (n == 0) return best;
  const std::size_t dim = x[0].size();
  const double lambda = 2.0 * (1.0 - min_cos);
  std::vector<std::uint32_t> labels(n, 0);
  std::vector<std::vector<double>> sums(n, std::vector<double>(dim, 0.0));
  auto visit = [&](auto&& self, std::size_t i, std::uint32_t k) -> void {
    if (i == n) {
      ++best.partitions;
      double obj = 2.0 * static_cast<double>(n) + lambda * k;
      for (std::uint32_t c = 0; c < k; ++c) {
        double ss = 0.0;
        for (double v : sums[c]) ss += v * v;
        obj -= 2.0 * std::sqrt(ss);
      }
      if (obj < best.objective && partition_feasible(x, labels, min_cos)) {
        best.objective = obj;
        best.labels = labels;
      }
      return;
    }
    for (std::uint32_t c = 0; c <= k && c < n; ++c) {
      labels[i] = c;
      for (std::size_t d = 0; d < dim; ++d) sums[c][d] += x[i][d];
      self(self, i + 1, std::max(k, c + 1));
      for (std::size_t d = 0; d < dim; ++d) sums[c][d] -= x[i][d];
    }
  };
  visit(visit, 0, 0);
  return best;
}

// ---------------------------------------------------------------------------
// PMI from a dense count grid: counts[g][u], alpha added to every cell.

inline double pmi(const std::vector<std::vector<double>>& counts, std::size_t u, std::size_t g, double alpha) {
  double total = 0.0, unit = 0.0, group = 0.0;
  for (std::size_t gg = 0; gg < counts.size(); ++gg) {
    for (std::size_t uu = 0; uu < counts[gg].size(); ++uu) {
      const double c = counts[gg][uu] + alpha;
      total += c;
      if (uu == u) unit += c;
      if (gg == g) group += c;
    }
  }
  const double joint = (counts[g][u] + alpha) / total;
  return std::log2(joint / ((unit / total) * (group / total)));
}

// ---------------------------------------------------------------------------
// NETINF: naive most-likely-tree likelihood, straight from the definition.

struct Event {
  std::uint32_t site;
  double t;
};

inline double cascade_ll(const std::vector<Event>& events, const std::set<std::pair<std::uint32_t, std::uint32_t>>& g,
                         double alpha, double beta, double eps) {
  double ll = 0.0;
  for (const auto& j : events) {
    double best = 0.0;
    bool any = false;
    for (const auto& i : events) {
      if (!(i.t < j.t)) continue;
      const double p = g.contains({i.site, j.site}) ? beta : eps;
      const double w = p * alpha * std::exp(-alpha * (j.t - i.t));
      if (!any || w > best) best = w;
      any = true;
    }
    if (any) ll += std::log(best);
  }
  return ll;
}

inline double netinf_objective(const std::vector<std::vector<Event>>& cascades,
                               const std::set<std::pair<std::uint32_t, std::uint32_t>>& g, double alpha,
                               double beta, double eps) {
  double f = 0.0;
  for (const auto& c : cascades) f += cascade_ll(c, g, alpha, beta, eps) - cascade_ll(c, {}, alpha, beta, eps);
  return f;
}

// ---------------------------------------------------------------------------
// Dense linear algebra through Eigen.

/// Eigenvector of the eigenvalue with the largest real part, positive sum,
/// unit L2 norm.
inline std::vector<double> principal_eigenvector(const Eigen::MatrixXd& m) {
  Eigen::EigenSolver<Eigen::MatrixXd> es(m);
  Eigen::Index best = 0;
  for (Eigen::Index i = 1; i < es.eigenvalues().size(); ++i)
    if (es.eigenvalues()[i].real() > es.eigenvalues()[best].real()) best = i;
  Eigen::VectorXd v = es.eigenvectors().col(best).real();
  if (v.sum() < 0) v = -v;
  v.normalize();
  return {v.data(), v.data() + v.size()};
}

inline std::vector<double> top_symmetric_eigenvector(const Eigen::MatrixXd& s) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(s);
  Eigen::VectorXd v = es.eigenvectors().col(es.eigenvalues().size() - 1);
  if (v.sum() < 0) v = -v;
  v.normalize();
  return {v.data(), v.data() + v.size()};
}

/// argmin |Xw - y|^2 + lambda |w|^2 as the least-squares problem
/// [X; sqrt(lambda) I] w = [y; 0], solved by Householder QR.
inline Eigen::VectorXd ridge(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, double lambda) {
  const auto n = x.rows(), p = x.cols();
  Eigen::MatrixXd a(n + p, p);
  a << x, std::sqrt(lambda) * Eigen::MatrixXd::Identity(p, p);
  Eigen::VectorXd b(n + p);
  b << y, Eigen::VectorXd::Zero(p);
  return a.colPivHouseholderQr().solve(b);
}

inline Eigen::VectorXd ridge_posterior_std(const Eigen::MatrixXd& x, double lambda, double noise) {
  const auto p = x.cols();
  Eigen::MatrixXd a = x.transpose() * x + lambda * Eigen::MatrixXd::Identity(p, p);
  Eigen::MatrixXd inv = a.inverse();
  return (noise * inv.diagonal()).array().sqrt();
}

}  // namespace oracle
