#include "nflow/analytics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include <spdlog/spdlog.h>

#include "nflow/error.hpp"
#include "nflow/io.hpp"
#include "nflow/parallel.hpp"
#include "nflow/simd/kernels.hpp"

namespace nflow {

bool WeightedDigraph::all_zero() const noexcept {
  return std::all_of(w.begin(), w.end(), [](double v) { return v == 0.0; });
}

WeightedDigraph to_digraph(const InfluenceGraph& graph, bool weighted) {
  WeightedDigraph g(graph.node_count);
  for (const auto& e : graph.edges) {
    if (e.src >= g.n || e.dst >= g.n) throw Error("influence edge references a node out of range");
    g.at(e.src, e.dst) += weighted ? static_cast<double>(e.copies) : 1.0;
  }
  return g;
}

namespace {

std::vector<double> transpose(const WeightedDigraph& g) {
  std::vector<double> t(g.n * g.n);
  for (std::size_t i = 0; i < g.n; ++i)
    for (std::size_t j = 0; j < g.n; ++j) t[j * g.n + i] = g.w[i * g.n + j];
  return t;
}

// y = M x over square n x n; rows are independent, so blocking never
// changes the result.
void gemv(const std::vector<double>& m, std::size_t n, const std::vector<double>& x, std::vector<double>& y) {
  const auto& k = simd::kernels();
  parallel_for(
      n, [&](std::size_t b, std::size_t e) { k.gemv_f64(m.data() + b * n, e - b, n, x.data(), y.data() + b); },
      128);
}

double normalize(std::vector<double>& v) {
  double ss = 0.0;
  for (double x : v) ss += x * x;
  const double norm = std::sqrt(ss);
  if (norm > 0.0)
    for (double& x : v) x /= norm;
  return norm;
}

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a[i] - b[i]));
  return d;
}

std::vector<double> uniform(std::size_t n) { return std::vector<double>(n, 1.0 / std::sqrt(static_cast<double>(n))); }

}  // namespace

std::vector<double> eigenvector_centrality(const WeightedDigraph& g, CentralityFlow flow,
                                           const PowerIterationOptions& options) {
  if (g.n == 0) throw Error("eigenvector centrality of an empty graph");
  if (g.all_zero()) {
    spdlog::warn("eigenvector centrality: all edge weights are zero; returning uniform scores");
    return uniform(g.n);
  }
  const std::vector<double> m = flow == CentralityFlow::InLink ? transpose(g) : g.w;
  // Periodic graphs (cycles, bipartite flows) make the plain iteration
  // oscillate. The retry adds s*x with s = max weight: same eigenvector,
  // the cycle's unit-modulus eigenvalues no longer tie the dominant one.
  auto iterate = [&](double shift, std::vector<double>& x) {
    x = uniform(g.n);
    std::vector<double> y(g.n);
    for (std::size_t it = 0; it < options.max_iters; ++it) {
      gemv(m, g.n, x, y);
      const double mass = options.damping * std::accumulate(x.begin(), x.end(), 0.0);
      for (std::size_t i = 0; i < g.n; ++i) y[i] += mass + shift * x[i];
      normalize(y);
      const double diff = max_abs_diff(x, y);
      x.swap(y);
      if (diff < options.tolerance) return true;
    }
    return false;
  };
  std::vector<double> x;
  if (iterate(0.0, x)) return x;
  const double shift = *std::max_element(g.w.begin(), g.w.end());
  if (!iterate(shift, x)) {
    spdlog::info("eigenvector centrality: no convergence in {} iterations", options.max_iters);
  }
  return x;
}

HitsScores hits(const WeightedDigraph& g, const PowerIterationOptions& options) {
  if (g.n == 0) throw Error("HITS on an empty graph");
  if (g.all_zero()) {
    spdlog::warn("HITS: all edge weights are zero; returning uniform scores");
    return {uniform(g.n), uniform(g.n)};
  }
  const auto t = transpose(g);
  std::vector<double> h = uniform(g.n), a(g.n), h_next(g.n), a_next(g.n);
  gemv(t, g.n, h, a);
  normalize(a);
  std::size_t it = 0;
  for (; it < options.max_iters; ++it) {
    gemv(g.w, g.n, a, h_next);
    normalize(h_next);
    gemv(t, g.n, h_next, a_next);
    normalize(a_next);
    const double diff = std::max(max_abs_diff(h, h_next), max_abs_diff(a, a_next));
    h.swap(h_next);
    a.swap(a_next);
    if (diff < options.tolerance) break;
  }
  if (it == options.max_iters) spdlog::info("HITS: no convergence in {} iterations", it);
  return {std::move(h), std::move(a)};
}

CentralityReport centrality_report(const WeightedDigraph& g, CentralityFlow flow) {
  CentralityReport r;
  r.eigenvector = eigenvector_centrality(g, flow);
  auto h = hits(g);
  r.hub = std::move(h.hub);
  r.authority = std::move(h.authority);
  r.weighted_in_degree.assign(g.n, 0.0);
  for (std::size_t i = 0; i < g.n; ++i)
    for (std::size_t j = 0; j < g.n; ++j) r.weighted_in_degree[j] += g.at(i, j);
  return r;
}

std::string centrality_to_csv(const CentralityReport& r, const SiteRegistry& sites) {
  if (r.eigenvector.size() != sites.size()) throw Error("centrality report does not match the site registry");
  std::string out = "domain,eigenvector,hub,authority,weighted_in_degree\n";
  for (std::size_t i = 0; i < sites.size(); ++i) {
    out += sites[static_cast<SiteIndex>(i)].domain + "," + io::fmt_real(r.eigenvector[i]) + "," +
           io::fmt_real(r.hub[i]) + "," + io::fmt_real(r.authority[i]) + "," +
           io::fmt_real(r.weighted_in_degree[i]) + "\n";
  }
  return out;
}

double UndirectedGraph::degree(std::size_t u) const {
  double k = 2.0 * loop[u];
  for (const auto& [v, w] : adj[u]) k += w;
  return k;
}

double UndirectedGraph::total_weight() const {
  double m2 = 0.0;
  for (std::size_t u = 0; u < size(); ++u) m2 += degree(u);
  return m2;
}

UndirectedGraph undirected_projection(const WeightedDigraph& g) {
  UndirectedGraph u;
  u.adj.resize(g.n);
  u.loop.assign(g.n, 0.0);
  for (std::size_t i = 0; i < g.n; ++i) {
    u.loop[i] = g.at(i, i);
    for (std::size_t j = 0; j < g.n; ++j) {
      if (j == i) continue;
      const double w = g.at(i, j) + g.at(j, i);
      if (w != 0.0) u.adj[i].emplace_back(static_cast<std::uint32_t>(j), w);
    }
  }
  return u;
}

UndirectedGraph undirected_from_edges(std::size_t n,
                                      std::span<const std::tuple<std::uint32_t, std::uint32_t, double>> edges) {
  std::vector<std::map<std::uint32_t, double>> acc(n);
  UndirectedGraph u;
  u.loop.assign(n, 0.0);
  for (const auto& [a, b, w] : edges) {
    if (a >= n || b >= n) throw Error("edge endpoint out of range");
    if (a == b) {
      u.loop[a] += w;
    } else {
      acc[a][b] += w;
      acc[b][a] += w;
    }
  }
  u.adj.resize(n);
  for (std::size_t i = 0; i < n; ++i) u.adj[i].assign(acc[i].begin(), acc[i].end());
  return u;
}

double modularity(const UndirectedGraph& g, std::span<const std::uint32_t> community) {
  if (community.size() != g.size()) throw Error("community vector does not match the graph");
  const double m2 = g.total_weight();
  if (m2 <= 0.0) return 0.0;
  const std::size_t k = community.empty() ? 0 : *std::max_element(community.begin(), community.end()) + 1;
  std::vector<double> in(k, 0.0), tot(k, 0.0);
  for (std::size_t u = 0; u < g.size(); ++u) {
    const auto c = community[u];
    tot[c] += g.degree(u);
    in[c] += 2.0 * g.loop[u];
    for (const auto& [v, w] : g.adj[u])
      if (community[v] == c) in[c] += w;
  }
  double q = 0.0;
  for (std::size_t c = 0; c < k; ++c) q += in[c] / m2 - (tot[c] / m2) * (tot[c] / m2);
  return q;
}

namespace {

// One local-moving phase; returns whether any node changed community.
bool move_nodes(const UndirectedGraph& g, std::vector<std::uint32_t>& comm, double m2) {
  const std::size_t n = g.size();
  std::vector<double> k(n), tot(n, 0.0), neigh(n, 0.0);
  for (std::size_t u = 0; u < n; ++u) {
    k[u] = g.degree(u);
    tot[comm[u]] += k[u];
  }
  std::vector<std::uint32_t> touched;
  bool any = false;
  for (std::size_t pass = 0; pass < 1000; ++pass) {
    bool moved = false;
    for (std::size_t u = 0; u < n; ++u) {
      const auto cu = comm[u];
      touched.clear();
      for (const auto& [v, w] : g.adj[u]) {
        const auto c = comm[v];
        if (neigh[c] == 0.0) touched.push_back(c);
        neigh[c] += w;
      }
      tot[cu] -= k[u];
      std::uint32_t best = cu;
      double best_gain = neigh[cu] - tot[cu] * k[u] / m2;
      std::sort(touched.begin(), touched.end());
      for (auto c : touched) {
        const double gain = neigh[c] - tot[c] * k[u] / m2;
        if (gain > best_gain) {
          best_gain = gain;
          best = c;
        }
      }
      for (auto c : touched) neigh[c] = 0.0;
      tot[best] += k[u];
      if (best != cu) {
        comm[u] = best;
        moved = true;
      }
    }
    if (!moved) break;
    any = true;
  }
  return any;
}

// Renumbers to 0.. by first appearance in node order.
std::size_t renumber(std::vector<std::uint32_t>& comm) {
  std::vector<std::uint32_t> id(comm.size(), UINT32_MAX);
  std::uint32_t next = 0;
  for (auto& c : comm) {
    if (id[c] == UINT32_MAX) id[c] = next++;
    c = id[c];
  }
  return next;
}

UndirectedGraph aggregate(const UndirectedGraph& g, const std::vector<std::uint32_t>& comm, std::size_t k) {
  std::vector<std::map<std::uint32_t, double>> acc(k);
  UndirectedGraph out;
  out.loop.assign(k, 0.0);
  for (std::size_t u = 0; u < g.size(); ++u) {
    const auto cu = comm[u];
    out.loop[cu] += g.loop[u];
    for (const auto& [v, w] : g.adj[u]) {
      if (comm[v] == cu) {
        out.loop[cu] += 0.5 * w;  // each intra edge is seen from both ends
      } else {
        acc[cu][comm[v]] += w;
      }
    }
  }
  out.adj.resize(k);
  for (std::size_t c = 0; c < k; ++c) out.adj[c].assign(acc[c].begin(), acc[c].end());
  return out;
}

}  // namespace

LouvainResult louvain(const UndirectedGraph& g) {
  LouvainResult r;
  const std::size_t n = g.size();
  if (n == 0) return r;
  r.community.resize(n);
  std::iota(r.community.begin(), r.community.end(), 0u);
  r.modularity = modularity(g, r.community);
  r.phase_modularity.push_back(r.modularity);
  const double m2 = g.total_weight();
  if (m2 <= 0.0) return r;

  UndirectedGraph level = g;
  for (;;) {
    std::vector<std::uint32_t> comm(level.size());
    std::iota(comm.begin(), comm.end(), 0u);
    if (!move_nodes(level, comm, m2)) break;
    const std::size_t k = renumber(comm);
    auto next = r.community;
    for (auto& c : next) c = comm[c];
    const double q = modularity(g, next);
    if (q <= r.modularity) {
      // Only floating noise can get here; keep the previous partition.
      spdlog::debug("louvain: phase without modularity gain ({} -> {})", r.modularity, q);
      break;
    }
    r.community = std::move(next);
    r.modularity = q;
    r.phase_modularity.push_back(q);
    if (k == level.size()) break;
    level = aggregate(level, comm, k);
  }
  renumber(r.community);
  return r;
}

std::string communities_to_csv(const LouvainResult& r, const SiteRegistry& sites) {
  if (r.community.size() != sites.size()) throw Error("community assignment does not match the site registry");
  std::string out = "domain,community_id\n";
  for (std::size_t i = 0; i < sites.size(); ++i)
    out += sites[static_cast<SiteIndex>(i)].domain + "," + std::to_string(r.community[i]) + "\n";
  return out;
}

std::optional<double> volume_correlation(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw Error("volume series lengths differ");
  if (a.size() < 2) throw Error("volume correlation needs at least two buckets");
  auto constant = [](std::span<const double> s) {
    return std::all_of(s.begin(), s.end(), [&](double v) { return v == s[0]; });
  };
  if (constant(a) || constant(b)) return std::nullopt;
  const double n = static_cast<double>(a.size());
  const double ma = std::accumulate(a.begin(), a.end(), 0.0) / n;
  const double mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double da = a[i] - ma, db = b[i] - mb;
    sab += da * db;
    saa += da * da;
    sbb += db * db;
  }
  if (!(saa > 0.0) || !(sbb > 0.0)) return std::nullopt;
  return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

FeatureMatrix reliability_feature_matrix(const std::vector<StanceAggregate>& aggregates, const SiteRegistry& sites,
                                         std::size_t top_narratives) {
  std::map<std::string, std::size_t> volume;
  std::map<SiteIndex, std::map<std::string, const StanceAggregate*>> by_site;
  for (const auto& a : aggregates) {
    if (a.site >= sites.size()) throw Error("stance aggregate references an unknown site");
    volume[a.target] += a.article_count;
    by_site[a.site][a.target] = &a;
  }
  std::vector<std::pair<std::string, std::size_t>> ranked(volume.begin(), volume.end());
  std::stable_sort(ranked.begin(), ranked.end(), [](const auto& x, const auto& y) { return x.second > y.second; });
  if (ranked.size() > top_narratives) ranked.resize(top_narratives);

  FeatureMatrix m;
  for (const auto& [t, count] : ranked) m.targets.push_back(t);
  std::sort(m.targets.begin(), m.targets.end());
  for (const auto& t : m.targets)
    for (Stance d : {Stance::Pro, Stance::Against, Stance::Neutral})
      m.columns.push_back(t + ":" + std::string(to_string(d)));

  for (const auto& [site, targets] : by_site) {
    std::vector<double> row;
    std::vector<bool> cov;
    for (const auto& t : m.targets) {
      auto it = targets.find(t);
      if (it == targets.end()) {
        row.insert(row.end(), {0.0, 0.0, 0.0});
        cov.push_back(false);
      } else {
        row.insert(row.end(), {it->second->pro_pct, it->second->against_pct, it->second->neutral_pct});
        cov.push_back(true);
      }
    }
    m.rows.push_back(site);
    m.values.push_back(std::move(row));
    m.covered.push_back(std::move(cov));
    m.labels.push_back(sites.reliability(site));
  }
  return m;
}

std::string feature_matrix_to_csv(const FeatureMatrix& m, const SiteRegistry& sites) {
  std::string out = "domain";
  for (const auto& c : m.columns) out += "," + io::csv_field(c);
  out += ",reliability\n";
  for (std::size_t r = 0; r < m.rows.size(); ++r) {
    out += sites[m.rows[r]].domain;
    for (double v : m.values[r]) out += "," + io::fmt_real(v);
    out += "," + std::string(to_string(m.labels[r])) + "\n";
  }
  return out;
}

std::string feature_coverage_to_csv(const FeatureMatrix& m, const SiteRegistry& sites) {
  std::string out = "domain,target,covered\n";
  for (std::size_t r = 0; r < m.rows.size(); ++r)
    for (std::size_t t = 0; t < m.targets.size(); ++t)
      out += sites[m.rows[r]].domain + "," + io::csv_field(m.targets[t]) + "," + (m.covered[r][t] ? "1" : "0") + "\n";
  return out;
}

}  // namespace nflow
