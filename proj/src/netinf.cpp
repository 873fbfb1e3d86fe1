#include "nflow/netinf.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <queue>

#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "nflow/error.hpp"
#include "nflow/io.hpp"
#include "nflow/parallel.hpp"

namespace nflow {

void TransmissionModel::validate() const {
  if (!(alpha_t > 0.0) || !std::isfinite(alpha_t)) throw Error("alpha_t must be > 0");
  if (!(beta > 0.0 && beta < 1.0)) throw Error("beta must be in (0,1)");
  if (!(epsilon > 0.0 && epsilon < beta)) throw Error("epsilon must be in (0, beta)");
}

double TransmissionModel::log_weight(bool has_edge, double dt) const noexcept {
  return std::log(has_edge ? beta : epsilon) + std::log(alpha_t) - alpha_t * dt;
}

EdgeSet InfluenceGraph::edge_set() const {
  EdgeSet s;
  for (const auto& e : edges) s.insert(e.src, e.dst);
  return s;
}

double cascade_log_likelihood(const Cascade& cascade, const EdgeSet& graph,
                              const TransmissionModel& model) {
  const auto& ev = cascade.events;
  double ll = 0.0;
  for (std::size_t j = 0; j < ev.size(); ++j) {
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < ev.size(); ++i) {
      if (!(ev[i].t < ev[j].t)) continue;
      best = std::max(best, model.log_weight(graph.contains(ev[i].site, ev[j].site), ev[j].t - ev[i].t));
    }
    if (std::isfinite(best)) ll += best;
  }
  return ll;
}

double netinf_objective(const std::vector<Cascade>& cascades, const EdgeSet& graph,
                        const TransmissionModel& model) {
  const EdgeSet empty;
  double f = 0.0;
  for (const auto& c : cascades) {
    f += cascade_log_likelihood(c, graph, model) - cascade_log_likelihood(c, empty, model);
  }
  return f;
}

namespace {

// A (cascade, event) slot whose best parent log-weight an edge may raise.
struct Slot {
  std::uint32_t node;    // index into the flat per-event state
  double edge_weight;    // log w over the candidate edge
};

struct Candidate {
  SiteIndex src = 0;
  SiteIndex dst = 0;
  std::vector<Slot> slots;  // ordered by (cascade, event)
};

class GreedyState {
 public:
  GreedyState(const std::vector<Cascade>& cascades, const TransmissionModel& model) {
    std::map<std::pair<SiteIndex, SiteIndex>, std::size_t> by_edge;
    for (const auto& c : cascades) {
      const auto& ev = c.events;
      for (std::size_t j = 0; j < ev.size(); ++j) {
        // Empty graph: the best parent is the latest strictly earlier event.
        double best = -std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < j; ++i) {
          if (ev[i].t < ev[j].t) best = std::max(best, model.log_weight(false, ev[j].t - ev[i].t));
        }
        const auto node = static_cast<std::uint32_t>(current_.size());
        current_.push_back(best);
        for (std::size_t i = 0; i < j; ++i) {
          if (!(ev[i].t < ev[j].t) || ev[i].site == ev[j].site) continue;
          const auto key = std::make_pair(ev[i].site, ev[j].site);
          auto [it, fresh] = by_edge.try_emplace(key, candidates_.size());
          if (fresh) candidates_.push_back({key.first, key.second, {}});
          candidates_[it->second].slots.push_back({node, model.log_weight(true, ev[j].t - ev[i].t)});
        }
      }
    }
    // Candidate order is (src, dst); ties in gain resolve by this order.
    std::sort(candidates_.begin(), candidates_.end(), [](const Candidate& a, const Candidate& b) {
      return a.src != b.src ? a.src < b.src : a.dst < b.dst;
    });
  }

  std::size_t size() const noexcept { return candidates_.size(); }
  const Candidate& operator[](std::size_t i) const { return candidates_[i]; }

  double gain(std::size_t c) const {
    double g = 0.0;
    for (const auto& s : candidates_[c].slots) {
      const double delta = s.edge_weight - current_[s.node];
      if (delta > 0.0) g += delta;
    }
    return g;
  }

  void accept(std::size_t c) {
    for (const auto& s : candidates_[c].slots) {
      current_[s.node] = std::max(current_[s.node], s.edge_weight);
    }
  }

 private:
  std::vector<Candidate> candidates_;
  std::vector<double> current_;
};

struct Pick {
  std::size_t candidate;
  double gain;
};

// (gain desc, candidate index asc); the index order is (src, dst).
bool better(double ga, std::size_t a, double gb, std::size_t b) {
  return ga != gb ? ga > gb : a < b;
}

std::vector<Pick> run_full(GreedyState& st, std::size_t k_max) {
  std::vector<Pick> picks;
  std::vector<char> taken(st.size(), 0);
  std::vector<double> gains(st.size(), 0.0);
  while (picks.size() < k_max) {
    parallel_for(st.size(), [&](std::size_t b, std::size_t e) {
      for (std::size_t c = b; c < e; ++c) gains[c] = taken[c] ? 0.0 : st.gain(c);
    }, 256);
    std::size_t best = st.size();
    for (std::size_t c = 0; c < st.size(); ++c) {
      if (taken[c] || !(gains[c] > 0.0)) continue;
      if (best == st.size() || better(gains[c], c, gains[best], best)) best = c;
    }
    if (best == st.size()) break;
    taken[best] = 1;
    st.accept(best);
    picks.push_back({best, gains[best]});
  }
  return picks;
}

std::vector<Pick> run_lazy(GreedyState& st, std::size_t k_max) {
  struct Entry {
    double bound;
    std::size_t candidate;
    std::size_t stamp;  // number of accepted edges when bound was computed
  };
  auto worse = [](const Entry& a, const Entry& b) { return better(b.bound, b.candidate, a.bound, a.candidate); };
  std::priority_queue<Entry, std::vector<Entry>, decltype(worse)> heap(worse);
  {
    std::vector<double> g(st.size());
    parallel_for(st.size(), [&](std::size_t b, std::size_t e) {
      for (std::size_t c = b; c < e; ++c) g[c] = st.gain(c);
    }, 256);
    for (std::size_t c = 0; c < st.size(); ++c) {
      if (g[c] > 0.0) heap.push({g[c], c, 0});
    }
  }
  std::vector<Pick> picks;
  while (picks.size() < k_max && !heap.empty()) {
    Entry top = heap.top();
    heap.pop();
    if (top.stamp == picks.size()) {
      st.accept(top.candidate);
      picks.push_back({top.candidate, top.bound});
      continue;
    }
    const double g = st.gain(top.candidate);
    // Gains never grow, so a non-positive edge can be dropped for good.
    if (g > 0.0) heap.push({g, top.candidate, picks.size()});
  }
  return picks;
}

}  // namespace

InfluenceGraph netinf_greedy(const std::vector<Cascade>& cascades, std::size_t node_count,
                             const TransmissionModel& model, const NetinfOptions& options) {
  model.validate();
  if (options.k_max == 0) throw Error("k_max must be >= 1");
  if (!(options.cut_fraction > 0.0 && options.cut_fraction <= 1.0)) throw Error("cut_fraction must be in (0,1]");
  if (cascades.empty()) throw Error("netinf requires at least one cascade");
  for (const auto& c : cascades) {
    for (const auto& e : c.events) {
      if (e.site >= node_count) throw Error("cascade references a node outside the graph");
    }
  }

  GreedyState st(cascades, model);
  InfluenceGraph g;
  g.node_count = node_count;
  g.cascades = cascades.size();
  if (st.size() == 0) {
    spdlog::warn("netinf: no cascade has two events at distinct times; graph is empty");
    return g;
  }
  const auto picks = options.lazy ? run_lazy(st, options.k_max) : run_full(st, options.k_max);
  g.greedy_edges = picks.size();
  for (const auto& p : picks) g.total_gain += p.gain;

  double cum = 0.0;
  for (const auto& p : picks) {
    cum += p.gain;
    InfluenceEdge e;
    e.src = st[p.candidate].src;
    e.dst = st[p.candidate].dst;
    e.marginal_gain = p.gain;
    e.cum_gain_frac = g.total_gain > 0.0 ? cum / g.total_gain : 0.0;
    g.edges.push_back(e);
    g.cumulative_gain.push_back(cum);
    if (cum >= options.cut_fraction * g.total_gain) break;
  }

  // Copies and delays from the most likely trees under the reported graph.
  const EdgeSet kept = g.edge_set();
  std::map<std::pair<SiteIndex, SiteIndex>, std::pair<std::size_t, double>> links;
  for (const auto& c : cascades) {
    const auto& ev = c.events;
    for (std::size_t j = 0; j < ev.size(); ++j) {
      double best = -std::numeric_limits<double>::infinity();
      std::size_t parent = ev.size();
      for (std::size_t i = 0; i < ev.size(); ++i) {
        if (!(ev[i].t < ev[j].t)) continue;
        const double w = model.log_weight(kept.contains(ev[i].site, ev[j].site), ev[j].t - ev[i].t);
        if (w > best) {
          best = w;
          parent = i;
        }
      }
      if (parent == ev.size() || !kept.contains(ev[parent].site, ev[j].site)) continue;
      auto& l = links[{ev[parent].site, ev[j].site}];
      ++l.first;
      l.second += ev[j].t - ev[parent].t;
    }
  }
  for (auto& e : g.edges) {
    auto it = links.find({e.src, e.dst});
    if (it == links.end()) continue;
    e.copies = it->second.first;
    e.mean_delay_days = it->second.second / static_cast<double>(it->second.first);
  }
  return g;
}

CopyMatrix ecosystem_copy_matrix(const InfluenceGraph& graph, const SiteRegistry& sites) {
  CopyMatrix m;
  std::array<std::array<double, kEcosystemCount>, kEcosystemCount> delay_sum{};
  std::array<std::size_t, kEcosystemCount> row_total{};
  double all_delay = 0.0;
  std::size_t all_copies = 0;
  for (const auto& e : graph.edges) {
    const auto src = index_of(sites.reliability(e.src));
    const auto dst = index_of(sites.reliability(e.dst));
    m.copies[dst][src] += e.copies;
    delay_sum[dst][src] += e.mean_delay_days * static_cast<double>(e.copies);
    row_total[dst] += e.copies;
    all_delay += e.mean_delay_days * static_cast<double>(e.copies);
    all_copies += e.copies;
  }
  const double nan = std::numeric_limits<double>::quiet_NaN();
  m.global_mean_delay = all_copies ? all_delay / static_cast<double>(all_copies) : nan;
  for (std::size_t d = 0; d < kEcosystemCount; ++d) {
    m.row_defined[d] = row_total[d] > 0;
    for (std::size_t s = 0; s < kEcosystemCount; ++s) {
      const auto n = m.copies[d][s];
      m.share[d][s] = row_total[d] ? static_cast<double>(n) / static_cast<double>(row_total[d]) : 0.0;
      m.mean_delay[d][s] = n ? delay_sum[d][s] / static_cast<double>(n) : nan;
      m.delay_delta[d][s] = n ? m.mean_delay[d][s] - m.global_mean_delay : nan;
    }
    if (!m.row_defined[d]) {
      spdlog::warn("copy matrix: no copies into the {} ecosystem", to_string(kEcosystems[d]));
    }
  }
  return m;
}

std::string graph_to_tsv(const InfluenceGraph& graph, const SiteRegistry& sites) {
  std::string out = "src\tdst\tmarginal_gain\tcopies\tmean_delay_days\tcum_gain_frac\n";
  for (const auto& e : graph.edges) {
    out += sites[e.src].domain + "\t" + sites[e.dst].domain + "\t" + io::fmt_real(e.marginal_gain) +
           "\t" + std::to_string(e.copies) + "\t" + io::fmt_real(e.mean_delay_days) + "\t" +
           io::fmt_real(e.cum_gain_frac) + "\n";
  }
  return out;
}

InfluenceGraph graph_from_tsv(const std::filesystem::path& path, const SiteRegistry& sites) {
  const auto lines = io::read_lines(path);
  const std::string file = path.string();
  if (lines.empty() || lines[0].text != "src\tdst\tmarginal_gain\tcopies\tmean_delay_days\tcum_gain_frac") {
    throw InputError(file, 1, "unexpected graph TSV header");
  }
  InfluenceGraph g;
  g.node_count = sites.size();
  double cum = 0.0;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].text.empty()) continue;
    std::vector<std::string> f;
    std::size_t b = 0;
    const auto& t = lines[i].text;
    for (std::size_t k = 0; k <= t.size(); ++k) {
      if (k == t.size() || t[k] == '\t') {
        f.push_back(t.substr(b, k - b));
        b = k + 1;
      }
    }
    if (f.size() != 6) throw InputError(file, lines[i].number, "expected 6 fields");
    auto src = sites.find(f[0]);
    auto dst = sites.find(f[1]);
    if (!src || !dst) throw InputError(file, lines[i].number, "unknown site");
    InfluenceEdge e;
    e.src = *src;
    e.dst = *dst;
    try {
      e.marginal_gain = std::stod(f[2]);
      e.copies = std::stoull(f[3]);
      e.mean_delay_days = std::stod(f[4]);
      e.cum_gain_frac = std::stod(f[5]);
    } catch (const std::exception&) {
      throw InputError(file, lines[i].number, "bad numeric field");
    }
    cum += e.marginal_gain;
    g.cumulative_gain.push_back(cum);
    g.edges.push_back(e);
  }
  g.greedy_edges = g.edges.size();
  return g;
}

std::string graph_manifest_json(const InfluenceGraph& graph, const TransmissionModel& model,
                                const NetinfOptions& options) {
  nlohmann::ordered_json j;
  j["model"] = {{"alpha_t", model.alpha_t}, {"beta", model.beta}, {"epsilon", model.epsilon}};
  j["k_max"] = options.k_max;
  j["cut_fraction"] = options.cut_fraction;
  j["cascades"] = graph.cascades;
  j["nodes"] = graph.node_count;
  j["greedy_edges"] = graph.greedy_edges;
  j["reported_edges"] = graph.edges.size();
  j["total_gain"] = std::stod(io::fmt_real(graph.total_gain));
  return j.dump(2) + "\n";
}

std::string copy_matrix_to_csv(const CopyMatrix& m) {
  auto cell = [](double v) { return std::isnan(v) ? std::string() : io::fmt_real(v); };
  std::string out = "dst_ecosystem,src_ecosystem,copies,share,mean_delay_days,delay_delta_days\n";
  for (std::size_t d = 0; d < kEcosystemCount; ++d) {
    for (std::size_t s = 0; s < kEcosystemCount; ++s) {
      out += std::string(to_string(kEcosystems[d])) + "," + std::string(to_string(kEcosystems[s])) + "," +
             std::to_string(m.copies[d][s]) + "," + io::fmt_real(m.share[d][s]) + "," +
             cell(m.mean_delay[d][s]) + "," + cell(m.delay_delta[d][s]) + "\n";
    }
  }
  return out;
}

}  // namespace nflow
