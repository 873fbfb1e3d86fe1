#include <doctest.h>

#include <cmath>
#include <random>

#include "../support/fixtures.hpp"
#include "../support/oracles.hpp"
#include "nflow/error.hpp"
#include "nflow/netinf.hpp"

using namespace nflow;

namespace {

using OracleGraph = std::set<std::pair<std::uint32_t, std::uint32_t>>;

Cascade make(std::vector<CascadeEvent> ev, std::uint64_t id = 0) {
  Cascade c;
  c.cluster_id = id;
  c.events = std::move(ev);
  c.horizon = c.events.back().t + 1.0;
  return c;
}

std::vector<oracle::Event> to_events(const Cascade& c) {
  std::vector<oracle::Event> out;
  for (const auto& e : c.events) out.push_back({e.site, e.t});
  return out;
}

EdgeSet to_edge_set(const OracleGraph& g) {
  EdgeSet s;
  for (const auto& [a, b] : g) s.insert(a, b);
  return s;
}

std::vector<Cascade> random_cascades(std::size_t nodes, std::size_t count, std::uint64_t seed) {
  std::mt19937_64 g(seed);
  std::uniform_real_distribution<double> u(0.0, 3.0);
  std::vector<Cascade> out;
  for (std::size_t c = 0; c < count; ++c) {
    std::vector<CascadeEvent> ev;
    for (SiteIndex s = 0; s < nodes; ++s) {
      if (u(g) < 2.0) ev.push_back({s, std::round(u(g) * 4.0) / 4.0});
    }
    if (ev.size() < 2) continue;
    std::sort(ev.begin(), ev.end(), [](const auto& a, const auto& b) { return std::tie(a.t, a.site) < std::tie(b.t, b.site); });
    out.push_back(make(ev, c));
  }
  return out;
}

}  // namespace

TEST_CASE("two-event likelihoods have the single-parent closed forms") {
  const TransmissionModel m;
  const auto c = make({{0, 0.0}, {1, 1.0}});
  CHECK(cascade_log_likelihood(c, EdgeSet{}, m) == doctest::Approx(std::log(1e-9 * std::exp(-1.0))).epsilon(1e-12));
  EdgeSet g;
  g.insert(0, 1);
  CHECK(cascade_log_likelihood(c, g, m) == doctest::Approx(std::log(0.5 * std::exp(-1.0))).epsilon(1e-12));
  CHECK(cascade_log_likelihood(make({{3, 2.0}}), g, m) == 0.0);
  EdgeSet back;
  back.insert(1, 0);
  CHECK(cascade_log_likelihood(c, back, m) == cascade_log_likelihood(c, EdgeSet{}, m));
}

TEST_CASE("simultaneous events are not parents of each other") {
  const TransmissionModel m;
  EdgeSet g;
  g.insert(0, 1);
  CHECK(cascade_log_likelihood(make({{0, 1.0}, {1, 1.0}}), g, m) == 0.0);
}

TEST_CASE("likelihood and objective agree with the naive oracle") {
  TransmissionModel m;
  m.alpha_t = 0.7;
  m.beta = 0.3;
  m.epsilon = 1e-6;
  const auto cascades = random_cascades(5, 40, 3);
  std::mt19937_64 g(4);
  for (int trial = 0; trial < 20; ++trial) {
    OracleGraph og;
    for (std::uint32_t a = 0; a < 5; ++a) {
      for (std::uint32_t b = 0; b < 5; ++b) {
        if (a != b && g() % 4 == 0) og.insert({a, b});
      }
    }
    const auto es = to_edge_set(og);
    std::vector<std::vector<oracle::Event>> oc;
    for (const auto& c : cascades) {
      oc.push_back(to_events(c));
      CHECK(std::abs(cascade_log_likelihood(c, es, m) - oracle::cascade_ll(oc.back(), og, 0.7, 0.3, 1e-6)) < 1e-9);
    }
    CHECK(std::abs(netinf_objective(cascades, es, m) - oracle::netinf_objective(oc, og, 0.7, 0.3, 1e-6)) < 1e-7);
  }
}

TEST_CASE("repeated two-site cascades yield a single copied edge") {
  std::vector<Cascade> cs;
  for (int i = 0; i < 6; ++i) cs.push_back(make({{0, 0.0}, {1, 1.0}}, i));
  const auto g = netinf_greedy(cs, 2, TransmissionModel{}, NetinfOptions{});
  REQUIRE(g.edges.size() == 1);
  CHECK(g.edges[0].src == 0);
  CHECK(g.edges[0].dst == 1);
  CHECK(g.edges[0].copies == 6);
  CHECK(g.edges[0].mean_delay_days == doctest::Approx(1.0));
  CHECK(g.edges[0].marginal_gain == doctest::Approx(6.0 * std::log(0.5 / 1e-9)));
  CHECK(g.cascades == 6);
}

TEST_CASE("chain cascades match the exhaustive best graph of at most two edges") {
  std::vector<Cascade> cs;
  for (int i = 0; i < 100; ++i) cs.push_back(make({{0, 0.0}, {1, 1.0}, {2, 2.0}}, i));
  const TransmissionModel m;
  NetinfOptions opt;
  opt.k_max = 2;
  opt.cut_fraction = 1.0;
  const auto g = netinf_greedy(cs, 3, m, opt);

  std::vector<std::vector<oracle::Event>> oc;
  for (const auto& c : cs) oc.push_back(to_events(c));
  std::vector<std::pair<std::uint32_t, std::uint32_t>> all;
  for (std::uint32_t a = 0; a < 3; ++a) {
    for (std::uint32_t b = 0; b < 3; ++b) {
      if (a != b) all.push_back({a, b});
    }
  }
  OracleGraph best;
  double best_f = 0.0;
  for (std::size_t i = 0; i < all.size(); ++i) {
    for (std::size_t j = i; j < all.size(); ++j) {
      OracleGraph cand{all[i], all[j]};
      const double f = oracle::netinf_objective(oc, cand, m.alpha_t, m.beta, m.epsilon);
      if (f > best_f + 1e-9) {
        best_f = f;
        best = cand;
      }
    }
  }
  REQUIRE(g.edges.size() == best.size());
  OracleGraph got;
  for (const auto& e : g.edges) got.insert({e.src, e.dst});
  CHECK(got == best);
  CHECK(g.edges[0].src == 0);
  CHECK(g.edges[0].dst == 1);
  CHECK(g.edges[1].src == 1);
  CHECK(g.edges[1].dst == 2);
  CHECK(g.total_gain == doctest::Approx(best_f));
}

TEST_CASE("lazy and full greedy agree edge for edge") {
  for (std::uint64_t seed = 1; seed <= 8; ++seed) {
    const auto cs = random_cascades(5, 30, seed);
    NetinfOptions lazy;
    lazy.k_max = seed % 2 ? 3 : 20;
    NetinfOptions full = lazy;
    full.lazy = false;
    const auto a = netinf_greedy(cs, 5, TransmissionModel{}, lazy);
    const auto b = netinf_greedy(cs, 5, TransmissionModel{}, full);
    REQUIRE(a.edges.size() == b.edges.size());
    CHECK(a.greedy_edges == b.greedy_edges);
    for (std::size_t i = 0; i < a.edges.size(); ++i) {
      CHECK(a.edges[i].src == b.edges[i].src);
      CHECK(a.edges[i].dst == b.edges[i].dst);
      CHECK(a.edges[i].marginal_gain == b.edges[i].marginal_gain);
      CHECK(a.edges[i].copies == b.edges[i].copies);
    }
  }
}

TEST_CASE("marginal gains shrink as the graph grows") {
  const TransmissionModel m;
  std::mt19937_64 g(21);
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto cs = random_cascades(5, 25, 100 + seed);
    std::vector<std::pair<SiteIndex, SiteIndex>> order;
    for (SiteIndex a = 0; a < 5; ++a) {
      for (SiteIndex b = 0; b < 5; ++b) {
        if (a != b) order.push_back({a, b});
      }
    }
    std::shuffle(order.begin(), order.end(), g);
    const auto probe = order.back();
    order.pop_back();
    EdgeSet grown;
    double prev_gain = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i <= order.size(); ++i) {
      EdgeSet with = grown;
      with.insert(probe.first, probe.second);
      const double gain = netinf_objective(cs, with, m) - netinf_objective(cs, grown, m);
      CHECK(gain <= prev_gain + 1e-9);
      CHECK(gain >= -1e-9);
      prev_gain = gain;
      if (i < order.size()) grown.insert(order[i].first, order[i].second);
    }
  }
}

TEST_CASE("greedy objective is monotone and the cut reaches its fraction") {
  const auto cs = random_cascades(6, 60, 77);
  const TransmissionModel m;
  NetinfOptions opt;
  opt.cut_fraction = 0.9;
  const auto g = netinf_greedy(cs, 6, m, opt);
  REQUIRE_FALSE(g.edges.empty());
  CHECK(g.greedy_edges >= g.edges.size());
  EdgeSet prefix;
  double prev = 0.0;
  for (std::size_t i = 0; i < g.edges.size(); ++i) {
    CHECK(g.edges[i].src != g.edges[i].dst);
    if (i > 0) CHECK(g.edges[i].marginal_gain <= g.edges[i - 1].marginal_gain + 1e-9);
    prefix.insert(g.edges[i].src, g.edges[i].dst);
    const double f = netinf_objective(cs, prefix, m);
    CHECK(f >= prev - 1e-9);
    CHECK(f == doctest::Approx(g.cumulative_gain[i]).epsilon(1e-9));
    prev = f;
  }
  CHECK(g.edges.back().cum_gain_frac >= 0.9);
  if (g.edges.size() >= 2) CHECK(g.edges[g.edges.size() - 2].cum_gain_frac < 0.9);
}

TEST_CASE("all-singleton input yields an empty graph") {
  const auto g = netinf_greedy({make({{0, 1.0}}), make({{1, 2.0}})}, 2, TransmissionModel{}, NetinfOptions{});
  CHECK(g.edges.empty());
  CHECK(g.total_gain == 0.0);
}

TEST_CASE("model validation") {
  TransmissionModel m;
  m.epsilon = 0.6;
  CHECK_THROWS_AS(m.validate(), Error);
  m = {};
  m.beta = 1.0;
  CHECK_THROWS_AS(m.validate(), Error);
  m = {};
  m.alpha_t = 0.0;
  CHECK_THROWS_AS(m.validate(), Error);
}

TEST_CASE("copy matrix shares and delay deltas") {
  auto reg = fixture::sites({{"r", Reliability::Reliable}, {"m", Reliability::Mixed}, {"u", Reliability::Unreliable}});
  InfluenceGraph g;
  g.node_count = 3;
  g.edges = {{0, 1, 1.0, 3, 37.33, 0.5}, {2, 1, 0.5, 1, 41.61, 1.0}};
  const auto cm = ecosystem_copy_matrix(g, reg);
  const auto mixed = index_of(Reliability::Mixed);
  CHECK(cm.row_defined[mixed]);
  CHECK_FALSE(cm.row_defined[index_of(Reliability::Reliable)]);
  CHECK(cm.share[mixed][0] == doctest::Approx(0.75));
  CHECK(cm.share[mixed][1] == 0.0);
  CHECK(cm.share[mixed][2] == doctest::Approx(0.25));
  CHECK(cm.copies[mixed][0] == 3);
  CHECK(cm.global_mean_delay == doctest::Approx(38.4));
  CHECK(cm.delay_delta[mixed][0] == doctest::Approx(-1.07));
  for (std::size_t d = 0; d < kEcosystemCount; ++d) {
    if (!cm.row_defined[d]) continue;
    double s = 0.0;
    for (double v : cm.share[d]) s += v;
    CHECK(std::abs(s - 1.0) <= 1e-12);
  }

  InfluenceGraph same;
  same.edges = {{0, 1, 1.0, 4, 2.0, 1.0}};
  const auto rr = ecosystem_copy_matrix(same, fixture::sites({{"r1", Reliability::Reliable}, {"r2", Reliability::Reliable}}));
  CHECK(rr.share[0][0] == 1.0);
  CHECK(rr.share[0][1] == 0.0);
}

TEST_CASE("copy matrix rows sum to one on inferred graphs") {
  auto reg = fixture::sites({{"a", Reliability::Reliable}, {"b", Reliability::Mixed}, {"c", Reliability::Unreliable},
                             {"d", Reliability::Reliable}, {"e", Reliability::Unreliable}, {"f", Reliability::Mixed}});
  const auto g = netinf_greedy(random_cascades(6, 80, 5), 6, TransmissionModel{}, NetinfOptions{});
  const auto cm = ecosystem_copy_matrix(g, reg);
  for (std::size_t d = 0; d < kEcosystemCount; ++d) {
    if (!cm.row_defined[d]) continue;
    double s = 0.0;
    for (double v : cm.share[d]) s += v;
    CHECK(std::abs(s - 1.0) <= 1e-12);
  }
}

TEST_CASE("graph TSV round trips") {
  fixture::TempDir dir;
  auto reg = fixture::sites({{"a.com", Reliability::Reliable}, {"b.org", Reliability::Mixed}, {"c.net", Reliability::Unreliable}});
  const auto g = netinf_greedy(random_cascades(3, 30, 9), 3, TransmissionModel{}, NetinfOptions{});
  io::write_file(dir / "g.tsv", graph_to_tsv(g, reg));
  CHECK(io::read_lines(dir / "g.tsv")[0].text == "src\tdst\tmarginal_gain\tcopies\tmean_delay_days\tcum_gain_frac");
  const auto back = graph_from_tsv(dir / "g.tsv", reg);
  REQUIRE(back.edges.size() == g.edges.size());
  for (std::size_t i = 0; i < g.edges.size(); ++i) {
    CHECK(back.edges[i].src == g.edges[i].src);
    CHECK(back.edges[i].dst == g.edges[i].dst);
    CHECK(back.edges[i].copies == g.edges[i].copies);
    // Reals are written with ten significant digits.
    CHECK(back.edges[i].marginal_gain == doctest::Approx(g.edges[i].marginal_gain).epsilon(1e-9));
  }
}
