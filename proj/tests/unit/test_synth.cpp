#include <doctest.h>

#include <cmath>
#include <map>

#include "../support/oracles.hpp"
#include "nflow/corpus.hpp"
#include "nflow/error.hpp"
#include "nflow/parallel.hpp"
#include "nflow/synth.hpp"

using namespace nflow;
using namespace nflow::synth;

namespace {

double dot(const std::vector<float>& a, const std::vector<float>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += static_cast<double>(a[i]) * b[i];
  return s;
}

SynthSpec chain_spec(double beta, std::size_t cascades) {
  SynthSpec s;
  s.seed = 5;
  s.n_sites = 3;
  s.beta = beta;
  s.alpha_t = 2.0;
  s.cascades_per_run = cascades;
  return s;
}

const std::vector<std::pair<SiteIndex, SiteIndex>> kChain{{0, 1}, {1, 2}};

}  // namespace

TEST_CASE("two blobs in two dimensions get orthogonal centroids") {
  SynthSpec s;
  s.seed = 1;
  s.n_clusters = 2;
  s.dim = 2;
  s.n_points = 10;
  const auto b = gen_blobs(s);
  REQUIRE(b.centroids.size() == 2);
  CHECK(std::abs(dot(b.centroids[0], b.centroids[1])) < 1e-6);
  CHECK(dot(b.centroids[0], b.centroids[0]) == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(b.matrix.rows() == 10);
  CHECK(b.matrix.rows_unit_norm(1e-5));
  for (std::size_t i = 0; i < 10; ++i) CHECK(b.labels[i] == i % 2);
}

TEST_CASE("default blobs have the requested geometry and labels for ARI") {
  SynthSpec s;
  s.seed = 2;
  const auto b = gen_blobs(s);
  CHECK(b.matrix.rows() == 1000);
  CHECK(b.matrix.dim() == 32);
  CHECK(b.labels.size() == 1000);
  CHECK(oracle::adjusted_rand_index(b.labels, b.labels) == 1.0);
  double within = 0.0;
  std::size_t pairs = 0;
  for (std::size_t i = 0; i < 200; i += 5) {
    for (std::size_t j = i + 5; j < 200; j += 5) {
      std::vector<float> a(b.matrix.row(i).begin(), b.matrix.row(i).end());
      std::vector<float> c(b.matrix.row(j).begin(), b.matrix.row(j).end());
      within += dot(a, c);
      ++pairs;
    }
  }
  CHECK(within / pairs == doctest::Approx(0.7).epsilon(0.1));
  for (std::size_t a = 0; a < 5; ++a) {
    for (std::size_t c = a + 1; c < 5; ++c) CHECK(dot(b.centroids[a], b.centroids[c]) <= 1e-6);
  }
}

TEST_CASE("same seed gives identical blob bytes and different seeds differ") {
  SynthSpec s;
  s.seed = 77;
  s.n_points = 200;
  const auto a = gen_blobs(s);
  const auto b = gen_blobs(s);
  CHECK(encode_embeddings(a.matrix) == encode_embeddings(b.matrix));
  s.seed = 78;
  CHECK(encode_embeddings(gen_blobs(s).matrix) != encode_embeddings(a.matrix));
}

TEST_CASE("infeasible blob geometry is an error") {
  SynthSpec s;
  s.n_clusters = 5;
  s.blob_inter_cos = -0.5;  // below -1/(k-1)
  CHECK_THROWS_AS(gen_blobs(s), Error);
  s = {};
  s.blob_intra_cos = 1.0;
  CHECK_THROWS_AS(gen_blobs(s), Error);
}

TEST_CASE("certain transmission on a chain infects downstream nodes in time order") {
  const auto r = gen_cascades_on(chain_spec(1.0, 200), kChain);
  CHECK(r.true_edges == kChain);
  std::size_t rooted_at_a = 0;
  for (std::size_t c = 0; c < r.cascades.size(); ++c) {
    const auto& ev = r.cascades[c].events;
    REQUIRE(ev.size() >= 2);
    for (std::size_t i = 1; i < ev.size(); ++i) CHECK(ev[i - 1].t < ev[i].t);
    if (ev[0].site == 0) {
      ++rooted_at_a;
      REQUIRE(ev.size() == 3);
      CHECK(ev[1].site == 1);
      CHECK(ev[2].site == 2);
    }
    std::map<SiteIndex, double> t;
    for (const auto& e : ev) t[e.site] = e.t;
    for (const auto& tr : r.trees[c]) {
      CHECK(t.at(tr.dst) > t.at(tr.src));
      CHECK(t.at(tr.dst) - t.at(tr.src) == doctest::Approx(tr.delay));
    }
  }
  CHECK(rooted_at_a > 0);
}

TEST_CASE("zero transmission probability exhausts the retries") {
  auto s = chain_spec(0.0, 4);
  s.max_retries = 20;
  CHECK_THROWS_AS(gen_cascades_on(s, kChain), Error);
}

TEST_CASE("transmission delays follow the exponential law") {
  const auto r = gen_cascades_on(chain_spec(1.0, 8000), kChain);
  std::vector<double> d;
  for (const auto& tree : r.trees) {
    for (const auto& tr : tree) d.push_back(tr.delay);
  }
  REQUIRE(d.size() >= 10000);
  d.resize(10000);
  std::sort(d.begin(), d.end());
  double ks = 0.0;
  const double n = static_cast<double>(d.size());
  for (std::size_t i = 0; i < d.size(); ++i) {
    const double cdf = 1.0 - std::exp(-2.0 * d[i]);
    ks = std::max({ks, std::abs(cdf - i / n), std::abs(cdf - (i + 1) / n)});
  }
  CHECK(d.front() > 0.0);
  CHECK(ks < 0.02);
}

TEST_CASE("random cascade runs are reproducible across thread counts") {
  SynthSpec s;
  s.seed = 7;
  s.cascades_per_run = 100;
  set_thread_count(1);
  const auto a = gen_cascades(s);
  set_thread_count(4);
  const auto b = gen_cascades(s);
  set_thread_count(0);
  CHECK(a.true_edges == b.true_edges);
  CHECK(a.cascades == b.cascades);
  CHECK(a.cascades.size() == 100);
  double mean_out = static_cast<double>(a.true_edges.size()) / 50.0;
  CHECK(mean_out == doctest::Approx(3.0).epsilon(0.3));
  for (const auto& c : a.cascades) {
    for (std::size_t i = 1; i < c.events.size(); ++i) CHECK(c.events[i - 1].t <= c.events[i].t);
  }
}

TEST_CASE("synthetic sites cycle through ecosystems") {
  const auto reg = synthetic_sites(4);
  CHECK(reg[0].domain == "s000.synth");
  CHECK(reg.reliability(1) == Reliability::Mixed);
  CHECK(reg.reliability(3) == Reliability::Reliable);
  CHECK(edges_to_tsv({{0, 1}}, reg) == "src\tdst\ns000.synth\ts001.synth\n");
}

TEST_CASE("mini corpus is deterministic and covers all ecosystems") {
  const auto a = gen_mini_corpus(2024);
  const auto b = gen_mini_corpus(2024);
  CHECK(a.corpus.sites.size() == 30);
  CHECK(a.corpus.passages.size() == b.corpus.passages.size());
  CHECK(encode_embeddings(a.corpus.embeddings) == encode_embeddings(b.corpus.embeddings));
  CHECK(a.stances.size() == b.stances.size());
  std::array<std::size_t, kEcosystemCount> per{};
  for (const auto& p : a.corpus.passages) {
    ++per[index_of(a.corpus.sites.reliability(p.site))];
    CHECK(p.word_count >= 1);
    CHECK(p.word_count <= 100);
  }
  for (auto n : per) CHECK(n > 300);
}
