#include <doctest.h>

#include <cmath>
#include <numeric>
#include <random>

#include "../support/fixtures.hpp"
#include "../support/oracles.hpp"
#include "nflow/cluster.hpp"
#include "nflow/error.hpp"
#include "nflow/parallel.hpp"
#include "nflow/synth.hpp"

using namespace nflow;
using namespace nflow::synth;

namespace {

double cosine(std::span<const float> a, const std::vector<float>& b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d += static_cast<double>(a[i]) * b[i];
  return d;
}

oracle::Points to_points(const EmbeddingMatrix& m) {
  oracle::Points pts(m.rows());
  for (std::size_t i = 0; i < m.rows(); ++i) {
    auto r = m.row(i);
    pts[i].assign(r.begin(), r.end());
  }
  return pts;
}

std::vector<std::size_t> identity_rows(std::size_t n) {
  std::vector<std::size_t> v(n);
  std::iota(v.begin(), v.end(), std::size_t{0});
  return v;
}

}  // namespace

TEST_CASE("two identical vectors and one orthogonal vector give clusters of size 2 and 1") {
  EmbeddingMatrix m(3, 3, {1, 0, 0, 1, 0, 0, 0, 1, 0}, true);
  const auto r = dp_means(m, ClusterParams{});
  REQUIRE(r.centroids.size() == 2);
  CHECK(r.assignment[0] == r.assignment[1]);
  CHECK(r.assignment[0] != r.assignment[2]);
  CHECK(r.converged);
}

TEST_CASE("identical vectors form one cluster whose centroid is that vector") {
  std::vector<float> data;
  for (int i = 0; i < 7; ++i) data.insert(data.end(), {0.6f, 0.0f, 0.8f});
  EmbeddingMatrix m(7, 3, data, true);
  const auto r = dp_means(m, ClusterParams{});
  REQUIRE(r.centroids.size() == 1);
  CHECK(r.centroids[0][0] == doctest::Approx(0.6));
  CHECK(r.centroids[0][2] == doctest::Approx(0.8));
  for (auto a : r.assignment) CHECK(a == 0);
}

TEST_CASE("parameter validation rejects out-of-range values") {
  ClusterParams p;
  p.min_cos = 1.0;
  CHECK_THROWS_AS(p.validate(), Error);
  p = {};
  p.converge_frac = 0.0;
  CHECK_THROWS_AS(p.validate(), Error);
  p = {};
  p.max_outer_iters = 0;
  CHECK_THROWS_AS(p.validate(), Error);
  CHECK(ClusterParams{}.penalty() == doctest::Approx(1.0));
}

TEST_CASE("objective never increases across outer iterations") {
  for (std::uint64_t seed = 1; seed <= 6; ++seed) {
    const auto m = fixture::random_unit_matrix(300, 8, seed);
    ClusterParams p;
    p.min_cos = 0.3;
    p.seed = seed;
    const auto r = dp_means(m, p);
    REQUIRE(r.history.size() >= 2);
    for (std::size_t i = 1; i < r.history.size(); ++i) {
      CHECK(r.history[i].objective <= r.history[i - 1].objective + 1e-9);
    }
  }
}

TEST_CASE("at convergence every passage sits with its most similar centroid above min_cos") {
  SynthSpec spec;
  spec.seed = 3;
  spec.n_points = 400;
  spec.dim = 16;
  spec.n_clusters = 4;
  const auto blobs = gen_blobs(spec);
  const auto r = dp_means(blobs.matrix, ClusterParams{});
  REQUIRE(r.converged);
  for (std::size_t i = 0; i < blobs.matrix.rows(); ++i) {
    const auto row = blobs.matrix.row(i);
    const double own = cosine(row, r.centroids[r.assignment[i]]);
    CHECK(own >= 0.5);
    for (const auto& c : r.centroids) CHECK(own >= cosine(row, c) - 1e-6);
    CHECK(r.similarity[i] == doctest::Approx(own).epsilon(1e-6));
  }
  for (const auto& c : r.centroids) {
    double ss = 0.0;
    for (float v : c) ss += static_cast<double>(v) * v;
    CHECK(std::sqrt(ss) == doctest::Approx(1.0).epsilon(1e-6));
  }
}

TEST_CASE("assignment is identical for 1 and 8 threads") {
  const auto m = fixture::random_unit_matrix(700, 12, 99);
  ClusterParams p;
  p.min_cos = 0.35;
  set_thread_count(1);
  const auto a = dp_means(m, p);
  set_thread_count(8);
  const auto b = dp_means(m, p);
  set_thread_count(0);
  CHECK(a.assignment == b.assignment);
  CHECK(a.centroids == b.centroids);
}

TEST_CASE("blob recovery matches the generator's labels") {
  SynthSpec spec;
  spec.seed = 11;
  spec.blob_intra_cos = 0.9;
  const auto blobs = gen_blobs(spec);
  const auto r = dp_means(blobs.matrix, ClusterParams{});
  CHECK(r.centroids.size() == 5);
  CHECK(oracle::adjusted_rand_index(r.assignment, blobs.labels) >= 0.95);
}

TEST_CASE("small instances end feasible and no better than the brute-force optimum") {
  for (int inst = 0; inst < 5; ++inst) {
    const std::size_t n = 6 + inst;
    const auto m = fixture::random_unit_matrix(n, 3, 1000 + inst);
    ClusterParams p;
    p.min_cos = 0.5;
    const auto r = dp_means(m, p);
    const auto pts = to_points(m);
    const auto best = oracle::brute_force_dp_means(pts, p.min_cos);
    const double got = oracle::partition_objective(pts, r.assignment, p.min_cos);
    CHECK(oracle::partition_feasible(pts, r.assignment, p.min_cos));
    CHECK(got >= best.objective - 1e-9);
    CHECK(dp_means_objective(m, r.assignment, r.centroids, p.min_cos) >= got - 1e-6);
  }
}

TEST_CASE("a single blob of tight points is solved exactly") {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    SynthSpec spec;
    spec.seed = seed;
    spec.n_points = 9;
    spec.dim = 4;
    spec.n_clusters = 1;
    spec.blob_intra_cos = 0.9;
    const auto blobs = gen_blobs(spec);
    const auto r = dp_means(blobs.matrix, ClusterParams{});
    const auto pts = to_points(blobs.matrix);
    const auto best = oracle::brute_force_dp_means(pts, 0.5);
    CHECK(oracle::partition_objective(pts, r.assignment, 0.5) == doctest::Approx(best.objective).epsilon(1e-9));
  }
}

TEST_CASE("pruning flags clusters whose top site holds at least half the passages") {
  auto reg = fixture::sites({{"a", Reliability::Reliable}, {"b", Reliability::Mixed}, {"c", Reliability::Unreliable},
                             {"d", Reliability::Reliable}, {"e", Reliability::Reliable}});
  auto make = [](std::map<SiteIndex, std::size_t> hist) {
    StoryCluster c;
    for (const auto& [s, n] : hist) {
      for (std::size_t i = 0; i < n; ++i) c.member_passages.push_back(c.member_passages.size());
    }
    c.site_histogram = std::move(hist);
    return c;
  };
  std::vector<StoryCluster> cs{make({{0, 6}, {1, 4}}), make({{0, 4}, {1, 3}, {2, 3}}), make({{3, 1}}),
                               make({{0, 5}, {1, 5}}), make({{0, 2}, {1, 2}, {2, 2}, {3, 2}, {4, 2}})};
  prune_single_site(cs);
  CHECK(cs[0].pruned);
  CHECK_FALSE(cs[1].pruned);
  CHECK(cs[2].pruned);
  CHECK(cs[3].pruned);
  CHECK_FALSE(cs[4].pruned);
  prune_single_site(cs, 0.7);
  CHECK_FALSE(cs[0].pruned);
  CHECK(cs[2].pruned);
}

TEST_CASE("story clusters carry sorted members and a histogram summing to the size") {
  auto c = fixture::corpus(fixture::sites({{"a", Reliability::Reliable}, {"b", Reliability::Unreliable}}),
                           {{0, 1, 1.0}, {1, 2, 1.0}, {0, 3, 2.0}, {1, 4, 2.0}, {1, 5, 3.0}, {0, 6, 3.0}});
  const auto r = dp_means(c.embeddings, ClusterParams{});
  const auto rows = identity_rows(c.passages.size());
  const auto clusters = make_story_clusters(r, c, rows);
  std::size_t total = 0;
  for (const auto& cl : clusters) {
    CHECK(std::is_sorted(cl.member_passages.begin(), cl.member_passages.end()));
    std::size_t hist = 0;
    for (const auto& [s, n] : cl.site_histogram) hist += n;
    CHECK(hist == cl.size());
    total += cl.size();
  }
  CHECK(total == c.passages.size());
}

TEST_CASE("volume series counts distinct articles per ecosystem bucket") {
  auto c = fixture::corpus(fixture::sites({{"r", Reliability::Reliable}, {"u", Reliability::Unreliable}}),
                           {{0, 1, 3.0}, {0, 2, 5.0}, {1, 3, 4.0}, {1, 3, 4.5}});
  StoryCluster cl;
  cl.member_passages = {100, 101, 102, 103};
  const auto vs = cluster_volume_series(cl, c, 7);
  CHECK(vs.first_bucket == 0);
  CHECK(vs.counts[index_of(Reliability::Reliable)] == std::vector<std::size_t>{2});
  CHECK(vs.counts[index_of(Reliability::Unreliable)] == std::vector<std::size_t>{1});
  CHECK(vs.counts[index_of(Reliability::Mixed)] == std::vector<std::size_t>{0});

  StoryCluster empty;
  CHECK(cluster_volume_series(empty, c, 7).empty());
  CHECK_THROWS_AS(cluster_volume_series(cl, c, 0), Error);
}

TEST_CASE("volume buckets align to day zero") {
  auto c = fixture::corpus(fixture::sites({{"r", Reliability::Reliable}}), {{0, 1, 6.9}, {0, 2, 7.0}, {0, 3, 20.0}});
  StoryCluster cl;
  cl.member_passages = {100, 101, 102};
  const auto vs = cluster_volume_series(cl, c, 7);
  CHECK(vs.first_bucket == 0);
  CHECK(vs.counts[0] == std::vector<std::size_t>{1, 1, 1});
}

TEST_CASE("cluster JSONL round trips through the corpus") {
  fixture::TempDir dir;
  auto c = fixture::corpus(fixture::sites({{"a", Reliability::Reliable}, {"b", Reliability::Mixed}}),
                           {{0, 1, 1.0}, {1, 2, 1.0}, {0, 3, 2.0}, {1, 4, 2.0}});
  const auto r = dp_means(c.embeddings, ClusterParams{});
  const auto rows = identity_rows(c.passages.size());
  auto clusters = make_story_clusters(r, c, rows);
  prune_single_site(clusters);
  io::write_file(dir / "c.jsonl", clusters_to_jsonl(clusters));
  const auto back = clusters_from_jsonl(dir / "c.jsonl", c);
  REQUIRE(back.size() == clusters.size());
  for (std::size_t i = 0; i < back.size(); ++i) {
    CHECK(back[i].cluster_id == clusters[i].cluster_id);
    CHECK(back[i].pruned == clusters[i].pruned);
    CHECK(back[i].member_passages == clusters[i].member_passages);
    CHECK(back[i].site_histogram == clusters[i].site_histogram);
  }
  const auto bin = encode_assignment(clusters, c);
  CHECK(bin.size() == 8 * c.passages.size());
}
