#include "nflow/cluster.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numeric>
#include <random>
#include <set>

#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "nflow/error.hpp"
#include "nflow/io.hpp"
#include "nflow/parallel.hpp"
#include "nflow/simd/kernels.hpp"

namespace nflow {

void ClusterParams::validate() const {
  if (!(min_cos > 0.0 && min_cos < 1.0)) throw Error("min_cos must be in (0,1)");
  if (!(converge_frac > 0.0 && converge_frac < 1.0)) throw Error("converge_frac must be in (0,1)");
  if (max_outer_iters == 0) throw Error("max_outer_iters must be positive");
  if (new_clusters_per_iter == 0) throw Error("new_clusters_per_iter must be positive");
}

namespace {

constexpr auto kNone = std::numeric_limits<std::uint32_t>::max();

struct Centroid {
  std::vector<float> v;
  bool frozen = false;
};

std::vector<float> unit_from_sum(const std::vector<double>& sum) {
  double ss = 0.0;
  for (double s : sum) ss += s * s;
  const double norm = std::sqrt(ss);
  std::vector<float> out(sum.size());
  for (std::size_t d = 0; d < sum.size(); ++d) out[d] = static_cast<float>(sum[d] / norm);
  return out;
}

class Assigner {
 public:
  Assigner(const EmbeddingMatrix& x, const simd::KernelTable& k) : x_(x), k_(k) {}

  // Argmax cosine per row against the packed centroid block.
  void run(const std::vector<Centroid>& centroids, std::vector<std::uint32_t>& assign,
           std::vector<double>& sim) const {
    const std::size_t dim = x_.dim();
    const std::size_t kc = centroids.size();
    std::vector<float> block(kc * dim);
    for (std::size_t c = 0; c < kc; ++c) {
      std::copy(centroids[c].v.begin(), centroids[c].v.end(), block.begin() + c * dim);
    }
    parallel_for(x_.rows(), [&](std::size_t b, std::size_t e) {
      std::vector<double> dots(kc);
      for (std::size_t i = b; i < e; ++i) {
        k_.dot_rows_f32(x_.row(i).data(), block.data(), kc, dim, dots.data());
        std::uint32_t best = kNone;
        double best_sim = -std::numeric_limits<double>::infinity();
        for (std::size_t c = 0; c < kc; ++c) {
          if (dots[c] > best_sim) {
            best_sim = dots[c];
            best = static_cast<std::uint32_t>(c);
          }
        }
        assign[i] = best;
        sim[i] = best_sim;
      }
    }, 32);
  }

 private:
  const EmbeddingMatrix& x_;
  const simd::KernelTable& k_;
};

// Drops clusters without members (unless frozen) and remaps assignments.
void compact(std::vector<Centroid>& centroids, std::vector<std::uint32_t>& assign) {
  std::vector<std::size_t> counts(centroids.size(), 0);
  for (auto a : assign) {
    if (a != kNone) ++counts[a];
  }
  std::vector<std::uint32_t> remap(centroids.size(), kNone);
  std::vector<Centroid> kept;
  for (std::size_t c = 0; c < centroids.size(); ++c) {
    if (counts[c] > 0 || centroids[c].frozen) {
      remap[c] = static_cast<std::uint32_t>(kept.size());
      kept.push_back(std::move(centroids[c]));
    }
  }
  centroids = std::move(kept);
  for (auto& a : assign) {
    if (a != kNone) a = remap[a];
  }
}

// Renormalized member means; members are summed in row order.
void update_centroids(const EmbeddingMatrix& x, const simd::KernelTable& k,
                      std::vector<Centroid>& centroids, const std::vector<std::uint32_t>& assign) {
  const std::size_t kc = centroids.size();
  std::vector<std::size_t> offsets(kc + 1, 0);
  for (auto a : assign) ++offsets[a + 1];
  std::partial_sum(offsets.begin(), offsets.end(), offsets.begin());
  std::vector<std::size_t> members(assign.size());
  {
    std::vector<std::size_t> fill(offsets.begin(), offsets.end() - 1);
    for (std::size_t i = 0; i < assign.size(); ++i) members[fill[assign[i]]++] = i;
  }
  parallel_for(kc, [&](std::size_t b, std::size_t e) {
    std::vector<double> sum(x.dim());
    for (std::size_t c = b; c < e; ++c) {
      if (centroids[c].frozen || offsets[c] == offsets[c + 1]) continue;
      std::fill(sum.begin(), sum.end(), 0.0);
      for (std::size_t m = offsets[c]; m < offsets[c + 1]; ++m) {
        k.accumulate_f32(sum.data(), x.row(members[m]).data(), x.dim());
      }
      double ss = 0.0;
      for (double s : sum) ss += s * s;
      // Antipodal members can cancel; keep the previous direction then.
      if (ss > 0.0) centroids[c].v = unit_from_sum(sum);
    }
  }, 1);
}

double objective_from(const std::vector<double>& sim, std::size_t k, double penalty) {
  double total = 0.0;
  for (double s : sim) total += 2.0 - 2.0 * s;
  return total + penalty * static_cast<double>(k);
}

}  // namespace

DpMeansResult dp_means(const EmbeddingMatrix& x, const ClusterParams& params,
                       std::span<const std::vector<float>> initial, bool freeze_initial) {
  params.validate();
  if (x.rows() == 0) throw Error("dp_means requires at least one row");
  if (!x.normalized()) throw Error("dp_means requires a normalized embedding matrix");
  const std::size_t n = x.rows();
  const std::size_t dim = x.dim();
  const auto& kern = simd::kernels();
  const double penalty = params.penalty();

  std::vector<Centroid> centroids;
  for (const auto& c : initial) {
    if (c.size() != dim) throw Error("initial centroid dimension mismatch");
    centroids.push_back({c, freeze_initial});
  }
  if (centroids.empty()) {
    std::mt19937_64 rng(params.seed);
    const auto first = std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
    auto r = x.row(first);
    centroids.push_back({std::vector<float>(r.begin(), r.end()), false});
  }

  DpMeansResult res;
  std::vector<std::uint32_t> assign(n, kNone), next(n, kNone);
  std::vector<double> sim(n, 0.0);
  Assigner assigner(x, kern);
  const double change_floor = params.converge_frac * static_cast<double>(n);

  for (std::size_t iter = 0; iter < params.max_outer_iters; ++iter) {
    assigner.run(centroids, next, sim);
    std::size_t changed = 0;
    for (std::size_t i = 0; i < n; ++i) changed += next[i] != assign[i];
    assign.swap(next);

    std::vector<std::size_t> candidates;
    for (std::size_t i = 0; i < n; ++i) {
      if (sim[i] < params.min_cos) candidates.push_back(i);
    }
    res.history.push_back({centroids.size(), changed, candidates.size(),
                           objective_from(sim, centroids.size(), penalty)});
    res.iterations = iter + 1;
    spdlog::debug("dp_means iter {}: k={} changed={} candidates={}", iter, centroids.size(),
                  changed, candidates.size());

    if (candidates.empty() && static_cast<double>(changed) < change_floor) {
      res.converged = true;
      break;
    }
    if (iter + 1 == params.max_outer_iters) break;

    // Delayed creation: only the farthest candidates open clusters.
    const std::size_t m = std::min(params.new_clusters_per_iter, candidates.size());
    std::partial_sort(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(m),
                      candidates.end(), [&](std::size_t a, std::size_t b) {
                        return sim[a] != sim[b] ? sim[a] < sim[b] : a < b;
                      });
    for (std::size_t j = 0; j < m; ++j) {
      const std::size_t p = candidates[j];
      auto r = x.row(p);
      assign[p] = static_cast<std::uint32_t>(centroids.size());
      centroids.push_back({std::vector<float>(r.begin(), r.end()), false});
    }
    compact(centroids, assign);
    update_centroids(x, kern, centroids, assign);
  }

  // Iteration cap with points still too far from every centroid: give each
  // its own cluster, then settle assignments against the final centroid set.
  std::vector<std::size_t> leftover;
  for (std::size_t i = 0; i < n; ++i) {
    if (sim[i] < params.min_cos) leftover.push_back(i);
  }
  if (!leftover.empty()) {
    spdlog::warn("dp_means hit max_outer_iters={} with {} unassignable passages; seeding singletons",
                 params.max_outer_iters, leftover.size());
    for (std::size_t p : leftover) {
      auto r = x.row(p);
      centroids.push_back({std::vector<float>(r.begin(), r.end()), false});
    }
    assigner.run(centroids, assign, sim);
    compact(centroids, assign);
  }

  res.centroids.reserve(centroids.size());
  for (auto& c : centroids) res.centroids.push_back(std::move(c.v));
  res.assignment = std::move(assign);
  res.similarity = std::move(sim);
  return res;
}

double dp_means_objective(const EmbeddingMatrix& x, std::span<const std::uint32_t> assignment,
                          std::span<const std::vector<float>> centroids, double min_cos) {
  double total = 0.0;
  for (std::size_t i = 0; i < x.rows(); ++i) {
    const auto& c = centroids[assignment[i]];
    auto r = x.row(i);
    for (std::size_t d = 0; d < x.dim(); ++d) {
      const double diff = static_cast<double>(r[d]) - c[d];
      total += diff * diff;
    }
  }
  return total + 2.0 * (1.0 - min_cos) * static_cast<double>(centroids.size());
}

double StoryCluster::max_site_share() const noexcept {
  if (member_passages.empty()) return 0.0;
  std::size_t top = 0;
  for (const auto& [site, count] : site_histogram) top = std::max(top, count);
  return static_cast<double>(top) / static_cast<double>(member_passages.size());
}

std::vector<StoryCluster> make_story_clusters(const DpMeansResult& result, const Corpus& corpus,
                                              std::span<const std::size_t> row_passages) {
  if (row_passages.size() != result.assignment.size()) {
    throw Error("row_passages size does not match the clustering result");
  }
  std::vector<StoryCluster> out(result.centroids.size());
  for (std::size_t c = 0; c < out.size(); ++c) {
    out[c].cluster_id = c;
    out[c].centroid = result.centroids[c];
  }
  for (std::size_t row = 0; row < row_passages.size(); ++row) {
    const auto& p = corpus.passages.at(row_passages[row]);
    auto& cl = out.at(result.assignment[row]);
    cl.member_passages.push_back(p.passage_id);
    ++cl.site_histogram[p.site];
  }
  for (auto& cl : out) std::sort(cl.member_passages.begin(), cl.member_passages.end());
  std::erase_if(out, [](const StoryCluster& c) { return c.member_passages.empty(); });
  return out;
}

void prune_single_site(std::vector<StoryCluster>& clusters, double threshold) {
  for (auto& c : clusters) c.pruned = c.max_site_share() >= threshold;
}

VolumeSeries cluster_volume_series(const StoryCluster& cluster, const Corpus& corpus,
                                   std::uint32_t bucket_days) {
  if (bucket_days == 0) throw Error("bucket_days must be positive");
  VolumeSeries vs;
  // Article day = earliest passage day.
  std::map<std::uint64_t, std::pair<double, SiteIndex>> articles;
  for (auto pid : cluster.member_passages) {
    auto pos = corpus.find_passage(pid);
    if (!pos) continue;
    const auto& p = corpus.passages[*pos];
    auto [it, fresh] = articles.try_emplace(p.article_id, p.published_day, p.site);
    if (!fresh) it->second.first = std::min(it->second.first, p.published_day);
  }
  if (articles.empty()) return vs;
  auto bucket_of = [&](double day) {
    return static_cast<std::int64_t>(std::floor(day / static_cast<double>(bucket_days)));
  };
  std::int64_t lo = std::numeric_limits<std::int64_t>::max();
  std::int64_t hi = std::numeric_limits<std::int64_t>::min();
  for (const auto& [id, v] : articles) {
    lo = std::min(lo, bucket_of(v.first));
    hi = std::max(hi, bucket_of(v.first));
  }
  vs.first_bucket = lo;
  for (auto& c : vs.counts) c.assign(static_cast<std::size_t>(hi - lo + 1), 0);
  for (const auto& [id, v] : articles) {
    const auto eco = index_of(corpus.sites.reliability(v.second));
    ++vs.counts[eco][static_cast<std::size_t>(bucket_of(v.first) - lo)];
  }
  return vs;
}

std::string clusters_to_jsonl(const std::vector<StoryCluster>& clusters) {
  std::string out;
  for (const auto& c : clusters) {
    double ss = 0.0;
    for (float v : c.centroid) ss += static_cast<double>(v) * v;
    nlohmann::ordered_json j;
    j["cluster_id"] = c.cluster_id;
    j["size"] = c.member_passages.size();
    j["pruned"] = c.pruned;
    j["centroid_norm"] = std::stod(io::fmt_real(std::sqrt(ss)));
    j["passage_ids"] = c.member_passages;
    out += j.dump();
    out += '\n';
  }
  return out;
}

std::vector<StoryCluster> clusters_from_jsonl(const std::filesystem::path& path, const Corpus& corpus) {
  std::vector<StoryCluster> out;
  const std::string file = path.string();
  for (const auto& line : io::read_lines(path)) {
    if (line.text.empty()) continue;
    StoryCluster c;
    try {
      auto j = nlohmann::json::parse(line.text);
      c.cluster_id = j.at("cluster_id").get<std::uint64_t>();
      c.pruned = j.at("pruned").get<bool>();
      c.member_passages = j.at("passage_ids").get<std::vector<std::uint64_t>>();
    } catch (const nlohmann::json::exception& e) {
      throw InputError(file, line.number, std::string("bad cluster record: ") + e.what());
    }
    for (auto pid : c.member_passages) {
      auto pos = corpus.find_passage(pid);
      if (!pos) throw InputError(file, line.number, "unknown passage_id " + std::to_string(pid));
      ++c.site_histogram[corpus.passages[*pos].site];
    }
    out.push_back(std::move(c));
  }
  return out;
}

std::string encode_assignment(const std::vector<StoryCluster>& clusters, const Corpus& corpus) {
  std::map<std::uint64_t, std::uint64_t> by_passage;
  for (const auto& p : corpus.passages) by_passage[p.passage_id] = std::numeric_limits<std::uint64_t>::max();
  for (const auto& c : clusters) {
    for (auto pid : c.member_passages) by_passage[pid] = c.cluster_id;
  }
  std::string out;
  out.reserve(by_passage.size() * 8);
  for (const auto& [pid, cid] : by_passage) {
    char b[8];
    std::memcpy(b, &cid, 8);
    out.append(b, 8);
  }
  return out;
}

}  // namespace nflow
