#include "nflow/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <queue>
#include <random>

#include "nflow/error.hpp"
#include "nflow/io.hpp"
#include "nflow/parallel.hpp"

namespace nflow::synth {

namespace {

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : g_(seed) {}
  double uniform() { return std::uniform_real_distribution<double>(0.0, 1.0)(g_); }
  double normal() { return std::normal_distribution<double>(0.0, 1.0)(g_); }
  bool bernoulli(double p) { return uniform() < p; }
  std::size_t index(std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(g_); }
  // Strictly positive so infection times strictly increase along a path.
  double exponential(double rate) {
    for (;;) {
      const double d = std::exponential_distribution<double>(rate)(g_);
      if (d > 0.0) return d;
    }
  }

 private:
  std::mt19937_64 g_;
};

std::uint64_t child_seed(std::uint64_t seed, std::uint64_t stream) {
  return io::splitmix64(seed ^ io::splitmix64(stream + 0x51ed2701f3a5c7b9ULL));
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

void unit(std::vector<double>& v) {
  const double n = std::sqrt(dot(v, v));
  for (double& x : v) x /= n;
}

std::vector<double> gaussian_vector(Rng& rng, std::size_t dim) {
  std::vector<double> v(dim);
  for (double& x : v) x = rng.normal();
  return v;
}

// k unit vectors with pairwise cosine <= max_cos.
std::vector<std::vector<double>> separated_centroids(Rng& rng, std::size_t k, std::size_t dim, double max_cos) {
  if (k >= 2 && max_cos < -1.0 / static_cast<double>(k - 1)) {
    throw Error("infeasible blob geometry: " + std::to_string(k) + " centroids cannot have pairwise cosine <= " +
                io::fmt_real(max_cos));
  }
  std::vector<std::vector<double>> out;
  if (max_cos >= 0.0 && k <= dim) {
    // Random orthonormal set (Gram-Schmidt), cosine exactly 0 up to rounding.
    while (out.size() < k) {
      auto v = gaussian_vector(rng, dim);
      for (const auto& u : out) {
        const double p = dot(v, u);
        for (std::size_t i = 0; i < dim; ++i) v[i] -= p * u[i];
      }
      if (std::sqrt(dot(v, v)) < 1e-6) continue;
      unit(v);
      out.push_back(std::move(v));
    }
    return out;
  }
  constexpr std::size_t kAttempts = 100000;
  for (std::size_t c = 0; c < k; ++c) {
    bool placed = false;
    for (std::size_t a = 0; a < kAttempts && !placed; ++a) {
      auto v = gaussian_vector(rng, dim);
      unit(v);
      if (std::all_of(out.begin(), out.end(), [&](const auto& u) { return dot(u, v) <= max_cos; })) {
        out.push_back(std::move(v));
        placed = true;
      }
    }
    if (!placed) {
      throw Error("infeasible blob geometry: could not place " + std::to_string(k) + " centroids in dim " +
                  std::to_string(dim) + " with pairwise cosine <= " + io::fmt_real(max_cos));
    }
  }
  return out;
}

// Noise scale giving cos(point, centroid) ~ sqrt(c), hence point-to-point ~ c.
double noise_sigma(double intra_cos, std::size_t dim) {
  return std::sqrt((1.0 / intra_cos - 1.0) / static_cast<double>(dim));
}

std::vector<float> noisy_point(Rng& rng, const std::vector<double>& centroid, double sigma) {
  std::vector<double> v(centroid.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = centroid[i] + sigma * rng.normal();
  unit(v);
  return {v.begin(), v.end()};
}

}  // namespace

void SynthSpec::validate() const {
  if (n_sites == 0 || n_clusters == 0 || n_points == 0 || dim == 0 || cascades_per_run == 0)
    throw Error("synthetic generator: counts must be positive");
  if (!(edge_density > 0.0 && edge_density <= 1.0)) throw Error("synthetic generator: edge_density must be in (0,1]");
  if (!(alpha_t > 0.0)) throw Error("synthetic generator: alpha_t must be positive");
  if (!(beta >= 0.0 && beta <= 1.0)) throw Error("synthetic generator: beta must be in [0,1]");
  if (!(blob_intra_cos > 0.0 && blob_intra_cos < 1.0)) throw Error("synthetic generator: blob_intra_cos must be in (0,1)");
  if (!(blob_inter_cos >= -1.0 && blob_inter_cos < blob_intra_cos))
    throw Error("synthetic generator: blob_inter_cos must be in [-1, blob_intra_cos)");
}

Blobs gen_blobs(const SynthSpec& spec) {
  spec.validate();
  Rng rng(child_seed(spec.seed, 0));
  const auto centroids = separated_centroids(rng, spec.n_clusters, spec.dim, spec.blob_inter_cos);
  const double sigma = noise_sigma(spec.blob_intra_cos, spec.dim);
  Blobs b;
  std::vector<float> data;
  data.reserve(spec.n_points * spec.dim);
  for (std::size_t i = 0; i < spec.n_points; ++i) {
    const auto label = static_cast<std::uint32_t>(i % spec.n_clusters);
    auto p = noisy_point(rng, centroids[label], sigma);
    data.insert(data.end(), p.begin(), p.end());
    b.labels.push_back(label);
  }
  b.matrix = EmbeddingMatrix(spec.n_points, spec.dim, std::move(data), true);
  for (const auto& c : centroids) b.centroids.emplace_back(c.begin(), c.end());
  return b;
}

namespace {

struct Simulated {
  Cascade cascade;
  std::vector<Transmission> tree;
};

Simulated simulate_one(const std::vector<std::vector<SiteIndex>>& out_edges, const SynthSpec& spec, Rng& rng,
                       std::uint64_t id) {
  const std::size_t n = out_edges.size();
  const double horizon = 10.0 / spec.alpha_t;
  std::vector<double> arrival(n, std::numeric_limits<double>::infinity());
  std::vector<SiteIndex> parent(n, 0);
  std::vector<bool> done(n, false);
  const auto root = static_cast<SiteIndex>(rng.index(n));
  arrival[root] = 0.0;
  using Item = std::pair<double, SiteIndex>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
  pq.emplace(0.0, root);
  Simulated s;
  s.cascade.cluster_id = id;
  s.cascade.horizon = horizon;
  while (!pq.empty()) {
    const auto [t, u] = pq.top();
    pq.pop();
    if (done[u]) continue;
    done[u] = true;
    s.cascade.events.push_back({u, t});
    if (u != root) s.tree.push_back({parent[u], u, t - arrival[parent[u]]});
    for (auto v : out_edges[u]) {
      // Both draws happen for every edge so the stream layout is fixed.
      const bool fires = rng.bernoulli(spec.beta);
      const double delay = rng.exponential(spec.alpha_t);
      if (!fires || done[v]) continue;
      const double tv = t + delay;
      if (tv < horizon && tv < arrival[v]) {
        arrival[v] = tv;
        parent[v] = u;
        pq.emplace(tv, v);
      }
    }
  }
  std::sort(s.cascade.events.begin(), s.cascade.events.end(),
            [](const CascadeEvent& a, const CascadeEvent& b) { return a.t != b.t ? a.t < b.t : a.site < b.site; });
  return s;
}

}  // namespace

SynthCascades gen_cascades_on(const SynthSpec& spec, const std::vector<std::pair<SiteIndex, SiteIndex>>& edges) {
  spec.validate();
  std::vector<std::vector<SiteIndex>> out_edges(spec.n_sites);
  SynthCascades result;
  result.true_edges = edges;
  std::sort(result.true_edges.begin(), result.true_edges.end());
  result.true_edges.erase(std::unique(result.true_edges.begin(), result.true_edges.end()), result.true_edges.end());
  for (const auto& [a, b] : result.true_edges) {
    if (a >= spec.n_sites || b >= spec.n_sites || a == b) throw Error("synthetic edge out of range or self-loop");
    out_edges[a].push_back(b);
  }

  result.cascades.resize(spec.cascades_per_run);
  result.trees.resize(spec.cascades_per_run);
  std::vector<std::size_t> retries(spec.cascades_per_run, 0);
  parallel_for(
      spec.cascades_per_run,
      [&](std::size_t b, std::size_t e) {
        for (std::size_t c = b; c < e; ++c) {
          Rng rng(child_seed(spec.seed, 1000 + c));
          for (std::size_t attempt = 0;; ++attempt) {
            if (attempt > spec.max_retries) {
              throw Error("cascade " + std::to_string(c) + " had fewer than 2 events after " +
                          std::to_string(spec.max_retries) + " retries (beta=" + io::fmt_real(spec.beta) + ")");
            }
            auto s = simulate_one(out_edges, spec, rng, c);
            if (s.cascade.events.size() >= 2) {
              result.cascades[c] = std::move(s.cascade);
              result.trees[c] = std::move(s.tree);
              retries[c] = attempt;
              break;
            }
          }
        }
      },
      16);
  for (auto r : retries) result.regenerated += r;
  return result;
}

SynthCascades gen_cascades(const SynthSpec& spec) {
  spec.validate();
  Rng rng(child_seed(spec.seed, 1));
  std::vector<std::pair<SiteIndex, SiteIndex>> edges;
  for (std::size_t i = 0; i < spec.n_sites; ++i)
    for (std::size_t j = 0; j < spec.n_sites; ++j)
      if (i != j && rng.bernoulli(spec.edge_density))
        edges.emplace_back(static_cast<SiteIndex>(i), static_cast<SiteIndex>(j));
  return gen_cascades_on(spec, edges);
}

SiteRegistry synthetic_sites(std::size_t n) {
  SiteRegistry sites;
  for (std::size_t i = 0; i < n; ++i) {
    char name[32];
    std::snprintf(name, sizeof name, "s%03zu.synth", i);
    sites.add({name, kEcosystems[i % kEcosystemCount], std::nullopt});
  }
  return sites;
}

std::string edges_to_tsv(const std::vector<std::pair<SiteIndex, SiteIndex>>& edges, const SiteRegistry& sites) {
  std::string out = "src\tdst\n";
  for (const auto& [a, b] : edges) out += sites[a].domain + "\t" + sites[b].domain + "\n";
  return out;
}

void write_site_registry(const SiteRegistry& sites, const std::filesystem::path& path) {
  std::string out = "domain,reliability,partisanship\n";
  for (const auto& s : sites.sites()) {
    out += s.domain + "," + std::string(to_string(s.reliability)) + "," +
           (s.partisanship ? io::fmt_real(*s.partisanship) : std::string()) + "\n";
  }
  io::write_file(path, out);
}

void write_stances(const std::vector<StanceInput>& stances, const std::filesystem::path& path) {
  std::string out = "passage_id,target,stance\n";
  for (const auto& s : stances)
    out += std::to_string(s.passage_id) + "," + io::csv_field(s.target) + "," + std::string(to_string(s.stance)) + "\n";
  io::write_file(path, out);
}

// ---------------------------------------------------------------------------
// Mini-corpus

namespace {

struct Story {
  const char* target;  // "" when the story carries no stance target
  std::vector<const char*> words;
  Reliability origin;
};

const std::vector<Story>& stories() {
  static const std::vector<Story> s = {
      {"vaccine", {"mandate", "booster", "pfizer", "clinic", "dose", "pharmacy"}, Reliability::Unreliable},
      {"vaccine", {"myocarditis", "trial", "injection", "cardiac", "athlete", "fda"}, Reliability::Unreliable},
      {"vaccine", {"school", "pediatric", "parent", "classroom", "exemption", "district"}, Reliability::Mixed},
      {"ukraine", {"kyiv", "troop", "missile", "border", "sanction", "nato"}, Reliability::Reliable},
      {"ukraine", {"grain", "port", "wheat", "blockade", "odesa", "shipment"}, Reliability::Reliable},
      {"ukraine", {"refugee", "poland", "shelter", "convoy", "donation", "volunteer"}, Reliability::Mixed},
      {"fauci", {"lab", "funding", "wuhan", "hearing", "senate", "email"}, Reliability::Unreliable},
      {"fauci", {"testimony", "congress", "origin", "virus", "subpoena", "nih"}, Reliability::Unreliable},
      {"", {"ballot", "county", "audit", "recount", "voter", "machine"}, Reliability::Mixed},
      {"", {"hurricane", "coast", "flooding", "evacuation", "rainfall", "gulf"}, Reliability::Reliable},
      {"", {"inflation", "gasoline", "grocery", "rate", "fed", "wage"}, Reliability::Reliable},
      {"", {"emission", "carbon", "summit", "pledge", "warming", "coal"}, Reliability::Mixed},
  };
  return s;
}

const std::vector<const char*>& filler() {
  static const std::vector<const char*> f = {
      "the",    "a",      "of",      "and",    "to",      "in",       "report",  "official", "said",
      "week",   "people", "new",     "state",  "public",  "according", "told",   "news",     "statement",
      "local",  "after",  "from",    "with",   "claim",   "source",   "group",   "plan",     "issue",
      "during", "many",   "country", "leader", "expert",  "question", "policy",  "national", "early",
      "data",   "move",   "concern", "part",   "support", "effort",   "latest",  "update",   "response"};
  return f;
}

const std::vector<const char*>& boilerplate() {
  static const std::vector<const char*> b = {"subscribe", "newsletter", "cookie", "privacy", "account",
                                             "login",     "premium",    "offer",  "donate",  "membership"};
  return b;
}

std::string passage_text(Rng& rng, const Story* story, std::size_t words) {
  std::string out;
  for (std::size_t w = 0; w < words; ++w) {
    const char* word;
    const double u = rng.uniform();
    if (!story) {
      word = u < 0.5 ? boilerplate()[rng.index(boilerplate().size())] : filler()[rng.index(filler().size())];
    } else if (u < 0.3) {
      word = story->words[rng.index(story->words.size())];
    } else if (u < 0.38 && story->target[0] != '\0') {
      word = story->target;
    } else {
      word = filler()[rng.index(filler().size())];
    }
    if (!out.empty()) out += ' ';
    out += word;
  }
  return out;
}

// Pro / Against probabilities by target and ecosystem; the rest is Neutral.
std::pair<double, double> stance_mix(const std::string& target, Reliability r) {
  const std::size_t e = index_of(r);
  if (target == "vaccine") {
    constexpr double pro[] = {0.55, 0.30, 0.10}, against[] = {0.10, 0.30, 0.60};
    return {pro[e], against[e]};
  }
  if (target == "ukraine") {
    constexpr double pro[] = {0.60, 0.35, 0.20}, against[] = {0.10, 0.25, 0.50};
    return {pro[e], against[e]};
  }
  constexpr double pro[] = {0.40, 0.25, 0.05}, against[] = {0.20, 0.35, 0.70};
  return {pro[e], against[e]};
}

}  // namespace

MiniCorpus gen_mini_corpus(std::uint64_t seed) {
  constexpr std::size_t kPerEcosystem = 10;
  constexpr std::size_t kDim = 32;
  constexpr double kBaseDay = 19000.0;
  static const char* names[3][kPerEcosystem] = {
      {"northherald.com", "dailyledger.com", "civicpost.org", "metrotribune.com", "capitolwire.com",
       "harborgazette.com", "valleyjournal.com", "lakesidetimes.com", "pressbureau.org", "citizenreport.com"},
      {"newsroundup.net", "voicesdigest.com", "dailybrief.net", "midwestobserver.com", "opinionhub.net",
       "sundaycolumn.com", "frontpagemix.com", "civicblend.net", "townsquareview.com", "weeklyangle.com"},
      {"truthwire.info", "patriotsignal.net", "realfactsnow.com", "freedomalert.info", "hiddenreport.net",
       "wakeupdaily.com", "libertybeacon.info", "insidetruth.net", "redpillpost.com", "rawstory-now.info"}};

  Rng rng(child_seed(seed, 7));
  MiniCorpus mc;
  auto& corpus = mc.corpus;
  std::vector<double> slant;  // per-site shift from Pro toward Against
  for (std::size_t e = 0; e < kEcosystemCount; ++e) {
    for (std::size_t i = 0; i < kPerEcosystem; ++i) {
      const double lean = (static_cast<double>(e) - 1.0) * 0.6 + 0.3 * (rng.uniform() - 0.5);
      corpus.sites.add({names[e][i], kEcosystems[e], std::round(lean * 100.0) / 100.0});
      slant.push_back(0.15 * rng.normal());
    }
  }
  const std::size_t n_sites = corpus.sites.size();

  // Hidden influence graph: dense inside an ecosystem, sparse across.
  std::vector<std::vector<SiteIndex>> out_edges(n_sites);
  for (std::size_t i = 0; i < n_sites; ++i) {
    for (std::size_t j = 0; j < n_sites; ++j) {
      if (i == j) continue;
      const bool same = i / kPerEcosystem == j / kPerEcosystem;
      const bool near_mixed = i / kPerEcosystem == 1 || j / kPerEcosystem == 1;
      const double p = same ? 0.25 : (near_mixed ? 0.08 : 0.02);
      if (rng.bernoulli(p)) out_edges[i].push_back(static_cast<SiteIndex>(j));
    }
  }

  const std::size_t n_story_centroids = stories().size() + 3;
  const auto centroids = separated_centroids(rng, n_story_centroids, kDim, 0.0);
  const double sigma = noise_sigma(0.75, kDim);

  std::vector<float> emb;
  std::uint64_t next_passage = 1, next_article = 1;
  auto add_article = [&](SiteIndex site, double day, const Story* story, const std::vector<double>& centroid) {
    const std::uint64_t article = next_article++;
    const std::size_t n_passages = 2 + rng.index(3);
    const double rounded = std::round(day * 24.0) / 24.0;
    for (std::size_t k = 0; k < n_passages; ++k) {
      Passage p;
      p.passage_id = next_passage++;
      p.article_id = article;
      p.site = site;
      p.published_day = rounded;
      const std::size_t words = 30 + rng.index(40);
      p.text = passage_text(rng, story, words);
      p.word_count = static_cast<std::uint32_t>(words);
      p.embedding_row = corpus.passages.size();
      auto v = noisy_point(rng, centroid, sigma);
      emb.insert(emb.end(), v.begin(), v.end());
      if (story && story->target[0] != '\0') {
        auto [pro, against] = stance_mix(story->target, corpus.sites.reliability(site));
        const double shift = std::clamp(slant[site], -pro, against);
        pro -= shift;
        against += shift;
        const double u = rng.uniform();
        const Stance st = u < pro ? Stance::Pro : (u < pro + against ? Stance::Against : Stance::Neutral);
        mc.stances.push_back({p.passage_id, story->target, st});
      }
      corpus.passages.push_back(std::move(p));
    }
  };

  SynthSpec diffusion;
  diffusion.alpha_t = 0.8;
  diffusion.beta = 0.6;
  constexpr double kHorizon = 12.0;
  for (std::size_t s = 0; s < stories().size(); ++s) {
    const auto& story = stories()[s];
    const double start = kBaseDay + 4.0 * static_cast<double>(s);
    const auto origin = static_cast<SiteIndex>(index_of(story.origin) * kPerEcosystem + rng.index(kPerEcosystem));
    std::vector<double> arrival(n_sites, std::numeric_limits<double>::infinity());
    arrival[origin] = 0.0;
    // Sparse outside adoption keeps the cascades from being purely graph driven.
    for (std::size_t i = 0; i < n_sites; ++i)
      if (i != origin && rng.bernoulli(0.08)) arrival[i] = 1.0 + rng.uniform() * (kHorizon - 1.0);
    std::vector<bool> done(n_sites, false);
    for (;;) {
      std::size_t u = n_sites;
      for (std::size_t i = 0; i < n_sites; ++i)
        if (!done[i] && std::isfinite(arrival[i]) && (u == n_sites || arrival[i] < arrival[u])) u = i;
      if (u == n_sites) break;
      done[u] = true;
      for (auto v : out_edges[u]) {
        const bool fires = rng.bernoulli(diffusion.beta);
        const double t = arrival[u] + rng.exponential(diffusion.alpha_t);
        if (fires && !done[v] && t < kHorizon && t < arrival[v]) arrival[v] = t;
      }
    }
    for (std::size_t i = 0; i < n_sites; ++i) {
      if (!std::isfinite(arrival[i])) continue;
      const std::size_t n_articles = 2 + rng.index(3);
      for (std::size_t a = 0; a < n_articles; ++a) {
        const double day = start + arrival[i] + (a == 0 ? 0.0 : 0.1 + 2.0 * rng.uniform());
        add_article(static_cast<SiteIndex>(i), day, &story, centroids[s]);
      }
    }
  }
  // Single-site boilerplate: one site each, never a story.
  for (std::size_t b = 0; b < 3; ++b) {
    const auto site = static_cast<SiteIndex>(b * kPerEcosystem + 3);
    for (std::size_t a = 0; a < 6; ++a)
      add_article(site, kBaseDay + 8.0 * static_cast<double>(a), nullptr, centroids[stories().size() + b]);
  }

  const std::size_t n = corpus.passages.size();
  corpus.embeddings = EmbeddingMatrix(n, kDim, std::move(emb), true);
  corpus.report = {n_sites, n, next_article - 1, kDim, false};
  corpus.rebuild_index();
  return mc;
}

}  // namespace nflow::synth
