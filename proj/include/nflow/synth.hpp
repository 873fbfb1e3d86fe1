#pragma once
// Synthetic ground truth: embedding blobs with known labels, diffusion
// cascades over a known random graph, and the bundled mini-corpus.

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "nflow/cascade.hpp"
#include "nflow/corpus.hpp"

namespace nflow::synth {

struct SynthSpec {
  std::uint64_t seed = 0;
  std::size_t n_sites = 50;
  std::size_t n_clusters = 5;
  std::size_t n_points = 1000;
  std::size_t dim = 32;
  std::size_t cascades_per_run = 500;
  double edge_density = 0.06;
  double alpha_t = 1.0;
  double beta = 0.5;
  double blob_intra_cos = 0.7;
  double blob_inter_cos = 0.0;
  std::size_t max_retries = 1000;  // per cascade, before giving up

  void validate() const;
};

struct Blobs {
  EmbeddingMatrix matrix;
  std::vector<std::uint32_t> labels;
  std::vector<std::vector<float>> centroids;
};

/// k unit centroids with pairwise cosine <= blob_inter_cos; each point is its
/// centroid plus isotropic Gaussian noise, renormalized. The noise scale puts
/// the expected point-to-point cosine inside a blob at blob_intra_cos (and the
/// point-to-centroid cosine above it). Point i belongs to blob i mod k.
Blobs gen_blobs(const SynthSpec& spec);

struct Transmission {
  SiteIndex src = 0;
  SiteIndex dst = 0;
  double delay = 0.0;
};

struct SynthCascades {
  std::vector<std::pair<SiteIndex, SiteIndex>> true_edges;  // sorted
  std::vector<Cascade> cascades;
  std::vector<std::vector<Transmission>> trees;  // realized infections per cascade
  std::size_t regenerated = 0;
};

/// Independent-cascade simulation with exponential delays and min-arrival
/// infection times, horizon 10 / alpha_t. Cascade c uses its own generator
/// seeded from (seed, c), so results do not depend on thread count.
SynthCascades gen_cascades(const SynthSpec& spec);

/// Cascades over a fixed graph (edges need not be sorted).
SynthCascades gen_cascades_on(const SynthSpec& spec, const std::vector<std::pair<SiteIndex, SiteIndex>>& edges);

/// "s000.synth", ... with ecosystems assigned round-robin.
SiteRegistry synthetic_sites(std::size_t n);

std::string edges_to_tsv(const std::vector<std::pair<SiteIndex, SiteIndex>>& edges, const SiteRegistry& sites);

/// Three ecosystems of ten sites, story clusters that spread over a hidden
/// site graph, single-site boilerplate, and stance labels toward a few
/// targets whose slant depends on the ecosystem.
struct MiniCorpus {
  Corpus corpus;
  std::vector<StanceInput> stances;
};
MiniCorpus gen_mini_corpus(std::uint64_t seed);

void write_site_registry(const SiteRegistry& sites, const std::filesystem::path& path);
void write_stances(const std::vector<StanceInput>& stances, const std::filesystem::path& path);

}  // namespace nflow::synth
