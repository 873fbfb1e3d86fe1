#pragma once
// Temporary directories and tiny in-memory corpora for tests.

#include <unistd.h>

#include <atomic>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "nflow/corpus.hpp"
#include "nflow/io.hpp"

namespace fixture {

class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("nflow-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline nflow::SiteRegistry sites(std::initializer_list<std::pair<const char*, nflow::Reliability>> list) {
  nflow::SiteRegistry r;
  for (const auto& [d, rel] : list) r.add({d, rel, std::nullopt});
  return r;
}

/// Corpus whose passage i has the given site, article, day and a one-hot-ish
/// embedding; the matrix has unit rows.
struct PassageSpec {
  nflow::SiteIndex site;
  std::uint64_t article;
  double day;
  std::string text = {};
};

inline nflow::Corpus corpus(nflow::SiteRegistry registry, const std::vector<PassageSpec>& specs, std::size_t dim = 4) {
  nflow::Corpus c;
  c.sites = std::move(registry);
  std::vector<float> data(specs.size() * dim, 0.0f);
  for (std::size_t i = 0; i < specs.size(); ++i) {
    nflow::Passage p;
    p.passage_id = 100 + i;
    p.article_id = specs[i].article;
    p.site = specs[i].site;
    p.published_day = specs[i].day;
    p.word_count = 5;
    if (!specs[i].text.empty()) p.text = specs[i].text;
    p.embedding_row = i;
    c.passages.push_back(p);
    data[i * dim + (i % dim)] = 1.0f;
  }
  c.embeddings = nflow::EmbeddingMatrix(specs.size(), dim, std::move(data), true);
  c.rebuild_index();
  return c;
}

inline nflow::EmbeddingMatrix random_unit_matrix(std::size_t n, std::size_t dim, std::uint64_t seed) {
  std::mt19937_64 g(seed);
  std::normal_distribution<double> nd;
  std::vector<float> data(n * dim);
  for (auto& v : data) v = static_cast<float>(nd(g));
  nflow::EmbeddingMatrix m(n, dim, std::move(data), false);
  m.normalize();
  return m;
}

}  // namespace fixture
