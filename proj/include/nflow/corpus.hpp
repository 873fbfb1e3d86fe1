#pragma once
// Domain types shared by every stage and the on-disk formats they come from.

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace nflow {

enum class Reliability : std::uint8_t { Reliable = 0, Mixed = 1, Unreliable = 2 };
inline constexpr std::size_t kEcosystemCount = 3;
inline constexpr std::array<Reliability, kEcosystemCount> kEcosystems{
    Reliability::Reliable, Reliability::Mixed, Reliability::Unreliable};

std::string_view to_string(Reliability r) noexcept;
std::optional<Reliability> parse_reliability(std::string_view s) noexcept;
inline std::size_t index_of(Reliability r) noexcept { return static_cast<std::size_t>(r); }

using SiteIndex = std::uint32_t;

struct Site {
  std::string domain;  // lowercased
  Reliability reliability = Reliability::Reliable;
  std::optional<double> partisanship;
};

class SiteRegistry {
 public:
  /// Throws Error on empty or duplicate domain.
  SiteIndex add(Site site);
  std::optional<SiteIndex> find(std::string_view domain) const;
  const Site& operator[](SiteIndex i) const { return sites_.at(i); }
  std::size_t size() const noexcept { return sites_.size(); }
  const std::vector<Site>& sites() const noexcept { return sites_; }
  Reliability reliability(SiteIndex i) const { return sites_.at(i).reliability; }

 private:
  std::vector<Site> sites_;
  std::unordered_map<std::string, SiteIndex> by_domain_;
};

struct Passage {
  std::uint64_t passage_id = 0;
  std::uint64_t article_id = 0;
  SiteIndex site = 0;
  double published_day = 0.0;  // days since 1970-01-01 UTC
  std::uint32_t word_count = 1;
  std::optional<std::string> text;
  std::uint64_t embedding_row = 0;
};

/// n x dim row-major f32.
class EmbeddingMatrix {
 public:
  EmbeddingMatrix() = default;
  EmbeddingMatrix(std::size_t rows, std::size_t dim, std::vector<float> data, bool normalized);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t dim() const noexcept { return dim_; }
  bool normalized() const noexcept { return normalized_; }
  std::span<const float> row(std::size_t i) const {
    return {data_.data() + i * dim_, dim_};
  }
  const std::vector<float>& data() const noexcept { return data_; }

  /// Scales every row to unit L2 norm. Throws Error on a zero row.
  void normalize();
  /// True when every row norm is within tol of 1.
  bool rows_unit_norm(double tol = 1e-4) const;

  /// Rows [indices[0], indices[1], ...] as a new matrix.
  EmbeddingMatrix gather(std::span<const std::size_t> indices) const;

 private:
  std::size_t rows_ = 0;
  std::size_t dim_ = 0;
  std::vector<float> data_;
  bool normalized_ = false;
};

/// "EMB1" | u32 n | u32 dim | u8 normalized | n*dim f32, all little-endian.
EmbeddingMatrix read_embeddings(const std::filesystem::path& path);
void write_embeddings(const EmbeddingMatrix& m, const std::filesystem::path& path);
std::string encode_embeddings(const EmbeddingMatrix& m);

enum class Stance : std::uint8_t { Pro = 0, Against = 1, Neutral = 2 };
std::string_view to_string(Stance s) noexcept;
std::optional<Stance> parse_stance(std::string_view s) noexcept;

/// Plurality label; any tie for the top count resolves to Neutral.
Stance majority_stance(const std::array<std::size_t, 3>& counts) noexcept;

struct StanceInput {
  std::uint64_t passage_id = 0;
  std::string target;
  Stance stance = Stance::Neutral;
};

struct CorpusReport {
  std::size_t sites = 0;
  std::size_t passages = 0;
  std::size_t articles = 0;
  std::size_t dim = 0;
  bool renormalized = false;
};

struct Corpus {
  SiteRegistry sites;
  std::vector<Passage> passages;
  EmbeddingMatrix embeddings;
  CorpusReport report;

  /// Position of a passage in `passages`, if present.
  std::optional<std::size_t> find_passage(std::uint64_t passage_id) const;
  void rebuild_index();

 private:
  std::unordered_map<std::uint64_t, std::size_t> by_id_;
};

SiteRegistry load_site_registry(const std::filesystem::path& path);
std::vector<StanceInput> load_stances(const std::filesystem::path& path);

/// Loads and cross-validates all three corpus files. Unnormalized matrices
/// are normalized in place.
Corpus load_corpus(const std::filesystem::path& meta_path, const std::filesystem::path& emb_path,
                   const std::filesystem::path& sites_path);

/// Writes passage metadata (JSONL) and the embedding matrix.
void write_corpus(const Corpus& corpus, const std::filesystem::path& meta_path,
                  const std::filesystem::path& emb_path);
std::string passage_to_json_line(const Passage& p, const SiteRegistry& sites);

}  // namespace nflow
