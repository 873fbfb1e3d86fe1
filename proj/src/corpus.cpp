#include "nflow/corpus.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <cmath>
#include <cstring>
#include <limits>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "nflow/error.hpp"
#include "nflow/io.hpp"

static_assert(std::endian::native == std::endian::little,
              "EMB1 reader assumes a little-endian host");

namespace nflow {

using nlohmann::json;

std::string_view to_string(Reliability r) noexcept {
  switch (r) {
    case Reliability::Reliable:
      return "reliable";
    case Reliability::Mixed:
      return "mixed";
    case Reliability::Unreliable:
      return "unreliable";
  }
  return "reliable";
}

std::optional<Reliability> parse_reliability(std::string_view s) noexcept {
  if (s == "reliable") return Reliability::Reliable;
  if (s == "mixed") return Reliability::Mixed;
  if (s == "unreliable") return Reliability::Unreliable;
  return std::nullopt;
}

std::string_view to_string(Stance s) noexcept {
  switch (s) {
    case Stance::Pro:
      return "Pro";
    case Stance::Against:
      return "Against";
    case Stance::Neutral:
      return "Neutral";
  }
  return "Neutral";
}

std::optional<Stance> parse_stance(std::string_view s) noexcept {
  std::string lower(s);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (lower == "pro") return Stance::Pro;
  if (lower == "against") return Stance::Against;
  if (lower == "neutral") return Stance::Neutral;
  return std::nullopt;
}

SiteIndex SiteRegistry::add(Site site) {
  std::transform(site.domain.begin(), site.domain.end(), site.domain.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (site.domain.empty()) throw Error("site domain must be nonempty");
  if (by_domain_.contains(site.domain)) throw Error("duplicate site domain: " + site.domain);
  const auto idx = static_cast<SiteIndex>(sites_.size());
  by_domain_.emplace(site.domain, idx);
  sites_.push_back(std::move(site));
  return idx;
}

std::optional<SiteIndex> SiteRegistry::find(std::string_view domain) const {
  std::string key(domain);
  std::transform(key.begin(), key.end(), key.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  auto it = by_domain_.find(key);
  if (it == by_domain_.end()) return std::nullopt;
  return it->second;
}

EmbeddingMatrix::EmbeddingMatrix(std::size_t rows, std::size_t dim, std::vector<float> data,
                                 bool normalized)
    : rows_(rows), dim_(dim), data_(std::move(data)), normalized_(normalized) {
  if (data_.size() != rows_ * dim_) throw Error("embedding data size does not match n*dim");
}

void EmbeddingMatrix::normalize() {
  for (std::size_t r = 0; r < rows_; ++r) {
    float* p = data_.data() + r * dim_;
    double ss = 0.0;
    for (std::size_t d = 0; d < dim_; ++d) ss += static_cast<double>(p[d]) * p[d];
    const double norm = std::sqrt(ss);
    if (!(norm > 0.0) || !std::isfinite(norm)) {
      throw Error("embedding row " + std::to_string(r) + " has zero or non-finite norm");
    }
    for (std::size_t d = 0; d < dim_; ++d) p[d] = static_cast<float>(p[d] / norm);
  }
  normalized_ = true;
}

bool EmbeddingMatrix::rows_unit_norm(double tol) const {
  for (std::size_t r = 0; r < rows_; ++r) {
    double ss = 0.0;
    for (float v : row(r)) ss += static_cast<double>(v) * v;
    if (std::abs(std::sqrt(ss) - 1.0) > tol) return false;
  }
  return true;
}

EmbeddingMatrix EmbeddingMatrix::gather(std::span<const std::size_t> indices) const {
  std::vector<float> out;
  out.reserve(indices.size() * dim_);
  for (std::size_t i : indices) {
    auto r = row(i);
    out.insert(out.end(), r.begin(), r.end());
  }
  return EmbeddingMatrix(indices.size(), dim_, std::move(out), normalized_);
}

std::string encode_embeddings(const EmbeddingMatrix& m) {
  std::string out = "EMB1";
  auto put_u32 = [&](std::uint32_t v) {
    char b[4];
    std::memcpy(b, &v, 4);
    out.append(b, 4);
  };
  if (m.rows() > std::numeric_limits<std::uint32_t>::max() ||
      m.dim() > std::numeric_limits<std::uint32_t>::max()) {
    throw Error("embedding matrix too large for EMB1");
  }
  put_u32(static_cast<std::uint32_t>(m.rows()));
  put_u32(static_cast<std::uint32_t>(m.dim()));
  out.push_back(m.normalized() ? '\1' : '\0');
  const auto& d = m.data();
  out.append(reinterpret_cast<const char*>(d.data()), d.size() * sizeof(float));
  return out;
}

void write_embeddings(const EmbeddingMatrix& m, const std::filesystem::path& path) {
  io::write_file(path, encode_embeddings(m));
}

EmbeddingMatrix read_embeddings(const std::filesystem::path& path) {
  const std::string bytes = io::read_file(path);
  const std::string file = path.string();
  if (bytes.size() < 13 || bytes.compare(0, 4, "EMB1") != 0) {
    throw InputError(file + ": bad magic bytes (expected \"EMB1\")");
  }
  std::uint32_t n = 0, dim = 0;
  std::memcpy(&n, bytes.data() + 4, 4);
  std::memcpy(&dim, bytes.data() + 8, 4);
  const auto flag = static_cast<unsigned char>(bytes[12]);
  if (flag > 1) throw InputError(file + ": normalized flag must be 0 or 1");
  if (dim == 0) throw InputError(file + ": dimension must be positive");
  const std::size_t expected = 13 + static_cast<std::size_t>(n) * dim * sizeof(float);
  if (bytes.size() != expected) {
    throw InputError(file + ": expected " + std::to_string(expected) + " bytes for " +
                     std::to_string(n) + "x" + std::to_string(dim) + ", found " +
                     std::to_string(bytes.size()));
  }
  std::vector<float> data(static_cast<std::size_t>(n) * dim);
  std::memcpy(data.data(), bytes.data() + 13, data.size() * sizeof(float));
  for (float v : data) {
    if (!std::isfinite(v)) throw InputError(file + ": non-finite embedding value");
  }
  return EmbeddingMatrix(n, dim, std::move(data), flag == 1);
}

SiteRegistry load_site_registry(const std::filesystem::path& path) {
  const auto lines = io::read_lines(path);
  const std::string file = path.string();
  if (lines.empty()) throw InputError(file, 1, "missing header");
  const auto header = io::split_csv(lines[0].text);
  if (header != std::vector<std::string>{"domain", "reliability", "partisanship"}) {
    throw InputError(file, 1, "header must be domain,reliability,partisanship");
  }
  SiteRegistry reg;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto& line = lines[i];
    if (line.text.empty()) continue;
    auto f = io::split_csv(line.text);
    if (f.size() != 3) throw InputError(file, line.number, "expected 3 fields");
    Site site;
    site.domain = f[0];
    auto rel = parse_reliability(f[1]);
    if (!rel) throw InputError(file, line.number, "unknown reliability '" + f[1] + "'");
    site.reliability = *rel;
    if (!f[2].empty()) {
      try {
        std::size_t used = 0;
        const double p = std::stod(f[2], &used);
        if (used != f[2].size() || !(p >= -1.0 && p <= 1.0)) throw std::invalid_argument("range");
        site.partisanship = p;
      } catch (const std::exception&) {
        throw InputError(file, line.number, "partisanship must be empty or a decimal in [-1,1]");
      }
    }
    try {
      reg.add(std::move(site));
    } catch (const Error& e) {
      throw InputError(file, line.number, e.what());
    }
  }
  return reg;
}

std::vector<StanceInput> load_stances(const std::filesystem::path& path) {
  const auto lines = io::read_lines(path);
  const std::string file = path.string();
  if (lines.empty()) throw InputError(file, 1, "missing header");
  if (io::split_csv(lines[0].text) != std::vector<std::string>{"passage_id", "target", "stance"}) {
    throw InputError(file, 1, "header must be passage_id,target,stance");
  }
  std::vector<StanceInput> out;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto& line = lines[i];
    if (line.text.empty()) continue;
    auto f = io::split_csv(line.text);
    if (f.size() != 3) throw InputError(file, line.number, "expected 3 fields");
    StanceInput s;
    try {
      std::size_t used = 0;
      s.passage_id = std::stoull(f[0], &used);
      if (used != f[0].size()) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
      throw InputError(file, line.number, "bad passage_id '" + f[0] + "'");
    }
    if (f[1].empty()) throw InputError(file, line.number, "empty target");
    s.target = f[1];
    auto st = parse_stance(f[2]);
    if (!st) throw InputError(file, line.number, "stance must be Pro, Against or Neutral");
    s.stance = *st;
    out.push_back(std::move(s));
  }
  return out;
}

std::optional<std::size_t> Corpus::find_passage(std::uint64_t passage_id) const {
  auto it = by_id_.find(passage_id);
  if (it == by_id_.end()) return std::nullopt;
  return it->second;
}

void Corpus::rebuild_index() {
  by_id_.clear();
  by_id_.reserve(passages.size());
  for (std::size_t i = 0; i < passages.size(); ++i) by_id_.emplace(passages[i].passage_id, i);
}

Corpus load_corpus(const std::filesystem::path& meta_path, const std::filesystem::path& emb_path,
                   const std::filesystem::path& sites_path) {
  Corpus c;
  c.sites = load_site_registry(sites_path);
  c.embeddings = read_embeddings(emb_path);
  const std::string file = meta_path.string();
  std::unordered_set<std::uint64_t> seen;
  std::unordered_set<std::uint64_t> articles;
  for (const auto& line : io::read_lines(meta_path)) {
    if (line.text.empty()) continue;
    json j;
    try {
      j = json::parse(line.text);
    } catch (const json::parse_error& e) {
      throw InputError(file, line.number, std::string("malformed JSON: ") + e.what());
    }
    Passage p;
    try {
      p.passage_id = j.at("passage_id").get<std::uint64_t>();
      p.article_id = j.at("article_id").get<std::uint64_t>();
      const auto& day = j.at("published_day");
      if (!day.is_number()) throw InputError(file, line.number, "malformed date: published_day must be a number");
      p.published_day = day.get<double>();
      p.word_count = j.at("word_count").get<std::uint32_t>();
      p.embedding_row = j.at("embedding_row").get<std::uint64_t>();
      const auto domain = j.at("site").get<std::string>();
      auto site = c.sites.find(domain);
      if (!site) throw InputError(file, line.number, "dangling site reference '" + domain + "'");
      p.site = *site;
      if (auto it = j.find("text"); it != j.end() && !it->is_null()) p.text = it->get<std::string>();
    } catch (const json::exception& e) {
      throw InputError(file, line.number, std::string("bad passage record: ") + e.what());
    }
    if (!std::isfinite(p.published_day)) throw InputError(file, line.number, "malformed date: non-finite published_day");
    if (p.word_count < 1 || p.word_count > 100) throw InputError(file, line.number, "word_count must be in [1,100]");
    if (p.embedding_row >= c.embeddings.rows()) {
      throw InputError(file, line.number, "dangling embedding reference: row " +
                                              std::to_string(p.embedding_row) + " of " +
                                              std::to_string(c.embeddings.rows()));
    }
    if (!seen.insert(p.passage_id).second) {
      throw InputError(file, line.number, "duplicate passage_id " + std::to_string(p.passage_id));
    }
    articles.insert(p.article_id);
    c.passages.push_back(std::move(p));
  }
  if (!c.embeddings.normalized()) {
    c.embeddings.normalize();
    c.report.renormalized = true;
  } else if (!c.embeddings.rows_unit_norm(1e-4)) {
    throw InputError(emb_path.string() + ": header claims normalized rows but a row norm deviates from 1 by more than 1e-4");
  }
  c.rebuild_index();
  c.report.sites = c.sites.size();
  c.report.passages = c.passages.size();
  c.report.articles = articles.size();
  c.report.dim = c.embeddings.dim();
  return c;
}

std::string passage_to_json_line(const Passage& p, const SiteRegistry& sites) {
  nlohmann::ordered_json j;
  j["passage_id"] = p.passage_id;
  j["article_id"] = p.article_id;
  j["site"] = sites[p.site].domain;
  j["published_day"] = p.published_day;
  j["word_count"] = p.word_count;
  j["embedding_row"] = p.embedding_row;
  if (p.text) j["text"] = *p.text;
  return j.dump();
}

void write_corpus(const Corpus& corpus, const std::filesystem::path& meta_path,
                  const std::filesystem::path& emb_path) {
  std::string meta;
  for (const auto& p : corpus.passages) {
    meta += passage_to_json_line(p, corpus.sites);
    meta += '\n';
  }
  io::write_file(meta_path, meta);
  write_embeddings(corpus.embeddings, emb_path);
}

}  // namespace nflow

namespace nflow {

Stance majority_stance(const std::array<std::size_t, 3>& counts) noexcept {
  std::size_t best = 0;
  for (std::size_t s = 1; s < 3; ++s) {
    if (counts[s] > counts[best]) best = s;
  }
  for (std::size_t s = 0; s < 3; ++s) {
    if (s != best && counts[s] == counts[best]) return Stance::Neutral;
  }
  return static_cast<Stance>(best);
}

}  // namespace nflow
