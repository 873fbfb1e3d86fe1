#include "nflow/config.hpp"

#include <charconv>
#include <set>

#include "nflow/error.hpp"
#include "nflow/io.hpp"

namespace nflow {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t");
  return std::string(s.substr(b, e - b + 1));
}

// Drops a trailing "# comment" that is not inside a string.
std::string strip_comment(std::string_view s) {
  bool quoted = false;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '"' && (i == 0 || s[i - 1] != '\\')) quoted = !quoted;
    if (s[i] == '#' && !quoted) return std::string(s.substr(0, i));
  }
  return std::string(s);
}

std::optional<std::string> unquote(std::string_view s) {
  if (s.size() < 2 || s.front() != '"' || s.back() != '"') return std::nullopt;
  std::string out;
  for (std::size_t i = 1; i + 1 < s.size(); ++i) {
    if (s[i] == '\\' && i + 2 < s.size()) {
      const char c = s[++i];
      out += c == 'n' ? '\n' : c == 't' ? '\t' : c;
    } else {
      out += s[i];
    }
  }
  return out;
}

}  // namespace

KeyValueFile KeyValueFile::parse(const std::string& text, const std::string& file) {
  KeyValueFile kv;
  kv.file_ = file;
  std::string section;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string::npos) end = text.size();
    std::string line = trim(strip_comment(std::string_view(text).substr(pos, end - pos)));
    if (!line.empty() && line.back() == '\r') line.pop_back();
    pos = end + 1;
    ++line_no;
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw InputError(file, line_no, "unterminated section header");
      section = trim(std::string_view(line).substr(1, line.size() - 2));
      if (section.empty()) throw InputError(file, line_no, "empty section name");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw InputError(file, line_no, "expected key = value");
    const std::string key = trim(std::string_view(line).substr(0, eq));
    const std::string value = trim(std::string_view(line).substr(eq + 1));
    if (key.empty() || value.empty()) throw InputError(file, line_no, "expected key = value");
    const std::string full = section.empty() ? key : section + "." + key;
    if (kv.values_.contains(full)) throw InputError(file, line_no, "duplicate key '" + full + "'");
    kv.values_[full] = {value, line_no};
  }
  return kv;
}

KeyValueFile KeyValueFile::load(const std::filesystem::path& path) { return parse(io::read_file(path), path.string()); }

const KeyValueFile::Entry* KeyValueFile::find(const std::string& key) const {
  auto it = values_.find(key);
  return it == values_.end() ? nullptr : &it->second;
}

std::optional<std::string> KeyValueFile::string(const std::string& key) const {
  const auto* e = find(key);
  if (!e) return std::nullopt;
  auto s = unquote(e->raw);
  if (!s) throw InputError(file_, e->line, "'" + key + "' must be a quoted string");
  return s;
}

std::optional<double> KeyValueFile::real(const std::string& key) const {
  const auto* e = find(key);
  if (!e) return std::nullopt;
  double v = 0.0;
  const auto* first = e->raw.data();
  const auto* last = first + e->raw.size();
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last) throw InputError(file_, e->line, "'" + key + "' must be a number");
  return v;
}

std::optional<std::uint64_t> KeyValueFile::unsigned_int(const std::string& key) const {
  const auto* e = find(key);
  if (!e) return std::nullopt;
  std::uint64_t v = 0;
  const auto* first = e->raw.data();
  const auto* last = first + e->raw.size();
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last)
    throw InputError(file_, e->line, "'" + key + "' must be a non-negative integer");
  return v;
}

std::optional<bool> KeyValueFile::boolean(const std::string& key) const {
  const auto* e = find(key);
  if (!e) return std::nullopt;
  if (e->raw == "true") return true;
  if (e->raw == "false") return false;
  throw InputError(file_, e->line, "'" + key + "' must be true or false");
}

std::optional<std::vector<std::string>> KeyValueFile::strings(const std::string& key) const {
  const auto* e = find(key);
  if (!e) return std::nullopt;
  const std::string& r = e->raw;
  if (r.size() < 2 || r.front() != '[' || r.back() != ']')
    throw InputError(file_, e->line, "'" + key + "' must be an array of strings");
  std::vector<std::string> out;
  const std::string body = trim(std::string_view(r).substr(1, r.size() - 2));
  if (body.empty()) return out;
  // "a", "b" : quoted items separated by commas.
  std::size_t i = 0;
  for (;;) {
    while (i < body.size() && body[i] == ' ') ++i;
    if (i >= body.size() || body[i] != '"') break;
    std::size_t j = i + 1;
    while (j < body.size() && (body[j] != '"' || body[j - 1] == '\\')) ++j;
    if (j >= body.size()) break;
    out.push_back(*unquote(std::string_view(body).substr(i, j - i + 1)));
    i = j + 1;
    while (i < body.size() && body[i] == ' ') ++i;
    if (i == body.size()) return out;
    if (body[i] != ',') break;
    ++i;
  }
  throw InputError(file_, e->line, "'" + key + "' must be an array of quoted strings");
}

std::vector<std::string> KeyValueFile::keys() const {
  std::vector<std::string> out;
  for (const auto& [k, v] : values_) out.push_back(k);
  return out;
}

RunConfig run_config_from(const KeyValueFile& kv, const std::filesystem::path& base_dir) {
  static const std::set<std::string> known = {
      "seed",
      "paths.passages", "paths.embeddings", "paths.sites", "paths.stances", "paths.outdir",
      "cluster.min_cos", "cluster.max_outer_iters", "cluster.converge_frac", "cluster.new_clusters_per_iter",
      "cluster.prune_threshold",
      "labeler.top_k", "labeler.alpha", "labeler.stance_targets", "labeler.stance_min_articles",
      "labeler.stance_top_k",
      "cascades.min_sites", "cascades.predominance", "cascades.stance_filter",
      "netinf.alpha_t", "netinf.beta", "netinf.epsilon", "netinf.k_max", "netinf.cut_fraction", "netinf.lazy",
      "analytics.weighted", "analytics.centrality_flow", "analytics.bucket_days", "analytics.top_narratives",
      "bias.targets", "bias.min_articles", "bias.prior_precision"};
  for (const auto& k : kv.keys())
    if (!known.contains(k)) throw InputError("unknown config key '" + k + "'");

  RunConfig c;
  auto path = [&](const char* key, std::filesystem::path& dst) {
    if (auto s = kv.string(key)) {
      std::filesystem::path p(*s);
      dst = p.is_absolute() ? p : base_dir / p;
    }
  };
  path("paths.passages", c.passages);
  path("paths.embeddings", c.embeddings);
  path("paths.sites", c.sites);
  path("paths.stances", c.stances);
  path("paths.outdir", c.outdir);
  if (auto v = kv.unsigned_int("seed")) c.seed = *v;

  if (auto v = kv.real("cluster.min_cos")) c.cluster.min_cos = *v;
  if (auto v = kv.unsigned_int("cluster.max_outer_iters")) c.cluster.max_outer_iters = *v;
  if (auto v = kv.real("cluster.converge_frac")) c.cluster.converge_frac = *v;
  if (auto v = kv.unsigned_int("cluster.new_clusters_per_iter")) c.cluster.new_clusters_per_iter = *v;
  if (auto v = kv.real("cluster.prune_threshold")) c.prune_threshold = *v;

  if (auto v = kv.unsigned_int("labeler.top_k")) c.keyword_top_k = *v;
  if (auto v = kv.real("labeler.alpha")) c.pmi_alpha = *v;
  if (auto v = kv.unsigned_int("labeler.stance_targets")) c.stance_target_count = *v;
  if (auto v = kv.unsigned_int("labeler.stance_min_articles")) c.stance_min_articles = *v;
  if (auto v = kv.unsigned_int("labeler.stance_top_k")) c.stance_top_k = *v;

  if (auto v = kv.unsigned_int("cascades.min_sites")) c.cascade_min_sites = *v;
  if (auto v = kv.string("cascades.predominance")) {
    auto p = parse_predominance(*v);
    if (!p) throw InputError("cascades.predominance must be none, unreliable or unreliable+mixed");
    c.predominance = *p;
  }
  if (auto v = kv.string("cascades.stance_filter")) {
    const auto colon = v->find(':');
    std::optional<Stance> d = colon == std::string::npos ? std::nullopt : parse_stance(v->substr(0, colon));
    if (!d || *d == Stance::Neutral || colon + 1 >= v->size())
      throw InputError("cascades.stance_filter must look like \"Against:target\" or \"Pro:target\"");
    c.stance_filter = StanceSelector{*d, v->substr(colon + 1)};
  }

  if (auto v = kv.real("netinf.alpha_t")) c.model.alpha_t = *v;
  if (auto v = kv.real("netinf.beta")) c.model.beta = *v;
  if (auto v = kv.real("netinf.epsilon")) c.model.epsilon = *v;
  if (auto v = kv.unsigned_int("netinf.k_max")) c.netinf.k_max = *v;
  if (auto v = kv.real("netinf.cut_fraction")) c.netinf.cut_fraction = *v;
  if (auto v = kv.boolean("netinf.lazy")) c.netinf.lazy = *v;

  if (auto v = kv.boolean("analytics.weighted")) c.weighted_centrality = *v;
  if (auto v = kv.string("analytics.centrality_flow")) {
    if (*v == "in") c.centrality_flow = CentralityFlow::InLink;
    else if (*v == "out") c.centrality_flow = CentralityFlow::OutLink;
    else throw InputError("analytics.centrality_flow must be \"in\" or \"out\"");
  }
  if (auto v = kv.unsigned_int("analytics.bucket_days")) c.bucket_days = static_cast<std::uint32_t>(*v);
  if (auto v = kv.unsigned_int("analytics.top_narratives")) c.top_narratives = *v;

  if (auto v = kv.strings("bias.targets")) c.bias_targets = *v;
  if (auto v = kv.unsigned_int("bias.min_articles")) c.bias_min_articles = *v;
  if (auto v = kv.real("bias.prior_precision")) c.prior_precision = *v;
  return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  const auto kv = KeyValueFile::load(path);
  return run_config_from(kv, path.parent_path());
}

void RunConfig::validate() const {
  auto require = [](const std::filesystem::path& p, const char* what) {
    if (p.empty()) throw Error(std::string("config: ") + what + " path is not set");
    if (!std::filesystem::is_regular_file(p)) throw Error(std::string("config: ") + what + " not found: " + p.string());
  };
  require(passages, "passages");
  require(embeddings, "embeddings");
  require(sites, "sites");
  if (!stances.empty()) require(stances, "stances");
  if (outdir.empty()) throw Error("config: outdir is not set");
  cluster.validate();
  if (!(prune_threshold > 0.0 && prune_threshold <= 1.0)) throw Error("config: prune_threshold must be in (0,1]");
  if (keyword_top_k == 0 || stance_top_k == 0) throw Error("config: top_k must be positive");
  if (!(pmi_alpha >= 0.0)) throw Error("config: labeler.alpha must be >= 0");
  if (cascade_min_sites < 2) throw Error("config: cascades.min_sites must be >= 2");
  if (stance_filter && stances.empty()) throw Error("config: cascades.stance_filter needs paths.stances");
  model.validate();
  if (netinf.k_max == 0) throw Error("config: netinf.k_max must be positive");
  if (!(netinf.cut_fraction > 0.0 && netinf.cut_fraction <= 1.0))
    throw Error("config: netinf.cut_fraction must be in (0,1]");
  if (bucket_days == 0) throw Error("config: analytics.bucket_days must be positive");
  if (!(prior_precision > 0.0)) throw Error("config: bias.prior_precision must be positive");
}

}  // namespace nflow
