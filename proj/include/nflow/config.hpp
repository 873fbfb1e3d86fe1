#pragma once
// Run configuration: a sectioned key = value file (TOML subset) plus
// command-line overrides.

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "nflow/analytics.hpp"
#include "nflow/cascade.hpp"
#include "nflow/cluster.hpp"
#include "nflow/netinf.hpp"

namespace nflow {

/// Parsed "[section]" / "key = value" file. Values are numbers, booleans,
/// double-quoted strings or arrays of strings. Keys are "section.key".
class KeyValueFile {
 public:
  static KeyValueFile parse(const std::string& text, const std::string& file = "<config>");
  static KeyValueFile load(const std::filesystem::path& path);

  bool has(const std::string& key) const { return values_.contains(key); }
  std::optional<std::string> string(const std::string& key) const;
  std::optional<double> real(const std::string& key) const;
  std::optional<std::uint64_t> unsigned_int(const std::string& key) const;
  std::optional<bool> boolean(const std::string& key) const;
  std::optional<std::vector<std::string>> strings(const std::string& key) const;
  std::vector<std::string> keys() const;

 private:
  struct Entry {
    std::string raw;
    std::size_t line = 0;
  };
  const Entry* find(const std::string& key) const;
  std::string file_;
  std::map<std::string, Entry> values_;
};

struct RunConfig {
  std::filesystem::path passages;
  std::filesystem::path embeddings;
  std::filesystem::path sites;
  std::filesystem::path stances;  // optional
  std::filesystem::path outdir = "out";
  std::uint64_t seed = 0;

  ClusterParams cluster;
  double prune_threshold = 0.5;

  std::size_t keyword_top_k = 10;
  double pmi_alpha = 1.0;
  std::size_t stance_target_count = 5000;
  std::size_t stance_min_articles = 500;
  std::size_t stance_top_k = 10;

  std::size_t cascade_min_sites = 2;
  Predominance predominance = Predominance::None;
  std::optional<StanceSelector> stance_filter;

  TransmissionModel model;
  NetinfOptions netinf;

  bool weighted_centrality = true;
  CentralityFlow centrality_flow = CentralityFlow::InLink;
  std::uint32_t bucket_days = 1;
  std::size_t top_narratives = 10;

  std::vector<std::string> bias_targets;
  std::size_t bias_min_articles = 250;
  double prior_precision = 1.0;

  /// Throws Error naming the first invalid field or missing input.
  void validate() const;
};

/// Relative paths in the file resolve against the file's directory. Unknown
/// keys are errors.
RunConfig load_run_config(const std::filesystem::path& path);
RunConfig run_config_from(const KeyValueFile& kv, const std::filesystem::path& base_dir);

}  // namespace nflow
