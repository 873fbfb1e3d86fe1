#include "nflow/pipeline.hpp"

#include <chrono>
#include <cmath>
#include <map>
#include <set>

#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "nflow/analytics.hpp"
#include "nflow/bias.hpp"
#include "nflow/error.hpp"
#include "nflow/io.hpp"
#include "nflow/labeler.hpp"
#include "nflow/parallel.hpp"
#include "nflow/simd/kernels.hpp"

#ifndef NFLOW_VERSION
#define NFLOW_VERSION "0.0.0"
#endif

namespace nflow {

using json = nlohmann::ordered_json;
namespace fs = std::filesystem;

std::string_view stage_name(Stage s) noexcept {
  switch (s) {
    case Stage::Ingest: return "ingest";
    case Stage::Cluster: return "cluster";
    case Stage::Label: return "label";
    case Stage::Cascades: return "cascades";
    case Stage::Netinf: return "netinf";
    case Stage::Analyze: return "analyze";
    case Stage::Bias: return "bias";
  }
  return "?";
}

std::optional<Stage> parse_stage(std::string_view s) noexcept {
  for (auto st : kStages)
    if (stage_name(st) == s) return st;
  return std::nullopt;
}

int stage_exit_code(Stage s) noexcept { return 10 * (static_cast<int>(s) + 1); }

const std::vector<std::string>& stage_outputs(Stage s) {
  static const std::map<Stage, std::vector<std::string>> outputs = {
      {Stage::Ingest, {"ingest_report.json"}},
      {Stage::Cluster, {"clusters.jsonl", "assignment.bin"}},
      {Stage::Label, {"keywords.csv", "stance_targets.csv", "stance_associations.csv"}},
      {Stage::Cascades, {"cascades.jsonl"}},
      {Stage::Netinf, {"influence_graph.tsv", "copy_matrix.csv", "netinf_summary.json"}},
      {Stage::Analyze,
       {"centrality.csv", "communities.csv", "volume_correlation.csv", "features.csv", "feature_coverage.csv"}},
      {Stage::Bias, {"stance_aggregates.csv", "bias_latent.csv", "bias_coefficients.csv", "stance_divergence.csv"}},
  };
  return outputs.at(s);
}

namespace {

struct StageRun {
  std::map<std::string, std::string> files;  // name -> contents
  json summary = json::object();
};

class Context {
 public:
  explicit Context(const RunConfig& c) : config(c) {}

  const RunConfig& config;

  fs::path out(const std::string& name) const { return config.outdir / name; }

  const Corpus& corpus() {
    if (!corpus_) corpus_ = load_corpus(config.passages, config.embeddings, config.sites);
    return *corpus_;
  }
  const std::vector<StanceInput>& stances() {
    if (!stances_) stances_ = config.stances.empty() ? std::vector<StanceInput>{} : load_stances(config.stances);
    return *stances_;
  }
  std::string hash(const fs::path& p) {
    auto key = fs::absolute(p).lexically_normal().string();
    auto it = hashes_.find(key);
    if (it != hashes_.end()) return it->second;
    if (!fs::exists(p)) throw InputError(p.string() + ": required input is missing (run the upstream stage first)");
    return hashes_[key] = io::sha256_file(p);
  }
  void forget(const fs::path& p) { hashes_.erase(fs::absolute(p).lexically_normal().string()); }

 private:
  std::optional<Corpus> corpus_;
  std::optional<std::vector<StanceInput>> stances_;
  std::map<std::string, std::string> hashes_;
};

// ---------------------------------------------------------------------------
// Stage parameters and inputs (what the resume key covers).

json stage_params(Stage s, const RunConfig& c) {
  switch (s) {
    case Stage::Ingest:
      return json::object();
    case Stage::Cluster:
      return {{"seed", c.seed},
              {"min_cos", c.cluster.min_cos},
              {"max_outer_iters", c.cluster.max_outer_iters},
              {"converge_frac", c.cluster.converge_frac},
              {"new_clusters_per_iter", c.cluster.new_clusters_per_iter},
              {"prune_threshold", c.prune_threshold}};
    case Stage::Label:
      return {{"top_k", c.keyword_top_k},
              {"alpha", c.pmi_alpha},
              {"stance_targets", c.stance_target_count},
              {"stance_min_articles", c.stance_min_articles},
              {"stance_top_k", c.stance_top_k},
              {"bias_targets", c.bias_targets}};
    case Stage::Cascades:
      return {{"min_sites", c.cascade_min_sites},
              {"predominance", static_cast<int>(c.predominance)},
              {"stance_filter", c.stance_filter ? std::string(to_string(c.stance_filter->direction)) + ":" +
                                                      c.stance_filter->target
                                                : std::string()}};
    case Stage::Netinf:
      return {{"alpha_t", c.model.alpha_t}, {"beta", c.model.beta},       {"epsilon", c.model.epsilon},
              {"k_max", c.netinf.k_max},    {"cut_fraction", c.netinf.cut_fraction}, {"lazy", c.netinf.lazy}};
    case Stage::Analyze:
      return {{"weighted", c.weighted_centrality},
              {"centrality_flow", c.centrality_flow == CentralityFlow::InLink ? "in" : "out"},
              {"bucket_days", c.bucket_days},
              {"top_narratives", c.top_narratives},
              {"top_k", c.keyword_top_k},
              {"bias_targets", c.bias_targets}};
    case Stage::Bias:
      return {{"targets", c.bias_targets},
              {"min_articles", c.bias_min_articles},
              {"prior_precision", c.prior_precision},
              {"top_k", c.keyword_top_k}};
  }
  return json::object();
}

std::vector<std::pair<std::string, fs::path>> stage_inputs(Stage s, const RunConfig& c) {
  std::vector<std::pair<std::string, fs::path>> in = {
      {"passages", c.passages}, {"embeddings", c.embeddings}, {"sites", c.sites}};
  const bool with_stances = !c.stances.empty();
  auto artifact = [&](const char* name) { in.emplace_back(name, c.outdir / name); };
  switch (s) {
    case Stage::Ingest:
      if (with_stances) in.emplace_back("stances", c.stances);
      break;
    case Stage::Cluster:
      break;
    case Stage::Label:
      if (with_stances) in.emplace_back("stances", c.stances);
      artifact("clusters.jsonl");
      break;
    case Stage::Cascades:
      if (with_stances) in.emplace_back("stances", c.stances);
      artifact("clusters.jsonl");
      break;
    case Stage::Netinf:
      in = {{"sites", c.sites}};
      artifact("cascades.jsonl");
      break;
    case Stage::Analyze:
      if (with_stances) in.emplace_back("stances", c.stances);
      artifact("clusters.jsonl");
      artifact("keywords.csv");
      artifact("stance_targets.csv");
      artifact("influence_graph.tsv");
      break;
    case Stage::Bias:
      if (with_stances) in.emplace_back("stances", c.stances);
      artifact("clusters.jsonl");
      artifact("keywords.csv");
      artifact("stance_targets.csv");
      break;
  }
  return in;
}

// ---------------------------------------------------------------------------
// Shared helpers

std::vector<std::string> read_target_list(const fs::path& p) {
  const auto lines = io::read_lines(p);
  if (lines.empty() || lines[0].text != "target") throw InputError(p.string(), 1, "header must be 'target'");
  std::vector<std::string> out;
  for (std::size_t i = 1; i < lines.size(); ++i)
    if (!lines[i].text.empty()) out.push_back(io::split_csv(lines[i].text).at(0));
  return out;
}

// Article stances restricted to clusters whose top keywords carry the target.
std::vector<ArticleStance> scoped_article_stances(Context& ctx) {
  if (ctx.config.stances.empty()) return {};
  const auto& corpus = ctx.corpus();
  const auto clusters = clusters_from_jsonl(ctx.out("clusters.jsonl"), corpus);
  const auto keywords = keywords_from_csv(ctx.out("keywords.csv"));
  auto targets = read_target_list(ctx.out("stance_targets.csv"));
  std::set<std::string> all(targets.begin(), targets.end());
  all.insert(ctx.config.bias_targets.begin(), ctx.config.bias_targets.end());
  const StanceScope scope(stance_scope(keywords, {all.begin(), all.end()}, ctx.config.keyword_top_k), clusters);
  return article_stances(ctx.stances(), corpus, &scope);
}

// ---------------------------------------------------------------------------
// Stages

StageRun run_ingest(Context& ctx) {
  const auto& corpus = ctx.corpus();
  const auto& labels = ctx.stances();
  std::vector<std::string> bad;
  for (std::size_t row = 0; row < labels.size(); ++row) {
    if (!corpus.find_passage(labels[row].passage_id))
      bad.push_back("row " + std::to_string(row + 2) + " (passage_id " + std::to_string(labels[row].passage_id) + ")");
  }
  if (!bad.empty()) {
    std::string msg = ctx.config.stances.string() + ": stance labels reference unknown passages:";
    for (std::size_t i = 0; i < std::min<std::size_t>(bad.size(), 20); ++i) msg += " " + bad[i];
    if (bad.size() > 20) msg += " ... (" + std::to_string(bad.size()) + " total)";
    throw InputError(msg);
  }
  json r = {{"sites", corpus.report.sites},
            {"passages", corpus.report.passages},
            {"articles", corpus.report.articles},
            {"dim", corpus.report.dim},
            {"renormalized", corpus.report.renormalized},
            {"stance_labels", labels.size()}};
  StageRun run;
  run.files["ingest_report.json"] = r.dump(2) + "\n";
  run.summary = r;
  return run;
}

StageRun run_cluster(Context& ctx) {
  const auto& corpus = ctx.corpus();
  std::vector<std::size_t> rows(corpus.passages.size()), positions(corpus.passages.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    rows[i] = corpus.passages[i].embedding_row;
    positions[i] = i;
  }
  const auto matrix = corpus.embeddings.gather(rows);
  auto params = ctx.config.cluster;
  params.seed = ctx.config.seed;
  const auto result = dp_means(matrix, params);
  auto clusters = make_story_clusters(result, corpus, positions);
  prune_single_site(clusters, ctx.config.prune_threshold);
  std::size_t pruned = 0;
  for (const auto& c : clusters) pruned += c.pruned ? 1 : 0;
  StageRun run;
  run.files["clusters.jsonl"] = clusters_to_jsonl(clusters);
  run.files["assignment.bin"] = encode_assignment(clusters, corpus);
  run.summary = {{"clusters", clusters.size()},
                 {"pruned", pruned},
                 {"iterations", result.iterations},
                 {"converged", result.converged},
                 {"objective", result.history.empty() ? 0.0 : result.history.back().objective}};
  return run;
}

StageRun run_label(Context& ctx) {
  const auto& corpus = ctx.corpus();
  const auto clusters = clusters_from_jsonl(ctx.out("clusters.jsonl"), corpus);
  PmiOptions opt;
  opt.top_k = ctx.config.keyword_top_k;
  opt.alpha = ctx.config.pmi_alpha;
  const auto keywords = pmi_keywords(clusters, corpus, opt);
  const auto targets = select_stance_targets(keywords, text::stopwords(), text::first_names(),
                                             ctx.config.stance_target_count, ctx.config.keyword_top_k);
  StageRun run;
  run.files["keywords.csv"] = keywords_to_csv(keywords);
  std::string t = "target\n";
  for (const auto& x : targets) t += io::csv_field(x) + "\n";
  run.files["stance_targets.csv"] = t;

  std::vector<StanceAssociation> assoc;
  if (!ctx.config.stances.empty()) {
    std::set<std::string> all(targets.begin(), targets.end());
    all.insert(ctx.config.bias_targets.begin(), ctx.config.bias_targets.end());
    const StanceScope scope(stance_scope(keywords, {all.begin(), all.end()}, ctx.config.keyword_top_k), clusters);
    const auto articles = article_stances(ctx.stances(), corpus, &scope);
    assoc = pmi_stance_associations(articles, corpus.sites, ctx.config.stance_min_articles, ctx.config.stance_top_k,
                                    ctx.config.pmi_alpha);
  }
  run.files["stance_associations.csv"] = stance_associations_to_csv(assoc);
  run.summary = {{"labeled_clusters", keywords.size()}, {"stance_targets", targets.size()},
                 {"stance_associations", assoc.size()}};
  return run;
}

StageRun run_cascades(Context& ctx) {
  const auto& corpus = ctx.corpus();
  const auto clusters = clusters_from_jsonl(ctx.out("clusters.jsonl"), corpus);
  auto cascades = build_cascades(clusters, corpus, ctx.config.cascade_min_sites);
  const std::size_t built = cascades.size();
  CascadeFilter filter;
  filter.predominance = ctx.config.predominance;
  filter.stance = ctx.config.stance_filter;
  filter.min_sites = ctx.config.cascade_min_sites;
  if (filter.predominance != Predominance::None || filter.stance) {
    const auto counts = cluster_ecosystem_counts(clusters, corpus);
    std::optional<StanceIndex> index;
    if (filter.stance) index = build_stance_index(clusters, corpus, ctx.stances());
    cascades = filter_cascades(cascades, filter, counts, index ? &*index : nullptr);
  }
  StageRun run;
  run.files["cascades.jsonl"] = cascades_to_jsonl(cascades, corpus.sites);
  run.summary = {{"built", built}, {"kept", cascades.size()}};
  return run;
}

StageRun run_netinf(Context& ctx) {
  const auto sites = load_site_registry(ctx.config.sites);
  const auto cascades = cascades_from_jsonl(ctx.out("cascades.jsonl"), sites);
  const auto graph = netinf_greedy(cascades, sites.size(), ctx.config.model, ctx.config.netinf);
  StageRun run;
  run.files["influence_graph.tsv"] = graph_to_tsv(graph, sites);
  run.files["copy_matrix.csv"] = copy_matrix_to_csv(ecosystem_copy_matrix(graph, sites));
  run.files["netinf_summary.json"] = graph_manifest_json(graph, ctx.config.model, ctx.config.netinf);
  run.summary = {{"edges", graph.edges.size()}, {"greedy_edges", graph.greedy_edges}, {"total_gain", graph.total_gain}};
  return run;
}

StageRun run_analyze(Context& ctx) {
  const auto& corpus = ctx.corpus();
  const auto& sites = corpus.sites;
  const auto graph = graph_from_tsv(ctx.out("influence_graph.tsv"), sites);
  const auto g = to_digraph(graph, ctx.config.weighted_centrality);
  StageRun run;
  run.files["centrality.csv"] = centrality_to_csv(centrality_report(g, ctx.config.centrality_flow), sites);
  const auto communities = louvain(undirected_projection(g));
  run.files["communities.csv"] = communities_to_csv(communities, sites);

  const auto clusters = clusters_from_jsonl(ctx.out("clusters.jsonl"), corpus);
  constexpr std::array<std::pair<Reliability, Reliability>, 3> pairs{
      std::pair{Reliability::Reliable, Reliability::Unreliable}, std::pair{Reliability::Mixed, Reliability::Unreliable},
      std::pair{Reliability::Reliable, Reliability::Mixed}};
  std::string vc = "cluster_id,series_a,series_b,pearson_r\n";
  double r_sum = 0.0;
  std::size_t r_n = 0;
  for (const auto& c : clusters) {
    if (c.pruned) continue;
    const auto series = cluster_volume_series(c, corpus, ctx.config.bucket_days);
    for (const auto& [a, b] : pairs) {
      const auto& sa = series.counts[index_of(a)];
      const auto& sb = series.counts[index_of(b)];
      std::optional<double> r;
      if (sa.size() >= 2) {
        const std::vector<double> da(sa.begin(), sa.end()), db(sb.begin(), sb.end());
        r = volume_correlation(da, db);
      }
      if (r && a == Reliability::Reliable && b == Reliability::Unreliable) {
        r_sum += *r;
        ++r_n;
      }
      vc += std::to_string(c.cluster_id) + "," + std::string(to_string(a)) + "," + std::string(to_string(b)) + "," +
            (r ? io::fmt_real(*r) : std::string()) + "\n";
    }
  }
  run.files["volume_correlation.csv"] = vc;

  const auto aggregates = aggregate_stances(scoped_article_stances(ctx));
  const auto features = reliability_feature_matrix(aggregates, sites, ctx.config.top_narratives);
  run.files["features.csv"] = feature_matrix_to_csv(features, sites);
  run.files["feature_coverage.csv"] = feature_coverage_to_csv(features, sites);

  json phases = json::array();
  for (double q : communities.phase_modularity) phases.push_back(q);
  std::set<std::uint32_t> distinct(communities.community.begin(), communities.community.end());
  run.summary = {{"modularity", communities.modularity},
                 {"modularity_by_phase", phases},
                 {"communities", distinct.size()},
                 {"mean_volume_r_reliable_unreliable", r_n ? json(r_sum / static_cast<double>(r_n)) : json(nullptr)},
                 {"volume_r_defined", r_n}};
  return run;
}

StageRun run_bias(Context& ctx) {
  const auto& corpus = ctx.corpus();
  const auto& sites = corpus.sites;
  const auto articles = scoped_article_stances(ctx);
  const auto aggregates = aggregate_stances(articles);
  StageRun run;
  run.files["stance_aggregates.csv"] = aggregates_to_csv(aggregates, sites);

  std::vector<std::string> targets = ctx.config.bias_targets;
  const bool explicit_targets = !targets.empty();
  if (!explicit_targets && !ctx.config.stances.empty()) targets = read_target_list(ctx.out("stance_targets.csv"));
  std::vector<BiasLatent> latents;
  json skipped = json::array();
  for (const auto& t : targets) {
    try {
      latents.push_back(fit_bias_latent(t, aggregates, ctx.config.bias_min_articles, ctx.config.prior_precision));
    } catch (const Error& e) {
      if (explicit_targets) throw;
      skipped.push_back(t);
      spdlog::debug("bias: skipping '{}': {}", t, e.what());
    }
  }
  run.files["bias_latent.csv"] = latent_to_csv(latents, sites);
  run.files["bias_coefficients.csv"] = coefficients_to_csv(latents);

  // Ecosystem-level stance distributions per target.
  std::map<std::string, std::array<std::array<double, 3>, kEcosystemCount>> dist;
  for (const auto& a : articles)
    dist[a.target][index_of(sites.reliability(a.site))][static_cast<std::size_t>(a.stance)] += 1.0;
  std::string js = "target,ecosystem_a,ecosystem_b,js_divergence\n";
  for (auto& [target, eco] : dist) {
    std::array<bool, kEcosystemCount> present{};
    for (std::size_t e = 0; e < kEcosystemCount; ++e) {
      const double n = eco[e][0] + eco[e][1] + eco[e][2];
      present[e] = n > 0.0;
      if (present[e])
        for (double& v : eco[e]) v /= n;
    }
    for (std::size_t a = 0; a < kEcosystemCount; ++a)
      for (std::size_t b = a + 1; b < kEcosystemCount; ++b) {
        if (!present[a] || !present[b]) continue;
        js += io::csv_field(target) + "," + std::string(to_string(kEcosystems[a])) + "," +
              std::string(to_string(kEcosystems[b])) + "," + io::fmt_real(js_divergence(eco[a], eco[b])) + "\n";
      }
  }
  run.files["stance_divergence.csv"] = js;

  json fitted = json::array();
  for (const auto& l : latents) fitted.push_back({{"target", l.target}, {"seeds", l.seed_sites.size()},
                                                  {"noise_variance", l.noise_variance}});
  run.summary = {{"aggregates", aggregates.size()}, {"fitted", fitted}, {"skipped", skipped}};
  return run;
}

StageRun run_stage(Stage s, Context& ctx) {
  switch (s) {
    case Stage::Ingest: return run_ingest(ctx);
    case Stage::Cluster: return run_cluster(ctx);
    case Stage::Label: return run_label(ctx);
    case Stage::Cascades: return run_cascades(ctx);
    case Stage::Netinf: return run_netinf(ctx);
    case Stage::Analyze: return run_analyze(ctx);
    case Stage::Bias: return run_bias(ctx);
  }
  throw Error("unknown stage");
}

json config_json(const RunConfig& c) {
  json j = json::object();
  for (auto s : kStages) j[std::string(stage_name(s))] = stage_params(s, c);
  return j;
}

json load_manifest(const fs::path& p) {
  if (!fs::exists(p)) return json::object();
  try {
    auto j = json::parse(io::read_file(p));
    return j.is_object() ? j : json::object();
  } catch (const std::exception& e) {
    spdlog::warn("ignoring unreadable manifest {}: {}", p.string(), e.what());
    return json::object();
  }
}

}  // namespace

PipelineResult run_pipeline(const RunConfig& config, const PipelineOptions& options) {
  PipelineResult result;
  Context ctx(config);
  const fs::path manifest_path = config.outdir / "manifest.json";
  fs::create_directories(config.outdir);
  json previous = load_manifest(manifest_path);
  json manifest;
  manifest["tool"] = "narrative-flow";
  manifest["version"] = NFLOW_VERSION;
  manifest["simd"] = std::string(simd::isa_name(simd::kernels().isa));
  manifest["threads"] = thread_count();
  manifest["seed"] = config.seed;
  manifest["params"] = config_json(config);
  manifest["inputs"] = json::object();
  manifest["stages"] = previous.contains("stages") && previous["stages"].is_object() ? previous["stages"]
                                                                                      : json::object();

  for (auto stage : kStages) {
    if (options.only && *options.only != stage) continue;
    const std::string name(stage_name(stage));
    const auto started = std::chrono::steady_clock::now();
    try {
      json inputs = json::object();
      for (const auto& [label, path] : stage_inputs(stage, config)) {
        const auto h = ctx.hash(path);
        inputs[label] = h;
        if (label == "passages" || label == "embeddings" || label == "sites" || label == "stances")
          manifest["inputs"][label] = {{"path", path.string()}, {"sha256", h}};
      }
      const json params = stage_params(stage, config);
      const std::string key = io::sha256_hex(params.dump() + "\n" + inputs.dump());

      bool skip = false;
      if (!options.force && previous.contains("stages") && previous["stages"].contains(name)) {
        const auto& prev = previous["stages"][name];
        skip = prev.value("key", "") == key && prev.contains("outputs");
        if (skip) {
          for (const auto& out : stage_outputs(stage)) {
            const auto p = ctx.out(out);
            if (!fs::exists(p) || !prev["outputs"].contains(out) || prev["outputs"][out] != io::sha256_file(p)) {
              skip = false;
              break;
            }
          }
        }
      }

      json entry;
      if (skip) {
        entry = previous["stages"][name];
        entry["status"] = "skipped";
        spdlog::info("{}: up to date, skipped", name);
      } else {
        spdlog::info("{}: running", name);
        auto run = run_stage(stage, ctx);
        json outputs = json::object();
        for (const auto& out : stage_outputs(stage)) {
          auto it = run.files.find(out);
          if (it == run.files.end()) throw Error("stage " + name + " did not produce " + out);
          io::write_file(ctx.out(out), it->second);
          ctx.forget(ctx.out(out));
          outputs[out] = io::sha256_hex(it->second);
        }
        entry["status"] = "ran";
        entry["key"] = key;
        entry["inputs"] = inputs;
        entry["outputs"] = outputs;
        entry["summary"] = run.summary;
      }
      const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
      entry["seconds"] = seconds;
      manifest["stages"][name] = entry;
      result.stages.push_back({stage, skip, seconds});
      io::write_file(manifest_path, manifest.dump(2) + "\n");
    } catch (const std::exception& e) {
      result.exit_code = stage_exit_code(stage);
      result.error = name + ": " + e.what();
      spdlog::debug("{}", result.error);
      manifest["stages"][name] = {{"status", "failed"}, {"error", e.what()}};
      manifest["failed_stage"] = name;
      try {
        io::write_file(manifest_path, manifest.dump(2) + "\n");
      } catch (const std::exception&) {
      }
      return result;
    }
  }
  return result;
}

}  // namespace nflow
