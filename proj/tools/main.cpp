// narrative-flow: command-line front end for the story tracking pipeline.

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include "nflow/config.hpp"
#include "nflow/error.hpp"
#include "nflow/io.hpp"
#include "nflow/log.hpp"
#include "nflow/parallel.hpp"
#include "nflow/pipeline.hpp"
#include "nflow/synth.hpp"

namespace {

constexpr int kUsageError = 2;
constexpr int kGenericError = 1;

struct CommonFlags {
  std::string config;
  std::string outdir;
  std::string passages, embeddings, sites, stances;
  std::optional<std::uint64_t> seed;
  unsigned threads = 0;
  bool force = false;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--config", f.config, "Run configuration file")->check(CLI::ExistingFile);
  cmd->add_option("--outdir", f.outdir, "Output directory (overrides the config)");
  cmd->add_option("--seed", f.seed, "Master seed (overrides the config)");
  cmd->add_option("--threads", f.threads, "Worker thread cap (0 = all cores)");
  cmd->add_option("--passages", f.passages, "Passage metadata JSONL");
  cmd->add_option("--embeddings", f.embeddings, "Embedding matrix (EMB1)");
  cmd->add_option("--sites", f.sites, "Site registry CSV");
  cmd->add_option("--stances", f.stances, "Passage stance labels CSV");
  cmd->add_flag("--force", f.force, "Rerun stages even when the manifest says they are current");
}

nflow::RunConfig build_config(const CommonFlags& f) {
  nflow::RunConfig c = f.config.empty() ? nflow::RunConfig{} : nflow::load_run_config(f.config);
  if (!f.outdir.empty()) c.outdir = f.outdir;
  if (!f.passages.empty()) c.passages = f.passages;
  if (!f.embeddings.empty()) c.embeddings = f.embeddings;
  if (!f.sites.empty()) c.sites = f.sites;
  if (!f.stances.empty()) c.stances = f.stances;
  if (f.seed) c.seed = *f.seed;
  c.validate();
  return c;
}

int run(const CommonFlags& f, std::optional<nflow::Stage> only) {
  nflow::RunConfig config;
  try {
    config = build_config(f);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsageError;
  }
  nflow::set_thread_count(f.threads);
  nflow::PipelineOptions opt;
  opt.only = only;
  opt.force = f.force;
  const auto result = nflow::run_pipeline(config, opt);
  if (result.exit_code != 0) {
    std::cerr << "error: " << result.error << "\n";
    return result.exit_code;
  }
  for (const auto& s : result.stages) {
    std::cout << nflow::stage_name(s.stage) << ": " << (s.skipped ? "skipped" : "done") << " ("
              << nflow::io::fmt_real(s.seconds) << " s)\n";
  }
  return 0;
}

std::string sites_csv_path(const std::filesystem::path& dir) { return (dir / "sites.csv").string(); }

int simulate(const std::string& kind, const std::filesystem::path& outdir, nflow::synth::SynthSpec spec) {
  using namespace nflow;
  if (kind == "blobs") {
    const auto blobs = synth::gen_blobs(spec);
    write_embeddings(blobs.matrix, outdir / "embeddings.emb");
    std::string labels = "row,label\n";
    for (std::size_t i = 0; i < blobs.labels.size(); ++i)
      labels += std::to_string(i) + "," + std::to_string(blobs.labels[i]) + "\n";
    io::write_file(outdir / "labels.csv", labels);
  } else if (kind == "cascades") {
    const auto sites = synth::synthetic_sites(spec.n_sites);
    const auto sim = synth::gen_cascades(spec);
    synth::write_site_registry(sites, sites_csv_path(outdir));
    io::write_file(outdir / "cascades.jsonl", cascades_to_jsonl(sim.cascades, sites));
    io::write_file(outdir / "true_edges.tsv", synth::edges_to_tsv(sim.true_edges, sites));
  } else if (kind == "corpus") {
    const auto mc = synth::gen_mini_corpus(spec.seed);
    synth::write_site_registry(mc.corpus.sites, sites_csv_path(outdir));
    write_corpus(mc.corpus, outdir / "passages.jsonl", outdir / "embeddings.emb");
    synth::write_stances(mc.stances, outdir / "stances.csv");
  } else {
    std::cerr << "error: unknown --kind '" << kind << "' (blobs, cascades, corpus)\n";
    return kUsageError;
  }
  std::cout << "wrote " << kind << " to " << outdir.string() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  nflow::init_logging();
  CLI::App app{"narrative-flow: story clustering, influence inference and stance bias over news corpora"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(NFLOW_VERSION));

  CommonFlags flags;
  std::string stage_flag;
  auto* pipeline = app.add_subcommand("pipeline", "Run every stage in order (resumable)");
  add_common(pipeline, flags);
  pipeline->add_option("--stage", stage_flag, "Run only this stage");

  struct StageCommand {
    nflow::Stage stage;
    const char* help;
    CLI::App* cmd = nullptr;
  };
  std::vector<StageCommand> stage_cmds = {
      {nflow::Stage::Ingest, "Validate the corpus, site registry and stance labels"},
      {nflow::Stage::Cluster, "DP-Means story clustering and single-site pruning"},
      {nflow::Stage::Label, "PMI keywords, stance targets and stance associations"},
      {nflow::Stage::Cascades, "Build site-level cascades from story clusters"},
      {nflow::Stage::Netinf, "Infer the influence network from cascades"},
      {nflow::Stage::Analyze, "Centralities, communities, volume correlation, feature matrix"},
      {nflow::Stage::Bias, "Stance aggregates, bias latents and stance divergence"},
  };
  for (auto& s : stage_cmds) {
    s.cmd = app.add_subcommand(std::string(nflow::stage_name(s.stage)), s.help);
    add_common(s.cmd, flags);
  }

  std::string kind = "corpus";
  std::string sim_out = "synthetic";
  nflow::synth::SynthSpec spec;
  auto* sim = app.add_subcommand("simulate", "Generate synthetic data (blobs, cascades or a mini-corpus)");
  sim->add_option("--kind", kind, "blobs | cascades | corpus")->check(CLI::IsMember({"blobs", "cascades", "corpus"}));
  sim->add_option("--outdir", sim_out, "Output directory");
  sim->add_option("--seed", spec.seed, "Seed");
  sim->add_option("--threads", flags.threads, "Worker thread cap (0 = all cores)");
  sim->add_option("--sites", spec.n_sites, "Nodes in the random graph");
  sim->add_option("--clusters", spec.n_clusters, "Blob count");
  sim->add_option("--points", spec.n_points, "Blob points");
  sim->add_option("--dim", spec.dim, "Embedding dimension");
  sim->add_option("--cascades", spec.cascades_per_run, "Cascades to simulate");
  sim->add_option("--edge-density", spec.edge_density, "Probability of each ordered edge");
  sim->add_option("--alpha", spec.alpha_t, "Exponential delay rate");
  sim->add_option("--beta", spec.beta, "Transmission probability");
  sim->add_option("--intra-cos", spec.blob_intra_cos, "Expected within-blob cosine");
  sim->add_option("--inter-cos", spec.blob_inter_cos, "Maximum centroid cosine");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kUsageError;
  }

  try {
    if (sim->parsed()) {
      nflow::set_thread_count(flags.threads);
      return simulate(kind, sim_out, spec);
    }
    if (pipeline->parsed()) {
      std::optional<nflow::Stage> only;
      if (!stage_flag.empty()) {
        only = nflow::parse_stage(stage_flag);
        if (!only) {
          std::cerr << "error: unknown stage '" << stage_flag << "'\n";
          return kUsageError;
        }
      }
      return run(flags, only);
    }
    for (const auto& s : stage_cmds)
      if (s.cmd->parsed()) return run(flags, s.stage);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kGenericError;
  }
  return kUsageError;
}
