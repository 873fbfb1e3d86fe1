#include <doctest.h>

#include <nlohmann/json.hpp>

#include "../support/fixtures.hpp"
#include "nflow/config.hpp"
#include "nflow/pipeline.hpp"
#include "nflow/synth.hpp"

using namespace nflow;

namespace {

struct Workspace {
  fixture::TempDir dir;
  RunConfig config;

  Workspace() {
    const auto mini = synth::gen_mini_corpus(31);
    write_corpus(mini.corpus, dir / "passages.jsonl", dir / "embeddings.emb");
    synth::write_site_registry(mini.corpus.sites, dir / "sites.csv");
    synth::write_stances(mini.stances, dir / "stances.csv");
    io::write_file(dir / "config.toml",
                   "seed = 31\n[paths]\npassages = \"passages.jsonl\"\nembeddings = \"embeddings.emb\"\n"
                   "sites = \"sites.csv\"\nstances = \"stances.csv\"\noutdir = \"out\"\n"
                   "[labeler]\nstance_min_articles = 5\n"
                   "[netinf]\nalpha_t = 0.8\n"
                   "[bias]\ntargets = [\"vaccine\"]\nmin_articles = 3\n");
    config = load_run_config(dir / "config.toml");
  }

  std::map<std::string, std::string> artifacts() const {
    std::map<std::string, std::string> out;
    for (auto s : kStages) {
      for (const auto& name : stage_outputs(s)) out[name] = io::read_file(config.outdir / name);
    }
    return out;
  }
};

}  // namespace

TEST_CASE("stage names and exit codes") {
  CHECK(stage_name(Stage::Netinf) == "netinf");
  CHECK(parse_stage("analyze") == Stage::Analyze);
  CHECK_FALSE(parse_stage("nope").has_value());
  int expect = 10;
  for (auto s : kStages) {
    CHECK(stage_exit_code(s) == expect);
    expect += 10;
  }
}

TEST_CASE("a full run writes every artifact, resumes, and reruns byte-identically") {
  Workspace ws;
  const auto first = run_pipeline(ws.config);
  REQUIRE_MESSAGE(first.exit_code == 0, first.error);
  REQUIRE(first.stages.size() == kStages.size());
  for (const auto& r : first.stages) CHECK_FALSE(r.skipped);
  const auto before = ws.artifacts();
  for (const auto& [name, bytes] : before) CHECK_MESSAGE(!bytes.empty(), name);

  const auto manifest = nlohmann::json::parse(io::read_file(ws.config.outdir / "manifest.json"));
  CHECK(manifest.at("stages").size() == kStages.size());
  CHECK(manifest.at("inputs").size() == 4);

  const auto second = run_pipeline(ws.config);
  REQUIRE(second.exit_code == 0);
  for (const auto& r : second.stages) CHECK(r.skipped);

  PipelineOptions force;
  force.force = true;
  const auto third = run_pipeline(ws.config, force);
  REQUIRE(third.exit_code == 0);
  for (const auto& r : third.stages) CHECK_FALSE(r.skipped);
  CHECK(ws.artifacts() == before);

  // A changed downstream parameter reruns only the stages it feeds.
  auto tweaked = ws.config;
  tweaked.prior_precision = 3.0;
  const auto fourth = run_pipeline(tweaked);
  REQUIRE(fourth.exit_code == 0);
  for (const auto& r : fourth.stages) CHECK(r.skipped == (r.stage != Stage::Bias));

  // A tampered artifact is regenerated.
  io::write_file(ws.config.outdir / "cascades.jsonl", "");
  const auto fifth = run_pipeline(ws.config);
  REQUIRE(fifth.exit_code == 0);
  for (const auto& r : fifth.stages) {
    if (r.stage == Stage::Cascades) CHECK_FALSE(r.skipped);
  }
  CHECK(io::read_file(ws.config.outdir / "cascades.jsonl") == before.at("cascades.jsonl"));
}

TEST_CASE("ingest failures exit with the ingest code") {
  Workspace ws;
  auto bytes = io::read_file(ws.config.embeddings);
  bytes[0] = 'X';
  io::write_file(ws.config.embeddings, bytes);
  const auto r = run_pipeline(ws.config);
  CHECK(r.exit_code == 10);
  CHECK(r.error.find("bad magic") != std::string::npos);
}

TEST_CASE("a single stage without its upstream artifact fails with that stage's code") {
  Workspace ws;
  PipelineOptions only;
  only.only = Stage::Netinf;
  const auto r = run_pipeline(ws.config, only);
  CHECK(r.exit_code == 50);
  CHECK_FALSE(r.error.empty());
}
