#include <doctest.h>

#include "../support/fixtures.hpp"
#include "nflow/config.hpp"
#include "nflow/error.hpp"

using namespace nflow;

TEST_CASE("key-value parsing handles sections, comments, strings, numbers and arrays") {
  const auto kv = KeyValueFile::parse(
      "seed = 42  # trailing\n"
      "[paths]\n"
      "passages = \"data/p.jsonl\"\n"
      "\n"
      "[netinf]\n"
      "beta = 0.25\n"
      "lazy = false\n"
      "[bias]\n"
      "targets = [\"vaccine\", \"a, b\", \"c\"]\n");
  CHECK(kv.unsigned_int("seed") == 42u);
  CHECK(kv.string("paths.passages") == "data/p.jsonl");
  CHECK(kv.real("netinf.beta") == 0.25);
  CHECK(kv.boolean("netinf.lazy") == false);
  CHECK(kv.strings("bias.targets") == std::vector<std::string>{"vaccine", "a, b", "c"});
  CHECK_FALSE(kv.has("netinf.alpha_t"));
  CHECK(kv.keys().size() == 5);
}

TEST_CASE("malformed key-value input is rejected") {
  CHECK_THROWS_AS(KeyValueFile::parse("a = 1\na = 2\n"), Error);
  CHECK_THROWS_AS(KeyValueFile::parse("[broken\n"), Error);
  CHECK_THROWS_AS(KeyValueFile::parse("novalue\n"), Error);
  const auto kv = KeyValueFile::parse("x = \"text\"\ny = -3\n");
  CHECK_THROWS_AS(kv.real("x"), Error);
  CHECK_THROWS_AS(kv.unsigned_int("y"), Error);
}

TEST_CASE("run config resolves paths against the config directory and maps every section") {
  fixture::TempDir dir;
  io::write_file(dir / "p.jsonl", "");
  io::write_file(dir / "e.bin", "");
  io::write_file(dir / "s.csv", "");
  io::write_file(dir / "st.csv", "");
  io::write_file(dir / "cfg.toml",
                 "seed = 9\n"
                 "[paths]\npassages = \"p.jsonl\"\nembeddings = \"e.bin\"\nsites = \"s.csv\"\nstances = \"st.csv\"\noutdir = \"run\"\n"
                 "[cluster]\nmin_cos = 0.6\nprune_threshold = 0.7\n"
                 "[labeler]\ntop_k = 5\nstance_min_articles = 20\n"
                 "[cascades]\nmin_sites = 3\npredominance = \"unreliable\"\nstance_filter = \"Against:ukraine\"\n"
                 "[netinf]\nalpha_t = 0.5\nk_max = 50\nlazy = false\n"
                 "[analytics]\nweighted = false\ncentrality_flow = \"out\"\nbucket_days = 7\n"
                 "[bias]\ntargets = [\"vaccine\"]\nmin_articles = 30\nprior_precision = 2.5\n");
  const auto c = load_run_config(dir / "cfg.toml");
  CHECK(c.passages == dir / "p.jsonl");
  CHECK(c.outdir == dir / "run");
  CHECK(c.seed == 9);
  CHECK(c.cluster.min_cos == 0.6);
  CHECK(c.prune_threshold == 0.7);
  CHECK(c.keyword_top_k == 5);
  CHECK(c.stance_min_articles == 20);
  CHECK(c.cascade_min_sites == 3);
  CHECK(c.predominance == Predominance::UnreliablePlurality);
  REQUIRE(c.stance_filter.has_value());
  CHECK(c.stance_filter->direction == Stance::Against);
  CHECK(c.stance_filter->target == "ukraine");
  CHECK(c.model.alpha_t == 0.5);
  CHECK(c.netinf.k_max == 50);
  CHECK_FALSE(c.netinf.lazy);
  CHECK_FALSE(c.weighted_centrality);
  CHECK(c.centrality_flow == CentralityFlow::OutLink);
  CHECK(c.bucket_days == 7);
  CHECK(c.bias_targets == std::vector<std::string>{"vaccine"});
  CHECK(c.bias_min_articles == 30);
  CHECK(c.prior_precision == 2.5);
  CHECK_NOTHROW(c.validate());
}

TEST_CASE("unknown keys, bad ranges and missing inputs are config errors") {
  fixture::TempDir dir;
  CHECK_THROWS_AS(run_config_from(KeyValueFile::parse("[cluster]\nmin_cos_typo = 0.5\n"), dir.path()), Error);
  CHECK_THROWS_AS(run_config_from(KeyValueFile::parse("[cascades]\nstance_filter = \"ukraine\"\n"), dir.path()), Error);

  io::write_file(dir / "p.jsonl", "");
  io::write_file(dir / "e.bin", "");
  io::write_file(dir / "s.csv", "");
  const std::string paths = "[paths]\npassages = \"p.jsonl\"\nembeddings = \"e.bin\"\nsites = \"s.csv\"\n";
  auto with = [&](const std::string& extra) { return run_config_from(KeyValueFile::parse(paths + extra), dir.path()); };
  CHECK_NOTHROW(with("").validate());
  CHECK_THROWS_AS(with("[cluster]\nmin_cos = 1.5\n").validate(), Error);
  CHECK_THROWS_AS(with("[netinf]\nepsilon = 0.9\n").validate(), Error);
  CHECK_THROWS_AS(with("[analytics]\nbucket_days = 0\n").validate(), Error);
  CHECK_THROWS_AS(with("[netinf]\ncut_fraction = 0\n").validate(), Error);
  CHECK_THROWS_AS(run_config_from(KeyValueFile::parse("[paths]\npassages = \"missing.jsonl\"\n"), dir.path()).validate(),
                  Error);
}
