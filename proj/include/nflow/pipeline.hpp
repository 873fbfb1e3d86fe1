#pragma once
// Stage orchestration. Stages exchange data only through files in the
// output directory; manifest.json records parameters, content hashes and
// timings and lets unchanged stages be skipped on rerun.

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "nflow/config.hpp"

namespace nflow {

enum class Stage { Ingest, Cluster, Label, Cascades, Netinf, Analyze, Bias };
inline constexpr std::array<Stage, 7> kStages{Stage::Ingest,  Stage::Cluster, Stage::Label, Stage::Cascades,
                                              Stage::Netinf, Stage::Analyze, Stage::Bias};

std::string_view stage_name(Stage s) noexcept;
std::optional<Stage> parse_stage(std::string_view s) noexcept;
/// 10 ingest, 20 cluster, ... 70 bias.
int stage_exit_code(Stage s) noexcept;
/// Artifact file names, relative to the output directory.
const std::vector<std::string>& stage_outputs(Stage s);

struct PipelineOptions {
  std::optional<Stage> only;  // run a single stage
  bool force = false;         // ignore the manifest and rerun
};

struct StageReport {
  Stage stage;
  bool skipped = false;
  double seconds = 0.0;
};

struct PipelineResult {
  int exit_code = 0;
  std::vector<StageReport> stages;
  std::string error;
};

PipelineResult run_pipeline(const RunConfig& config, const PipelineOptions& options = {});

}  // namespace nflow
