#pragma once

#include <spdlog/spdlog.h>

namespace nflow {

/// Routes spdlog to stderr and applies NARRATIVE_FLOW_LOG (error|warn|info|debug).
void init_logging();

}  // namespace nflow
