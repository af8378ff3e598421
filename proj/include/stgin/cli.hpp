#pragma once

#include <string>
#include <vector>

#include "stgin/data.hpp"
#include "stgin/graph.hpp"
#include "stgin/run_config.hpp"

namespace stgin::cli {

/// Exit status for an exception escaping a command: 2 configuration or
/// validation, 3 data or file format, 4 numerical failure, 1 anything else.
int exit_code_for(const std::exception& e);

/// Runs `stgin <args...>` in-process and returns the exit status.
int run(const std::vector<std::string>& args);

void cmd_build_graph(const RunConfig& config);
void cmd_synth(const RunConfig& config);
void cmd_train(const RunConfig& config);
void cmd_evaluate(const RunConfig& config);

/// Graph from `adjacency` if set, else from `distances` with the configured
/// sigma and kappa.
RoadGraph graph_from_config(const RunConfig& config);

}  // namespace stgin::cli
