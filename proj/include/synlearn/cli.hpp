#pragma once

#include "synlearn/config.hpp"

namespace synlearn {

/// Command implementations behind the synlearn binary. Each writes its
/// output files under cfg.out_dir and returns a process exit code:
/// 0 success, 1 partial per-cell failures, 2 configuration/input errors
/// (raised as exceptions and mapped by the caller).
int cmd_generate(const ExperimentConfig& cfg);
int cmd_fit(const ExperimentConfig& cfg);
int cmd_trajectory(const ExperimentConfig& cfg);
int cmd_mhat(const ExperimentConfig& cfg);
int cmd_neff(const ExperimentConfig& cfg);
int cmd_test(const ExperimentConfig& cfg);

}  // namespace synlearn
