#pragma once

#include <ostream>
#include <string>
#include <vector>

#include "riskstab/config.hpp"

namespace riskstab::cli {

inline constexpr const char* kToolVersion = "0.1.0";

// Exit codes (stable contract): 0 success, 2 configuration error,
// 3 failed model assumption, 4 verification reported violations,
// 1 anything else.
int run_cli(const std::vector<std::string>& args, std::ostream& out,
            std::ostream& err);

int cmd_certify(RunConfig cfg, std::ostream& out);
int cmd_verify(RunConfig cfg, std::ostream& out);
int cmd_simulate(RunConfig cfg, std::ostream& out);
int cmd_controller(RunConfig cfg, std::ostream& out);
int cmd_sweep_kappa(RunConfig cfg, std::ostream& out);
// Emits one of the built-in figure bundles; cfg.reproduce selects
// illus1 | illus2 | illus3 | fig4.
int cmd_reproduce(RunConfig cfg, std::ostream& out);

}  // namespace riskstab::cli
