#pragma once

#include "srg/config.hpp"

#include <optional>
#include <string>

namespace srg::cli {

enum ExitCode : int {
    kOk = 0,
    kFailure = 1,
    kInvalidInput = 2,
    kNumericalFailure = 3,
    kNotConverged = 4,
};

struct Overrides {
    std::optional<int> threads;
    std::optional<std::uint64_t> seed;
};

int cmd_gen(const Config& cfg, const Overrides& o);
int cmd_fit(const Config& cfg, const Overrides& o);
int cmd_eval(const Config& cfg, const Overrides& o);
int cmd_cluster(const Config& cfg, const Overrides& o);
int cmd_tune(const Config& cfg, const Overrides& o);
int cmd_shift_report(const Config& cfg, const Overrides& o);

/// Loads the config, runs `command`, and maps exceptions to exit codes.
int run(const std::string& command, const std::string& config_path, const Overrides& o);

}  // namespace srg::cli
