#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>

#include "hydroldp/config.hpp"

namespace hydroldp {

enum ExitCode : int {
    kExitOk = 0,
    kExitInternal = 1,
    kExitConfig = 2,
    kExitBlowup = 3,
    kExitDiverged = 4,
    kExitVerifyFailed = 5,
};

struct CommandOptions {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out;
    std::optional<std::string> control;  // skeleton control file, overrides skeleton.control
};

// Each command writes its files under c.out_dir and a summary to `log`.
// Errors propagate as exceptions; run_command maps them to exit codes.
int cmd_simulate(const RunConfig& c, std::ostream& log);
int cmd_skeleton(const RunConfig& c, std::ostream& log);
int cmd_rate(const RunConfig& c, std::ostream& log);
int cmd_mc_ldp(const RunConfig& c, std::ostream& log);
int cmd_verify(const RunConfig& c, std::ostream& log);

// Loads the config, applies the overrides and dispatches. Messages go to `err`.
int run_command(const std::string& name, const CommandOptions& opt, std::ostream& log, std::ostream& err);

}  // namespace hydroldp
