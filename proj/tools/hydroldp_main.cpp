#include <omp.h>

#include <CLI11.hpp>
#include <cstdlib>
#include <iostream>
#include <string>

#include "hydroldp/commands.hpp"

namespace {

// --threads wins over HYDROLDP_THREADS; 0 leaves the OpenMP default.
bool apply_threads(int flag) {
    int n = flag;
    if (n == 0)
        if (const char* env = std::getenv("HYDROLDP_THREADS"); env && *env) {
            try {
                std::size_t used = 0;
                n = std::stoi(env, &used);
                if (env[used] != '\0' || n < 1) throw std::invalid_argument(env);
            } catch (const std::exception&) {
                std::cerr << "error: HYDROLDP_THREADS must be a positive integer\n";
                return false;
            }
        }
    if (n > 0) omp_set_num_threads(n);
    return true;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Stochastic primitive equations with transport noise: simulation and large deviations"};
    app.require_subcommand(1);

    hydroldp::CommandOptions opt;
    int threads = 0;
    std::uint64_t seed = 0;
    std::string out, control;

    for (const char* name : {"simulate", "skeleton", "rate", "mc-ldp", "verify"}) {
        static const std::map<std::string, std::string> help = {
            {"simulate", "integrate the stochastic system"},
            {"skeleton", "integrate the controlled skeleton equation and its energy budgets"},
            {"rate", "minimize the rate function for the configured event"},
            {"mc-ldp", "Monte Carlo small-noise estimates, optionally tilted"},
            {"verify", "structural, coercivity and consistency checks"},
        };
        auto* sub = app.add_subcommand(name, help.at(name));
        sub->add_option("--config", opt.config_path, "config file")->required()->check(CLI::ExistingFile);
        sub->add_option("--seed", seed, "random seed (overrides run.seed)");
        sub->add_option("--out", out, "output directory (overrides output.dir)");
        sub->add_option("--threads", threads, "OpenMP threads (default: HYDROLDP_THREADS)")->check(CLI::NonNegativeNumber);
        if (std::string(name) == "skeleton")
            sub->add_option("--control", control, "control JSON (overrides skeleton.control)");
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : hydroldp::kExitConfig;
    }

    CLI::App* sub = app.get_subcommands().front();
    if (sub->count("--seed")) opt.seed = seed;
    if (sub->count("--out")) opt.out = out;
    if (sub->get_option_no_throw("--control") && sub->count("--control")) opt.control = control;
    if (!apply_threads(threads)) return hydroldp::kExitConfig;

    return hydroldp::run_command(sub->get_name(), opt, std::cout, std::cerr);
}
