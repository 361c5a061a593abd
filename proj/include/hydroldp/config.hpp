#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "hydroldp/ldp.hpp"

namespace hydroldp {

// Flat key-path text: "section.key = value" lines, or "key = value" under a "[section]"
// header. '#' starts a comment. Every key has a default; unknown keys are rejected.
struct RunConfig {
    GridSpec grid{};
    double T = 0.5;
    double dt = 1.0 / 128.0;
    int save_every = 1;

    double eps = 0.1;
    NoiseMode mode = NoiseMode::Ito;
    std::string noise_family = "kraichnan";  // kraichnan | zero | file
    std::string noise_file;
    KraichnanParams kraichnan{};
    double nu = 1.0;                 // target nu when sigma is not given
    std::optional<double> sigma;

    double alpha = 1.0;
    double kappa = 1.0;
    bool dealias = true;

    // Forcing: v2 += a cos(kx x + ky y) - d v, theta += a cos(kx x + ky y) - d theta,
    // and a per-mode noise offset v2 = a cos(kx x + ky y).
    double fv_amplitude = 0.0, fv_damping = 0.0;
    int fv_kx = 1, fv_ky = 0;
    double ft_amplitude = 0.0, ft_damping = 0.0;
    int ft_kx = 1, ft_ky = 0;
    double noise_offset = 0.0;
    int noise_offset_kx = 1, noise_offset_ky = 0;
    double forcing_bound = 1e3;

    std::string initial = "harmonic";  // rest | harmonic | file
    int initial_kx = 1, initial_ky = 1;
    double initial_v = 0.5, initial_theta = 0.5;
    std::string initial_v_file, initial_theta_file;

    EventKind event_kind = EventKind::ExceedDistance;
    EventNorm event_norm = EventNorm::H;
    double event_delta = 1.0;
    std::string event_target = "deterministic";  // deterministic | harmonic | cosine
    // cosine: v2 = target_v cos(kx x + ky y), theta = target_theta cos(kx x + ky y).
    int target_kx = 1, target_ky = 0;
    double target_v = 0.0, target_theta = 0.0;

    RateOptions rate{};
    double control_budget = std::numeric_limits<double>::infinity();

    std::vector<double> mc_eps{0.4, 0.2, 0.1, 0.05};
    int mc_samples = 256;
    std::string mc_tilt = "none";  // none | optimize | file
    std::string mc_tilt_file;

    std::string skeleton_control;

    int verify_coercivity_samples = 500;
    int verify_projection_samples = 100;
    int verify_strong_paths = 8;
    double verify_strong_T = 0.25;

    bool snapshots = true;
    std::string out_dir = "out";
    std::uint64_t seed = 1;

    // Canonical effective key/value pairs (output directory excluded) and their FNV-1a hash.
    std::map<std::string, std::string> canonical() const;
    std::string hash() const;
};

// Throws ConfigError naming the offending key path.
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::string& path);

// The documented key list with default values, in canonical form.
std::map<std::string, std::string> default_config_keys();

// Model assembly. build_model(..., false) skips the parabolicity gate.
Model build_model(const RunConfig& c, bool parabolicity_gate = true);
State build_initial(const RunConfig& c, const Model& m);
RareEvent build_event(const RunConfig& c, const Model& m);
IntegratorConfig integrator_config(const RunConfig& c);

}  // namespace hydroldp
