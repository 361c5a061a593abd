#pragma once

#include <limits>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "hydroldp/control.hpp"
#include "hydroldp/model.hpp"
#include "hydroldp/rng.hpp"

namespace hydroldp {

enum class Problem { Spde, Skeleton, Tilted };

struct IntegratorConfig {
    double dt = 1.0 / 128.0;
    double eps = 0.0;
    NoiseMode mode = NoiseMode::Ito;
    double blowup_factor = 1e6;
    int save_every = 1;
    // Bound K on the control's L2(0,T; l2) norm for tilted runs.
    double control_budget = std::numeric_limits<double>::infinity();
};

// Spatial operators of one model: explicit drift, noise coefficients, the
// Stratonovich drift correction and the implicit vertical/horizontal Laplacian.
class Dynamics {
public:
    Dynamics(const Model& model, NoiseMode mode);

    const Model& model() const { return *model_; }
    NoiseMode mode() const { return mode_; }
    int noise_modes() const { return model_->noise.size(); }

    // Everything in the drift except the Laplacian.
    State drift(const State& x) const;
    // B_n(x) including the affine G terms.
    State diffusion(const State& x, int n) const;
    // 1/2 sum_n B_n^2 x restricted to the transport part (Stratonovich only).
    State correction(const State& x) const;
    // (I - dt Laplacian)^{-1} followed by the hydrostatic projection of v.
    State solve_implicit(const State& rhs, double dt) const;

    // One IMEX Euler-Maruyama step; coefficient of B_n is dt*control[n] + sqrt(eps dt)*xi[n].
    State step(const State& x, double dt, double eps, std::span<const double> control, std::span<const double> xi,
               long step_index = -1) const;

    // Euclidean vector-Jacobian products.
    State drift_vjp(const State& x, const State& cot) const;
    State diffusion_vjp(const State& x, int n, const State& cot) const;

    std::vector<Field> noise_velocity_forcing(const Field& v) const;

private:
    void add_velocity_forcing(Field& out, const Field& v, const Field& theta) const;
    void add_temperature_forcing(Field& out, const Field& v, const Field& theta) const;
    std::array<Field, 3> velocity_gradient(const Field& v) const;

    const Model* model_;
    NoiseMode mode_;
    std::unique_ptr<CorrectionOperators> corr_;
};

State step_spde(const Dynamics& d, const State& x, double dt, double eps, std::span<const double> xi);
State step_skeleton(const Dynamics& d, const State& x, double dt, std::span<const double> phi);
State step_tilted(const Dynamics& d, const State& x, double dt, double eps, std::span<const double> phi,
                  std::span<const double> xi);

struct Trajectory {
    double dt = 0.0;
    int steps = 0;
    std::vector<long> step_index;
    std::vector<double> times;
    std::vector<State> states;

    const State& final_state() const { return states.back(); }
};

int step_count(double T, double dt);

// Integrates from x0 over [0, T]. Control is required for Skeleton/Tilted, the noise
// stream for Spde/Tilted. States are saved every cfg.save_every steps plus the last.
Trajectory integrate(const Dynamics& d, Problem problem, const State& x0, double T, const IntegratorConfig& cfg,
                     const ControlPath* control = nullptr, const NoiseStream* noise = nullptr);

}  // namespace hydroldp
