#pragma once

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "hydroldp/control.hpp"
#include "hydroldp/integrator.hpp"
#include "hydroldp/optim.hpp"

namespace hydroldp {

enum class EventKind { ExceedDistance, TerminalSetDistance };
enum class EventNorm { H, MR };
const char* to_string(EventKind k);
const char* to_string(EventNorm n);

// ExceedDistance: distance from the deterministic (phi = 0) solution exceeds delta, measured
// at T in H or over the whole path in MR. TerminalSetDistance: ||X(T) - target||_H <= delta,
// with the deterministic terminal state as the default target.
struct RareEvent {
    EventKind kind = EventKind::ExceedDistance;
    EventNorm norm = EventNorm::H;
    double delta = 1.0;
    std::optional<State> target;
};

// Skeleton forward map, event geometry and the penalized objective with its discrete adjoint.
// x0 must already be admissible (Model::admissible); it is used as given.
class RateProblem {
public:
    RateProblem(const Dynamics& d, const State& x0, double T, double dt, RareEvent event);

    const Dynamics& dynamics() const { return *dyn_; }
    const RareEvent& event() const { return event_; }
    const State& initial() const { return x0_; }
    double T() const { return T_; }
    double dt() const { return dt_; }
    int steps() const { return steps_; }
    int modes() const { return dyn_->noise_modes(); }
    const Trajectory& reference() const { return ref_; }

    Trajectory forward(const ControlPath& phi) const;
    double distance(const Trajectory& tr) const;
    // Distance by which the event misses (0 when it occurs).
    double residual(double distance) const;
    bool occurs(const Trajectory& tr) const { return residual(distance(tr)) == 0.0; }

    struct Evaluation {
        double J = 0.0;
        double cost = 0.0;
        double distance = 0.0;
        double residual = 0.0;
        ControlPath grad;
    };
    // J = 1/2 int |phi|^2 + mu/2 residual^2, gradient by the discrete adjoint when requested.
    Evaluation evaluate(const ControlPath& phi, double mu, bool with_gradient = true) const;

private:
    // dR/dX_k for R = distance, for every saved state.
    std::vector<State> distance_gradient(const Trajectory& tr, double d) const;

    const Dynamics* dyn_;
    State x0_;
    double T_;
    double dt_;
    int steps_;
    RareEvent event_;
    Trajectory ref_;
    State target_;
};

struct RateOptions {
    double mu0 = 10.0;
    double mu_factor = 10.0;
    int max_outer = 12;
    double residual_tol = 1e-3;
    LbfgsOptions inner{};
    std::uint64_t seed = 1;
};

struct RateTraceRow {
    int outer = 0;
    int iterations = 0;
    double mu = 0.0;
    double J = 0.0;
    double cost = 0.0;
    double distance = 0.0;
    double residual = 0.0;
    double grad_norm = 0.0;
};

struct RateResult {
    ControlPath phi;
    double I = 0.0;
    double distance = 0.0;
    double residual = 0.0;
    bool converged = false;
    std::string message;
    std::vector<RateTraceRow> trace;
};

// Penalty continuation (mu *= mu_factor until residual <= tol) around L-BFGS. Returns the
// cheapest feasible iterate seen, including the initial guess; converged = false means Diverged.
RateResult minimize_rate(const RateProblem& p, const RateOptions& opt = {}, const ControlPath* initial = nullptr);

// Wilson score interval at 95%.
std::pair<double, double> wilson_interval(int hits, int n, double z = 1.959963984540054);

struct McOptions {
    std::vector<double> eps{0.4, 0.2, 0.1, 0.05};
    int samples = 256;
    std::uint64_t seed = 1;
    const ControlPath* tilt = nullptr;
    double control_budget = std::numeric_limits<double>::infinity();
};

struct McRow {
    double eps = 0.0;
    int samples = 0;
    int hits = 0;
    bool tilted = false;
    double p_hat = 0.0;
    double std_err = 0.0;
    double ci_lo = 0.0;
    double ci_hi = 0.0;
    double eps_log_p = 0.0;   // -inf when p_hat = 0
    double eps_log_p_se = 0.0;
    double weight_variance = 0.0;  // per-sample variance of the (weighted) indicator
    bool use_tilt = false;
};

// Weighted least squares of eps log p over [1, eps, eps log eps].
struct TrendFit {
    bool ok = false;
    double intercept = 0.0;
    double intercept_se = 0.0;
    double c1 = 0.0;
    double c2 = 0.0;
};

struct LdpReport {
    std::vector<McRow> rows;
    double rate_value = std::numeric_limits<double>::quiet_NaN();
    double rate_se = 0.0;
    TrendFit trend;
    bool is_consistent = false;  // |intercept + I| <= 3 combined standard errors
    bool monotone = false;       // eps log p monotone in eps up to CI overlap
};

// Log Girsanov weight of one tilted path: -sum phi xi sqrt(dt/eps) - sum phi^2 dt / (2 eps).
double girsanov_log_weight(const ControlPath& phi, const NoiseStream& ns, double eps);

// Per eps: run the SPDE (or the tilted SPDE with Girsanov weights) and estimate P(event).
// Samples run in parallel; streams are keyed by (seed, eps index, sample) and results are
// reduced in sample order, so output is independent of the thread count.
LdpReport mc_small_noise(const RateProblem& p, const McOptions& opt, double rate_value = std::numeric_limits<double>::quiet_NaN());

TrendFit fit_trend(const std::vector<McRow>& rows);
bool monotone_within_ci(const std::vector<McRow>& rows);

void write_ldp_report(std::ostream& out, const LdpReport& r, const std::string& hash);

// Nested-control study of the skeleton a-priori bound.
struct AprioriRow {
    double control_norm = 0.0;
    double cost = 0.0;
    double mr = 0.0;
    bool finite = false;
};

struct AprioriReport {
    std::vector<AprioriRow> rows;
    std::vector<double> envelope;  // isotonic (non-decreasing) least-squares fit of mr on control norm
    double max_residual = 0.0;     // max |mr - envelope|
    double slope = 0.0;            // least-squares slope of the envelope against control norm
    bool all_finite = false;
};

AprioriReport skeleton_apriori_check(const RateProblem& p, const std::vector<ControlPath>& controls);
// Pool-adjacent-violators fit of a non-decreasing sequence.
std::vector<double> isotonic_fit(const std::vector<double>& y);

// Single forced Fourier mode with zero transport: with v2 = A(t) cos x the system reduces to
// dA = -A dt + sigma (phi dt + sqrt(eps) dW), discretized by the same IMEX step.
class OuReduction {
public:
    OuReduction(const GridSpec& grid, double T, double dt, double sigma = 1.0);
    OuReduction(const OuReduction&) = delete;
    OuReduction& operator=(const OuReduction&) = delete;

    const Model& model() const { return model_; }
    const Dynamics& dynamics() const { return dyn_; }
    double T() const { return T_; }
    double dt() const { return dt_; }
    double sigma() const { return sigma_; }
    // Rest state plus amplitude A in v2 = A cos x.
    State mode_state(double amplitude) const;
    double amplitude(const State& s) const;
    // ||mode_state(1)||_H
    double unit_norm() const;
    // sigma^2 dt sum_{j=1}^{N} r^{2j}, r = 1/(1 + dt): Var A(T) / eps.
    double variance_factor() const;
    // Exact P(A(T) in [c - w, c + w]) and the matching rate (c - w)^2 / (2 variance_factor).
    double band_probability(double eps, double centre, double half_width) const;
    double band_rate(double centre, double half_width) const;
    // Ball event around centre * mode with H radius half_width * unit_norm().
    RareEvent band_event(double centre, double half_width) const;
    // Exceed event with H radius b * unit_norm(); its rate is b^2 / (2 variance_factor).
    RareEvent exceed_event(double b) const;

private:
    Model model_;
    Dynamics dyn_;
    double T_;
    double dt_;
    double sigma_;
};

void write_control_json(std::ostream& out, const ControlPath& phi, const std::string& hash, double I);
ControlPath read_control_json(const std::string& path);

}  // namespace hydroldp
