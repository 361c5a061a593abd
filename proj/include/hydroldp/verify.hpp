#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "hydroldp/integrator.hpp"
#include "hydroldp/noise.hpp"

namespace hydroldp {

struct VerifyItem {
    std::string id;
    std::string description;
    double value = 0.0;
    double threshold = 0.0;
    bool pass = false;
};

struct VerifyReport {
    std::vector<VerifyItem> items;
    bool all_pass() const;
    const VerifyItem* find(const std::string& id) const;
    void append(const VerifyReport& other);
};

// Gaussian white field (no smoothing) and a sum of random single-mode wave packets.
Field random_white_field(const GridSpec& g, int components, std::uint64_t seed, BoundaryCondition bc = {});
State random_packet_state(const Model& m, std::uint64_t seed, int packets = 3);

// Idempotence, self-adjointness, Q_H on solenoidal fields and the gradient bound of P.
VerifyReport projection_suite(const GridSpec& g, int samples, std::uint64_t seed);
// bar P = P_H bar, tilde P = tilde, d_z w = -div v, w(., 0) = 0 and the bar/tilde Pythagoras.
VerifyReport structural_suite(const GridSpec& g, int samples, std::uint64_t seed);
VerifyReport assumption_items(const NoiseFamily& fam);
// Dense pseudo-inverse evaluation of the turbulent pressure against the spectral path.
VerifyReport turbulent_pressure_check(const NoiseFamily& fam, std::uint64_t seed);

// Q = <A0 x, x> - 1/2 |B0 x|^2_HS, V and H split into parts that multiply C0:
// Q = q_v + C0 q_t, V = V_v + C0 V_t, H = H_v + C0 H_t.
struct CoercivitySample {
    double q_v = 0.0, q_t = 0.0;
    double V_v = 0.0, V_t = 0.0;
    double H_v = 0.0, H_t = 0.0;
};

struct CoercivityFit {
    double C0 = 1.0;
    double nu_hat = 0.0;
    double M_hat = 0.0;
    int samples = 0;
    bool pass = false;
    std::vector<CoercivitySample> data;
};

CoercivitySample coercivity_sample(const Dynamics& d, const State& x);
// Least-squares fit of Q/V against H/V for one C0: M = max(0, -slope), nu = min(Q/V + M H/V).
void fit_coercivity(const std::vector<CoercivitySample>& data, double C0, double& nu, double& M);
// Random packets; C0 from a log grid on [1e-3, 1e3] maximizing nu_hat.
CoercivityFit coercivity_fit(const Model& m, int samples, std::uint64_t seed);

struct ConvergenceStudy {
    std::vector<double> h;
    std::vector<double> error;
    double slope = 0.0;
};

double loglog_slope(const std::vector<double>& h, const std::vector<double>& e);

// One midpoint-Heun Stratonovich step (drift and noise averaged over an Euler predictor),
// with the same implicit Laplacian as the production step.
State heun_stratonovich_step(const Dynamics& d, const State& x, double dt, double eps, std::span<const double> xi);

// RMS over paths of the endpoint difference between the correction-term integrator and the
// Heun reference under common noise, for each step count.
ConvergenceStudy ito_stratonovich_study(const Dynamics& strat, const State& x0, double T, const std::vector<int>& steps,
                                        double eps, int paths, std::uint64_t seed);

// Successive differences ||X_N - X_2N|| of the skeleton endpoint; control(t, n) sampled at step starts.
ConvergenceStudy skeleton_time_study(const Dynamics& d, const State& x0, double T, const std::vector<int>& steps,
                                     const std::function<double(double, int)>& control);

// Linear heat sub-problem (shear velocity mode, Robin temperature eigenmode) against the exact
// per-step backward-Euler decay of the continuous eigenvalues, for each nz.
ConvergenceStudy heat_space_study(GridSpec g, double alpha, double T, double dt, const std::vector<int>& nz);

void write_verify_table(std::ostream& out, const VerifyReport& r, const std::string& hash);

}  // namespace hydroldp
