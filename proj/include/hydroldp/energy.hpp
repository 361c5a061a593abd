#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "hydroldp/integrator.hpp"

namespace hydroldp {

// Squared norms are volume-weighted midpoint quadratures.
struct EnergySample {
    double t = 0.0;
    double l2_v = 0.0;
    double l2_theta = 0.0;
    double grad_v = 0.0;
    double grad_theta = 0.0;
    double h1_vbar = 0.0;    // ||vbar||^2_{H1(T^2)}
    double l2_dz_v = 0.0;
    double l4_vtilde = 0.0;  // ||vtilde||^4_{L4}
    double cross = 0.0;      // || |vtilde| |grad vtilde| ||^2
    double h2_v = 0.0;
    double mr_running = 0.0;  // MR(0, t) norm, not squared
};

EnergySample sample_energies(const State& s, double t = 0.0);

// ||X||_H^2 = ||v||_{H1}^2 + ||theta||_{L2}^2 and ||X||_V^2 = ||v||_{H2}^2 + ||theta||_{H1}^2.
double h_norm2(const State& s);
double v_norm2(const State& s);
// Euclidean gradients of the two quadratic forms.
State h_norm2_gradient(const State& s);
State v_norm2_gradient(const State& s);
// sum_{ij} ||d_i d_j v||^2 with Neumann ghosts.
double second_derivative_energy(const Field& v);
double gradient_energy(const Field& f);

// Samples for every saved state with the running MR norm filled in.
std::vector<EnergySample> trajectory_energies(const Trajectory& tr);
// sqrt(sup_t ||X||_H^2 + sum_k (t_k - t_{k-1}) ||X_k||_V^2)
double mr_norm(const Trajectory& tr);
// MR norm of the difference of two trajectories saved at the same times.
double mr_distance(const Trajectory& a, const Trajectory& b);

enum class EnergyLevel { L2, Intermediate, H1 };
const char* to_string(EnergyLevel level);

// Monitored energy E, its dissipation D and |phi|^2 at each saved time.
struct GronwallSeries {
    EnergyLevel level = EnergyLevel::L2;
    std::vector<double> times;
    std::vector<double> lhs;
    std::vector<double> dissipation;
    std::vector<double> phi2;
};

GronwallSeries gronwall_series(const std::vector<EnergySample>& samples, EnergyLevel level,
                               const ControlPath* control = nullptr);

struct GronwallBudget {
    EnergyLevel level = EnergyLevel::L2;
    double C = 0.0;
    double R = 0.0;
    double a = 1.0;
    bool fitted = false;
    std::vector<double> times;
    std::vector<double> lhs;
    std::vector<double> rhs;
    std::vector<double> margin;
    long first_violation = -1;  // index into times, -1 if none
};

// rhs_k = lhs_0 + R t_k + C sum_{j<=k} dt_j (1 + phi2_j) lhs_j - a sum_{j<=k} dt_j D_j (right endpoints).
GronwallBudget gronwall_budget(const GronwallSeries& s, double C, double R = 0.0, double a = 1.0, double tol = 1e-12);
// Smallest C in [0, 2^10] with margin >= -tol throughout, found by bisection.
// If none exists the budget at C = 2^10 is returned with its violation.
GronwallBudget gronwall_fit(const GronwallSeries& s, double R = 0.0, double a = 1.0, double tol = 1e-12);

struct SurvivalRow {
    double gamma = 0.0;
    double eps = 0.0;
    double probability = 0.0;
    int count = 0;  // members with MR norm > gamma
    int total = 0;
};

// Empirical P(MR > gamma); needs at least 8 members.
std::vector<SurvivalRow> tail_probability_scan(const std::vector<double>& mr_norms, double eps,
                                               const std::vector<double>& gammas);
std::vector<SurvivalRow> tail_probability_scan(const std::vector<Trajectory>& ensemble, double eps,
                                               const std::vector<double>& gammas);

// Text outputs; the first line carries the config hash.
void write_energy_csv(std::ostream& out, const std::vector<EnergySample>& samples, const std::string& hash);
void write_budget_csv(std::ostream& out, const GronwallBudget& b, const std::string& hash);
void write_survival_csv(std::ostream& out, const std::vector<SurvivalRow>& rows, const std::string& hash);
// One JSON object per saved time: {"t", "step", "energy": {...}, "snapshot"?}.
void write_trajectory_ndjson(std::ostream& out, const Trajectory& tr, const std::vector<EnergySample>& samples,
                             const std::string& hash, const std::vector<std::string>& snapshots = {});

}  // namespace hydroldp
