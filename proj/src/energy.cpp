#include "hydroldp/energy.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <ostream>

#include "hydroldp/errors.hpp"
#include "hydroldp/hydrostatic.hpp"
#include "hydroldp/io.hpp"
#include "hydroldp/spectral.hpp"
#include "hydroldp/vertical.hpp"

namespace hydroldp {

namespace {

double sq(const Field& f) { return inner_l2(f, f); }

double horizontal_gradient_energy(const Field& f) {
    return sq(horizontal_derivative(f, 0)) + sq(horizontal_derivative(f, 1));
}

Field with_bc(Field f, BoundaryCondition bc) {
    f.set_bc(bc);
    return f;
}

}  // namespace

// sum_{ij} ||d_i d_j v||^2 for a Neumann field; mixed terms counted twice.
double second_derivative_energy(const Field& v) {
    const auto nbc = BoundaryCondition::neumann();
    const Field vv = with_bc(v, nbc);
    const Field dx = with_bc(horizontal_derivative(vv, 0), nbc);
    const Field dy = with_bc(horizontal_derivative(vv, 1), nbc);
    return sq(horizontal_derivative(dx, 0)) + 2.0 * sq(horizontal_derivative(dx, 1)) + sq(horizontal_derivative(dy, 1)) +
           2.0 * face_gradient_energy(dx) + 2.0 * face_gradient_energy(dy) + sq(vertical_second_derivative(vv));
}

double gradient_energy(const Field& f) { return horizontal_gradient_energy(f) + face_gradient_energy(f); }

double h_norm2(const State& s) { return sq(s.v) + gradient_energy(s.v) + sq(s.theta); }

double v_norm2(const State& s) {
    return sq(s.v) + gradient_energy(s.v) + second_derivative_energy(s.v) + sq(s.theta) + gradient_energy(s.theta);
}

namespace {

// Discrete Laplacian whose quadratic form is -gradient_energy (interior faces only).
Field face_laplacian(const Field& f) {
    Field out = horizontal_derivative(horizontal_derivative(f, 0), 0);
    out += horizontal_derivative(horizontal_derivative(f, 1), 1);
    out += vertical_second_derivative(f, kernels::Ghosts{1.0, 1.0});
    return out;
}

}  // namespace

State h_norm2_gradient(const State& s) {
    const double w = 2.0 * s.v.grid().cell_volume();
    Field gv = s.v - face_laplacian(s.v);
    gv *= w;
    Field gt = s.theta;
    gt *= w;
    return {std::move(gv), std::move(gt)};
}

State v_norm2_gradient(const State& s) {
    const double w = 2.0 * s.v.grid().cell_volume();
    const Field lv = face_laplacian(s.v);
    Field gv = s.v - lv + face_laplacian(lv);
    gv *= w;
    Field gt = s.theta - face_laplacian(s.theta);
    gt *= w;
    return {std::move(gv), std::move(gt)};
}

EnergySample sample_energies(const State& s, double t) {
    const GridSpec& g = s.v.grid();
    const auto nbc = BoundaryCondition::neumann();
    EnergySample e;
    e.t = t;
    e.l2_v = sq(s.v);
    e.l2_theta = sq(s.theta);
    e.l2_dz_v = face_gradient_energy(s.v);
    e.grad_v = horizontal_gradient_energy(s.v) + e.l2_dz_v;
    e.grad_theta = horizontal_gradient_energy(s.theta) + face_gradient_energy(s.theta);

    Field vbar = lift(vertical_average(s.v), nbc);
    e.h1_vbar = (sq(vbar) + horizontal_gradient_energy(vbar)) / g.h;

    Field vt = s.v - vbar;
    vt.set_bc(nbc);
    const double l4 = norm_lp(vt, 4.0);
    e.l4_vtilde = l4 * l4 * l4 * l4;
    const std::array<Field, 3> dvt{horizontal_derivative(vt, 0), horizontal_derivative(vt, 1), vertical_derivative(vt)};
    const std::size_t n = g.points();
    double cross = 0.0;
    for (std::size_t q = 0; q < n; ++q) {
        double m2 = 0.0, d2 = 0.0;
        for (int c = 0; c < 2; ++c) {
            m2 += vt.component(c)[q] * vt.component(c)[q];
            for (const auto& d : dvt) d2 += d.component(c)[q] * d.component(c)[q];
        }
        cross += m2 * d2;
    }
    e.cross = cross * g.cell_volume();

    const double second = second_derivative_energy(s.v);
    e.h2_v = e.l2_v + e.grad_v + second;
    return e;
}

std::vector<EnergySample> trajectory_energies(const Trajectory& tr) {
    std::vector<EnergySample> out;
    out.reserve(tr.states.size());
    double sup_h = 0.0, int_v = 0.0;
    for (std::size_t k = 0; k < tr.states.size(); ++k) {
        EnergySample e = sample_energies(tr.states[k], tr.times[k]);
        sup_h = std::max(sup_h, e.l2_v + e.grad_v + e.l2_theta);
        if (k > 0) int_v += (tr.times[k] - tr.times[k - 1]) * (e.h2_v + e.l2_theta + e.grad_theta);
        e.mr_running = std::sqrt(sup_h + int_v);
        out.push_back(e);
    }
    return out;
}

double mr_norm(const Trajectory& tr) {
    double sup_h = 0.0, int_v = 0.0;
    for (std::size_t k = 0; k < tr.states.size(); ++k) {
        sup_h = std::max(sup_h, h_norm2(tr.states[k]));
        if (k > 0) int_v += (tr.times[k] - tr.times[k - 1]) * v_norm2(tr.states[k]);
    }
    return std::sqrt(sup_h + int_v);
}

double mr_distance(const Trajectory& a, const Trajectory& b) {
    if (a.states.size() != b.states.size()) throw InvalidArgument("mr_distance: trajectories saved at different times");
    double sup_h = 0.0, int_v = 0.0;
    for (std::size_t k = 0; k < a.states.size(); ++k) {
        State d = a.states[k] - b.states[k];
        sup_h = std::max(sup_h, h_norm2(d));
        if (k > 0) int_v += (a.times[k] - a.times[k - 1]) * v_norm2(d);
    }
    return std::sqrt(sup_h + int_v);
}

const char* to_string(EnergyLevel level) {
    switch (level) {
        case EnergyLevel::L2: return "l2";
        case EnergyLevel::Intermediate: return "intermediate";
        case EnergyLevel::H1: return "h1";
    }
    return "?";
}

GronwallSeries gronwall_series(const std::vector<EnergySample>& samples, EnergyLevel level,
                               const ControlPath* control) {
    GronwallSeries s;
    s.level = level;
    for (std::size_t k = 0; k < samples.size(); ++k) {
        const EnergySample& e = samples[k];
        double lhs = 0.0, diss = 0.0;
        switch (level) {
            case EnergyLevel::L2:
                lhs = e.l2_v + e.l2_theta;
                diss = e.grad_v + e.grad_theta;
                break;
            case EnergyLevel::Intermediate:
                lhs = e.l2_dz_v + e.l4_vtilde + e.h1_vbar;
                diss = e.cross;
                break;
            case EnergyLevel::H1:
                lhs = e.grad_v + e.grad_theta;
                diss = e.h2_v - e.grad_v - e.l2_v;
                break;
        }
        double p2 = 0.0;
        if (control && k > 0 && control->steps > 0) {
            // Mean of |phi|^2 over the steps ending at this sample.
            const int k1 = std::clamp(static_cast<int>(std::lround(e.t / control->dt)), 1, control->steps);
            const int k0 = std::clamp(static_cast<int>(std::lround(samples[k - 1].t / control->dt)), 0, k1 - 1);
            for (int j = k0; j < k1; ++j)
                for (double x : control->step(j)) p2 += x * x;
            p2 /= (k1 - k0);
        }
        s.times.push_back(e.t);
        s.lhs.push_back(lhs);
        s.dissipation.push_back(diss);
        s.phi2.push_back(p2);
    }
    return s;
}

GronwallBudget gronwall_budget(const GronwallSeries& s, double C, double R, double a, double tol) {
    GronwallBudget b;
    b.level = s.level;
    b.C = C;
    b.R = R;
    b.a = a;
    b.times = s.times;
    b.lhs = s.lhs;
    const std::size_t n = s.times.size();
    b.rhs.resize(n);
    b.margin.resize(n);
    double growth = 0.0, diss = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        if (k > 0) {
            const double dt = s.times[k] - s.times[k - 1];
            growth += dt * (1.0 + s.phi2[k]) * s.lhs[k];
            diss += dt * s.dissipation[k];
        }
        b.rhs[k] = s.lhs[0] + R * s.times[k] + C * growth - a * diss;
        b.margin[k] = b.rhs[k] - b.lhs[k];
        const double scale = std::max({1.0, std::abs(b.lhs[k]), std::abs(s.lhs[0])});
        if (b.first_violation < 0 && b.margin[k] < -tol * scale) b.first_violation = static_cast<long>(k);
    }
    return b;
}

GronwallBudget gronwall_fit(const GronwallSeries& s, double R, double a, double tol) {
    GronwallBudget b0 = gronwall_budget(s, 0.0, R, a, tol);
    b0.fitted = true;
    if (b0.first_violation < 0) return b0;
    const double cmax = 1024.0;
    GronwallBudget hi = gronwall_budget(s, cmax, R, a, tol);
    hi.fitted = true;
    if (hi.first_violation >= 0) return hi;
    double lo = 0.0, up = cmax;
    for (int it = 0; it < 60 && up - lo > 1e-9 * up; ++it) {
        const double mid = 0.5 * (lo + up);
        if (gronwall_budget(s, mid, R, a, tol).first_violation < 0)
            up = mid;
        else
            lo = mid;
    }
    GronwallBudget b = gronwall_budget(s, up, R, a, tol);
    b.fitted = true;
    return b;
}

std::vector<SurvivalRow> tail_probability_scan(const std::vector<double>& mr_norms, double eps,
                                               const std::vector<double>& gammas) {
    if (mr_norms.size() < 8) throw InvalidArgument("tail_probability_scan needs at least 8 trajectories");
    std::vector<double> sorted = mr_norms;
    std::sort(sorted.begin(), sorted.end());
    std::vector<double> gs = gammas;
    std::sort(gs.begin(), gs.end());
    std::vector<SurvivalRow> rows;
    const int total = static_cast<int>(sorted.size());
    for (double gm : gs) {
        const auto it = std::upper_bound(sorted.begin(), sorted.end(), gm);
        const int count = static_cast<int>(sorted.end() - it);
        rows.push_back({gm, eps, static_cast<double>(count) / total, count, total});
    }
    return rows;
}

std::vector<SurvivalRow> tail_probability_scan(const std::vector<Trajectory>& ensemble, double eps,
                                               const std::vector<double>& gammas) {
    std::vector<double> norms;
    norms.reserve(ensemble.size());
    for (const auto& t : ensemble) norms.push_back(mr_norm(t));
    return tail_probability_scan(norms, eps, gammas);
}

void write_energy_csv(std::ostream& out, const std::vector<EnergySample>& samples, const std::string& hash) {
    out << "# config_hash=" << hash << '\n';
    out << "t,l2_v,l2_theta,grad_v,grad_theta,h1_vbar,l2_dz_v,l4_vtilde,cross,h2_v,mr_running\n";
    for (const auto& e : samples)
        out << fmt::format("{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g}\n", e.t,
                           e.l2_v, e.l2_theta, e.grad_v, e.grad_theta, e.h1_vbar, e.l2_dz_v, e.l4_vtilde, e.cross,
                           e.h2_v, e.mr_running);
}

void write_budget_csv(std::ostream& out, const GronwallBudget& b, const std::string& hash) {
    out << "# config_hash=" << hash << " level=" << to_string(b.level) << " C=" << fmt_double(b.C)
        << " R=" << fmt_double(b.R) << " a=" << fmt_double(b.a) << " first_violation=" << b.first_violation << '\n';
    out << "t,lhs,rhs,margin\n";
    for (std::size_t k = 0; k < b.times.size(); ++k)
        out << fmt::format("{:.17g},{:.17g},{:.17g},{:.17g}\n", b.times[k], b.lhs[k], b.rhs[k], b.margin[k]);
}

void write_survival_csv(std::ostream& out, const std::vector<SurvivalRow>& rows, const std::string& hash) {
    out << "# config_hash=" << hash << '\n';
    out << "gamma,eps,probability,count\n";
    for (const auto& r : rows) out << fmt::format("{:.17g},{:.17g},{:.17g},{}\n", r.gamma, r.eps, r.probability, r.count);
}

void write_trajectory_ndjson(std::ostream& out, const Trajectory& tr, const std::vector<EnergySample>& samples,
                             const std::string& hash, const std::vector<std::string>& snapshots) {
    out << fmt::format("{{\"config_hash\":\"{}\",\"dt\":{:.17g},\"steps\":{}}}\n", hash, tr.dt, tr.steps);
    for (std::size_t k = 0; k < samples.size(); ++k) {
        const EnergySample& e = samples[k];
        out << fmt::format(
            "{{\"t\":{:.17g},\"step\":{},\"energy\":{{\"l2_v\":{:.17g},\"l2_theta\":{:.17g},\"grad_v\":{:.17g},"
            "\"grad_theta\":{:.17g},\"h1_vbar\":{:.17g},\"l2_dz_v\":{:.17g},\"l4_vtilde\":{:.17g},\"cross\":{:.17g},"
            "\"h2_v\":{:.17g},\"mr_running\":{:.17g}}}",
            e.t, k < tr.step_index.size() ? tr.step_index[k] : 0L, e.l2_v, e.l2_theta, e.grad_v, e.grad_theta,
            e.h1_vbar, e.l2_dz_v, e.l4_vtilde, e.cross, e.h2_v, e.mr_running);
        if (k < snapshots.size() && !snapshots[k].empty()) out << ",\"snapshot\":\"" << snapshots[k] << '"';
        out << "}\n";
    }
}

}  // namespace hydroldp
