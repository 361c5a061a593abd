#include "hydroldp/ldp.hpp"

#include <fmt/format.h>

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <exception>
#include <fstream>
#include <json.hpp>
#include <ostream>

#include "hydroldp/energy.hpp"
#include "hydroldp/errors.hpp"
#include "hydroldp/io.hpp"

namespace hydroldp {

const char* to_string(EventKind k) {
    return k == EventKind::ExceedDistance ? "exceed_distance" : "terminal_set_distance";
}

const char* to_string(EventNorm n) { return n == EventNorm::H ? "H" : "MR"; }

RateProblem::RateProblem(const Dynamics& d, const State& x0, double T, double dt, RareEvent event)
    : dyn_(&d), T_(T), dt_(dt), steps_(step_count(T, dt)), event_(std::move(event)) {
    if (!(event_.delta > 0.0)) throw InvalidArgument("event delta must be positive");
    if (event_.kind == EventKind::TerminalSetDistance && event_.norm != EventNorm::H)
        throw InvalidArgument("terminal-set events are measured in H at T");
    x0_ = x0;
    ref_ = forward(ControlPath::zeros(steps_, modes(), dt_));
    target_ = event_.target ? d.model().admissible(*event_.target) : ref_.final_state();
}

Trajectory RateProblem::forward(const ControlPath& phi) const {
    IntegratorConfig cfg;
    cfg.dt = dt_;
    cfg.mode = dyn_->mode();
    for (double v : phi.values)
        if (!std::isfinite(v)) throw InvalidArgument("control values must be finite");
    return integrate(*dyn_, Problem::Skeleton, x0_, T_, cfg, &phi);
}

double RateProblem::distance(const Trajectory& tr) const {
    if (event_.kind == EventKind::TerminalSetDistance) return std::sqrt(h_norm2(tr.final_state() - target_));
    if (event_.norm == EventNorm::MR) return mr_distance(tr, ref_);
    return std::sqrt(h_norm2(tr.final_state() - ref_.final_state()));
}

double RateProblem::residual(double d) const {
    return event_.kind == EventKind::TerminalSetDistance ? std::max(0.0, d - event_.delta)
                                                         : std::max(0.0, event_.delta - d);
}

std::vector<State> RateProblem::distance_gradient(const Trajectory& tr, double d) const {
    std::vector<State> g(tr.states.size());
    if (d == 0.0) return g;
    const std::size_t last = tr.states.size() - 1;
    auto add = [&](std::size_t k, State s, double w) {
        s *= w;
        if (g[k].v.empty())
            g[k] = std::move(s);
        else
            g[k] += s;
    };
    const double inv = 1.0 / (2.0 * d);
    if (event_.kind == EventKind::TerminalSetDistance) {
        add(last, h_norm2_gradient(tr.final_state() - target_), inv);
    } else if (event_.norm == EventNorm::H) {
        add(last, h_norm2_gradient(tr.final_state() - ref_.final_state()), inv);
    } else {
        std::size_t kmax = 0;
        double hmax = -1.0;
        for (std::size_t k = 0; k <= last; ++k) {
            const double h = h_norm2(tr.states[k] - ref_.states[k]);
            if (h > hmax) {
                hmax = h;
                kmax = k;
            }
        }
        add(kmax, h_norm2_gradient(tr.states[kmax] - ref_.states[kmax]), inv);
        for (std::size_t k = 1; k <= last; ++k)
            add(k, v_norm2_gradient(tr.states[k] - ref_.states[k]), inv * (tr.times[k] - tr.times[k - 1]));
    }
    return g;
}

RateProblem::Evaluation RateProblem::evaluate(const ControlPath& phi, double mu, bool with_gradient) const {
    if (phi.steps != steps_ || phi.modes != modes()) throw InvalidArgument("control shape does not match the problem");
    Evaluation e;
    const Trajectory tr = forward(phi);
    e.distance = distance(tr);
    e.residual = residual(e.distance);
    e.cost = phi.cost();
    e.J = e.cost + 0.5 * mu * e.residual * e.residual;
    if (!with_gradient) return e;

    e.grad = phi;
    for (auto& v : e.grad.values) v *= dt_;
    const double dJdd = mu * e.residual * (event_.kind == EventKind::TerminalSetDistance ? 1.0 : -1.0);
    if (dJdd == 0.0) return e;
    std::vector<State> dR = distance_gradient(tr, e.distance);
    for (auto& s : dR)
        if (!s.v.empty()) s *= dJdd;

    const Model& m = dyn_->model();
    State lambda = dR[steps_].v.empty() ? m.zero_state() : dR[steps_];
    for (int k = steps_ - 1; k >= 0; --k) {
        const State& x = tr.states[k];
        State mu_k = dyn_->solve_implicit(lambda, dt_);
        for (int n = 0; n < modes(); ++n) e.grad.at(k, n) += dt_ * dot(dyn_->diffusion(x, n), mu_k);
        State next = mu_k;
        next.axpy(dt_, dyn_->drift_vjp(x, mu_k));
        for (int n = 0; n < modes(); ++n) {
            const double c = dt_ * phi.at(k, n);
            if (c != 0.0) next.axpy(c, dyn_->diffusion_vjp(x, n, mu_k));
        }
        if (!dR[k].v.empty()) next += dR[k];
        lambda = std::move(next);
    }
    return e;
}

RateResult minimize_rate(const RateProblem& p, const RateOptions& opt, const ControlPath* initial) {
    RateResult r;
    ControlPath x = initial ? *initial : ControlPath::zeros(p.steps(), p.modes(), p.dt());
    if (x.steps != p.steps() || x.modes != p.modes()) throw InvalidArgument("initial control has the wrong shape");
    x.dt = p.dt();

    auto start = p.evaluate(x, opt.mu0, false);
    std::optional<ControlPath> best;
    double best_cost = std::numeric_limits<double>::infinity();
    double best_dist = start.distance;
    if (start.residual <= opt.residual_tol) {
        best = x;
        best_cost = start.cost;
    }
    if (p.event().kind == EventKind::ExceedDistance && start.distance == 0.0 && p.modes() > 0) {
        // The distance is not differentiable at the reference path; leave it along a fixed direction.
        NoiseStream ns(opt.seed, 0);
        for (int k = 0; k < x.steps; ++k)
            for (int n = 0; n < x.modes; ++n) x.at(k, n) += 1e-3 * ns.normal(k, n);
    }

    double mu = opt.mu0;
    bool feasible = false;
    for (int outer = 0; outer < opt.max_outer; ++outer) {
        ObjectiveFn fg = [&](const std::vector<double>& v, std::vector<double>& g) {
            ControlPath c = x;
            c.values = v;
            auto ev = p.evaluate(c, mu, true);
            g = ev.grad.values;
            return ev.J;
        };
        LbfgsResult lr = lbfgs_minimize(fg, x.values, opt.inner);
        x.values = lr.x;
        auto ev = p.evaluate(x, mu, false);
        r.trace.push_back({outer, lr.iterations, mu, ev.J, ev.cost, ev.distance, ev.residual, lr.gnorm});
        r.distance = ev.distance;
        r.residual = ev.residual;
        if (ev.residual <= opt.residual_tol) {
            feasible = true;
            if (ev.cost < best_cost) {
                best = x;
                best_cost = ev.cost;
                best_dist = ev.distance;
            }
            break;
        }
        mu *= opt.mu_factor;
    }
    if (best) {
        r.phi = *best;
        r.I = best_cost;
        r.distance = best_dist;
        r.residual = p.residual(best_dist);
        r.converged = true;
        r.message = feasible ? "residual within tolerance" : "initial control already feasible";
    } else {
        r.phi = x;
        r.I = x.cost();
        r.converged = false;
        r.message = fmt::format("residual {:.3g} above tolerance {:.3g} after {} penalty rounds", r.residual,
                                opt.residual_tol, opt.max_outer);
    }
    return r;
}

std::pair<double, double> wilson_interval(int hits, int n, double z) {
    if (n <= 0) return {0.0, 1.0};
    const double p = static_cast<double>(hits) / n;
    const double z2 = z * z;
    const double den = 1.0 + z2 / n;
    const double centre = (p + z2 / (2.0 * n)) / den;
    const double half = z * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n)) / den;
    return {hits == 0 ? 0.0 : std::max(0.0, centre - half), hits == n ? 1.0 : std::min(1.0, centre + half)};
}

double girsanov_log_weight(const ControlPath& phi, const NoiseStream& ns, double eps) {
    const double sq = std::sqrt(phi.dt / eps);
    double lw = 0.0;
    for (int k = 0; k < phi.steps; ++k)
        for (int n = 0; n < phi.modes; ++n) {
            const double f = phi.at(k, n);
            if (f == 0.0) continue;
            lw -= f * ns.normal(static_cast<std::uint64_t>(k), static_cast<std::uint32_t>(n)) * sq;
            lw -= f * f * phi.dt / (2.0 * eps);
        }
    return lw;
}

LdpReport mc_small_noise(const RateProblem& p, const McOptions& opt, double rate_value) {
    if (opt.samples < 1) throw InvalidArgument("n_samples must be at least 1");
    for (double e : opt.eps)
        if (!(e > 0.0)) throw InvalidArgument("eps values must be positive");
    LdpReport rep;
    rep.rate_value = rate_value;
    const bool path_norm = p.event().kind == EventKind::ExceedDistance && p.event().norm == EventNorm::MR;
    IntegratorConfig base;
    base.dt = p.dt();
    base.mode = p.dynamics().mode();
    base.save_every = path_norm ? 1 : p.steps();
    base.control_budget = opt.control_budget;

    for (std::size_t ei = 0; ei < opt.eps.size(); ++ei) {
        const double eps = opt.eps[ei];
        IntegratorConfig cfg = base;
        cfg.eps = eps;
        std::vector<double> value(opt.samples, 0.0);
        std::vector<char> hit(opt.samples, 0);
        std::exception_ptr err;
#pragma omp parallel for schedule(dynamic)
        for (int s = 0; s < opt.samples; ++s) {
            try {
                const NoiseStream ns(opt.seed, (static_cast<std::uint64_t>(ei) << 32) | static_cast<std::uint32_t>(s));
                Trajectory tr = opt.tilt ? integrate(p.dynamics(), Problem::Tilted, p.initial(), p.T(), cfg, opt.tilt, &ns)
                                         : integrate(p.dynamics(), Problem::Spde, p.initial(), p.T(), cfg, nullptr, &ns);
                if (path_norm && tr.states.size() != p.reference().states.size())
                    throw SolverError("sample path saved at unexpected times");
                if (p.occurs(tr)) {
                    hit[s] = 1;
                    value[s] = opt.tilt ? std::exp(girsanov_log_weight(*opt.tilt, ns, eps)) : 1.0;
                }
            } catch (...) {
#pragma omp critical(hydroldp_mc_error)
                if (!err) err = std::current_exception();
            }
        }
        if (err) std::rethrow_exception(err);

        McRow row;
        row.eps = eps;
        row.samples = opt.samples;
        row.tilted = opt.tilt != nullptr;
        const int n = opt.samples;
        for (int s = 0; s < n; ++s) row.hits += hit[s];
        double mean = 0.0;
        for (double v : value) mean += v;
        mean /= n;
        if (row.tilted) {
            double var = 0.0;
            for (double v : value) var += (v - mean) * (v - mean);
            var = n > 1 ? var / (n - 1) : 0.0;
            row.p_hat = mean;
            row.weight_variance = var;
            row.std_err = std::sqrt(var / n);
            row.ci_lo = std::max(0.0, mean - 1.959963984540054 * row.std_err);
            row.ci_hi = std::min(1.0, mean + 1.959963984540054 * row.std_err);
        } else {
            row.p_hat = mean;
            row.weight_variance = mean * (1.0 - mean);
            row.std_err = std::sqrt(row.weight_variance / n);
            std::tie(row.ci_lo, row.ci_hi) = wilson_interval(row.hits, n);
            if (row.hits == 0) {
                row.ci_lo = 0.0;
                row.use_tilt = true;
            }
        }
        if (row.p_hat > 0.0) {
            row.eps_log_p = eps * std::log(row.p_hat);
            row.eps_log_p_se = eps * row.std_err / row.p_hat;
        } else {
            row.eps_log_p = -std::numeric_limits<double>::infinity();
            row.eps_log_p_se = std::numeric_limits<double>::infinity();
        }
        rep.rows.push_back(row);
    }
    rep.trend = fit_trend(rep.rows);
    if (rep.trend.ok && std::isfinite(rate_value)) {
        const double se = std::hypot(rep.trend.intercept_se, rep.rate_se);
        rep.is_consistent = std::abs(rep.trend.intercept + rate_value) <= 3.0 * se;
    }
    rep.monotone = monotone_within_ci(rep.rows);
    return rep;
}

TrendFit fit_trend(const std::vector<McRow>& rows) {
    TrendFit t;
    std::vector<const McRow*> use;
    for (const auto& r : rows)
        if (std::isfinite(r.eps_log_p) && r.eps_log_p_se > 0.0 && std::isfinite(r.eps_log_p_se)) use.push_back(&r);
    if (use.size() < 3) return t;
    Eigen::MatrixXd X(use.size(), 3);
    Eigen::VectorXd y(use.size()), w(use.size());
    for (std::size_t i = 0; i < use.size(); ++i) {
        const double e = use[i]->eps;
        X(i, 0) = 1.0;
        X(i, 1) = e;
        X(i, 2) = e * std::log(e);
        y(i) = use[i]->eps_log_p;
        w(i) = 1.0 / (use[i]->eps_log_p_se * use[i]->eps_log_p_se);
    }
    const Eigen::MatrixXd A = X.transpose() * w.asDiagonal() * X;
    const Eigen::VectorXd b = X.transpose() * w.asDiagonal() * y;
    Eigen::FullPivLU<Eigen::MatrixXd> lu(A);
    if (!lu.isInvertible()) return t;
    const Eigen::VectorXd beta = lu.solve(b);
    const Eigen::MatrixXd cov = lu.inverse();
    t.ok = true;
    t.intercept = beta(0);
    t.c1 = beta(1);
    t.c2 = beta(2);
    t.intercept_se = std::sqrt(std::max(0.0, cov(0, 0)));
    return t;
}

bool monotone_within_ci(const std::vector<McRow>& rows) {
    std::vector<McRow> r = rows;
    std::sort(r.begin(), r.end(), [](const McRow& a, const McRow& b) { return a.eps < b.eps; });
    if (r.size() < 2) return true;
    for (const auto& x : r)
        if (!std::isfinite(x.eps_log_p)) return false;
    const double dir = r.back().eps_log_p >= r.front().eps_log_p ? 1.0 : -1.0;
    auto lo = [](const McRow& x) { return x.ci_lo > 0.0 ? x.eps * std::log(x.ci_lo) : -std::numeric_limits<double>::infinity(); };
    auto hi = [](const McRow& x) { return x.eps * std::log(x.ci_hi); };
    for (std::size_t i = 0; i + 1 < r.size(); ++i) {
        if ((r[i + 1].eps_log_p - r[i].eps_log_p) * dir >= 0.0) continue;
        const bool overlap = lo(r[i]) <= hi(r[i + 1]) && lo(r[i + 1]) <= hi(r[i]);
        if (!overlap) return false;
    }
    return true;
}

namespace {

std::string jnum(double v) { return std::isfinite(v) ? fmt_double(v) : "null"; }

}  // namespace

void write_ldp_report(std::ostream& out, const LdpReport& r, const std::string& hash) {
    out << fmt::format(
        "{{\"config_hash\":\"{}\",\"rate_value\":{},\"trend\":{{\"ok\":{},\"intercept\":{},\"intercept_se\":{},"
        "\"c1\":{},\"c2\":{}}},\"is_consistent\":{},\"monotone\":{}}}\n",
        hash, jnum(r.rate_value), r.trend.ok, jnum(r.trend.intercept), jnum(r.trend.intercept_se), jnum(r.trend.c1),
        jnum(r.trend.c2), r.is_consistent, r.monotone);
    for (const auto& x : r.rows)
        out << fmt::format(
            "{{\"eps\":{},\"samples\":{},\"hits\":{},\"tilted\":{},\"p_hat\":{},\"std_err\":{},\"ci95\":[{},{}],"
            "\"eps_log_p\":{},\"eps_log_p_se\":{},\"weight_variance\":{},\"flag\":{}}}\n",
            jnum(x.eps), x.samples, x.hits, x.tilted, jnum(x.p_hat), jnum(x.std_err), jnum(x.ci_lo), jnum(x.ci_hi),
            jnum(x.eps_log_p), jnum(x.eps_log_p_se), jnum(x.weight_variance), x.use_tilt ? "\"use tilt\"" : "null");
}

std::vector<double> isotonic_fit(const std::vector<double>& y) {
    struct Block {
        double sum;
        int count;
    };
    std::vector<Block> blocks;
    for (double v : y) {
        blocks.push_back({v, 1});
        while (blocks.size() > 1) {
            const Block& a = blocks[blocks.size() - 2];
            const Block& b = blocks.back();
            if (a.sum / a.count <= b.sum / b.count) break;
            Block merged{a.sum + b.sum, a.count + b.count};
            blocks.pop_back();
            blocks.back() = merged;
        }
    }
    std::vector<double> out;
    for (const auto& b : blocks) out.insert(out.end(), b.count, b.sum / b.count);
    return out;
}

AprioriReport skeleton_apriori_check(const RateProblem& p, const std::vector<ControlPath>& controls) {
    AprioriReport rep;
    for (const auto& c : controls) {
        AprioriRow row;
        row.control_norm = c.norm_l2();
        row.cost = c.cost();
        try {
            row.mr = mr_norm(p.forward(c));
            row.finite = std::isfinite(row.mr);
        } catch (const BlowupDetected&) {
            row.mr = std::numeric_limits<double>::infinity();
            row.finite = false;
        }
        rep.rows.push_back(row);
    }
    std::stable_sort(rep.rows.begin(), rep.rows.end(),
                     [](const AprioriRow& a, const AprioriRow& b) { return a.control_norm < b.control_norm; });
    rep.all_finite = std::all_of(rep.rows.begin(), rep.rows.end(), [](const AprioriRow& r) { return r.finite; });
    if (!rep.all_finite || rep.rows.empty()) return rep;
    std::vector<double> y;
    for (const auto& r : rep.rows) y.push_back(r.mr);
    rep.envelope = isotonic_fit(y);
    double mx = 0.0, my = 0.0;
    const double n = static_cast<double>(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) {
        rep.max_residual = std::max(rep.max_residual, std::abs(y[i] - rep.envelope[i]));
        mx += rep.rows[i].control_norm / n;
        my += rep.envelope[i] / n;
    }
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        const double dx = rep.rows[i].control_norm - mx;
        sxy += dx * (rep.envelope[i] - my);
        sxx += dx * dx;
    }
    rep.slope = sxx > 0.0 ? sxy / sxx : 0.0;
    return rep;
}

namespace {

Model ou_model(const GridSpec& g, double sigma) {
    Model m;
    m.grid = g;
    m.noise = NoiseFamily::zero(g, 1);
    m.forcing.noise.resize(1);
    m.forcing.noise[0].offset_v =
        Field::sample(g, 2, {}, [&](int c, double x, double, double) { return c == 1 ? sigma * std::cos(x) : 0.0; });
    return m;
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

}  // namespace

OuReduction::OuReduction(const GridSpec& grid, double T, double dt, double sigma)
    : model_(ou_model(grid, sigma)), dyn_(model_, NoiseMode::Ito), T_(T), dt_(dt), sigma_(sigma) {
    step_count(T, dt);
}

State OuReduction::mode_state(double amplitude) const {
    State s = model_.zero_state();
    s.v = Field::sample(model_.grid, 2, model_.velocity_bc(),
                        [&](int c, double x, double, double) { return c == 1 ? amplitude * std::cos(x) : 0.0; });
    return s;
}

double OuReduction::amplitude(const State& s) const {
    const State unit = mode_state(1.0);
    return dot(s.v, unit.v) / dot(unit.v, unit.v);
}

double OuReduction::unit_norm() const { return std::sqrt(h_norm2(mode_state(1.0))); }

double OuReduction::variance_factor() const {
    const int N = step_count(T_, dt_);
    const double r = 1.0 / (1.0 + dt_);
    double s = 0.0;
    for (int j = 1; j <= N; ++j) s += std::pow(r, 2 * j);
    return sigma_ * sigma_ * dt_ * s;
}

double OuReduction::band_probability(double eps, double centre, double half_width) const {
    const double sd = std::sqrt(eps * variance_factor());
    return normal_cdf((centre + half_width) / sd) - normal_cdf((centre - half_width) / sd);
}

double OuReduction::band_rate(double centre, double half_width) const {
    const double a = std::max(0.0, centre - half_width);
    return a * a / (2.0 * variance_factor());
}

RareEvent OuReduction::band_event(double centre, double half_width) const {
    RareEvent e;
    e.kind = EventKind::TerminalSetDistance;
    e.norm = EventNorm::H;
    e.delta = half_width * unit_norm();
    e.target = mode_state(centre);
    return e;
}

RareEvent OuReduction::exceed_event(double b) const {
    RareEvent e;
    e.kind = EventKind::ExceedDistance;
    e.norm = EventNorm::H;
    e.delta = b * unit_norm();
    return e;
}

void write_control_json(std::ostream& out, const ControlPath& phi, const std::string& hash, double I) {
    out << fmt::format("{{\"config_hash\":\"{}\",\"dt\":{},\"steps\":{},\"modes\":{},\"I\":{},\"values\":[", hash,
                       fmt_double(phi.dt), phi.steps, phi.modes, jnum(I));
    for (int k = 0; k < phi.steps; ++k) {
        out << (k ? ",[" : "[");
        for (int n = 0; n < phi.modes; ++n) out << (n ? "," : "") << fmt_double(phi.at(k, n));
        out << ']';
    }
    out << "]}\n";
}

ControlPath read_control_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open control file " + path);
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
        ControlPath c;
        c.dt = j.at("dt").get<double>();
        c.steps = j.at("steps").get<int>();
        c.modes = j.at("modes").get<int>();
        const auto& rows = j.at("values");
        if (!(c.dt > 0.0) || c.steps < 0 || c.modes < 0 || static_cast<int>(rows.size()) != c.steps)
            throw IoError("control file " + path + " has inconsistent shape");
        for (const auto& row : rows) {
            if (static_cast<int>(row.size()) != c.modes) throw IoError("control file " + path + " has a ragged row");
            for (const auto& v : row) c.values.push_back(v.get<double>());
        }
        return c;
    } catch (const nlohmann::json::exception& e) {
        throw IoError("control file " + path + ": " + e.what());
    }
}

}  // namespace hydroldp
