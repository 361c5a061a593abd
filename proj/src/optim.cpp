#include "hydroldp/optim.hpp"

#include <cmath>
#include <deque>
#include <numeric>

namespace hydroldp {

namespace {

double dotv(const std::vector<double>& a, const std::vector<double>& b) {
    return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
}

}  // namespace

LbfgsResult lbfgs_minimize(const ObjectiveFn& fg, std::vector<double> x0, const LbfgsOptions& opt) {
    LbfgsResult r;
    const std::size_t n = x0.size();
    std::vector<double> x = std::move(x0), g(n), xn(n), gn(n), d(n);
    double f = fg(x, g);
    r.evaluations = 1;
    const double g0 = std::sqrt(dotv(g, g));
    const double gstop = opt.gtol * std::max(1.0, g0);
    std::deque<std::vector<double>> S, Y;
    std::deque<double> rho;

    for (int it = 0; it < opt.max_iterations; ++it) {
        const double gnorm = std::sqrt(dotv(g, g));
        if (!(gnorm > gstop)) {
            r.converged = true;
            r.reason = "gradient tolerance";
            break;
        }
        // Two-loop recursion.
        d = g;
        std::vector<double> alpha(S.size());
        for (int j = static_cast<int>(S.size()) - 1; j >= 0; --j) {
            alpha[j] = rho[j] * dotv(S[j], d);
            for (std::size_t q = 0; q < n; ++q) d[q] -= alpha[j] * Y[j][q];
        }
        if (!S.empty()) {
            const double gamma = dotv(S.back(), Y.back()) / dotv(Y.back(), Y.back());
            for (auto& v : d) v *= gamma;
        }
        for (std::size_t j = 0; j < S.size(); ++j) {
            const double beta = rho[j] * dotv(Y[j], d);
            for (std::size_t q = 0; q < n; ++q) d[q] += S[j][q] * (alpha[j] - beta);
        }
        for (auto& v : d) v = -v;
        double slope = dotv(g, d);
        if (!(slope < 0.0)) {
            // Lost descent; restart from steepest descent.
            S.clear();
            Y.clear();
            rho.clear();
            for (std::size_t q = 0; q < n; ++q) d[q] = -g[q];
            slope = -gnorm * gnorm;
        }
        double step = S.empty() ? std::min(1.0, 1.0 / gnorm) : 1.0;
        bool accepted = false;
        double fn = f;
        for (int b = 0; b < opt.max_backtracks; ++b) {
            for (std::size_t q = 0; q < n; ++q) xn[q] = x[q] + step * d[q];
            fn = fg(xn, gn);
            ++r.evaluations;
            if (std::isfinite(fn) && fn <= f + opt.armijo * step * slope) {
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        r.iterations = it + 1;
        if (!accepted) {
            r.reason = "line search failed";
            // A stalled line search at a tiny gradient is as good as it gets.
            r.converged = gnorm <= 1e3 * gstop;
            break;
        }
        std::vector<double> s(n), y(n);
        for (std::size_t q = 0; q < n; ++q) {
            s[q] = xn[q] - x[q];
            y[q] = gn[q] - g[q];
        }
        const double sy = dotv(s, y);
        if (sy > 1e-16 * std::sqrt(dotv(s, s) * dotv(y, y))) {
            S.push_back(std::move(s));
            Y.push_back(std::move(y));
            rho.push_back(1.0 / sy);
            if (static_cast<int>(S.size()) > opt.memory) {
                S.pop_front();
                Y.pop_front();
                rho.pop_front();
            }
        }
        const double decrease = f - fn;
        x.swap(xn);
        g.swap(gn);
        f = fn;
        if (decrease <= opt.ftol * std::max(1.0, std::abs(f))) {
            r.converged = true;
            r.reason = "function tolerance";
            break;
        }
    }
    if (r.reason.empty()) r.reason = "iteration limit";
    r.x = std::move(x);
    r.f = f;
    r.gnorm = std::sqrt(dotv(g, g));
    return r;
}

}  // namespace hydroldp
