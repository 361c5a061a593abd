#pragma once

#include <functional>
#include <string>
#include <vector>

namespace hydroldp {

struct LbfgsOptions {
    int max_iterations = 200;
    int memory = 8;
    double gtol = 1e-7;  // stop when |g| <= gtol * max(1, |g0|)
    double ftol = 1e-13;  // or when the relative decrease stalls
    double armijo = 1e-4;
    int max_backtracks = 40;
};

struct LbfgsResult {
    std::vector<double> x;
    double f = 0.0;
    double gnorm = 0.0;
    int iterations = 0;
    int evaluations = 0;
    bool converged = false;
    std::string reason;
};

// fg(x, grad) returns f(x) and writes its gradient.
using ObjectiveFn = std::function<double(const std::vector<double>&, std::vector<double>&)>;

// Limited-memory BFGS with Armijo backtracking.
LbfgsResult lbfgs_minimize(const ObjectiveFn& fg, std::vector<double> x0, const LbfgsOptions& opt = {});

}  // namespace hydroldp
