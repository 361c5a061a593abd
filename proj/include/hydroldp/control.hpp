#pragma once

#include <span>
#include <vector>

namespace hydroldp {

// Piecewise-constant control phi_{k,n} on the integrator grid, step-major.
struct ControlPath {
    double dt = 0.0;
    int steps = 0;
    int modes = 0;
    std::vector<double> values;

    static ControlPath zeros(int steps, int modes, double dt);

    double& at(int k, int n) { return values[static_cast<std::size_t>(k) * modes + n]; }
    double at(int k, int n) const { return values[static_cast<std::size_t>(k) * modes + n]; }
    std::span<const double> step(int k) const {
        return {values.data() + static_cast<std::size_t>(k) * modes, static_cast<std::size_t>(modes)};
    }
    // 1/2 int_0^T |phi|^2 dt
    double cost() const;
    double norm_l2() const;
};

}  // namespace hydroldp
