#pragma once

#include <array>
#include <vector>

#include "hydroldp/field.hpp"

namespace hydroldp {

// F_v = xi + A v + b theta + sum_{k,j} C[i][k][j] d_k v_j   (i = output component)
struct VelocityForcing {
    Field xi;  // 2 components or empty
    std::array<std::array<double, 2>, 2> A{};
    std::array<double, 2> b{};
    std::array<std::array<std::array<double, 2>, 3>, 2> C{};
};

// F_theta = xi + a . v + b theta + sum_{k,j} c[k][j] d_k v_j
struct TemperatureForcing {
    Field xi;  // 1 component or empty
    std::array<double, 2> a{};
    double b = 0.0;
    std::array<std::array<double, 2>, 3> c{};
};

// G_{v,n} = offset_v + Gv v,  G_{theta,n} = offset_theta + gv . v + gt theta
struct NoiseForcing {
    Field offset_v;
    std::array<std::array<double, 2>, 2> Gv{};
    Field offset_theta;
    std::array<double, 2> gv{};
    double gt = 0.0;
};

struct ForcingSpec {
    VelocityForcing v;
    TemperatureForcing theta;
    std::vector<NoiseForcing> noise;  // empty, or one entry per noise mode

    // Growth and Lipschitz constants of the affine maps, compared against `bound`.
    double growth_constant() const;
    bool bounds_ok(double bound) const { return growth_constant() <= bound; }
    bool has_gradient_terms() const;
};

}  // namespace hydroldp
