#pragma once

#include <vector>

#include "hydroldp/field.hpp"

namespace hydroldp {

// Depth-independent field on the horizontal torus; layout (c*nx + i)*ny + j.
class BarotropicField {
public:
    BarotropicField() = default;
    BarotropicField(const GridSpec& grid, int components);

    const GridSpec& grid() const { return grid_; }
    int components() const { return components_; }
    std::size_t plane_size() const { return grid_.columns(); }
    double& operator()(int c, int i, int j) { return data_[(static_cast<std::size_t>(c) * grid_.nx + i) * grid_.ny + j]; }
    double operator()(int c, int i, int j) const {
        return data_[(static_cast<std::size_t>(c) * grid_.nx + i) * grid_.ny + j];
    }
    std::span<double> values() { return data_; }
    std::span<const double> values() const { return data_; }
    double max_abs() const;

private:
    GridSpec grid_{};
    int components_ = 0;
    std::vector<double> data_;
};

BarotropicField vertical_average(const Field& f);
// Copies a barotropic field into every layer.
Field lift(const BarotropicField& b, BoundaryCondition bc = {});

// Gradient part of a 2D vector field: grad Psi with Lap Psi = div f and Psi of zero mean.
BarotropicField q_h(const BarotropicField& f);
// Divergence of a barotropic 2-vector (spectral, Nyquist-free symbol).
BarotropicField barotropic_divergence(const BarotropicField& f);
// Gradient of a barotropic scalar.
BarotropicField barotropic_gradient(const BarotropicField& f);

// P g = g - Q_H[vertical mean of g]; keeps g's boundary condition.
Field hydrostatic_project(const Field& g);
// Q g = Q_H[vertical mean of g], lifted to 3D.
Field hydrostatic_complement(const Field& g);

// w(v)(z) = -int_{-h}^{z} div_H v, evaluated at cell centres.
Field diagnostic_w(const Field& v);
// w at z = 0 for every column: -h * div_H(vertical mean of v).
BarotropicField surface_w(const Field& v);

// kappa(x, y, z) with a declared bound on sup_z ||kappa(., z)||_{L2(T^2)}.
struct KappaProfile {
    Field kappa;
    double bound = 0.0;

    static KappaProfile constant(const GridSpec& grid, double value);
    double layer_l2_max() const;
    void validate() const;
};

// grad_H int_{-h}^{z} kappa theta.
Field pressure_term(const KappaProfile& kappa, const Field& theta);
// Adjoint (Euclidean) of theta -> pressure_term(kappa, theta).
Field pressure_term_transpose(const KappaProfile& kappa, const Field& cotangent);

// Weak Robin form -int grad psi . grad theta - alpha int psi(.,0) theta(.,0). Vertical
// gradients live on faces plus extrapolated wall slopes; top traces come from quadratic extrapolation.
double robin_form(const Field& theta, const Field& psi, double alpha);

}  // namespace hydroldp
