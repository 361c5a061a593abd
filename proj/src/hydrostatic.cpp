#include "hydroldp/hydrostatic.hpp"

#include <cmath>

#include "hydroldp/errors.hpp"
#include "hydroldp/kernels.hpp"
#include "hydroldp/spectral.hpp"
#include "hydroldp/vertical.hpp"

namespace hydroldp {

BarotropicField::BarotropicField(const GridSpec& grid, int components)
    : grid_(grid), components_(components), data_(static_cast<std::size_t>(components) * grid.columns(), 0.0) {}

double BarotropicField::max_abs() const {
    double m = 0.0;
    for (double v : data_) m = std::max(m, std::abs(v));
    return m;
}

BarotropicField vertical_average(const Field& f) {
    BarotropicField out(f.grid(), f.components());
    kernels::omp::column_mean(f.values(), out.values(),
                              {static_cast<std::size_t>(f.components()) * f.grid().columns(), f.grid().nz});
    return out;
}

Field lift(const BarotropicField& b, BoundaryCondition bc) {
    Field out(b.grid(), b.components(), bc);
    const int nz = b.grid().nz;
    auto src = b.values();
    auto dst = out.values();
    for (std::size_t c = 0; c < src.size(); ++c)
        for (int k = 0; k < nz; ++k) dst[c * nz + k] = src[c];
    return out;
}

namespace {

template <class Symbol>
BarotropicField plane_symbol(const BarotropicField& f, int out_components, Symbol&& sym) {
    const GridSpec& g = f.grid();
    SpectrumView s(g, f.components(), 1);
    fft_forward(f.values(), s.values(), g, f.components(), 1);
    SpectrumView o(g, out_components, 1);
    for (int ix = 0; ix < g.nx; ++ix)
        for (int iy = 0; iy < g.nky(); ++iy) sym(s, o, ix, iy);
    BarotropicField out(g, out_components);
    fft_inverse(o.values(), out.values(), g, out_components, 1);
    return out;
}

}  // namespace

BarotropicField q_h(const BarotropicField& f) {
    if (f.components() != 2) throw InvalidField("q_h: expected a 2-component field");
    return plane_symbol(f, 2, [](const SpectrumView& s, SpectrumView& o, int ix, int iy) {
        const double kx = s.dkx(ix);
        const double ky = s.dky(iy);
        const double k2 = kx * kx + ky * ky;
        if (k2 == 0.0) return;
        const cplx proj = (kx * s.at(0, ix, iy, 0) + ky * s.at(1, ix, iy, 0)) / k2;
        o.at(0, ix, iy, 0) = kx * proj;
        o.at(1, ix, iy, 0) = ky * proj;
    });
}

BarotropicField barotropic_divergence(const BarotropicField& f) {
    if (f.components() != 2) throw InvalidField("barotropic_divergence: expected a 2-component field");
    return plane_symbol(f, 1, [](const SpectrumView& s, SpectrumView& o, int ix, int iy) {
        o.at(0, ix, iy, 0) = cplx(0.0, s.dkx(ix)) * s.at(0, ix, iy, 0) + cplx(0.0, s.dky(iy)) * s.at(1, ix, iy, 0);
    });
}

BarotropicField barotropic_gradient(const BarotropicField& f) {
    if (f.components() != 1) throw InvalidField("barotropic_gradient: expected a scalar field");
    return plane_symbol(f, 2, [](const SpectrumView& s, SpectrumView& o, int ix, int iy) {
        o.at(0, ix, iy, 0) = cplx(0.0, s.dkx(ix)) * s.at(0, ix, iy, 0);
        o.at(1, ix, iy, 0) = cplx(0.0, s.dky(iy)) * s.at(0, ix, iy, 0);
    });
}

Field hydrostatic_complement(const Field& g) {
    if (g.components() != 2) throw InvalidField("hydrostatic projection needs a 2-component field");
    return lift(q_h(vertical_average(g)));
}

Field hydrostatic_project(const Field& g) {
    Field out = g;
    out -= hydrostatic_complement(g);
    out.set_bc(g.bc());
    return out;
}

Field diagnostic_w(const Field& v) {
    Field w = cumulative_integral(horizontal_divergence(v));
    w *= -1.0;
    return w;
}

BarotropicField surface_w(const Field& v) {
    BarotropicField d = barotropic_divergence(vertical_average(v));
    for (double& x : d.values()) x *= -v.grid().h;
    return d;
}

KappaProfile KappaProfile::constant(const GridSpec& grid, double value) {
    KappaProfile p;
    p.kappa = Field(grid, 1);
    p.kappa.fill(value);
    p.bound = std::abs(value) * std::sqrt(grid.area());
    return p;
}

double KappaProfile::layer_l2_max() const {
    const GridSpec& g = kappa.grid();
    double worst = 0.0;
    for (int k = 0; k < g.nz; ++k) {
        double s = 0.0;
        for (int i = 0; i < g.nx; ++i)
            for (int j = 0; j < g.ny; ++j) s += kappa(0, i, j, k) * kappa(0, i, j, k);
        worst = std::max(worst, std::sqrt(s * g.dx() * g.dy()));
    }
    return worst;
}

void KappaProfile::validate() const {
    if (kappa.empty() || kappa.components() != 1) throw InvalidField("kappa must be a scalar field");
    if (!kappa.all_finite()) throw InvalidField("kappa is not finite");
    if (layer_l2_max() > bound * (1.0 + 1e-12)) throw InvalidField("kappa exceeds its declared bound");
}

Field pressure_term(const KappaProfile& kappa, const Field& theta) {
    if (theta.components() != 1) throw InvalidField("pressure_term: theta must be scalar");
    return horizontal_gradient(cumulative_integral(multiply(theta, kappa.kappa)));
}

Field pressure_term_transpose(const KappaProfile& kappa, const Field& cot) {
    // grad^T = -div for the skew spectral derivative.
    Field d = horizontal_divergence(cot);
    d *= -1.0;
    return multiply(cumulative_integral_transpose(d), kappa.kappa);
}

double robin_form(const Field& theta, const Field& psi, double alpha) {
    require_same_shape(theta, psi, "robin_form");
    if (theta.components() != 1) throw InvalidField("robin_form: scalar fields expected");
    const GridSpec& g = theta.grid();
    const double horiz = inner_l2(horizontal_gradient(theta), horizontal_gradient(psi));
    const int nz = g.nz;
    double vert = 0.0;
    auto t = theta.values();
    auto p = psi.values();
    for (std::size_t c = 0; c < g.columns(); ++c) {
        const double* tc = t.data() + c * nz;
        const double* pc = p.data() + c * nz;
        for (int kk = 0; kk + 1 < nz; ++kk) vert += (tc[kk + 1] - tc[kk]) * (pc[kk + 1] - pc[kk]);
        // Boundary half cells: trapezoid between the extrapolated wall slope and the first face.
        auto jump = [](const double* f, int k) { return f[k + 1] - f[k]; };
        const double tb = 2.0 * jump(tc, 0) - jump(tc, 1), pb = 2.0 * jump(pc, 0) - jump(pc, 1);
        const double tt = 2.0 * jump(tc, nz - 2) - jump(tc, nz - 3), pt = 2.0 * jump(pc, nz - 2) - jump(pc, nz - 3);
        vert += 0.25 * (1.5 * tb * pb + 0.5 * jump(tc, 0) * jump(pc, 0));
        vert += 0.25 * (1.5 * tt * pt + 0.5 * jump(tc, nz - 2) * jump(pc, nz - 2));
    }
    const double cell_area = g.dx() * g.dy();
    vert *= cell_area / g.dz();
    const auto tt = extrapolated_trace(theta, true);
    const auto pt = extrapolated_trace(psi, true);
    double trace = 0.0;
    for (std::size_t c = 0; c < tt.size(); ++c) trace += tt[c] * pt[c];
    trace *= cell_area * alpha;
    return -horiz - vert - trace;
}

}  // namespace hydroldp
