#include "hydroldp/noise.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

#include "hydroldp/errors.hpp"
#include "hydroldp/hydrostatic.hpp"
#include "hydroldp/io.hpp"
#include "hydroldp/spectral.hpp"
#include "hydroldp/vertical.hpp"

namespace hydroldp {

const char* to_string(NoiseMode m) { return m == NoiseMode::Ito ? "ito" : "stratonovich"; }

void NoiseFamily::validate_shapes() const {
    if (phi.size() != psi.size()) throw InvalidField("noise family: phi and psi counts differ");
    if (!gamma.empty() && gamma.size() != phi.size()) throw InvalidField("noise family: gamma count differs");
    for (const auto& f : phi)
        if (f.grid() != grid || f.components() != 3) throw InvalidField("noise family: bad phi field");
    for (const auto& f : psi)
        if (f.grid() != grid || f.components() != 3) throw InvalidField("noise family: bad psi field");
    for (const auto& f : gamma)
        if (f.grid() != grid || f.components() != 4) throw InvalidField("noise family: bad gamma field");
}

NoiseFamily NoiseFamily::scaled(double factor) const {
    NoiseFamily out = *this;
    for (auto& f : out.phi) f *= factor;
    for (auto& f : out.psi) f *= factor;
    out.nu = nu * factor * factor;
    out.M = M * std::abs(factor);
    return out;
}

NoiseFamily NoiseFamily::zero(const GridSpec& grid, int n, NoiseMode mode) {
    NoiseFamily f;
    f.grid = grid;
    f.mode = mode;
    for (int i = 0; i < n; ++i) {
        f.phi.emplace_back(grid, 3);
        f.psi.emplace_back(grid, 3);
    }
    f.psi_divergence_free = true;
    f.M = 1.0;
    return f;
}

namespace {

std::vector<std::array<int, 2>> wavevector_list(int count) {
    std::vector<std::array<int, 2>> all;
    for (int p = 1; p <= 16; ++p)
        for (int q = 0; q <= 16; ++q) all.push_back({p, q});
    std::stable_sort(all.begin(), all.end(), [](const auto& a, const auto& b) {
        const int na = a[0] * a[0] + a[1] * a[1];
        const int nb = b[0] * b[0] + b[1] * b[1];
        return na != nb ? na < nb : a[0] < b[0];
    });
    all.resize(count);
    return all;
}

// Largest eigenvalue of a symmetric 3x3 matrix (trigonometric method).
double max_eig3(const std::array<double, 6>& m) {
    const double a = m[0], b = m[1], c = m[2], d = m[3], e = m[4], f = m[5];  // xx xy xz yy yz zz
    const double p1 = b * b + c * c + e * e;
    if (p1 < 1e-300) return std::max({a, d, f});
    const double q = (a + d + f) / 3.0;
    const double p2 = (a - q) * (a - q) + (d - q) * (d - q) + (f - q) * (f - q) + 2.0 * p1;
    const double p = std::sqrt(p2 / 6.0);
    const double b00 = (a - q) / p, b01 = b / p, b02 = c / p, b11 = (d - q) / p, b12 = e / p, b22 = (f - q) / p;
    const double det = b00 * (b11 * b22 - b12 * b12) - b01 * (b01 * b22 - b12 * b02) + b02 * (b01 * b12 - b11 * b02);
    const double r = std::clamp(det / 2.0, -1.0, 1.0);
    return q + 2.0 * p * std::cos(std::acos(r) / 3.0);
}

// Vertical profile vanishing at both ends; quadratic so trace extrapolation is exact.
double bump(double z, double h) { return -4.0 * z * (z + h) / (h * h); }
double bump_dz(double z, double h) { return -4.0 * (2.0 * z + h) / (h * h); }

}  // namespace

KraichnanMode kraichnan_mode(int n) {
    if (n < 2) return {0, n == 0 ? 1 : 0, n == 1 ? 1 : 0, false};
    const int shell = 1 + (n - 2) / 4;
    const int r = (n - 2) % 4;
    const auto base = wavevector_list(shell).back();
    KraichnanMode m{shell, base[0], base[1], r % 2 == 1};
    if (r >= 2) {
        m.p = -base[1];
        m.q = base[0];
    }
    return m;
}

NoiseFamily build_kraichnan_unchecked(const KraichnanParams& kp, const GridSpec& grid) {
    grid.validate();
    if (kp.modes < 1) throw InvalidField("Kraichnan family needs at least one mode");
    NoiseFamily fam;
    fam.grid = grid;
    fam.mode = kp.mode;
    fam.delta = kp.delta;
    fam.psi_divergence_free = true;
    const double h = grid.h;
    for (int n = 0; n < kp.modes; ++n) {
        const KraichnanMode md = kraichnan_mode(n);
        Field phi(grid, 3), psi(grid, 3), gam(grid, 4);
        const double a = kp.sigma * std::pow(md.shell + 1.0, -kp.s);
        if (md.shell == 0) {
            std::fill(phi.component(n).begin(), phi.component(n).end(), a);
            std::fill(psi.component(n).begin(), psi.component(n).end(), a);
        } else {
            if (3 * std::abs(md.p) >= grid.nx || 3 * std::abs(md.q) >= grid.ny)
                throw InvalidField("Kraichnan mode " + std::to_string(n) + " is not resolved by the grid");
            const double kx = 2.0 * std::numbers::pi * md.p / grid.lx;
            const double ky = 2.0 * std::numbers::pi * md.q / grid.ly;
            const double kn = std::hypot(kx, ky);
            const double ex = -ky / kn, ey = kx / kn;
            const double bp = kp.vertical_ratio, bq = kp.psi_vertical_ratio;
            for (int i = 0; i < grid.nx; ++i)
                for (int j = 0; j < grid.ny; ++j) {
                    const double ph = kx * grid.x(i) + ky * grid.y(j);
                    const double tr = md.sine ? std::sin(ph) : std::cos(ph);
                    const double qu = md.sine ? -std::cos(ph) : std::sin(ph);
                    for (int k = 0; k < grid.nz; ++k) {
                        const double z = grid.z(k);
                        phi(0, i, j, k) = a * ex * tr;
                        phi(1, i, j, k) = a * ey * tr;
                        phi(2, i, j, k) = a * bp * bump(z, h) * qu;
                        const double over = a * bq * bump_dz(z, h) / kn;
                        psi(0, i, j, k) = a * ex * tr + over * (kx / kn) * tr;
                        psi(1, i, j, k) = a * ey * tr + over * (ky / kn) * tr;
                        psi(2, i, j, k) = a * bq * bump(z, h) * qu;
                    }
                }
        }
        fam.phi.push_back(std::move(phi));
        fam.psi.push_back(std::move(psi));
        if (kp.gamma_amplitude != 0.0) {
            const double g = kp.gamma_amplitude * a / kp.sigma;
            std::fill(gam.component(0).begin(), gam.component(0).end(), g);
            std::fill(gam.component(3).begin(), gam.component(3).end(), g);
            fam.gamma.push_back(std::move(gam));
        }
    }
    fam.nu = std::max(max_covariance_eigenvalue(fam.phi), max_covariance_eigenvalue(fam.psi));
    // M: the smallest bound every integrability item satisfies, with headroom.
    fam.M = 0.0;
    AssumptionReport r = check_assumptions(fam);
    for (const auto& it : r.items)
        if (it.id.rfind("integrability", 0) == 0 || it.id == "psi_sup") fam.M = std::max(fam.M, it.value);
    fam.M = 1.25 * fam.M + 1e-12;
    return fam;
}

NoiseFamily build_kraichnan(const KraichnanParams& p, const GridSpec& grid) {
    NoiseFamily fam = build_kraichnan_unchecked(p, grid);
    if (!(fam.nu < 2.0))
        throw ParabolicityViolation("Kraichnan family violates parabolicity: nu = " + fmt_double(fam.nu), fam.nu);
    return fam;
}

double sigma_for_nu(double nu, KraichnanParams p, const GridSpec& grid) {
    p.sigma = 1.0;
    NoiseFamily unit = build_kraichnan_unchecked(p, grid);
    return std::sqrt(nu / unit.nu);
}

double max_covariance_eigenvalue(const std::vector<Field>& family) {
    if (family.empty()) return 0.0;
    const std::size_t n = family.front().component_size();
    double worst = 0.0;
    for (std::size_t q = 0; q < n; ++q) {
        std::array<double, 6> m{};
        for (const auto& f : family) {
            const double x = f.values()[q], y = f.values()[n + q], z = f.values()[2 * n + q];
            m[0] += x * x;
            m[1] += x * y;
            m[2] += x * z;
            m[3] += y * y;
            m[4] += y * z;
            m[5] += z * z;
        }
        worst = std::max(worst, max_eig3(m));
    }
    return worst;
}

bool AssumptionReport::all_pass() const {
    return std::all_of(items.begin(), items.end(), [](const auto& i) { return i.pass; });
}

const AssumptionItem* AssumptionReport::find(const std::string& id) const {
    for (const auto& i : items)
        if (i.id == id) return &i;
    return nullptr;
}

namespace {

// All three partial derivatives of a noise field without boundary conditions.
std::array<Field, 3> noise_gradient(const Field& f) {
    return {horizontal_derivative(f, 0), horizontal_derivative(f, 1), vertical_derivative_free(f)};
}

// (sum_n |f_n^j|^2)^{1/2} as a scalar field.
Field family_component_norm(const std::vector<Field>& fs, int j) {
    Field out(fs.front().grid(), 1);
    auto d = out.values();
    for (const auto& f : fs) {
        auto s = f.component(j);
        for (std::size_t q = 0; q < d.size(); ++q) d[q] += s[q] * s[q];
    }
    for (auto& v : d) v = std::sqrt(v);
    return out;
}

double column_variation(const Field& f, int c) {
    const GridSpec& g = f.grid();
    double worst = 0.0;
    auto v = f.component(c);
    for (std::size_t col = 0; col < g.columns(); ++col) {
        const double* p = v.data() + col * g.nz;
        const auto [lo, hi] = std::minmax_element(p, p + g.nz);
        worst = std::max(worst, *hi - *lo);
    }
    return worst;
}

double directional_nu(const std::vector<Field>& fam) {
    std::vector<std::array<double, 3>> dirs;
    for (int a = -1; a <= 1; ++a)
        for (int b = -1; b <= 1; ++b)
            for (int c = -1; c <= 1; ++c) {
                if (a == 0 && b == 0 && c == 0) continue;
                const double n = std::sqrt(double(a * a + b * b + c * c));
                dirs.push_back({a / n, b / n, c / n});
            }
    const std::size_t n = fam.front().component_size();
    double worst = 0.0;
    for (std::size_t q = 0; q < n; ++q)
        for (const auto& d : dirs) {
            double s = 0.0;
            for (const auto& f : fam) {
                const double p = d[0] * f.values()[q] + d[1] * f.values()[n + q] + d[2] * f.values()[2 * n + q];
                s += p * p;
            }
            worst = std::max(worst, s);
        }
    return worst;
}

}  // namespace

AssumptionReport check_assumptions(const NoiseFamily& fam) {
    fam.validate_shapes();
    AssumptionReport rep;
    if (fam.size() == 0) return rep;
    const double p = 3.0 + fam.delta;
    const double M = fam.M;

    std::vector<std::array<Field, 3>> grads;
    for (const auto& f : fam.phi) grads.push_back(noise_gradient(f));
    double integ = 0.0;
    for (int j = 0; j < 3; ++j) {
        const double base = norm_lp(family_component_norm(fam.phi, j), p);
        for (int k = 0; k < 3; ++k) {
            std::vector<Field> dk;
            for (const auto& g : grads) dk.push_back(g[k]);
            integ = std::max(integ, base + norm_lp(family_component_norm(dk, j), p));
        }
    }
    rep.items.push_back({"integrability_phi", "L^{3+delta} bound on phi and its gradient", integ, M, integ <= M});

    if (fam.has_gamma()) {
        double gmax = 0.0;
        for (int c = 0; c < 4; ++c) gmax = std::max(gmax, norm_lp(family_component_norm(fam.gamma, c), p));
        rep.items.push_back({"integrability_gamma", "L^{3+delta} bound on gamma", gmax, M, gmax <= M});
    }

    double psi_sup = 0.0;
    for (int j = 0; j < 3; ++j) psi_sup = std::max(psi_sup, family_component_norm(fam.psi, j).max_abs());
    rep.items.push_back({"psi_sup", "sup bound on psi", psi_sup, M, psi_sup <= M});

    const double nu_est = std::max(directional_nu(fam.phi), directional_nu(fam.psi));
    rep.nu_estimate = nu_est;
    rep.items.push_back({"parabolicity", "sampled nu below 2", nu_est, 2.0, nu_est < 2.0});

    double zdep = 0.0;
    for (const auto& f : fam.phi) zdep = std::max({zdep, column_variation(f, 0), column_variation(f, 1)});
    for (const auto& g : fam.gamma)
        for (int c = 0; c < 4; ++c) zdep = std::max(zdep, column_variation(g, c));
    rep.items.push_back({"z_independence", "horizontal phi and gamma independent of z", zdep, 1e-12, zdep <= 1e-12});

    if (fam.psi_divergence_free) {
        double div = 0.0;
        for (const auto& f : fam.psi) {
            auto g = noise_gradient(f);
            Field d = g[0].component_field(0);
            d += g[1].component_field(1);
            d += g[2].component_field(2);
            div = std::max(div, d.max_abs());
        }
        rep.items.push_back({"psi_divergence_free", "div psi = 0 when flagged", div, 1e-9, div <= 1e-9});
    }

    if (fam.mode == NoiseMode::Stratonovich) {
        double tr = 0.0;
        for (const auto* fs : {&fam.phi, &fam.psi})
            for (const auto& f : *fs) {
                Field w = f.component_field(2);
                for (bool top : {false, true})
                    for (double v : extrapolated_trace(w, top)) tr = std::max(tr, std::abs(v));
            }
        rep.items.push_back({"vertical_trace", "vertical noise components vanish at z=-h and z=0", tr, 1e-8,
                             tr <= 1e-8});
    }
    return rep;
}

Field transport(const Field& coeff, const Field& u, bool dealias_product) {
    if (coeff.components() != 3) throw InvalidField("transport: coefficient needs 3 components");
    Field dz = vertical_derivative(u);
    Field dx = horizontal_derivative(u, 0);
    Field dy = horizontal_derivative(u, 1);
    Field out(u.grid(), u.components());
    auto c0 = coeff.component(0), c1 = coeff.component(1), c2 = coeff.component(2);
    for (int c = 0; c < u.components(); ++c) {
        auto o = out.component(c);
        kernels::omp::multiply_accumulate(c0, dx.component(c), o, 1.0);
        kernels::omp::multiply_accumulate(c1, dy.component(c), o, 1.0);
        kernels::omp::multiply_accumulate(c2, dz.component(c), o, 1.0);
    }
    if (dealias_product) dealias_in_place(out);
    return out;
}

Field transport_transpose(const Field& coeff, const Field& cot, BoundaryCondition bc, bool dealias_product) {
    Field r = dealias_product ? dealias(cot) : cot;
    const auto g = ghost_factors(bc, cot.grid().dz());
    Field a0(cot.grid(), cot.components()), a1(cot.grid(), cot.components()), a2(cot.grid(), cot.components());
    for (int c = 0; c < cot.components(); ++c) {
        kernels::omp::multiply_accumulate(coeff.component(0), r.component(c), a0.component(c), 1.0);
        kernels::omp::multiply_accumulate(coeff.component(1), r.component(c), a1.component(c), 1.0);
        kernels::omp::multiply_accumulate(coeff.component(2), r.component(c), a2.component(c), 1.0);
    }
    Field out = vertical_derivative_transpose(a2, g);
    out -= horizontal_derivative(a0, 0);
    out -= horizontal_derivative(a1, 1);
    return out;
}

namespace {

// out^l = sum_m gamma^{lm} q^m for a z-independent 2-vector q.
void apply_gamma(const Field& gamma, const Field& q, Field& out, bool transpose) {
    for (int l = 0; l < 2; ++l)
        for (int m = 0; m < 2; ++m) {
            const int comp = transpose ? 2 * m + l : 2 * l + m;
            kernels::omp::multiply_accumulate(gamma.component(comp), q.component(m), out.component(l), 1.0);
        }
}

}  // namespace

Field turbulent_pressure(const NoiseFamily& fam, const Field& v, const std::vector<Field>* gv, bool dealias_product) {
    Field out(v.grid(), 2);
    if (!fam.has_gamma()) return out;
    for (int n = 0; n < fam.size(); ++n) {
        Field t = transport(fam.phi[n], v, dealias_product);
        if (gv && n < static_cast<int>(gv->size()) && !(*gv)[n].empty()) t += (*gv)[n];
        apply_gamma(fam.gamma[n], hydrostatic_complement(t), out, false);
    }
    return out;
}

std::vector<Field> turbulent_pressure_mode_cotangents(const NoiseFamily& fam, const Field& cot) {
    std::vector<Field> out;
    if (!fam.has_gamma()) return out;
    for (int n = 0; n < fam.size(); ++n) {
        Field g(cot.grid(), 2);
        apply_gamma(fam.gamma[n], cot, g, true);
        out.push_back(hydrostatic_complement(g));
    }
    return out;
}

CorrectionOperators::CorrectionOperators(const NoiseFamily& fam, bool dealias_product)
    : fam_(&fam), dealias_(dealias_product) {
    if (fam.mode != NoiseMode::Stratonovich) throw ModeMismatch("correction operators need a Stratonovich family");
    const GridSpec& g = fam.grid;
    half_cov_phi_ = Field(g, 9);
    half_cov_psi_ = Field(g, 9);
    b_phi_ = Field(g, 3);
    b_psi_ = Field(g, 3);
    const std::size_t n = g.points();
    for (int m = 0; m < fam.size(); ++m) {
        const Field& phi = fam.phi[m];
        const Field& psi = fam.psi[m];
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) {
                kernels::serial::multiply_accumulate(phi.component(i), phi.component(j), half_cov_phi_.component(3 * i + j), 0.5);
                kernels::serial::multiply_accumulate(psi.component(i), psi.component(j), half_cov_psi_.component(3 * i + j), 0.5);
            }
        auto gphi = noise_gradient(phi);
        auto gpsi = noise_gradient(psi);
        // b_phi^j = 1/2 sum_i (d_i phi^j) phi^i
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j)
                kernels::serial::multiply_accumulate(gphi[i].component(j), phi.component(i), b_phi_.component(j), 0.5);
        // -1/2 (div psi) psi^j
        Field divpsi(g, 1);
        for (int i = 0; i < 3; ++i) divpsi += gpsi[i].component_field(i);
        for (int j = 0; j < 3; ++j)
            kernels::serial::multiply_accumulate(divpsi.values(), psi.component(j), b_psi_.component(j), -0.5);
        Field d(g, 4);
        for (int jj = 0; jj < 2; ++jj)
            for (int ii = 0; ii < 2; ++ii) {
                auto src = gphi[jj].component(ii);
                std::copy(src.begin(), src.end(), d.component(2 * jj + ii).begin());
            }
        dphi_.push_back(std::move(d));
    }
    // d_i a_psi^{ij} = d_i (1/2 sum psi^i psi^j)
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
            Field aij = half_cov_psi_.component_field(3 * i + j);
            Field d = i < 2 ? horizontal_derivative(aij, i) : vertical_derivative_free(aij);
            auto dst = b_psi_.component(j);
            for (std::size_t q = 0; q < n; ++q) dst[q] += d.values()[q];
        }
}

Field CorrectionOperators::second_order(const Field& u, const Field& a, const Field& b) const {
    const GridSpec& g = u.grid();
    Field dx = horizontal_derivative(u, 0);
    Field dy = horizontal_derivative(u, 1);
    Field dz = vertical_derivative(u);
    Field dz_bc = dz;
    dz_bc.set_bc(BoundaryCondition::none());
    std::array<Field, 3> first{dx, dy, dz};
    // Hessian entries (i <= j).
    Field dxx = horizontal_derivative(dx, 0);
    Field dxy = horizontal_derivative(dx, 1);
    Field dyy = horizontal_derivative(dy, 1);
    Field dxz = horizontal_derivative(dz, 0);
    Field dyz = horizontal_derivative(dz, 1);
    Field dzz = vertical_second_derivative(u);
    const Field* hess[3][3] = {{&dxx, &dxy, &dxz}, {&dxy, &dyy, &dyz}, {&dxz, &dyz, &dzz}};
    Field out(g, u.components());
    for (int c = 0; c < u.components(); ++c) {
        auto o = out.component(c);
        for (int i = 0; i < 3; ++i) {
            for (int j = 0; j < 3; ++j) kernels::omp::multiply_accumulate(a.component(3 * i + j), hess[i][j]->component(c), o, 1.0);
            kernels::omp::multiply_accumulate(b.component(i), first[i].component(c), o, 1.0);
        }
    }
    if (dealias_) dealias_in_place(out);
    return out;
}

Field CorrectionOperators::laplacian(const Field& u) const {
    Field dx = horizontal_derivative(u, 0);
    Field dy = horizontal_derivative(u, 1);
    Field out = horizontal_derivative(dx, 0);
    out += horizontal_derivative(dy, 1);
    out += vertical_second_derivative(u);
    out.set_bc(BoundaryCondition::none());
    return out;
}

Field CorrectionOperators::apply_Lphi(const Field& v) const {
    Field out = laplacian(v);
    out += second_order(v, half_cov_phi_, b_phi_);
    return out;
}

Field CorrectionOperators::apply_Lpsi(const Field& theta) const {
    Field out = laplacian(theta);
    out += second_order(theta, half_cov_psi_, b_psi_);
    return out;
}

Field CorrectionOperators::apply_Pphi(const Field& v) const {
    Field out(v.grid(), 2);
    for (int n = 0; n < fam_->size(); ++n) {
        Field q = hydrostatic_complement(transport(fam_->phi[n], v, dealias_));
        for (int j = 0; j < 2; ++j)
            for (int i = 0; i < 2; ++i)
                kernels::omp::multiply_accumulate(dphi_[n].component(2 * j + i), q.component(i), out.component(j), 1.0);
    }
    if (dealias_) dealias_in_place(out);
    return out;
}

Field CorrectionOperators::velocity_correction(const Field& v) const {
    Field out = second_order(v, half_cov_phi_, b_phi_);
    out.axpy(0.5, apply_Pphi(v));
    return hydrostatic_project(out);
}

Field CorrectionOperators::temperature_correction(const Field& theta) const {
    return second_order(theta, half_cov_psi_, b_psi_);
}

void write_noise_family(const std::string& path, const NoiseFamily& fam) {
    fam.validate_shapes();
    binio::Writer w(path);
    w.bytes("HLDPN1", 6);
    w.grid(fam.grid);
    w.i32(fam.size());
    w.u8(static_cast<std::uint8_t>(fam.mode));
    w.u8(fam.has_gamma() ? 1 : 0);
    w.u8(fam.psi_divergence_free ? 1 : 0);
    w.f64(fam.M);
    w.f64(fam.delta);
    w.f64(fam.nu);
    for (const auto& f : fam.phi) w.field_values(f);
    for (const auto& f : fam.psi) w.field_values(f);
    for (const auto& f : fam.gamma) w.field_values(f);
    w.close();
}

NoiseFamily read_noise_family(const std::string& path) {
    binio::Reader r(path);
    r.expect_magic("HLDPN1");
    NoiseFamily fam;
    fam.grid = r.grid();
    const int n = r.i32();
    if (n < 0 || n > 4096) throw IoError(path + ": bad mode count");
    const auto mode = r.u8();
    if (mode > 1) throw IoError(path + ": bad noise mode tag");
    fam.mode = static_cast<NoiseMode>(mode);
    const bool has_gamma = r.u8() != 0;
    fam.psi_divergence_free = r.u8() != 0;
    fam.M = r.f64();
    fam.delta = r.f64();
    fam.nu = r.f64();
    for (int i = 0; i < n; ++i) {
        fam.phi.emplace_back(fam.grid, 3);
        r.field_values(fam.phi.back());
    }
    for (int i = 0; i < n; ++i) {
        fam.psi.emplace_back(fam.grid, 3);
        r.field_values(fam.psi.back());
    }
    if (has_gamma)
        for (int i = 0; i < n; ++i) {
            fam.gamma.emplace_back(fam.grid, 4);
            r.field_values(fam.gamma.back());
        }
    r.expect_end();
    return fam;
}

}  // namespace hydroldp
