#include "hydroldp/spectral.hpp"

#include <fftw3.h>

#include <map>
#include <mutex>
#include <numbers>
#include <tuple>

#include "hydroldp/errors.hpp"

namespace hydroldp {
namespace {

struct PlanPair {
    fftw_plan r2c = nullptr;
    fftw_plan c2r = nullptr;
};

class PlanCache {
public:
    ~PlanCache() {
        for (auto& [key, p] : plans_) {
            fftw_destroy_plan(p.r2c);
            fftw_destroy_plan(p.c2r);
        }
    }

    PlanPair get(int nx, int ny, int depth) {
        std::lock_guard<std::mutex> lock(mu_);
        auto key = std::make_tuple(nx, ny, depth);
        auto it = plans_.find(key);
        if (it != plans_.end()) return it->second;
        const int nky = ny / 2 + 1;
        std::vector<double> r(static_cast<std::size_t>(nx) * ny * depth);
        std::vector<cplx> c(static_cast<std::size_t>(nx) * nky * depth);
        int n[2] = {nx, ny};
        int rembed[2] = {nx, ny};
        int cembed[2] = {nx, nky};
        auto* cptr = reinterpret_cast<fftw_complex*>(c.data());
        // Deterministic planning: estimate only, no alignment assumptions.
        const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
        PlanPair p;
        p.r2c = fftw_plan_many_dft_r2c(2, n, depth, r.data(), rembed, depth, 1, cptr, cembed, depth, 1, flags);
        p.c2r = fftw_plan_many_dft_c2r(2, n, depth, cptr, cembed, depth, 1, r.data(), rembed, depth, 1, flags);
        if (!p.r2c || !p.c2r) throw Error("FFTW planning failed");
        plans_.emplace(key, p);
        return p;
    }

private:
    std::mutex mu_;
    std::map<std::tuple<int, int, int>, PlanPair> plans_;
};

PlanCache& plan_cache() {
    static PlanCache cache;
    return cache;
}

}  // namespace

SpectrumView::SpectrumView(const GridSpec& grid, int components, int depth)
    : grid_(grid), components_(components), depth_(depth),
      data_(static_cast<std::size_t>(components) * grid.nx * grid.nky() * depth) {}

double SpectrumView::kx(int ix) const { return 2.0 * std::numbers::pi * mode_x(ix) / grid_.lx; }
double SpectrumView::ky(int iy) const { return 2.0 * std::numbers::pi * mode_y(iy) / grid_.ly; }
double SpectrumView::dkx(int ix) const { return ix == grid_.nx / 2 ? 0.0 : kx(ix); }
double SpectrumView::dky(int iy) const { return iy == grid_.ny / 2 ? 0.0 : ky(iy); }

bool SpectrumView::dealias_keep(int ix, int iy) const {
    const int mx = std::abs(mode_x(ix));
    const int my = iy;
    return 3 * mx < grid_.nx && 3 * my < grid_.ny;
}

cplx SpectrumView::mode(int c, int mx, int my, int k) const {
    const int nx = grid_.nx;
    const int ny = grid_.ny;
    auto wrap = [](int m, int n) { return ((m % n) + n) % n; };
    if (my >= 0 && my <= ny / 2) return at(c, wrap(mx, nx), my, k);
    // Negative my: use conjugate symmetry c(-m) = conj(c(m)).
    const int my2 = -my;
    if (my2 <= ny / 2) return std::conj(at(c, wrap(-mx, nx), my2, k));
    return cplx(0.0, 0.0);
}

void fft_forward(std::span<const double> in, std::span<cplx> out, const GridSpec& grid, int components,
                 int depth) {
    const PlanPair p = plan_cache().get(grid.nx, grid.ny, depth);
    const std::size_t rs = static_cast<std::size_t>(grid.nx) * grid.ny * depth;
    const std::size_t cs = static_cast<std::size_t>(grid.nx) * grid.nky() * depth;
    const double norm = 1.0 / (static_cast<double>(grid.nx) * grid.ny);
    for (int c = 0; c < components; ++c) {
        // FFTW's r2c never writes its input, the const_cast is only for the C signature.
        fftw_execute_dft_r2c(p.r2c, const_cast<double*>(in.data() + c * rs),
                             reinterpret_cast<fftw_complex*>(out.data() + c * cs));
    }
    for (auto& v : out.subspan(0, cs * components)) v *= norm;
}

void fft_inverse(std::span<const cplx> in, std::span<double> out, const GridSpec& grid, int components,
                 int depth) {
    const PlanPair p = plan_cache().get(grid.nx, grid.ny, depth);
    const std::size_t rs = static_cast<std::size_t>(grid.nx) * grid.ny * depth;
    const std::size_t cs = static_cast<std::size_t>(grid.nx) * grid.nky() * depth;
    std::vector<cplx> scratch(cs);
    for (int c = 0; c < components; ++c) {
        std::copy(in.begin() + c * cs, in.begin() + (c + 1) * cs, scratch.begin());
        fftw_execute_dft_c2r(p.c2r, reinterpret_cast<fftw_complex*>(scratch.data()), out.data() + c * rs);
    }
}

SpectrumView forward_transform(const Field& f) {
    if (f.empty()) throw InvalidField("forward_transform: empty field");
    if (!f.all_finite()) throw InvalidField("forward_transform: non-finite input");
    SpectrumView s(f.grid(), f.components(), f.grid().nz);
    fft_forward(f.values(), s.values(), f.grid(), f.components(), f.grid().nz);
    return s;
}

Field inverse_transform(const SpectrumView& s, BoundaryCondition bc) {
    if (s.depth() != s.grid().nz) throw InvalidField("inverse_transform: spectrum depth differs from grid");
    Field f(s.grid(), s.components(), bc);
    fft_inverse(s.values(), f.values(), s.grid(), s.components(), s.depth());
    return f;
}

namespace {

template <class Symbol>
Field apply_symbol(const Field& f, int out_components, Symbol&& sym) {
    SpectrumView s = forward_transform(f);
    SpectrumView o(f.grid(), out_components, f.grid().nz);
    const int nz = f.grid().nz;
    for (int ix = 0; ix < f.grid().nx; ++ix)
        for (int iy = 0; iy < f.grid().nky(); ++iy) sym(s, o, ix, iy, nz);
    return inverse_transform(o);
}

}  // namespace

Field horizontal_derivative(const Field& f, int axis) {
    if (axis != 0 && axis != 1) throw InvalidField("horizontal_derivative: axis must be 0 or 1");
    const int nc = f.components();
    return apply_symbol(f, nc, [&](const SpectrumView& s, SpectrumView& o, int ix, int iy, int nz) {
        const cplx ik(0.0, axis == 0 ? s.dkx(ix) : s.dky(iy));
        for (int c = 0; c < nc; ++c)
            for (int k = 0; k < nz; ++k) o.at(c, ix, iy, k) = ik * s.at(c, ix, iy, k);
    });
}

Field horizontal_gradient(const Field& f) {
    const int nc = f.components();
    return apply_symbol(f, 2 * nc, [&](const SpectrumView& s, SpectrumView& o, int ix, int iy, int nz) {
        const cplx ikx(0.0, s.dkx(ix));
        const cplx iky(0.0, s.dky(iy));
        for (int c = 0; c < nc; ++c)
            for (int k = 0; k < nz; ++k) {
                o.at(2 * c, ix, iy, k) = ikx * s.at(c, ix, iy, k);
                o.at(2 * c + 1, ix, iy, k) = iky * s.at(c, ix, iy, k);
            }
    });
}

Field horizontal_divergence(const Field& v) {
    if (v.components() != 2) throw InvalidField("horizontal_divergence: expected 2 components");
    return apply_symbol(v, 1, [&](const SpectrumView& s, SpectrumView& o, int ix, int iy, int nz) {
        const cplx ikx(0.0, s.dkx(ix));
        const cplx iky(0.0, s.dky(iy));
        for (int k = 0; k < nz; ++k) o.at(0, ix, iy, k) = ikx * s.at(0, ix, iy, k) + iky * s.at(1, ix, iy, k);
    });
}

Field horizontal_laplacian(const Field& f) {
    const int nc = f.components();
    Field out = apply_symbol(f, nc, [&](const SpectrumView& s, SpectrumView& o, int ix, int iy, int nz) {
        const double k2 = s.kx(ix) * s.kx(ix) + s.ky(iy) * s.ky(iy);
        for (int c = 0; c < nc; ++c)
            for (int k = 0; k < nz; ++k) o.at(c, ix, iy, k) = -k2 * s.at(c, ix, iy, k);
    });
    out.set_bc(f.bc());
    return out;
}

void dealias_in_place(Field& f) {
    SpectrumView s = forward_transform(f);
    const int nz = f.grid().nz;
    for (int c = 0; c < s.components(); ++c)
        for (int ix = 0; ix < f.grid().nx; ++ix)
            for (int iy = 0; iy < f.grid().nky(); ++iy)
                if (!s.dealias_keep(ix, iy))
                    for (int k = 0; k < nz; ++k) s.at(c, ix, iy, k) = 0.0;
    fft_inverse(s.values(), f.values(), f.grid(), f.components(), nz);
}

Field dealias(const Field& f) {
    Field out = f;
    dealias_in_place(out);
    return out;
}

}  // namespace hydroldp
