#pragma once

#include <array>
#include <complex>
#include <span>
#include <vector>

#include "hydroldp/field.hpp"

namespace hydroldp {

using cplx = std::complex<double>;

// Half-spectrum coefficients (normalised so the mean is coefficient (0,0)).
// Layout: ((c*nx + ix)*nky + iy)*depth + k.
class SpectrumView {
public:
    SpectrumView() = default;
    SpectrumView(const GridSpec& grid, int components, int depth);

    const GridSpec& grid() const { return grid_; }
    int components() const { return components_; }
    int depth() const { return depth_; }
    int nky() const { return grid_.nky(); }
    std::size_t columns() const { return static_cast<std::size_t>(components_) * grid_.nx * nky(); }

    std::size_t index(int c, int ix, int iy, int k) const {
        return ((static_cast<std::size_t>(c) * grid_.nx + ix) * nky() + iy) * depth_ + k;
    }
    cplx& at(int c, int ix, int iy, int k) { return data_[index(c, ix, iy, k)]; }
    cplx at(int c, int ix, int iy, int k) const { return data_[index(c, ix, iy, k)]; }
    std::span<cplx> values() { return data_; }
    std::span<const cplx> values() const { return data_; }

    // Coefficient of exp(i(mx x' + my y')) for signed integer mode numbers.
    cplx mode(int c, int mx, int my, int k) const;

    int mode_x(int ix) const { return signed_mode(ix, grid_.nx); }
    int mode_y(int iy) const { return iy; }
    // Physical wavenumbers 2*pi*m/L.
    double kx(int ix) const;
    double ky(int iy) const;
    // Wavenumbers used by first derivatives: zero on the Nyquist rows so D is skew.
    double dkx(int ix) const;
    double dky(int iy) const;
    bool dealias_keep(int ix, int iy) const;

    static int signed_mode(int i, int n) { return i <= n / 2 ? i : i - n; }

private:
    GridSpec grid_{};
    int components_ = 0;
    int depth_ = 0;
    std::vector<cplx> data_;
};

// Batched 2D transforms over (component, depth) slabs laid out like Field.
void fft_forward(std::span<const double> in, std::span<cplx> out, const GridSpec& grid, int components,
                 int depth);
void fft_inverse(std::span<const cplx> in, std::span<double> out, const GridSpec& grid, int components,
                 int depth);

SpectrumView forward_transform(const Field& f);
Field inverse_transform(const SpectrumView& s, BoundaryCondition bc = {});

// d/dx (axis 0) or d/dy (axis 1) of every component.
Field horizontal_derivative(const Field& f, int axis);
// Gradient of every component: output component 2*c + axis.
Field horizontal_gradient(const Field& f);
Field horizontal_divergence(const Field& v);
// Spectral Laplacian with the true |k|^2 symbol.
Field horizontal_laplacian(const Field& f);
// 2/3-rule filter; keeps |m| < n/3 along each horizontal axis.
Field dealias(const Field& f);
void dealias_in_place(Field& f);

}  // namespace hydroldp
