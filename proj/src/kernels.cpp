#include "hydroldp/kernels.hpp"

#include <vector>

namespace hydroldp::kernels {
namespace {

using cplx = std::complex<double>;

inline void diff_column(const double* f, double* d, int n, Ghosts g, double dz) {
    const double s = 0.5 / dz;
    d[0] = (f[1] - g.lo * f[0]) * s;
    for (int k = 1; k < n - 1; ++k) d[k] = (f[k + 1] - f[k - 1]) * s;
    d[n - 1] = (g.hi * f[n - 1] - f[n - 2]) * s;
}

inline void diff_t_column(const double* y, double* d, int n, Ghosts g, double dz) {
    const double s = 0.5 / dz;
    d[0] = (-g.lo * y[0] - y[1]) * s;
    for (int k = 1; k < n - 1; ++k) d[k] = (y[k - 1] - y[k + 1]) * s;
    d[n - 1] = (y[n - 2] + g.hi * y[n - 1]) * s;
}

inline void one_sided_column(const double* f, double* d, int n, double dz) {
    const double s = 0.5 / dz;
    d[0] = (-3.0 * f[0] + 4.0 * f[1] - f[2]) * s;
    for (int k = 1; k < n - 1; ++k) d[k] = (f[k + 1] - f[k - 1]) * s;
    d[n - 1] = (3.0 * f[n - 1] - 4.0 * f[n - 2] + f[n - 3]) * s;
}

inline void second_column(const double* f, double* d, int n, Ghosts g, double dz) {
    const double s = 1.0 / (dz * dz);
    d[0] = (f[1] - 2.0 * f[0] + g.lo * f[0]) * s;
    for (int k = 1; k < n - 1; ++k) d[k] = (f[k + 1] - 2.0 * f[k] + f[k - 1]) * s;
    d[n - 1] = (g.hi * f[n - 1] - 2.0 * f[n - 1] + f[n - 2]) * s;
}

// Full cells by the midpoint rule; the half cell below z_k by a trapezoid through the
// interpolated face value, so linear profiles are integrated exactly.
inline void cumsum_column(const double* f, double* c, int n, double dz) {
    c[0] = dz * (5.0 * f[0] - f[1]) / 8.0;
    double acc = 0.0;
    for (int k = 1; k < n; ++k) {
        acc += f[k - 1];
        c[k] = dz * (acc + (3.0 * f[k] + f[k - 1]) / 8.0);
    }
}

inline void cumsum_t_column(const double* y, double* c, int n, double dz) {
    double tail = 0.0;  // sum of y_k for k > j
    for (int j = n - 1; j >= 0; --j) {
        double s = tail;
        if (j + 1 < n) s += y[j + 1] / 8.0;
        if (j >= 1) s += 3.0 * y[j] / 8.0;
        if (j == 0) s += 5.0 * y[0] / 8.0;
        if (j == 1) s -= y[0] / 8.0;
        c[j] = dz * s;
        tail += y[j];
    }
}

inline void mean_column(const double* f, double* m, int n) {
    double s = 0.0;
    for (int k = 0; k < n; ++k) s += f[k];
    *m = s / n;
}

// Thomas algorithm for (1 + shift) u - coef * D2 u = rhs with ghost-modified end rows.
inline void heat_column(cplx* r, double shift, int n, Ghosts g, double coef, double* cp) {
    const double off = -coef;
    auto diag = [&](int k) {
        double d = 1.0 + shift + 2.0 * coef;
        if (k == 0) d -= coef * g.lo;
        if (k == n - 1) d -= coef * g.hi;
        return d;
    };
    double b = diag(0);
    cp[0] = off / b;
    r[0] /= b;
    for (int k = 1; k < n; ++k) {
        const double m = diag(k) - off * cp[k - 1];
        cp[k] = off / m;
        r[k] = (r[k] - off * r[k - 1]) / m;
    }
    for (int k = n - 2; k >= 0; --k) r[k] -= cp[k] * r[k + 1];
}

}  // namespace

namespace serial {

void centered_diff(std::span<const double> in, std::span<double> out, Columns cols, Ghosts g, double dz) {
    const long nc = static_cast<long>(cols.count);
    for (long c = 0; c < nc; ++c) diff_column(in.data() + c * cols.nz, out.data() + c * cols.nz, cols.nz, g, dz);
}

void centered_diff_transpose(std::span<const double> in, std::span<double> out, Columns cols, Ghosts g,
                             double dz) {
    const long nc = static_cast<long>(cols.count);
    for (long c = 0; c < nc; ++c)
        diff_t_column(in.data() + c * cols.nz, out.data() + c * cols.nz, cols.nz, g, dz);
}

void one_sided_diff(std::span<const double> in, std::span<double> out, Columns cols, double dz) {
    const long nc = static_cast<long>(cols.count);
    for (long c = 0; c < nc; ++c)
        one_sided_column(in.data() + c * cols.nz, out.data() + c * cols.nz, cols.nz, dz);
}

void second_diff(std::span<const double> in, std::span<double> out, Columns cols, Ghosts g, double dz) {
    const long nc = static_cast<long>(cols.count);
    for (long c = 0; c < nc; ++c)
        second_column(in.data() + c * cols.nz, out.data() + c * cols.nz, cols.nz, g, dz);
}

void cumulative_midpoint(std::span<const double> in, std::span<double> out, Columns cols, double dz) {
    const long nc = static_cast<long>(cols.count);
    for (long c = 0; c < nc; ++c) cumsum_column(in.data() + c * cols.nz, out.data() + c * cols.nz, cols.nz, dz);
}

void cumulative_midpoint_transpose(std::span<const double> in, std::span<double> out, Columns cols, double dz) {
    const long nc = static_cast<long>(cols.count);
    for (long c = 0; c < nc; ++c)
        cumsum_t_column(in.data() + c * cols.nz, out.data() + c * cols.nz, cols.nz, dz);
}

void column_mean(std::span<const double> in, std::span<double> out, Columns cols) {
    const long nc = static_cast<long>(cols.count);
    for (long c = 0; c < nc; ++c) mean_column(in.data() + c * cols.nz, out.data() + c, cols.nz);
}

void implicit_heat_solve(std::span<cplx> rhs, std::span<const double> shift, Columns cols, Ghosts g,
                         double coef) {
    const long nc = static_cast<long>(cols.count);
    for (long c = 0; c < nc; ++c) {
        std::vector<double> scratch(cols.nz);
        heat_column(rhs.data() + c * cols.nz, shift[c], cols.nz, g, coef, scratch.data());
    }
}

void multiply_accumulate(std::span<const double> a, std::span<const double> b, std::span<double> out,
                         double scale) {
    const long n = static_cast<long>(out.size());
    for (long q = 0; q < n; ++q) out[q] += scale * a[q] * b[q];
}

}  // namespace serial

#define HYDROLDP_OMP_FOR \
    _Pragma("omp parallel for schedule(static) if (nc * cols.nz > static_cast<long>(kParallelThreshold))")
#define HYDROLDP_OMP_FLAT _Pragma("omp parallel for schedule(static) if (n > static_cast<long>(kParallelThreshold))")

namespace omp {

void centered_diff(std::span<const double> in, std::span<double> out, Columns cols, Ghosts g, double dz) {
    const long nc = static_cast<long>(cols.count);
    HYDROLDP_OMP_FOR
    for (long c = 0; c < nc; ++c) diff_column(in.data() + c * cols.nz, out.data() + c * cols.nz, cols.nz, g, dz);
}

void centered_diff_transpose(std::span<const double> in, std::span<double> out, Columns cols, Ghosts g,
                             double dz) {
    const long nc = static_cast<long>(cols.count);
    HYDROLDP_OMP_FOR
    for (long c = 0; c < nc; ++c)
        diff_t_column(in.data() + c * cols.nz, out.data() + c * cols.nz, cols.nz, g, dz);
}

void one_sided_diff(std::span<const double> in, std::span<double> out, Columns cols, double dz) {
    const long nc = static_cast<long>(cols.count);
    HYDROLDP_OMP_FOR
    for (long c = 0; c < nc; ++c)
        one_sided_column(in.data() + c * cols.nz, out.data() + c * cols.nz, cols.nz, dz);
}

void second_diff(std::span<const double> in, std::span<double> out, Columns cols, Ghosts g, double dz) {
    const long nc = static_cast<long>(cols.count);
    HYDROLDP_OMP_FOR
    for (long c = 0; c < nc; ++c)
        second_column(in.data() + c * cols.nz, out.data() + c * cols.nz, cols.nz, g, dz);
}

void cumulative_midpoint(std::span<const double> in, std::span<double> out, Columns cols, double dz) {
    const long nc = static_cast<long>(cols.count);
    HYDROLDP_OMP_FOR
    for (long c = 0; c < nc; ++c) cumsum_column(in.data() + c * cols.nz, out.data() + c * cols.nz, cols.nz, dz);
}

void cumulative_midpoint_transpose(std::span<const double> in, std::span<double> out, Columns cols, double dz) {
    const long nc = static_cast<long>(cols.count);
    HYDROLDP_OMP_FOR
    for (long c = 0; c < nc; ++c)
        cumsum_t_column(in.data() + c * cols.nz, out.data() + c * cols.nz, cols.nz, dz);
}

void column_mean(std::span<const double> in, std::span<double> out, Columns cols) {
    const long nc = static_cast<long>(cols.count);
    HYDROLDP_OMP_FOR
    for (long c = 0; c < nc; ++c) mean_column(in.data() + c * cols.nz, out.data() + c, cols.nz);
}

void implicit_heat_solve(std::span<cplx> rhs, std::span<const double> shift, Columns cols, Ghosts g,
                         double coef) {
    const long nc = static_cast<long>(cols.count);
    HYDROLDP_OMP_FOR
    for (long c = 0; c < nc; ++c) {
        std::vector<double> scratch(cols.nz);
        heat_column(rhs.data() + c * cols.nz, shift[c], cols.nz, g, coef, scratch.data());
    }
}

void multiply_accumulate(std::span<const double> a, std::span<const double> b, std::span<double> out,
                         double scale) {
    const long n = static_cast<long>(out.size());
    HYDROLDP_OMP_FLAT
    for (long q = 0; q < n; ++q) out[q] += scale * a[q] * b[q];
}

}  // namespace omp
}  // namespace hydroldp::kernels
