#pragma once

#include <complex>
#include <cstddef>
#include <span>

// Column kernels on contiguous vertical columns of length nz.
// `serial` is the reference; `omp` splits columns across threads and must
// produce bit-identical output (each column is computed independently).
namespace hydroldp::kernels {

struct Columns {
    std::size_t count;
    int nz;
};

// Ghost values are factor * adjacent interior value.
struct Ghosts {
    double lo;
    double hi;
};

#define HYDROLDP_KERNEL_DECLS                                                                              \
    void centered_diff(std::span<const double> in, std::span<double> out, Columns cols, Ghosts g,         \
                       double dz);                                                                         \
    void centered_diff_transpose(std::span<const double> in, std::span<double> out, Columns cols,         \
                                 Ghosts g, double dz);                                                     \
    void one_sided_diff(std::span<const double> in, std::span<double> out, Columns cols, double dz);      \
    void second_diff(std::span<const double> in, std::span<double> out, Columns cols, Ghosts g,           \
                     double dz);                                                                           \
    void cumulative_midpoint(std::span<const double> in, std::span<double> out, Columns cols, double dz); \
    void cumulative_midpoint_transpose(std::span<const double> in, std::span<double> out, Columns cols,   \
                                       double dz);                                                         \
    void column_mean(std::span<const double> in, std::span<double> out, Columns cols);                    \
    void implicit_heat_solve(std::span<std::complex<double>> rhs, std::span<const double> shift,          \
                             Columns cols, Ghosts g, double coef);                                         \
    void multiply_accumulate(std::span<const double> a, std::span<const double> b, std::span<double> out, \
                             double scale);

namespace serial {
HYDROLDP_KERNEL_DECLS
}
namespace omp {
HYDROLDP_KERNEL_DECLS
}

#undef HYDROLDP_KERNEL_DECLS

// Work size below which the OpenMP variants stay on the calling thread.
inline constexpr std::size_t kParallelThreshold = 1u << 14;

}  // namespace hydroldp::kernels
