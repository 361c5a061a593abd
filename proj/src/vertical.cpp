#include "hydroldp/vertical.hpp"

#include <cmath>

#include "hydroldp/errors.hpp"

namespace hydroldp {

namespace k = kernels;

k::Ghosts ghost_factors(const BoundaryCondition& bc, double dz) {
    switch (bc.kind) {
        case BcKind::NeumannBoth: return {1.0, 1.0};
        case BcKind::RobinTop: {
            const double den = 1.0 + 0.5 * bc.alpha * dz;
            if (std::abs(den) < 1e-12) throw InvalidField("Robin coefficient incompatible with dz");
            return {1.0, (1.0 - 0.5 * bc.alpha * dz) / den};
        }
        case BcKind::None: break;
    }
    throw MissingBoundaryCondition("field has no boundary condition attached");
}

namespace {

k::Columns columns_of(const Field& f) {
    return {static_cast<std::size_t>(f.components()) * f.grid().columns(), f.grid().nz};
}

}  // namespace

Field enforce_bc(const Field& f) {
    const auto g = ghost_factors(f.bc(), f.grid().dz());
    const auto cols = columns_of(f);
    std::vector<double> lo(cols.count), hi(cols.count);
    auto v = f.values();
    for (std::size_t c = 0; c < cols.count; ++c) {
        lo[c] = g.lo * v[c * cols.nz];
        hi[c] = g.hi * v[c * cols.nz + cols.nz - 1];
    }
    Field out = f;
    out.set_ghosts(std::move(lo), std::move(hi));
    return out;
}

Field vertical_derivative(const Field& f) {
    return vertical_derivative(f, ghost_factors(f.bc(), f.grid().dz()));
}

Field vertical_derivative(const Field& f, k::Ghosts g) {
    Field out(f.grid(), f.components());
    k::omp::centered_diff(f.values(), out.values(), columns_of(f), g, f.grid().dz());
    return out;
}

Field vertical_derivative_transpose(const Field& f, k::Ghosts g) {
    Field out(f.grid(), f.components());
    k::omp::centered_diff_transpose(f.values(), out.values(), columns_of(f), g, f.grid().dz());
    return out;
}

Field vertical_derivative_free(const Field& f) {
    Field out(f.grid(), f.components());
    k::omp::one_sided_diff(f.values(), out.values(), columns_of(f), f.grid().dz());
    return out;
}

Field vertical_second_derivative(const Field& f) {
    return vertical_second_derivative(f, ghost_factors(f.bc(), f.grid().dz()));
}

Field vertical_second_derivative(const Field& f, k::Ghosts g) {
    Field out(f.grid(), f.components(), f.bc());
    k::omp::second_diff(f.values(), out.values(), columns_of(f), g, f.grid().dz());
    return out;
}

Field cumulative_integral(const Field& f) {
    Field out(f.grid(), f.components());
    k::omp::cumulative_midpoint(f.values(), out.values(), columns_of(f), f.grid().dz());
    return out;
}

Field cumulative_integral_transpose(const Field& f) {
    Field out(f.grid(), f.components());
    k::omp::cumulative_midpoint_transpose(f.values(), out.values(), columns_of(f), f.grid().dz());
    return out;
}

std::vector<double> extrapolated_trace(const Field& f, bool top) {
    const auto cols = columns_of(f);
    const int nz = cols.nz;
    std::vector<double> out(cols.count);
    auto v = f.values();
    for (std::size_t c = 0; c < cols.count; ++c) {
        const double* col = v.data() + c * nz;
        // Quadratic through the three nearest cell centres, evaluated half a cell past the last one.
        out[c] = top ? (15.0 * col[nz - 1] - 10.0 * col[nz - 2] + 3.0 * col[nz - 3]) / 8.0
                     : (15.0 * col[0] - 10.0 * col[1] + 3.0 * col[2]) / 8.0;
    }
    return out;
}

double face_gradient_energy(const Field& f) {
    const auto cols = columns_of(f);
    const int nz = cols.nz;
    const double dz = f.grid().dz();
    auto v = f.values();
    double s = 0.0;
    for (std::size_t c = 0; c < cols.count; ++c) {
        const double* col = v.data() + c * nz;
        for (int kk = 0; kk + 1 < nz; ++kk) {
            const double d = col[kk + 1] - col[kk];
            s += d * d;
        }
    }
    return s / (dz * dz) * f.grid().cell_volume();
}

}  // namespace hydroldp
