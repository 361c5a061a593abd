#pragma once

#include "hydroldp/field.hpp"
#include "hydroldp/kernels.hpp"

namespace hydroldp {

// Ghost factors implied by a boundary condition; throws MissingBoundaryCondition for None.
kernels::Ghosts ghost_factors(const BoundaryCondition& bc, double dz);

// Returns a copy whose ghost layers are filled from its boundary condition.
Field enforce_bc(const Field& f);

// Centred d/dz using the field's own boundary condition.
Field vertical_derivative(const Field& f);
Field vertical_derivative(const Field& f, kernels::Ghosts g);
Field vertical_derivative_transpose(const Field& f, kernels::Ghosts g);
// Second-order one-sided stencils at the ends; for fields without a boundary condition.
Field vertical_derivative_free(const Field& f);
// d2/dz2 with ghosts from the boundary condition (symmetric matrix).
Field vertical_second_derivative(const Field& f);
Field vertical_second_derivative(const Field& f, kernels::Ghosts g);

// Column integral from the bottom to each cell centre; exact for linear profiles.
Field cumulative_integral(const Field& f);
Field cumulative_integral_transpose(const Field& f);

// Quadratic extrapolation of each column to z = -h (bottom) or z = 0 (top).
std::vector<double> extrapolated_trace(const Field& f, bool top);

// Sum over interior vertical faces of ((f_{k+1}-f_k)/dz)^2 * cell volume.
// Neumann boundary faces carry no jump, so this is the discrete ||d/dz f||^2.
double face_gradient_energy(const Field& f);

}  // namespace hydroldp
