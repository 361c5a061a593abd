#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "hydroldp/grid.hpp"

namespace hydroldp {

enum class BcKind : std::uint8_t { None = 0, NeumannBoth = 1, RobinTop = 2 };

struct BoundaryCondition {
    BcKind kind = BcKind::None;
    double alpha = 0.0;  // only meaningful for RobinTop

    static BoundaryCondition none() { return {}; }
    static BoundaryCondition neumann() { return {BcKind::NeumannBoth, 0.0}; }
    static BoundaryCondition robin(double alpha) { return {BcKind::RobinTop, alpha}; }

    bool operator==(const BoundaryCondition&) const = default;
};

const char* to_string(BcKind kind);

// Cell-centred grid function with `components` scalar slots per point.
// Storage order is ((c*nx + i)*ny + j)*nz + k, so vertical columns are contiguous.
class Field {
public:
    Field() = default;
    Field(const GridSpec& grid, int components, BoundaryCondition bc = {});

    template <class F>
    static Field sample(const GridSpec& grid, int components, BoundaryCondition bc, F&& f) {
        Field out(grid, components, bc);
        for (int c = 0; c < components; ++c)
            for (int i = 0; i < grid.nx; ++i)
                for (int j = 0; j < grid.ny; ++j)
                    for (int k = 0; k < grid.nz; ++k)
                        out(c, i, j, k) = f(c, grid.x(i), grid.y(j), grid.z(k));
        return out;
    }

    const GridSpec& grid() const { return grid_; }
    int components() const { return components_; }
    const BoundaryCondition& bc() const { return bc_; }
    void set_bc(BoundaryCondition bc) { bc_ = bc; }
    bool empty() const { return data_.empty(); }

    std::size_t size() const { return data_.size(); }
    std::size_t component_size() const { return grid_.points(); }
    std::size_t index(int c, int i, int j, int k) const {
        return ((static_cast<std::size_t>(c) * grid_.nx + i) * grid_.ny + j) * grid_.nz + k;
    }

    double& operator()(int c, int i, int j, int k) { return data_[index(c, i, j, k)]; }
    double operator()(int c, int i, int j, int k) const { return data_[index(c, i, j, k)]; }

    std::span<double> values() { return data_; }
    std::span<const double> values() const { return data_; }
    std::span<double> component(int c) {
        return {data_.data() + c * component_size(), component_size()};
    }
    std::span<const double> component(int c) const {
        return {data_.data() + c * component_size(), component_size()};
    }
    Field component_field(int c) const;
    void set_component(int c, const Field& scalar);

    // Ghost layers are a snapshot taken by enforce_bc(); operators recompute them from bc().
    bool has_ghosts() const { return !ghost_lo_.empty(); }
    std::span<const double> ghost_bottom() const { return ghost_lo_; }
    std::span<const double> ghost_top() const { return ghost_hi_; }
    void set_ghosts(std::vector<double> lo, std::vector<double> hi);

    Field& operator+=(const Field& other);
    Field& operator-=(const Field& other);
    Field& operator*=(double s);
    Field& axpy(double a, const Field& x);
    Field& fill(double v);

    bool all_finite() const;
    double max_abs() const;
    bool same_shape(const Field& other) const {
        return grid_ == other.grid_ && components_ == other.components_;
    }

private:
    GridSpec grid_{};
    int components_ = 0;
    BoundaryCondition bc_{};
    std::vector<double> data_;
    std::vector<double> ghost_lo_;
    std::vector<double> ghost_hi_;
};

Field operator+(Field a, const Field& b);
Field operator-(Field a, const Field& b);
Field operator*(double s, Field a);

// Raw Euclidean dot product over all stored values.
double dot(const Field& a, const Field& b);
// Volume-weighted L2 inner product and norm.
double inner_l2(const Field& a, const Field& b);
double norm_l2(const Field& a);
double norm_lp(const Field& a, double p);
// Pointwise product a_c * s for a scalar field s.
Field multiply(const Field& a, const Field& scalar);
// Pointwise Euclidean magnitude over components.
Field magnitude(const Field& a);

void require_same_shape(const Field& a, const Field& b, const char* where);

}  // namespace hydroldp
