#include "hydroldp/field.hpp"

#include <cmath>
#include <string>

#include "hydroldp/errors.hpp"

namespace hydroldp {

const char* to_string(BcKind kind) {
    switch (kind) {
        case BcKind::None: return "none";
        case BcKind::NeumannBoth: return "neumann";
        case BcKind::RobinTop: return "robin";
    }
    return "unknown";
}

void GridSpec::validate() const {
    if (nx < 2 || ny < 2) throw InvalidGrid("horizontal resolution must be at least 2");
    if (nx % 2 != 0 || ny % 2 != 0) throw InvalidGrid("horizontal resolution must be even");
    if (nz < 3) throw InvalidGrid("need at least 3 vertical layers");
    if (!(h > 0.0) || !(lx > 0.0) || !(ly > 0.0)) throw InvalidGrid("domain lengths must be positive");
}

Field::Field(const GridSpec& grid, int components, BoundaryCondition bc)
    : grid_(grid), components_(components), bc_(bc) {
    grid.validate();
    if (components < 1) throw InvalidField("field needs at least one component");
    data_.assign(static_cast<std::size_t>(components) * grid.points(), 0.0);
}

Field Field::component_field(int c) const {
    Field out(grid_, 1, bc_);
    auto src = component(c);
    std::copy(src.begin(), src.end(), out.data_.begin());
    return out;
}

void Field::set_component(int c, const Field& scalar) {
    if (scalar.grid_ != grid_ || scalar.components_ != 1)
        throw InvalidField("set_component: shape mismatch");
    auto dst = component(c);
    std::copy(scalar.data_.begin(), scalar.data_.end(), dst.begin());
}

void Field::set_ghosts(std::vector<double> lo, std::vector<double> hi) {
    ghost_lo_ = std::move(lo);
    ghost_hi_ = std::move(hi);
}

void require_same_shape(const Field& a, const Field& b, const char* where) {
    if (!a.same_shape(b)) throw InvalidField(std::string(where) + ": field shape mismatch");
}

Field& Field::operator+=(const Field& other) {
    require_same_shape(*this, other, "operator+=");
    for (std::size_t n = 0; n < data_.size(); ++n) data_[n] += other.data_[n];
    return *this;
}

Field& Field::operator-=(const Field& other) {
    require_same_shape(*this, other, "operator-=");
    for (std::size_t n = 0; n < data_.size(); ++n) data_[n] -= other.data_[n];
    return *this;
}

Field& Field::operator*=(double s) {
    for (double& v : data_) v *= s;
    return *this;
}

Field& Field::axpy(double a, const Field& x) {
    require_same_shape(*this, x, "axpy");
    for (std::size_t n = 0; n < data_.size(); ++n) data_[n] += a * x.data_[n];
    return *this;
}

Field& Field::fill(double v) {
    std::fill(data_.begin(), data_.end(), v);
    return *this;
}

bool Field::all_finite() const {
    for (double v : data_)
        if (!std::isfinite(v)) return false;
    return true;
}

double Field::max_abs() const {
    double m = 0.0;
    for (double v : data_) m = std::max(m, std::abs(v));
    return m;
}

Field operator+(Field a, const Field& b) { return a += b; }
Field operator-(Field a, const Field& b) { return a -= b; }
Field operator*(double s, Field a) { return a *= s; }

double dot(const Field& a, const Field& b) {
    require_same_shape(a, b, "dot");
    auto x = a.values();
    auto y = b.values();
    double s = 0.0;
    for (std::size_t n = 0; n < x.size(); ++n) s += x[n] * y[n];
    return s;
}

double inner_l2(const Field& a, const Field& b) { return dot(a, b) * a.grid().cell_volume(); }

double norm_l2(const Field& a) { return std::sqrt(inner_l2(a, a)); }

double norm_lp(const Field& a, double p) {
    // Pointwise magnitude across components, then the L^p integral.
    const auto& g = a.grid();
    const std::size_t n = g.points();
    double s = 0.0;
    for (std::size_t q = 0; q < n; ++q) {
        double m2 = 0.0;
        for (int c = 0; c < a.components(); ++c) {
            double v = a.values()[c * n + q];
            m2 += v * v;
        }
        s += std::pow(std::sqrt(m2), p);
    }
    return std::pow(s * g.cell_volume(), 1.0 / p);
}

Field multiply(const Field& a, const Field& scalar) {
    if (scalar.components() != 1 || scalar.grid() != a.grid())
        throw InvalidField("multiply: expected a scalar field on the same grid");
    Field out(a.grid(), a.components());
    const std::size_t n = a.component_size();
    auto s = scalar.values();
    for (int c = 0; c < a.components(); ++c) {
        auto src = a.component(c);
        auto dst = out.component(c);
        for (std::size_t q = 0; q < n; ++q) dst[q] = src[q] * s[q];
    }
    return out;
}

Field magnitude(const Field& a) {
    Field out(a.grid(), 1);
    const std::size_t n = a.component_size();
    auto dst = out.values();
    for (int c = 0; c < a.components(); ++c) {
        auto src = a.component(c);
        for (std::size_t q = 0; q < n; ++q) dst[q] += src[q] * src[q];
    }
    for (auto& v : dst) v = std::sqrt(v);
    return out;
}

}  // namespace hydroldp
