#pragma once

#include <cstddef>
#include <numbers>

namespace hydroldp {

// Periodic box [0,lx) x [0,ly) horizontally, cell-centred layers on (-h, 0).
struct GridSpec {
    int nx = 16;
    int ny = 16;
    int nz = 8;
    double h = 1.0;
    double lx = 2.0 * std::numbers::pi;
    double ly = 2.0 * std::numbers::pi;

    void validate() const;

    double dx() const { return lx / nx; }
    double dy() const { return ly / ny; }
    double dz() const { return h / nz; }
    std::size_t columns() const { return static_cast<std::size_t>(nx) * ny; }
    std::size_t points() const { return columns() * nz; }
    double cell_volume() const { return dx() * dy() * dz(); }
    double area() const { return lx * ly; }
    double volume() const { return lx * ly * h; }

    double x(int i) const { return i * dx(); }
    double y(int j) const { return j * dy(); }
    double z(int k) const { return -h + (k + 0.5) * dz(); }

    // Half-spectrum length along y used by real transforms.
    int nky() const { return ny / 2 + 1; }

    bool operator==(const GridSpec&) const = default;
};

}  // namespace hydroldp
