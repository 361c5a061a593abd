#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hydroldp/field.hpp"

namespace hydroldp {

enum class NoiseMode : std::uint8_t { Ito = 0, Stratonovich = 1 };

const char* to_string(NoiseMode m);

// Transport noise coefficients. phi/psi are 3-component fields; gamma holds the
// z-independent 2x2 turbulent-pressure matrices, component 2*l + m.
struct NoiseFamily {
    GridSpec grid{};
    NoiseMode mode = NoiseMode::Ito;
    std::vector<Field> phi;
    std::vector<Field> psi;
    std::vector<Field> gamma;
    double M = 0.0;
    double delta = 0.5;
    double nu = 0.0;
    bool psi_divergence_free = false;

    int size() const { return static_cast<int>(phi.size()); }
    bool has_gamma() const { return !gamma.empty(); }
    void validate_shapes() const;
    // phi and psi multiplied by factor, gamma untouched; nu and M rescaled, no parabolicity check.
    NoiseFamily scaled(double factor) const;
    static NoiseFamily zero(const GridSpec& grid, int n, NoiseMode mode = NoiseMode::Ito);
};

struct KraichnanParams {
    int modes = 4;
    double s = 1.0;                  // shell decay exponent
    double sigma = 0.5;              // amplitude of the constant shell
    double vertical_ratio = 0.5;     // phi^3 amplitude relative to the horizontal part
    double psi_vertical_ratio = 0.1; // same for psi; its overturning partner keeps div psi = 0
    double gamma_amplitude = 0.0;    // 0 disables turbulent pressure
    double delta = 0.5;
    NoiseMode mode = NoiseMode::Ito;
};

// Deterministic Kraichnan-type family. Throws ParabolicityViolation when nu >= 2.
NoiseFamily build_kraichnan(const KraichnanParams& p, const GridSpec& grid);
// Same construction without the parabolicity gate.
NoiseFamily build_kraichnan_unchecked(const KraichnanParams& p, const GridSpec& grid);
// sigma giving the requested nu for otherwise fixed parameters (nu scales with sigma^2).
double sigma_for_nu(double nu, KraichnanParams p, const GridSpec& grid);
// Integer wavevector used by mode n >= 2 of the family (p, q) and its shell index.
struct KraichnanMode {
    int shell;
    int p;
    int q;
    bool sine;
};
KraichnanMode kraichnan_mode(int n);

// max over grid points of the largest eigenvalue of sum_n f_n f_n^T.
double max_covariance_eigenvalue(const std::vector<Field>& family);

struct AssumptionItem {
    std::string id;
    std::string description;
    double value = 0.0;
    double threshold = 0.0;
    bool pass = false;
};

struct AssumptionReport {
    std::vector<AssumptionItem> items;
    double nu_estimate = 0.0;
    bool all_pass() const;
    const AssumptionItem* find(const std::string& id) const;
};

AssumptionReport check_assumptions(const NoiseFamily& fam);

// (phi . grad) u for a 3-component coefficient; d/dz uses u's boundary condition.
// The product is dealiased when requested.
Field transport(const Field& coeff, const Field& u, bool dealias_product = true);
// Euclidean transpose of u -> transport(coeff, u) with ghosts taken from bc.
Field transport_transpose(const Field& coeff, const Field& cot, BoundaryCondition bc, bool dealias_product = true);

// sum_n sum_m gamma_n^{lm} (Q[(phi_n . grad) v + G_n])^m. `gv` may be null or hold
// evaluated G_{v,n} fields (empty entries are skipped).
Field turbulent_pressure(const NoiseFamily& fam, const Field& v, const std::vector<Field>* gv = nullptr,
                         bool dealias_product = true);
// Cotangents of the per-mode arguments (phi_n . grad) v + G_n for a cotangent of the output.
std::vector<Field> turbulent_pressure_mode_cotangents(const NoiseFamily& fam, const Field& cot);

// Second-order operators of the Ito-Stratonovich conversion.
class CorrectionOperators {
public:
    explicit CorrectionOperators(const NoiseFamily& fam, bool dealias_product = true);

    // sum a^{ij} d_ij v + 1/2 sum (d_i phi^j) phi^i d_j v with a = I + 1/2 sum phi phi^T.
    Field apply_Lphi(const Field& v) const;
    // (sum_n sum_i d_j phi_n^i (Q[(phi_n . grad) v])^i)_j
    Field apply_Pphi(const Field& v) const;
    // div(a_psi grad theta) - 1/2 sum (div psi_n)(psi_n . grad theta).
    Field apply_Lpsi(const Field& theta) const;
    // Laplacian built with the same stencils, so apply_Lphi(v) - laplacian(v) vanishes for phi = 0.
    Field laplacian(const Field& u) const;

    // Drift added in Stratonovich mode: 1/2 sum B_n^2.
    Field velocity_correction(const Field& v) const;
    Field temperature_correction(const Field& theta) const;

    const Field& half_covariance_phi() const { return half_cov_phi_; }
    const Field& half_covariance_psi() const { return half_cov_psi_; }
    const Field& first_order_psi() const { return b_psi_; }

    // sum a^{ij} d_ij u + sum b^j d_j u for a 9-component a and 3-component b.
    Field second_order(const Field& u, const Field& a, const Field& b) const;

private:
    const NoiseFamily* fam_;
    bool dealias_;
    Field half_cov_phi_;  // 1/2 sum phi phi^T, component 3*i + j
    Field b_phi_;
    Field half_cov_psi_;
    Field b_psi_;         // d_i a_psi^{ij} - 1/2 sum (div psi_n) psi_n^j
    std::vector<Field> dphi_;  // per mode, component 2*j + i holds d_j phi^i (horizontal only)
};

void write_noise_family(const std::string& path, const NoiseFamily& fam);
NoiseFamily read_noise_family(const std::string& path);

}  // namespace hydroldp
