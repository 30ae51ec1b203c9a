#pragma once

// Barrier potentials C [S^i Sbar^j theta + conj] (-n log||S||^2)^k on a
// divisor model, their Monge-Ampere density against omega_phi, and the
// closed-form expansion of that density.

#include "kahler/model.hpp"

#include <json.hpp>

#include <string>
#include <vector>

namespace kahler {

enum class BarrierCoefficients {
    model,      // middle nk(i+j) + (i+j)(n-1)/2 on both sections, constant nk(nk-1)
    as_printed  // middle k(i+j) + j(n-1) and k(i+j) + i(n-1), constant k(k-n)
};

struct BarrierSpec {
    double amplitude = 1e-2;  // C
    int i = 1, j = 1;
    int k = 1;
    ScalarField theta;  // real or complex, on the model chart
    DivisorModel model;
    BarrierCoefficients coefficients = BarrierCoefficients::model;
    /// Mutation control: leave out the constant term of the expansion.
    bool drop_constant = false;
    FitWindow window;

    void validate() const;
};

/// theta presets: 1, or 1 + z_1 / 2 (a smooth non-constant section).
ScalarField theta_constant(const ChartPtr& chart);
ScalarField theta_linear(const ChartPtr& chart);

/// S^i Sbar^j theta in the unitary frame of ||.||_phi:
/// ||S||_phi^{i+j} e^{i(i-j) arg z_1} theta.
ScalarField barrier_section(const BarrierSpec& spec);

ScalarField barrier_potential(const BarrierSpec& spec);

struct BarrierDensity {
    ScalarField density;        // (omega + ddbar b)^n / omega^n
    ScalarField excess;         // density - 1, expanded in C without cancellation
    double amplitude = 0.0;     // C actually used
    int halvings = 0;
    double margin = 0.0;        // min eigenvalue of omega + ddbar b
};

/// Halves C until the perturbed form has margin above kBarrierMargin.
inline constexpr double kBarrierMargin = 1e-6;
BarrierDensity barrier_density(const BarrierSpec& spec);
ScalarField barrier_lhs(const BarrierSpec& spec);

/// 1 + C y^{k - (n+1)/n} { ij y^2 X - y (m1 T + m2 Tbar) + c0 X }, y = -n log||S||_phi^2,
/// T = barrier_section, X = T + Tbar.
ScalarField barrier_rhs(const BarrierSpec& spec);

struct RhsTerms {
    ScalarField leading;   // ij y^2 X part
    ScalarField middle;
    ScalarField constant;
};
/// The three terms of barrier_rhs without the factor C y^{k - (n+1)/n}.
RhsTerms barrier_rhs_terms(const BarrierSpec& spec);

/// Largest radius r such that the leading term dominates the other two on
/// every row at radius <= r (angular max); 0 if it never does.
double dominance_crossover(const BarrierSpec& spec);

enum class BarrierStatus { pass, fail, inconclusive };
std::string to_string(BarrierStatus s);

struct BarrierReport {
    std::vector<double> radius;
    std::vector<double> residual;  // angular max of |lhs - rhs| / |rhs| per row
    DecayFit fit;
    double order = 0.0;
    int expected_order = 0;
    BarrierStatus status = BarrierStatus::fail;
    double amplitude = 0.0;
    int halvings = 0;
    double margin = 0.0;
    double crossover_radius = 0.0;
};

/// Pass iff the fitted power is at least i + j + 1 - 0.15; a fit residual
/// above kFitResidualLimit gives inconclusive.
BarrierReport verify_barrier(const BarrierSpec& spec);

struct DecayBound {
    ScalarField ratio;           // |u| / ||S||^{m+1}
    double constant = 0.0;       // C* = max ratio
    std::vector<double> shells;  // max ratio per radial shell, outermost first
    bool pass = false;
};

inline constexpr int kDecayShells = 8;

/// C* = max |u| / ||S||^{m+1}; passes iff C* is finite and the per-shell
/// maxima do not increase toward the divisor.
DecayBound decay_bound_check(const ScalarField& u, int m, const DivisorModel& model);

nlohmann::json to_json(const BarrierReport& r);
/// radius, residual rows.
std::string residual_csv(const BarrierReport& r);

}  // namespace kahler
