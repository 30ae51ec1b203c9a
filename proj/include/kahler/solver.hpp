#pragma once

#include "kahler/error.hpp"
#include "kahler/field.hpp"

#include <json.hpp>

#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace kahler {

/// (omega + ddbar u)^n = e^{f + c} omega^n on a torus chart.
struct CalabiProblem {
    MetricField omega;
    ScalarField f;
    double c = 0.0;

    /// Fills c with the normalization constant of f.
    static CalabiProblem normalized(MetricField omega, ScalarField f);
};

struct ContinuityState {
    double s = 0.0;
    ScalarField u;
    double c = 0.0;
    double residual = 0.0;
};

struct SolverConfig {
    std::vector<double> schedule = geometric_schedule(8);
    double newton_tolerance = 1e-11;
    int max_newton_iterations = 30;
    double linear_tolerance = 1e-10;
    int max_linear_iterations = 400;
    int gmres_restart = 40;
    int max_halvings = 20;
    int max_bisections = 10;

    void validate() const;
    /// {0, 2^{-(steps-1)}, ..., 1/2, 1}.
    static std::vector<double> geometric_schedule(int steps);
};

struct NewtonStep {
    ScalarField u;
    double residual_before = 0.0;
    double residual_after = 0.0;
    double damping = 1.0;
    int halvings = 0;
    int linear_iterations = 0;
    double linear_residual = 0.0;
    double margin = 0.0;
};

struct StepRecord {
    double s = 0.0;
    double c_s = 0.0;
    std::vector<double> residuals;  // sup residual before each Newton step, then the final one
    std::vector<double> dampings;
    std::vector<int> linear_iterations;
    double margin = 0.0;
    int halvings = 0;
    double seconds = 0.0;
};

enum class SolveStatus { success, failed };

struct SolveReport {
    SolveStatus status = SolveStatus::failed;
    ScalarField u;
    double c = 0.0;
    double epsilon = 0.0;  // > 0 for the perturbed equation
    double final_residual = 0.0;
    double margin = 0.0;
    double cohomology_defect = 0.0;
    int bisections = 0;
    std::vector<StepRecord> steps;
    double seconds = 0.0;
    std::string message;
};

/// Path failure: carries the last accepted state and the partial report.
struct SolveError : KahlerError {
    SolveError(const std::string& what, ContinuityState last_good, SolveReport partial)
        : KahlerError(what), last_good(std::move(last_good)), partial(std::move(partial)) {}
    ContinuityState last_good;
    SolveReport partial;
};

/// (f + c, c) with int (e^{f+c} - 1) omega^n = 0.
std::pair<ScalarField, double> normalize_source(const ScalarField& f, const MetricField& omega);
/// (s f + c_s, c_s) with the same normalization at parameter s.
std::pair<ScalarField, double> continuity_source(const ScalarField& f, const MetricField& omega, double s);

/// sup |log ma_density(omega, u) - target - epsilon u|.
double ma_residual(const MetricField& omega, const ScalarField& u, const ScalarField& target, double epsilon = 0.0);

/// One damped Newton step for log ma_density(omega, u) = target.
ScalarField newton_step(const MetricField& omega, const ScalarField& u, const ScalarField& target,
                        const SolverConfig& config);
/// Same, with diagnostics; epsilon > 0 adds the -epsilon u term of the
/// perturbed equation (and drops the gauge projection).
NewtonStep newton_step_detailed(const MetricField& omega, const ScalarField& u, const ScalarField& target,
                                const SolverConfig& config, double epsilon = 0.0);

SolveReport solve_calabi(const CalabiProblem& problem, const SolverConfig& config = {},
                         const std::optional<ScalarField>& initial_guess = std::nullopt);
/// log det = f + epsilon u, continued along s f from u = 0.
SolveReport solve_perturbed(const MetricField& omega, const ScalarField& f, double epsilon,
                            const SolverConfig& config = {});

/// Mean of u against omega^n.
double gauge_mean(const ScalarField& u, const MetricField& omega);

/// Standard deviation of u1 - u2 against omega^n.
double uniqueness_defect(const ScalarField& u1, const ScalarField& u2, const MetricField& omega);

struct UniquenessReport {
    double defect = 0.0;
    /// int (u1 - u2)(omega_{u1}^n - omega_{u2}^n); non-positive.
    double energy_identity = 0.0;
    /// (1/n) int |d(u1 - u2)|^2 omega^n.
    double gradient_energy = 0.0;
};

/// Validating variant: both inputs must solve the problem to within
/// 10 * tolerance, otherwise FieldError.
UniquenessReport uniqueness_defect(const ScalarField& u1, const ScalarField& u2, const CalabiProblem& problem,
                                   double tolerance);

nlohmann::json to_json(const SolveReport& r);
/// s, newton_iteration, residual rows.
std::string residual_csv(const SolveReport& r);

}  // namespace kahler
