#pragma once

// Explicit model metrics near a divisor, realized on log-polar charts
// (annulus for n = 1, annulus x fiber for n >= 2) with ||S|| ~ |z_1|.

#include "kahler/error.hpp"
#include "kahler/field.hpp"

#include <optional>
#include <string>
#include <vector>

namespace kahler {

/// Section norm ||S||^2 = |z_1|^2 e^{-psi} and weight ||.||_phi = e^{-phi/2} ||.||,
/// so L = -log ||S||_phi^2 = -log |z_1|^2 + psi + phi.
struct DivisorModel {
    ChartPtr chart;
    int n = 1;
    int k = 1;  // rank; k = n is the ample case
    ScalarField psi;
    ScalarField phi;
    /// Fiber form, full n x n with vanishing z_1 row; semi-ample case only.
    std::optional<Form11Field> omega_fiber;
    /// Reference form omega'; empty means the model form itself.
    std::optional<MetricField> omega_ref;
    /// Ric(omega') - Omega = ddbar Psi.
    ScalarField Psi;

    /// Throws ConfigError / FieldError on a broken model.
    void validate() const;
    bool ample() const { return k == n; }
    /// 1 <= k < n - 1 is the range the construction states; k = n - 1 is
    /// accepted but flagged.
    bool k_outside_stated_range() const { return k < n && k >= n - 1; }

    ScalarField section_norm() const;  // ||S||
    ScalarField log_term() const;      // L
};

enum class FiberWeight { none, flat, spherical };
enum class Reference { euclidean, self };

/// Closed-form presets.
struct ModelSpec {
    int n = 1;
    int k = 0;  // 0 means n
    double r_min = 1e-6;
    double r_max = 0.5;
    int radial = 256;
    int angular = 32;
    int fiber_resolution = 32;
    FiberKind fiber_kind = FiberKind::patch;
    double fiber_extent = 1.0;
    /// psi = kappa |z'|^2 (flat) or log(1 + |z'|^2) (spherical).
    FiberWeight fiber_weight = FiberWeight::none;
    double kappa = 1.0;
    /// phi = phi_shift + phi_amplitude |z_1|^2.
    double phi_shift = 0.0;
    double phi_amplitude = 0.0;
    /// omega_F = fiber_scale * identity on the fiber directions (k < n).
    double fiber_scale = 1.0;
    Reference reference = Reference::euclidean;
    int fd_order = 8;

    void validate() const;
};

DivisorModel make_model(const ModelSpec& spec);

/// c_k ddbar L^{(k+1)/k}, c_k = k^{1+1/k}/(k+1); requires k = n.
MetricField omega_phi(const DivisorModel& model);

struct SemiAmpleForm {
    Form11Field form;      // direct ddbar evaluation
    Form11Field expanded;  // (kL)^{1/k} (ddbar L + dL ^ dbar L / (kL))
    /// Max over nodes of |direct - expanded| / |direct| in the w = log z_1 frame.
    double agreement = 0.0;
    /// Min over nodes of the number of normalized eigenvalues above 1e-8.
    int rank = 0;
    /// Max over nodes of the (n - rank) smallest normalized eigenvalues.
    double small_eigenvalue = 0.0;
};

/// k-exponent form. Throws FieldError when the two expressions disagree by
/// more than tolerance.
SemiAmpleForm omega_phi_semiample(const DivisorModel& model, double tolerance = 1e-6);

/// omega_phi + (kL)^{1/k} omega_F; equals omega_phi when k = n.
MetricField eta_phi(const DivisorModel& model);

/// Coefficient of s^{n-k} in det(A + s B), i.e. binom(n, k) times the mixed
/// discriminant D(A[k], B[n-k]).
cd top_power_coefficient(const SmallMatrix& a, const SmallMatrix& b, int k);
long binomial(int n, int k);

struct TopPowerCheck {
    double max_relative_defect = 0.0;
    std::size_t nodes_checked = 0;
};

/// det eta_phi against C(k, n) omega_phi^k ^ ((kL)^{1/k} omega_F)^{n-k} at
/// nodes where the margin of eta_phi exceeds min_margin.
TopPowerCheck eta_top_power_check(const DivisorModel& model, double min_margin = 1e-3);

struct FPhi {
    ScalarField f;
    double limit = 0.0;  // innermost-radius angular mean, subtracted when requested
};

/// -log||S||^2 - log(form^n / omega'^n) - Psi, form = omega_phi or eta_phi.
FPhi f_phi_detailed(const DivisorModel& model, bool subtract_limit = true);
ScalarField f_phi(const DivisorModel& model);

/// Sum over terms of (S^i Sbar^j theta + conj) (-log ||S||^2)^l, S = z_1.
struct LogExpansion {
    struct Term {
        int i = 0;
        int j = 0;
        int l = 0;
        ScalarField theta;  // complex-tagged or real
    };
    std::vector<Term> terms;
    void validate() const;
};

ScalarField evaluate_expansion(const LogExpansion& e, const DivisorModel& model);

/// Radial window in fractions of the chart's -log r range, measured from
/// the inner edge; skip drops rows next to the inner boundary.
struct FitWindow {
    double inner = 0.0;
    double outer = 0.5;
    int skip = 8;
    void validate() const;
};

struct DecayFit {
    double a = 0.0;  // power of ||S||
    double b = 0.0;  // power of -log ||S||^2
    double constant = 0.0;
    double residual = 0.0;  // rms of the log misfit
    int row_lo = 0, row_hi = 0;  // rows used, half open
    double r_lo = 0.0, r_hi = 0.0;
    int excluded_rows = 0;  // rows dropped because the field vanished
    bool identically_zero = false;
    bool resolved = true;  // residual below kFitResidualLimit
};

inline constexpr double kFitResidualLimit = 1e-2;

/// Least squares of log(row max |field|) against a log||S|| + b log(-log||S||^2).
DecayFit decay_fit(const ScalarField& field, const DivisorModel& model, const FitWindow& window = {});

/// |R| of omega_phi and its decay fit. For n = 1 the profile is flagged
/// identically zero when |R| stays below 1e-6.
DecayFit curvature_decay_profile(const DivisorModel& model, const FitWindow& window = {});
DecayFit curvature_decay_profile(const MetricField& g, const DivisorModel& model, const FitWindow& window = {});

struct RadialProfile {
    std::vector<double> r;
    std::vector<double> length;  // from r to r_max along the reference line
    /// length ~ coefficient (-log r)^exponent + offset over the window.
    double exponent = 0.0;
    double coefficient = 0.0;
    double offset = 0.0;
    double residual = 0.0;
    bool bounded = false;
};

RadialProfile completeness_profile(const MetricField& g, const DivisorModel& model, const FitWindow& window = {});

struct VolumeProfile {
    std::vector<double> radius;  // metric radius R = length(r)
    std::vector<double> volume;  // Vol({r' >= r})
    double alpha = 0.0;
    double residual = 0.0;
    bool bounded = false;
};

VolumeProfile volume_growth_profile(const MetricField& g, const DivisorModel& model, const FitWindow& window = {});

/// Max over nodes of |d_k h_{i jbar} - d_i h_{k jbar}| relative to the
/// node's coefficient scale (w = log z_1 frame on log-polar charts).
double closedness_defect(const Form11Field& h, int skip_rows = 0);

/// Node coefficients in the w = log z_1 frame (unchanged on other charts).
SmallMatrix w_frame(const Form11Field& h, std::size_t node);

}  // namespace kahler
