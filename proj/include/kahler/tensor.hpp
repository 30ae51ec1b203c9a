#pragma once

#include "kahler/field.hpp"

namespace kahler {

struct DdbarOptions {
    /// Reject inputs whose spectral tail on periodic axes is heavier than
    /// this (relative to the largest coefficient). Negative disables.
    double max_tail_ratio = 1e-6;
};

/// Coefficients of ddbar(phi): h_{ij} = d^2 phi / dz_i dzbar_j.
Form11Field ddbar(const ScalarField& phi, const DdbarOptions& opt = {});

/// Tail ratio used by ddbar, maximized over the periodic axes (0 if none).
double spectral_tail_ratio(const ScalarField& phi);

/// log det(g) per node; DegeneracyError at the worst node if not finite.
ScalarField log_det(const MetricField& g);
ScalarField det(const Form11Field& h);

Form11Field ricci_form(const MetricField& g);
Form11Field first_chern_form(const MetricField& g);

/// g^{ij} a_{ij} per node.
ScalarField trace(const Form11Field& a, const MetricField& g);

ScalarField ma_density(const MetricField& omega, const ScalarField& u);
ScalarField metric_laplacian(const MetricField& g, const ScalarField& v);

/// Sum over nodes of weight * f * det(g). With the identity metric this is
/// the Lebesgue integral; integrate(1, flat unit torus) = 1.
double integrate(const ScalarField& f, const MetricField& g);
double chart_volume(const MetricField& g);

ScalarField positivity_margin(const Form11Field& h);

/// R_{i jbar k lbar} = -d_k dbar_l g_{i jbar} + g^{p qbar} d_k g_{i qbar} dbar_l g_{p jbar},
/// computed slab by slab along the radial axis. Norms are taken in the
/// metric h itself (unitary frame).
CurvatureField curvature_tensor(const MetricField& g);
/// Same computation, keeping only the pointwise norm.
ScalarField curvature_norm(const MetricField& g);

/// g^{i jbar} R_{i jbar k lbar}.
Form11Field ricci_contraction(const CurvatureField& r, const MetricField& g);

}  // namespace kahler
