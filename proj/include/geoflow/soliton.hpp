#pragma once

#include <array>
#include <optional>
#include <span>
#include <vector>

#include "geoflow/fields.hpp"
#include "geoflow/geometry.hpp"

namespace geoflow {

struct SolitonConstants {
    double lambda = 0.0;
    double mu = 0.0;
};

/// a*lambda + b*mu = c, normalized so that b = 1 when mu enters, else a = 1.
struct ConstraintLine {
    double a = 0.0;
    double b = 0.0;
    double c = 0.0;
    bool contains(const SolitonConstants& k, double tol) const { return std::abs(a * k.lambda + b * k.mu - c) <= tol; }
};

struct FitResult {
    SolitonConstants constants;        // minimum-norm least-squares solution
    bool rank_deficient = false;
    std::optional<ConstraintLine> line;
    std::array<double, 2> singular_values{};
    std::vector<double> point_residuals;  // sup-norm of the residual tensor per sample
    double residual_sup = 0.0;
    double metric_sup = 0.0;              // sup |g_ij| over the samples
    double threshold = 0.0;
    bool is_soliton = false;
};

struct KillingDefects {
    double killing = 0.0;      // sup |L g|
    double two_killing = 0.0;  // sup |L L g|
    double parallel = 0.0;     // sup |nabla zeta|
};

struct SolitonReport {
    bool soliton = false;
    FitResult fit;
    KillingDefects defects;
};

/// Soliton acceptance threshold 1e-6 (1 + metric_sup).
double soliton_threshold(double metric_sup);

/// L L g + lambda L g - (mu - r) g.
SymTensorValue soliton_residual(const MetricField& g, const VectorField& zeta, const SolitonConstants& c,
                                std::span<const double> p);

/// Least squares in (lambda, mu) over the components i <= j at every sample, by SVD.
/// Rank deficiency: smallest singular value below 1e-10 times the largest.
FitResult fit_soliton_constants(const MetricField& g, const VectorField& zeta,
                                const std::vector<std::vector<double>>& samples);

/// Riemannian-majorant norms, sup over samples.
KillingDefects killing_defects(const MetricField& g, const VectorField& zeta,
                               const std::vector<std::vector<double>>& samples);

SolitonReport soliton_report(const MetricField& g, const VectorField& zeta,
                             const std::vector<std::vector<double>>& samples);

/// |L L g|^2 - n (mu - r)^2 - lambda^2 |L g|^2 with signature-aware norms. Requires the
/// soliton residual and div zeta to vanish at p; throws PreconditionError otherwise.
double hilbert_schmidt_identity_residual(const MetricField& g, const VectorField& zeta, const SolitonConstants& c,
                                         std::span<const double> p);

struct GradientRelation {
    std::vector<double> residual;       // dr + 2 lambda (d div zeta + (Q zeta)_flat)
    std::vector<double> div_lie2;       // div(L L g), the term the relation drops
    std::vector<double> full_relation;  // div(L L g) + lambda div(L g) + dr, zero on any soliton
};

GradientRelation gradient_relation_residual(const MetricField& g, const VectorField& zeta, double lambda,
                                            std::span<const double> p);

struct ZetaRicFit {
    std::optional<double> a;         // absent when Q vanishes at every sample
    double defect = 0.0;             // sup |nabla zeta - a Q| at the fitted a (|nabla zeta| if a is absent)
    double trace_lie_ricci_sup = 0.0;  // sup |trace_g(L_zeta Ric)|
};

/// Least-squares a minimizing sum |nabla zeta - a Q|^2 of mixed tensors, majorant inner product.
ZetaRicFit zeta_ric_fit(const MetricField& g, const VectorField& zeta, const std::vector<std::vector<double>>& samples);

struct YanoCheck {
    double integral = 0.0;
    double ricci = 0.0;      // integral of Ric(zeta, zeta)
    double half_lie = 0.0;   // integral of 1/2 |L g|^2
    double nabla = 0.0;      // integral of |nabla zeta|^2
    double divergence = 0.0; // integral of (div zeta)^2
    double volume = 0.0;
};

/// Quadrature of Ric(zeta, zeta) + 1/2 |L g|^2 - |nabla zeta|^2 - (div zeta)^2 on a fully periodic chart.
YanoCheck yano_torus_check(const MetricField& g, const VectorField& zeta, int resolution);

}  // namespace geoflow
