#pragma once

#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "geoflow/curvature.hpp"
#include "geoflow/fields.hpp"
#include "geoflow/jet.hpp"

namespace geoflow {

using Jets = std::vector<Jet>;

/// Jet-level tensor algebra. Index layouts: vectors and covectors have n entries,
/// (0,2) tensors are row-major n*n, Gamma as in curvature.hpp. Results carry the
/// smallest order that the inputs support.
namespace calc {

/// d_i f, one order lower.
Jets partials(const Jet& f);
/// (L_v T)_ij = v^k d_k T_ij + T_kj d_i v^k + T_ik d_j v^k.
Jets lie_derivative(const Jets& T, const Jets& v, int n);
/// [i*n + j] = nabla_j v^i.
Jets covariant_vector(const Jets& v, const Jets& gamma, int n);
/// [i*n + j] = nabla_i w_j.
Jets covariant_covector(const Jets& w, const Jets& gamma, int n);
/// [(k*n + i)*n + j] = nabla_k T_ij.
Jets covariant_02(const Jets& T, const Jets& gamma, int n);
/// (div T)_j = g^{ki} nabla_k T_ij.
Jets divergence_02(const Jets& T, const Jets& ginv, const Jets& gamma, int n);
Jet divergence(const Jets& v, const Jets& gamma, int n);
/// nabla_i d_j f.
Jets hessian(const Jet& f, const Jets& gamma, int n);
Jets raise(const Jets& w, const Jets& ginv, int n);
Jets lower(const Jets& v, const Jets& g, int n);
/// g^{ij} T_ij.
Jet trace(const Jets& T, const Jets& ginv, int n);
/// T_ij u^i v^j.
Jet contract(const Jets& T, const Jets& u, const Jets& v, int n);
/// w_i v^i.
Jet pair(const Jets& w, const Jets& v);
/// v^i d_i f.
Jet directional(const Jets& v, const Jet& f);
/// g^{ik} g^{jl} T_ij S_kl.
Jet inner02(const Jets& T, const Jets& S, const Jets& ginv, int n);
/// g_ik g^{jl} A^i_j A^k_l for A[i*n + j] = nabla_j v^i.
Jet mixed_norm2(const Jets& A, const Jets& g, const Jets& ginv, int n);
/// A^i_j v^j.
Jets apply_mixed(const Jets& A, const Jets& v, int n);
Jets scaled(Jets T, double s);
Jets add(Jets a, const Jets& b, double s = 1.0);
std::vector<double> values(const Jets& a);

}  // namespace calc

/// Jets of the metric, its inverse, Levi-Civita symbols and curvature at one point.
///
/// The constructor rejects degenerate points (|det g| < 1e-10 scale^n, scale the
/// largest |g_ij|) and points where the eigenvalue sign count differs from the
/// declared signature.
class PointGeometry {
public:
    PointGeometry(const MetricField& metric, std::span<const double> point, int order);

    int dim() const { return n_; }
    int order() const { return order_; }
    const std::vector<double>& point() const { return point_; }
    const MetricField& metric() const { return *metric_; }

    const Jets& g() const { return g_; }
    const Jets& ginv() const { return ginv_; }
    /// Order K-1; requires K >= 1.
    const Jets& christoffel() const;
    /// Order K-2; requires K >= 2. Computed on first use.
    const CurvatureTensors<Jet>& curvature() const;

    Jets vector(const VectorField& v) const;
    Jet scalar(const ScalarField& f) const;
    double determinant() const { return det_; }

private:
    const MetricField* metric_;
    int n_;
    int order_;
    std::vector<double> point_;
    Jets g_, ginv_, gamma_;
    double det_ = 0.0;
    mutable std::optional<CurvatureTensors<Jet>> curvature_;
};

/// Determinant and negative-eigenvalue count of a symmetric matrix.
double determinant(const std::vector<double>& a, int n);
int negative_eigenvalues(const std::vector<double>& a, int n);
/// Throws GeometryError for degenerate or wrongly signed metric values.
void check_metric_values(const std::vector<double>& g, int n, int signature, std::span<const double> point);

struct CurvatureBundle {
    std::vector<double> point;
    int n = 0;
    std::vector<double> christoffel;
    std::vector<double> riemann;
    std::vector<double> ricci;
    std::vector<double> ricci_operator;
    double scalar = 0.0;

    double gamma(int k, int i, int j) const { return christoffel[static_cast<std::size_t>((k * n + i) * n + j)]; }
    double R(int i, int j, int k, int l) const {
        return riemann[static_cast<std::size_t>(((i * n + j) * n + k) * n + l)];
    }
    double Ric(int i, int j) const { return ricci[static_cast<std::size_t>(i * n + j)]; }
};

struct SymTensorValue {
    std::vector<double> point;
    int n = 0;
    std::vector<double> values;

    double operator()(int i, int j) const { return values[static_cast<std::size_t>(i * n + j)]; }
    double sup() const;
};

struct FirstOrderOperators {
    std::vector<double> grad;         // g^{ij} d_j f
    std::vector<double> hessian;      // nabla_i d_j f
    double laplacian = 0.0;
    double divergence = 0.0;
    std::vector<double> nabla_zeta;   // [i*n + j] = nabla_j zeta^i
    double nabla_zeta_norm2 = 0.0;    // signature-aware, may be negative
    std::vector<double> nabla_zeta_zeta;
    double grad_norm2 = 0.0;          // g(grad f, grad f)
};

/// Two independently assembled sides of an identity.
struct Residual {
    std::vector<double> lhs;
    std::vector<double> rhs;

    std::vector<double> difference() const;
    double sup() const;
    double magnitude() const;
    /// sup |lhs - rhs| / (1 + larger side).
    double relative() const { return sup() / (1.0 + magnitude()); }
};

std::vector<double> christoffel(const MetricField& g, std::span<const double> p);
CurvatureBundle curvature(const MetricField& g, std::span<const double> p);
FirstOrderOperators first_order_operators(const MetricField& g, const ScalarField& f, const VectorField& zeta,
                                          std::span<const double> p);
SymTensorValue lie_derivative_metric(const MetricField& g, const VectorField& zeta, std::span<const double> p);
SymTensorValue second_lie_derivative_metric(const MetricField& g, const VectorField& zeta, std::span<const double> p);

/// lhs = div(L_zeta g), rhs = 2(d div zeta + g(Q zeta, .)).
Residual identity_div_lie_residual(const MetricField& g, const VectorField& zeta, std::span<const double> p);
/// nabla^i (d zeta_flat)_ij via partial derivatives of zeta_flat, a route that shares no
/// code with the Lie derivative. The difference of the two sides above equals this.
std::vector<double> codifferential_exterior(const MetricField& g, const VectorField& zeta, std::span<const double> p);
/// lhs = div(L_zeta g), rhs = rough Laplacian of zeta_flat + d div zeta + Ric(zeta, .).
Residual weitzenbock_lie_residual(const MetricField& g, const VectorField& zeta, std::span<const double> p);
/// lhs = trace_g(L_zeta L_zeta g), rhs = 2(|nabla zeta|^2 + div(nabla_zeta zeta) - Ric(zeta, zeta)).
Residual identity_trace_lie2_residual(const MetricField& g, const VectorField& zeta, std::span<const double> p);
/// lhs = 1/2 Lap |grad f|^2, rhs = |nabla grad f|^2 + (grad f)(Lap f) + Ric(grad f, grad f).
Residual bochner_residual(const MetricField& g, const ScalarField& f, std::span<const double> p);
/// lhs = div Ric, rhs = 1/2 dr.
Residual bianchi_residual(const MetricField& g, std::span<const double> p);

/// Uniform-grid quadrature of s * sqrt|det g| over one period box of a fully periodic chart.
double torus_integrate(const MetricField& g, const std::function<double(std::span<const double>)>& s, int resolution);
double torus_integrate(const MetricField& g, const ScalarField& s, int resolution);
/// Several integrands in one pass; `s` returns `count` values per node.
std::vector<double> torus_integrate_many(const MetricField& g,
                                         const std::function<std::vector<double>(std::span<const double>)>& s,
                                         std::size_t count, int resolution);

/// g^{ik} g^{jl} T_ij T_kl from evaluated g.
double tensor_norm2(const std::vector<double>& T, const std::vector<double>& g, int n);
/// Same contraction with the Riemannian majorant |g| (eigenvalues replaced by absolute values).
double majorant_norm2(const std::vector<double>& T, const std::vector<double>& g, int n);

}  // namespace geoflow
