#pragma once

#include <array>
#include <optional>
#include <span>
#include <vector>

#include "geoflow/fields.hpp"
#include "geoflow/geometry.hpp"
#include "geoflow/soliton.hpp"

namespace geoflow {

/// Unit normal choice. Naive is the normalized Hodge normal *(d_1 X ^ ... ^ d_n X), raised
/// with the ambient metric (for surfaces in R^3 the cross product d_1 X x d_2 X). Auto takes
/// the sign that makes the last nonzero ambient component of N positive at each point.
enum class NormalOrientation { Auto, Naive, Flipped };

/// Immersion X: U -> R^{n+1} of a chart into flat space with metric diag(-1 (x s), +1, ...),
/// the first s = ambient_signature coordinates timelike.
class Embedding {
public:
    Embedding(ChartPtr source, std::vector<Expr> map, int ambient_signature = 0,
              NormalOrientation orientation = NormalOrientation::Auto);

    const ChartPtr& chart() const { return chart_; }
    int dim() const { return chart_->dim(); }
    int ambient_dim() const { return dim() + 1; }
    int ambient_signature() const { return ambient_signature_; }
    double eta(int a) const { return a < ambient_signature_ ? -1.0 : 1.0; }
    NormalOrientation orientation() const { return orientation_; }
    const std::vector<Expr>& map() const { return map_; }
    Embedding with_orientation(NormalOrientation o) const;

    /// Pullback of the ambient metric; jet-source backed, orders up to 3. The declared
    /// signature is the one found at the center of the chart box.
    const MetricField& induced_metric() const { return induced_; }
    /// Tangential part of the ambient position field.
    const VectorField& tangential_position() const { return tangential_; }

    /// Jets of the extrinsic data at p. `order` is the order of the immersion jets (<= 4);
    /// the metric, tangents, normal, rho and zeta_top come out one order lower and the
    /// second fundamental form two orders lower.
    struct Frame {
        int n = 0;
        double epsilon = 1.0;  // <N, N>
        Jets position;         // X^a
        Jets tangents;         // [i*(n+1) + a] = d_i X^a
        Jets g;
        Jets ginv;
        Jets normal;           // N^a
        Jets A_lower;          // <d_i d_j X, N> = g(A d_i, d_j)
        Jets shape;            // A^i_j, [i*n + j]
        Jet rho;               // position = dX(zeta_top) + rho N
        Jets zeta_top;
    };
    Frame frame(std::span<const double> p, int order) const;

private:
    ChartPtr chart_;
    std::vector<Expr> map_;
    int ambient_signature_;
    NormalOrientation orientation_;
    MetricField induced_;
    VectorField tangential_;
};

struct ShapeData {
    std::vector<double> point;
    int n = 0;
    std::vector<double> metric;
    std::vector<double> normal;        // ambient components
    double epsilon = 1.0;              // <N, N>
    std::vector<double> second_form;   // h_ij with h(X, Y) = h_ij X^i Y^j N
    std::vector<double> shape;         // A^i_j, g(A X, Y) = g(h(X, Y), N)
    std::vector<double> zeta_top;
    double rho = 0.0;
    double self_adjoint_defect = 0.0;  // sup |g(A e_i, e_j) - g(A e_j, e_i)|
};

ShapeData induced_geometry(const Embedding& e, std::span<const double> p);

struct ConcurrentDecomposition {
    std::vector<double> zeta_top;
    double rho = 0.0;
    /// sup |X - dX(zeta_top) - rho N| over ambient components.
    double reconstruction_defect = 0.0;
};

ConcurrentDecomposition concurrent_decomposition(const Embedding& e, std::span<const double> p);

/// The three concurrent-field relations, left sides intrinsic on the induced metric,
/// right sides from rho and A:
///     nabla zeta_top               = I + rho A                              (mixed)
///     L g                          = 2 (g + rho A)                          (lowered)
///     L L g                        = 2 (2 g + 4 rho A + 2 rho^2 A^2 + nabla_{zeta_top}(rho A))
struct ConcurrentFormulaResiduals {
    Residual nabla;
    Residual lie;
    Residual lie2;
    std::array<double, 3> sup() const { return {nabla.sup(), lie.sup(), lie2.sup()}; }
    std::array<double, 3> relative() const { return {nabla.relative(), lie.relative(), lie2.relative()}; }
};

ConcurrentFormulaResiduals concurrent_formula_residuals(const Embedding& e, std::span<const double> p);

/// Intrinsic scalar curvature against epsilon ((tr A)^2 - tr A^2).
Residual gauss_scalar_residual(const Embedding& e, std::span<const double> p);

enum class MetallicTarget { ShapeOperator, ConcurrentShape };

/// Least squares (a, b) for X^2 = a X + b I with X = A or X = rho A, by SVD.
struct MetallicFit {
    double a = 0.0;
    double b = 0.0;
    bool rank_deficient = false;
    std::optional<ConstraintLine> line;  // a-coefficient, b-coefficient, right side
    double residual = 0.0;               // sup over samples of sup |X^2 - a X - b I|
    double scale = 0.0;                  // sup |X^2|
    bool metallic = false;               // residual <= 1e-8 (1 + scale)
};

MetallicFit metallic_fit(const Embedding& e, const std::vector<std::vector<double>>& samples,
                         MetallicTarget target = MetallicTarget::ShapeOperator);

/// The quadratic a X + b I that rho A must satisfy on a soliton with parallel rho A:
/// a = -(lambda + 4)/2, b = -(2 lambda - mu + r + 4)/4.
std::pair<double, double> metallic_theorem_coefficients(const SolitonConstants& c, double r);

struct ConcurrentNorms {
    // closed forms from B = rho A
    double lie_closed = 0.0;     // 4 (|B|^2 + 2 tr B + n)
    double nabla_closed = 0.0;   // |B|^2 + 2 tr B + n
    double div2_closed = 0.0;    // (tr B + n)^2
    // tensor calculus on the induced metric
    double lie_direct = 0.0;
    double nabla_direct = 0.0;
    double div2_direct = 0.0;
};

ConcurrentNorms concurrent_norms(const Embedding& e, std::span<const double> p);

/// For rho A = f I: 4 f^2 + 2 (lambda + 4) f + 2 zeta_top(f) + 2 lambda - mu + r + 4, with
/// f = tr(rho A)/n; `umbilicity` is sup |rho A - f I|.
struct UmbilicalCheck {
    double f = 0.0;
    double relation = 0.0;
    double umbilicity = 0.0;
};

UmbilicalCheck umbilical_residual(const Embedding& e, const SolitonConstants& c, std::span<const double> p);

}  // namespace geoflow
