#include "geoflow/hypersurface.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <sstream>

#include "geoflow/curvature.hpp"
#include "geoflow/errors.hpp"
#include "geoflow/lsq.hpp"
#include "geoflow/parallel.hpp"

namespace geoflow {

namespace {

std::size_t sz(int v) { return static_cast<std::size_t>(v); }

std::string point_string(std::span<const double> p) {
    std::ostringstream os;
    os.precision(6);
    os << "(";
    for (std::size_t i = 0; i < p.size(); ++i) os << (i ? ", " : "") << p[i];
    os << ")";
    return os.str();
}

/// Laplace expansion along the first column; m is row-major k*k.
Jet determinant_of(const std::vector<Jet>& m, int k) {
    if (k == 1) return m[0];
    Jet out;
    for (int r = 0; r < k; ++r) {
        std::vector<Jet> minor;
        for (int i = 0; i < k; ++i)
            if (i != r)
                for (int j = 1; j < k; ++j) minor.push_back(m[sz(i * k + j)]);
        Jet term = m[sz(r * k)] * determinant_of(minor, k - 1);
        if (r % 2) out -= term;
        else out += term;
    }
    return out;
}

struct EmbeddingData {
    ChartPtr chart;
    std::vector<Expr> map;
    int signature;
};

Embedding::Frame compute_frame(const EmbeddingData& d, NormalOrientation orientation, std::span<const double> p,
                               int order) {
    const int n = d.chart->dim(), m = n + 1;
    auto eta = [&](int a) { return a < d.signature ? -1.0 : 1.0; };
    if (order < 1 || order > kMaxJetOrder) throw std::invalid_argument("frame order must be in [1, 4]");
    if (static_cast<int>(p.size()) != n)
        throw GeometryError("point dimension " + std::to_string(p.size()) + " does not match chart dimension " +
                            std::to_string(n));
    Embedding::Frame f;
    f.n = n;
    for (int a = 0; a < m; ++a) f.position.push_back(d.map[sz(a)].jet(p, order));
    f.tangents.resize(sz(n * m));
    for (int i = 0; i < n; ++i)
        for (int a = 0; a < m; ++a) f.tangents[sz(i * m + a)] = f.position[sz(a)].derivative(i);
    auto T = [&](int i, int a) -> const Jet& { return f.tangents[sz(i * m + a)]; };

    Eigen::MatrixXd J(m, n);
    for (int a = 0; a < m; ++a)
        for (int i = 0; i < n; ++i) J(a, i) = T(i, a).value();
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(J);
    const auto& sv = svd.singularValues();
    if (!(sv(n - 1) > 1e-10 * sv(0)))
        throw GeometryError("immersion rank deficiency at " + point_string(p) + " (singular values " +
                            std::to_string(sv(0)) + ", " + std::to_string(sv(n - 1)) + ")");

    f.g.resize(sz(n * n));
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            Jet s;
            for (int a = 0; a < m; ++a) s += eta(a) * (T(i, a) * T(j, a));
            f.g[sz(i * n + j)] = s;
        }

    // Hodge normal covector nu_a = det[e_a, d_1 X, ..., d_n X], raised with eta.
    Jets N(sz(m));
    double euclid = 0.0;
    for (int a = 0; a < m; ++a) {
        std::vector<Jet> minor;
        for (int b = 0; b < m; ++b)
            if (b != a)
                for (int i = 0; i < n; ++i) minor.push_back(T(i, b));
        Jet nu = determinant_of(minor, n);
        N[sz(a)] = (a % 2 ? -eta(a) : eta(a)) * nu;
        euclid += N[sz(a)].value() * N[sz(a)].value();
    }
    Jet nn;
    for (int a = 0; a < m; ++a) nn += eta(a) * (N[sz(a)] * N[sz(a)]);
    if (!(std::abs(nn.value()) > 1e-10 * euclid))
        throw GeometryError("null normal at " + point_string(p) + ": <N, N> = " + std::to_string(nn.value()));
    f.epsilon = nn.value() > 0 ? 1.0 : -1.0;
    double sign = 1.0;
    if (orientation == NormalOrientation::Flipped) sign = -1.0;
    if (orientation == NormalOrientation::Auto) {
        for (int a = m - 1; a >= 0; --a)
            if (std::abs(N[sz(a)].value()) > 1e-12 * std::sqrt(euclid)) {
                sign = N[sz(a)].value() > 0 ? 1.0 : -1.0;
                break;
            }
    }
    Jet scale = sign * reciprocal(sqrt(f.epsilon * nn));
    for (int a = 0; a < m; ++a) f.normal.push_back(N[sz(a)] * scale);

    f.ginv = invert_matrix(f.g, n);
    if (order >= 2) {
        f.A_lower.resize(sz(n * n));
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
                Jet s;
                for (int a = 0; a < m; ++a) s += eta(a) * (T(i, a).derivative(j) * f.normal[sz(a)]);
                f.A_lower[sz(i * n + j)] = s;
            }
        // symmetrize: the two mixed partials agree up to round-off
        for (int i = 0; i < n; ++i)
            for (int j = i + 1; j < n; ++j) {
                Jet s = 0.5 * (f.A_lower[sz(i * n + j)] + f.A_lower[sz(j * n + i)]);
                f.A_lower[sz(i * n + j)] = s;
                f.A_lower[sz(j * n + i)] = s;
            }
        f.shape.resize(sz(n * n));
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
                Jet s;
                for (int k = 0; k < n; ++k) s += f.ginv[sz(i * n + k)] * f.A_lower[sz(k * n + j)];
                f.shape[sz(i * n + j)] = s;
            }
    }
    Jet xn;
    for (int a = 0; a < m; ++a) xn += eta(a) * (f.position[sz(a)] * f.normal[sz(a)]);
    f.rho = f.epsilon * xn;
    Jets xt(sz(n));
    for (int j = 0; j < n; ++j)
        for (int a = 0; a < m; ++a) xt[sz(j)] += eta(a) * (f.position[sz(a)] * T(j, a));
    f.zeta_top.resize(sz(n));
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) f.zeta_top[sz(i)] += f.ginv[sz(i * n + j)] * xt[sz(j)];
    return f;
}

}  // namespace

Embedding::Embedding(ChartPtr source, std::vector<Expr> map, int ambient_signature, NormalOrientation orientation)
    : chart_(std::move(source)),
      map_(std::move(map)),
      ambient_signature_(ambient_signature),
      orientation_(orientation),
      induced_(MetricField::euclidean(chart_)),
      tangential_(VectorField::zero(chart_)) {
    const int n = chart_->dim();
    if (static_cast<int>(map_.size()) != n + 1)
        throw std::invalid_argument("a hypersurface immersion of a " + std::to_string(n) + "-dimensional chart needs " +
                                    std::to_string(n + 1) + " components, got " + std::to_string(map_.size()));
    if (ambient_signature_ < 0 || ambient_signature_ > n + 1)
        throw std::invalid_argument("ambient signature out of range");
    for (const auto& e : map_)
        if (e.max_coordinate() >= n)
            throw GeometryError("immersion component references coordinate " + std::to_string(e.max_coordinate()) +
                                " outside the " + std::to_string(n) + "-dimensional chart");
    auto data = std::make_shared<const EmbeddingData>(EmbeddingData{chart_, map_, ambient_signature_});
    std::vector<double> center;
    for (const auto& iv : chart_->box()) center.push_back(0.5 * (iv.lo + iv.hi));
    auto f0 = compute_frame(*data, orientation_, center, 1);
    const int induced_signature = negative_eigenvalues(calc::values(f0.g), n);
    induced_ = MetricField(
        chart_, induced_signature,
        [data](std::span<const double> p, int order) { return compute_frame(*data, NormalOrientation::Naive, p, order + 1).g; },
        kMaxJetOrder - 1);
    tangential_ = VectorField(
        chart_,
        [data](std::span<const double> p, int order) {
            return compute_frame(*data, NormalOrientation::Naive, p, order + 1).zeta_top;
        },
        kMaxJetOrder - 1);
}

Embedding Embedding::with_orientation(NormalOrientation o) const {
    return Embedding(chart_, map_, ambient_signature_, o);
}

Embedding::Frame Embedding::frame(std::span<const double> p, int order) const {
    return compute_frame(EmbeddingData{chart_, map_, ambient_signature_}, orientation_, p, order);
}

ShapeData induced_geometry(const Embedding& e, std::span<const double> p) {
    auto f = e.frame(p, 2);
    const int n = f.n;
    ShapeData s;
    s.point.assign(p.begin(), p.end());
    s.n = n;
    s.metric = calc::values(f.g);
    s.normal = calc::values(f.normal);
    s.epsilon = f.epsilon;
    s.shape = calc::values(f.shape);
    for (const auto& a : f.A_lower) s.second_form.push_back(f.epsilon * a.value());
    s.zeta_top = calc::values(f.zeta_top);
    s.rho = f.rho.value();
    // g(A e_i, e_j) = g_jk A^k_i
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            double gij = 0.0, gji = 0.0;
            for (int k = 0; k < n; ++k) {
                gij += s.metric[sz(j * n + k)] * s.shape[sz(k * n + i)];
                gji += s.metric[sz(i * n + k)] * s.shape[sz(k * n + j)];
            }
            s.self_adjoint_defect = std::max(s.self_adjoint_defect, std::abs(gij - gji));
        }
    return s;
}

ConcurrentDecomposition concurrent_decomposition(const Embedding& e, std::span<const double> p) {
    auto f = e.frame(p, 1);
    const int n = f.n, m = n + 1;
    ConcurrentDecomposition d;
    d.zeta_top = calc::values(f.zeta_top);
    d.rho = f.rho.value();
    for (int a = 0; a < m; ++a) {
        double r = f.position[sz(a)].value() - d.rho * f.normal[sz(a)].value();
        for (int i = 0; i < n; ++i) r -= f.tangents[sz(i * m + a)].value() * d.zeta_top[sz(i)];
        d.reconstruction_defect = std::max(d.reconstruction_defect, std::abs(r));
    }
    return d;
}

ConcurrentFormulaResiduals concurrent_formula_residuals(const Embedding& e, std::span<const double> p) {
    PointGeometry pg(e.induced_metric(), p, 2);
    const int n = pg.dim();
    Jets z = pg.vector(e.tangential_position());
    const Jets& G = pg.christoffel();
    auto f = e.frame(p, 3);
    auto gv = calc::values(pg.g());
    Jets Bj(sz(n * n));  // rho A, order 1
    for (int i = 0; i < n * n; ++i) Bj[sz(i)] = f.rho * f.shape[sz(i)];
    auto B = calc::values(Bj);
    auto zv = calc::values(z);

    ConcurrentFormulaResiduals out;
    out.nabla.lhs = calc::values(calc::covariant_vector(z, G, n));
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) out.nabla.rhs.push_back((i == j ? 1.0 : 0.0) + B[sz(i * n + j)]);

    Jets L = calc::lie_derivative(pg.g(), z, n);
    out.lie.lhs = calc::values(L);
    out.lie2.lhs = calc::values(calc::lie_derivative(L, z, n));

    // (nabla_V B)^i_j = V^k (d_k B^i_j + G^i_kl B^l_j - G^l_kj B^i_l)
    std::vector<double> DB(sz(n * n), 0.0);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            double s = 0.0;
            for (int k = 0; k < n; ++k) {
                double t = Bj[sz(i * n + j)].derivative(k).value();
                for (int l = 0; l < n; ++l)
                    t += G[sz((i * n + k) * n + l)].value() * B[sz(l * n + j)] -
                         G[sz((l * n + k) * n + j)].value() * B[sz(i * n + l)];
                s += zv[sz(k)] * t;
            }
            DB[sz(i * n + j)] = s;
        }
    auto lower = [&](const std::vector<double>& M) {
        std::vector<double> out(sz(n * n), 0.0);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                for (int k = 0; k < n; ++k) out[sz(i * n + j)] += gv[sz(i * n + k)] * M[sz(k * n + j)];
        return out;
    };
    std::vector<double> B2(sz(n * n), 0.0);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            for (int k = 0; k < n; ++k) B2[sz(i * n + j)] += B[sz(i * n + k)] * B[sz(k * n + j)];
    auto Bl = lower(B), B2l = lower(B2), DBl = lower(DB);
    for (int i = 0; i < n * n; ++i) {
        const auto k = sz(i);
        out.lie.rhs.push_back(2.0 * (gv[k] + Bl[k]));
        out.lie2.rhs.push_back(2.0 * (2.0 * gv[k] + 4.0 * Bl[k] + 2.0 * B2l[k] + DBl[k]));
    }
    return out;
}

Residual gauss_scalar_residual(const Embedding& e, std::span<const double> p) {
    Residual r;
    r.lhs = {curvature(e.induced_metric(), p).scalar};
    auto f = e.frame(p, 2);
    const int n = f.n;
    auto A = calc::values(f.shape);
    double tr = 0.0, tr2 = 0.0;
    for (int i = 0; i < n; ++i) {
        tr += A[sz(i * n + i)];
        for (int k = 0; k < n; ++k) tr2 += A[sz(i * n + k)] * A[sz(k * n + i)];
    }
    r.rhs = {f.epsilon * (tr * tr - tr2)};
    return r;
}

MetallicFit metallic_fit(const Embedding& e, const std::vector<std::vector<double>>& samples, MetallicTarget target) {
    if (samples.size() < 2) throw PreconditionError("metallic_fit needs at least 2 samples");
    const int n = e.dim();
    std::vector<std::vector<double>> X(samples.size());
    parallel_for(samples.size(), [&](std::size_t s) {
        auto f = e.frame(samples[s], 2);
        X[s] = calc::values(f.shape);
        if (target == MetallicTarget::ConcurrentShape)
            for (double& v : X[s]) v *= f.rho.value();
    });
    auto square = [n](const std::vector<double>& M) {
        std::vector<double> out(sz(n * n), 0.0);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                for (int k = 0; k < n; ++k) out[sz(i * n + j)] += M[sz(i * n + k)] * M[sz(k * n + j)];
        return out;
    };
    Eigen::MatrixXd M(static_cast<Eigen::Index>(samples.size() * sz(n * n)), 2);
    Eigen::VectorXd b(M.rows());
    MetallicFit fit;
    std::vector<std::vector<double>> X2;
    Eigen::Index row = 0;
    for (const auto& x : X) {
        X2.push_back(square(x));
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j, ++row) {
                M(row, 0) = x[sz(i * n + j)];
                M(row, 1) = i == j ? 1.0 : 0.0;
                b(row) = X2.back()[sz(i * n + j)];
                fit.scale = std::max(fit.scale, std::abs(b(row)));
            }
    }
    TwoParameterSolution sol = solve_two_parameter(M, b);
    fit.a = sol.x(0);
    fit.b = sol.x(1);
    fit.rank_deficient = sol.rank_deficient;
    fit.line = sol.line;
    for (std::size_t s = 0; s < X.size(); ++s)
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
                const auto k = sz(i * n + j);
                double r = X2[s][k] - fit.a * X[s][k] - (i == j ? fit.b : 0.0);
                fit.residual = std::max(fit.residual, std::abs(r));
            }
    fit.metallic = fit.residual <= 1e-8 * (1.0 + fit.scale);
    return fit;
}

std::pair<double, double> metallic_theorem_coefficients(const SolitonConstants& c, double r) {
    return {-(c.lambda + 4.0) / 2.0, -(2.0 * c.lambda - c.mu + r + 4.0) / 4.0};
}

ConcurrentNorms concurrent_norms(const Embedding& e, std::span<const double> p) {
    ConcurrentNorms out;
    auto f = e.frame(p, 2);
    const int n = f.n;
    auto A = calc::values(f.shape);
    const double rho = f.rho.value();
    double trB = 0.0, trB2 = 0.0;
    for (int i = 0; i < n; ++i) {
        trB += rho * A[sz(i * n + i)];
        for (int k = 0; k < n; ++k) trB2 += rho * rho * A[sz(i * n + k)] * A[sz(k * n + i)];
    }
    out.nabla_closed = trB2 + 2.0 * trB + n;
    out.lie_closed = 4.0 * out.nabla_closed;
    out.div2_closed = (trB + n) * (trB + n);

    PointGeometry pg(e.induced_metric(), p, 1);
    Jets z = pg.vector(e.tangential_position());
    const Jets& G = pg.christoffel();
    auto gv = calc::values(pg.g());
    out.lie_direct = tensor_norm2(calc::values(calc::lie_derivative(pg.g(), z, n)), gv, n);
    Jets nz = calc::covariant_vector(z, G, n);
    out.nabla_direct = calc::mixed_norm2(nz, pg.g(), pg.ginv(), n).value();
    const double div = calc::divergence(z, G, n).value();
    out.div2_direct = div * div;
    return out;
}

UmbilicalCheck umbilical_residual(const Embedding& e, const SolitonConstants& c, std::span<const double> p) {
    auto f = e.frame(p, 3);
    const int n = f.n;
    Jet tr;
    for (int i = 0; i < n; ++i) tr += f.rho * f.shape[sz(i * n + i)];
    Jet fj = tr * (1.0 / n);
    UmbilicalCheck out;
    out.f = fj.value();
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            out.umbilicity = std::max(out.umbilicity, std::abs(f.rho.value() * f.shape[sz(i * n + j)].value() -
                                                               (i == j ? out.f : 0.0)));
    const double zf = calc::directional(f.zeta_top, fj).value();
    const double r = curvature(e.induced_metric(), p).scalar;
    out.relation = 4.0 * out.f * out.f + 2.0 * (c.lambda + 4.0) * out.f + 2.0 * zf + 2.0 * c.lambda - c.mu + r + 4.0;
    return out;
}

}  // namespace geoflow
