#include "geoflow/soliton.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <string>

#include "geoflow/errors.hpp"
#include "geoflow/lsq.hpp"
#include "geoflow/parallel.hpp"

namespace geoflow {

namespace {

std::size_t sz(int v) { return static_cast<std::size_t>(v); }

double sup_abs(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s = std::max(s, std::abs(x));
    return s;
}

Eigen::MatrixXd as_matrix(const std::vector<double>& a, int n) {
    Eigen::MatrixXd m(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) m(i, j) = a[sz(i * n + j)];
    return m;
}

/// Riemannian majorant |g| of evaluated metric values.
Eigen::MatrixXd majorant(const std::vector<double>& g, int n) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(as_matrix(g, n));
    return es.eigenvectors() * es.eigenvalues().cwiseAbs().asDiagonal() * es.eigenvectors().transpose();
}

/// h_ik h^{jl} A^i_j B^k_l.
double mixed_inner(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B, const Eigen::MatrixXd& h) {
    return (A.transpose() * h * B * h.inverse()).trace();
}

struct SolitonTerms {
    std::vector<double> g, lie, lie2;
    double r = 0.0;
};

SolitonTerms soliton_terms(const MetricField& g, const VectorField& zeta, std::span<const double> p) {
    PointGeometry pg(g, p, 2);
    const int n = pg.dim();
    Jets z = pg.vector(zeta);
    Jets L = calc::lie_derivative(pg.g(), z, n);
    Jets L2 = calc::lie_derivative(L, z, n);
    SolitonTerms t;
    t.g = calc::values(pg.g());
    t.lie = calc::values(L);
    t.lie2 = calc::values(L2);
    t.r = pg.curvature().scalar.value();
    return t;
}

std::vector<double> residual_of(const SolitonTerms& t, const SolitonConstants& c) {
    std::vector<double> out(t.g.size());
    for (std::size_t k = 0; k < out.size(); ++k) out[k] = t.lie2[k] + c.lambda * t.lie[k] - (c.mu - t.r) * t.g[k];
    return out;
}

}  // namespace

double soliton_threshold(double metric_sup) { return 1e-6 * (1.0 + metric_sup); }

SymTensorValue soliton_residual(const MetricField& g, const VectorField& zeta, const SolitonConstants& c,
                                std::span<const double> p) {
    auto t = soliton_terms(g, zeta, p);
    SymTensorValue out{std::vector<double>(p.begin(), p.end()), g.dim(), residual_of(t, c)};
    return out;
}

FitResult fit_soliton_constants(const MetricField& g, const VectorField& zeta,
                                const std::vector<std::vector<double>>& samples) {
    if (samples.size() < 2) throw PreconditionError("fit_soliton_constants needs at least 2 samples");
    const int n = g.dim();
    const std::size_t per = sz(n * (n + 1) / 2);
    std::vector<SolitonTerms> terms(samples.size());
    parallel_for(samples.size(), [&](std::size_t s) { terms[s] = soliton_terms(g, zeta, samples[s]); });

    // lambda L_ij - mu g_ij = -(LL_ij + r g_ij)
    Eigen::MatrixXd A(static_cast<Eigen::Index>(per * samples.size()), 2);
    Eigen::VectorXd b(A.rows());
    Eigen::Index row = 0;
    FitResult fit;
    for (const auto& t : terms) {
        for (int i = 0; i < n; ++i)
            for (int j = i; j < n; ++j, ++row) {
                const auto k = sz(i * n + j);
                A(row, 0) = t.lie[k];
                A(row, 1) = -t.g[k];
                b(row) = -(t.lie2[k] + t.r * t.g[k]);
            }
        fit.metric_sup = std::max(fit.metric_sup, sup_abs(t.g));
    }
    TwoParameterSolution sol = solve_two_parameter(A, b);
    fit.singular_values = sol.singular_values;
    fit.rank_deficient = sol.rank_deficient;
    fit.constants = {sol.x(0), sol.x(1)};
    fit.line = sol.line;
    for (const auto& t : terms) {
        double r = sup_abs(residual_of(t, fit.constants));
        fit.point_residuals.push_back(r);
        fit.residual_sup = std::max(fit.residual_sup, r);
    }
    fit.threshold = soliton_threshold(fit.metric_sup);
    fit.is_soliton = fit.residual_sup < fit.threshold;
    return fit;
}

KillingDefects killing_defects(const MetricField& g, const VectorField& zeta,
                               const std::vector<std::vector<double>>& samples) {
    if (samples.empty()) throw PreconditionError("killing_defects needs at least 1 sample");
    const int n = g.dim();
    std::vector<KillingDefects> per(samples.size());
    parallel_for(samples.size(), [&](std::size_t s) {
        PointGeometry pg(g, samples[s], 2);
        Jets z = pg.vector(zeta);
        Jets L = calc::lie_derivative(pg.g(), z, n);
        Jets L2 = calc::lie_derivative(L, z, n);
        auto gv = calc::values(pg.g());
        // nabla_i zeta_j as a (0,2) tensor
        Jets A = calc::covariant_vector(z, pg.christoffel(), n);
        std::vector<double> low(sz(n * n), 0.0);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                for (int k = 0; k < n; ++k) low[sz(i * n + j)] += gv[sz(j * n + k)] * A[sz(k * n + i)].value();
        per[s].killing = std::sqrt(std::max(0.0, majorant_norm2(calc::values(L), gv, n)));
        per[s].two_killing = std::sqrt(std::max(0.0, majorant_norm2(calc::values(L2), gv, n)));
        per[s].parallel = std::sqrt(std::max(0.0, majorant_norm2(low, gv, n)));
    });
    KillingDefects out;
    for (const auto& d : per) {
        out.killing = std::max(out.killing, d.killing);
        out.two_killing = std::max(out.two_killing, d.two_killing);
        out.parallel = std::max(out.parallel, d.parallel);
    }
    return out;
}

SolitonReport soliton_report(const MetricField& g, const VectorField& zeta,
                             const std::vector<std::vector<double>>& samples) {
    SolitonReport rep;
    rep.fit = fit_soliton_constants(g, zeta, samples);
    rep.defects = killing_defects(g, zeta, samples);
    rep.soliton = rep.fit.is_soliton;
    return rep;
}

double hilbert_schmidt_identity_residual(const MetricField& g, const VectorField& zeta, const SolitonConstants& c,
                                         std::span<const double> p) {
    const int n = g.dim();
    PointGeometry pg(g, p, 2);
    Jets z = pg.vector(zeta);
    Jets L = calc::lie_derivative(pg.g(), z, n);
    Jets L2 = calc::lie_derivative(L, z, n);
    auto t = SolitonTerms{calc::values(pg.g()), calc::values(L), calc::values(L2), pg.curvature().scalar.value()};
    const double res = sup_abs(residual_of(t, c));
    const double tol = soliton_threshold(sup_abs(t.g));
    if (!(res < tol))
        throw PreconditionError("soliton precondition violated: residual " + std::to_string(res) + " exceeds " +
                                std::to_string(tol));
    const double div = calc::divergence(z, pg.christoffel(), n).value();
    if (!(std::abs(div) < 1e-8 * (1.0 + sup_abs(calc::values(z)))))
        throw PreconditionError("divergence-free precondition violated: div zeta = " + std::to_string(div));
    const double hs2 = tensor_norm2(t.lie2, t.g, n);
    const double l2 = tensor_norm2(t.lie, t.g, n);
    return hs2 - n * (c.mu - t.r) * (c.mu - t.r) - c.lambda * c.lambda * l2;
}

GradientRelation gradient_relation_residual(const MetricField& g, const VectorField& zeta, double lambda,
                                            std::span<const double> p) {
    const int n = g.dim();
    PointGeometry pg(g, p, 3);
    const auto& G = pg.christoffel();
    Jets z = pg.vector(zeta);
    const auto& cur = pg.curvature();
    Jets L = calc::lie_derivative(pg.g(), z, n);
    Jets L2 = calc::lie_derivative(L, z, n);
    auto divL2 = calc::values(calc::divergence_02(L2, pg.ginv(), G, n));
    auto divL = calc::values(calc::divergence_02(L, pg.ginv(), G, n));
    Jet div = calc::divergence(z, G, n);
    GradientRelation out;
    for (int j = 0; j < n; ++j) {
        double qz = 0.0;  // Ric_jk zeta^k = g_jl Q^l_k zeta^k
        for (int k = 0; k < n; ++k) qz += cur.ricci[sz(j * n + k)].value() * z[sz(k)].value();
        const double dr = cur.scalar.derivative(j).value();
        out.residual.push_back(dr + 2.0 * lambda * (div.derivative(j).value() + qz));
        out.full_relation.push_back(divL2[sz(j)] + lambda * divL[sz(j)] + dr);
    }
    out.div_lie2 = std::move(divL2);
    return out;
}

ZetaRicFit zeta_ric_fit(const MetricField& g, const VectorField& zeta, const std::vector<std::vector<double>>& samples) {
    if (samples.empty()) throw PreconditionError("zeta_ric_fit needs at least 1 sample");
    const int n = g.dim();
    struct Sample {
        Eigen::MatrixXd A, Q, h;
        double trace_lie_ric = 0.0;
    };
    std::vector<Sample> per(samples.size());
    parallel_for(samples.size(), [&](std::size_t s) {
        PointGeometry pg(g, samples[s], 3);
        Jets z = pg.vector(zeta);
        const auto& cur = pg.curvature();
        auto A = calc::values(calc::covariant_vector(z, pg.christoffel(), n));
        auto Q = calc::values(cur.ricci_operator);
        per[s].A = as_matrix(A, n).block(0, 0, n, n);
        per[s].Q = as_matrix(Q, n);
        per[s].h = majorant(calc::values(pg.g()), n);
        per[s].trace_lie_ric = calc::trace(calc::lie_derivative(cur.ricci, z, n), pg.ginv(), n).value();
    });
    double aq = 0.0, qq = 0.0, qsup = 0.0;
    ZetaRicFit out;
    for (const auto& s : per) {
        aq += mixed_inner(s.A, s.Q, s.h);
        const double q2 = mixed_inner(s.Q, s.Q, s.h);
        qq += q2;
        qsup = std::max(qsup, std::sqrt(std::max(0.0, q2)));
        out.trace_lie_ricci_sup = std::max(out.trace_lie_ricci_sup, std::abs(s.trace_lie_ric));
    }
    if (qsup > 1e-12) out.a = aq / qq;
    const double a = out.a.value_or(0.0);
    for (const auto& s : per) {
        Eigen::MatrixXd D = s.A - a * s.Q;
        out.defect = std::max(out.defect, std::sqrt(std::max(0.0, mixed_inner(D, D, s.h))));
    }
    return out;
}

YanoCheck yano_torus_check(const MetricField& g, const VectorField& zeta, int resolution) {
    const int n = g.dim();
    auto pieces = [&](std::span<const double> x) {
        PointGeometry pg(g, x, 2);
        Jets z = pg.vector(zeta);
        auto gv = calc::values(pg.g());
        Jets A = calc::covariant_vector(z, pg.christoffel(), n);
        const double d = calc::divergence(z, pg.christoffel(), n).value();
        return std::vector<double>{calc::contract(pg.curvature().ricci, z, z, n).value(),
                                   0.5 * tensor_norm2(calc::values(calc::lie_derivative(pg.g(), z, n)), gv, n),
                                   calc::mixed_norm2(A, pg.g(), pg.ginv(), n).value(), d * d, 1.0};
    };
    auto v = torus_integrate_many(g, pieces, 5, resolution);
    YanoCheck out;
    out.ricci = v[0];
    out.half_lie = v[1];
    out.nabla = v[2];
    out.divergence = v[3];
    out.volume = v[4];
    out.integral = out.ricci + out.half_lie - out.nabla - out.divergence;
    return out;
}

}  // namespace geoflow
