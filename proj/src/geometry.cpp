#include "geoflow/geometry.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "geoflow/errors.hpp"
#include "geoflow/parallel.hpp"

namespace geoflow {

namespace {

std::size_t sz(int v) { return static_cast<std::size_t>(v); }

std::string describe(std::span<const double> p) {
    std::ostringstream os;
    os << "(";
    for (std::size_t i = 0; i < p.size(); ++i) os << (i ? ", " : "") << p[i];
    os << ")";
    return os.str();
}

Eigen::MatrixXd as_matrix(const std::vector<double>& a, int n) {
    Eigen::MatrixXd m(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) m(i, j) = a[sz(i * n + j)];
    return m;
}

}  // namespace

namespace calc {

Jets partials(const Jet& f) {
    Jets out;
    for (int i = 0; i < f.dim(); ++i) out.push_back(f.derivative(i));
    return out;
}

Jets lie_derivative(const Jets& T, const Jets& v, int n) {
    std::vector<Jets> dv, dT;
    for (const auto& c : v) dv.push_back(partials(c));
    for (const auto& c : T) dT.push_back(partials(c));
    Jets out;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            Jet s;
            for (int k = 0; k < n; ++k) {
                s += v[sz(k)] * dT[sz(i * n + j)][sz(k)];
                s += T[sz(k * n + j)] * dv[sz(k)][sz(i)];
                s += T[sz(i * n + k)] * dv[sz(k)][sz(j)];
            }
            out.push_back(std::move(s));
        }
    return out;
}

Jets covariant_vector(const Jets& v, const Jets& gamma, int n) {
    Jets out;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            Jet s = v[sz(i)].derivative(j);
            for (int k = 0; k < n; ++k) s += gamma[sz((i * n + j) * n + k)] * v[sz(k)];
            out.push_back(std::move(s));
        }
    return out;
}

Jets covariant_covector(const Jets& w, const Jets& gamma, int n) {
    Jets out;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            Jet s = w[sz(j)].derivative(i);
            for (int k = 0; k < n; ++k) s -= gamma[sz((k * n + i) * n + j)] * w[sz(k)];
            out.push_back(std::move(s));
        }
    return out;
}

Jets covariant_02(const Jets& T, const Jets& gamma, int n) {
    Jets out;
    for (int k = 0; k < n; ++k)
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
                Jet s = T[sz(i * n + j)].derivative(k);
                for (int l = 0; l < n; ++l) {
                    s -= gamma[sz((l * n + k) * n + i)] * T[sz(l * n + j)];
                    s -= gamma[sz((l * n + k) * n + j)] * T[sz(i * n + l)];
                }
                out.push_back(std::move(s));
            }
    return out;
}

Jets divergence_02(const Jets& T, const Jets& ginv, const Jets& gamma, int n) {
    Jets nab = covariant_02(T, gamma, n);
    Jets out;
    for (int j = 0; j < n; ++j) {
        Jet s;
        for (int k = 0; k < n; ++k)
            for (int i = 0; i < n; ++i) s += ginv[sz(k * n + i)] * nab[sz((k * n + i) * n + j)];
        out.push_back(std::move(s));
    }
    return out;
}

Jet divergence(const Jets& v, const Jets& gamma, int n) {
    Jet s;
    for (int i = 0; i < n; ++i) {
        s += v[sz(i)].derivative(i);
        for (int k = 0; k < n; ++k) s += gamma[sz((i * n + i) * n + k)] * v[sz(k)];
    }
    return s;
}

Jets hessian(const Jet& f, const Jets& gamma, int n) {
    Jets df = partials(f);
    Jets out;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            Jet s = df[sz(j)].derivative(i);
            for (int k = 0; k < n; ++k) s -= gamma[sz((k * n + i) * n + j)] * df[sz(k)];
            out.push_back(std::move(s));
        }
    return out;
}

Jets raise(const Jets& w, const Jets& ginv, int n) {
    Jets out;
    for (int i = 0; i < n; ++i) {
        Jet s;
        for (int j = 0; j < n; ++j) s += ginv[sz(i * n + j)] * w[sz(j)];
        out.push_back(std::move(s));
    }
    return out;
}

Jets lower(const Jets& v, const Jets& g, int n) { return raise(v, g, n); }

Jet trace(const Jets& T, const Jets& ginv, int n) {
    Jet s;
    for (int i = 0; i < n * n; ++i) s += ginv[sz(i)] * T[sz(i)];
    (void)n;
    return s;
}

Jet contract(const Jets& T, const Jets& u, const Jets& v, int n) {
    Jet s;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) s += T[sz(i * n + j)] * u[sz(i)] * v[sz(j)];
    return s;
}

Jet pair(const Jets& w, const Jets& v) {
    Jet s;
    for (std::size_t i = 0; i < w.size(); ++i) s += w[i] * v[i];
    return s;
}

Jet directional(const Jets& v, const Jet& f) {
    Jet s;
    for (int i = 0; i < f.dim(); ++i) s += v[sz(i)] * f.derivative(i);
    return s;
}

Jet inner02(const Jets& T, const Jets& S, const Jets& ginv, int n) {
    // (g^-1 T g^-1)^{kl} S_kl
    Jets a;
    for (int i = 0; i < n; ++i)
        for (int l = 0; l < n; ++l) {
            Jet s;
            for (int j = 0; j < n; ++j) s += T[sz(i * n + j)] * ginv[sz(j * n + l)];
            a.push_back(std::move(s));
        }
    Jet out;
    for (int k = 0; k < n; ++k)
        for (int l = 0; l < n; ++l) {
            Jet s;
            for (int i = 0; i < n; ++i) s += ginv[sz(k * n + i)] * a[sz(i * n + l)];
            out += s * S[sz(k * n + l)];
        }
    return out;
}

Jets scaled(Jets T, double s) {
    for (auto& t : T) t *= s;
    return T;
}

Jets add(Jets a, const Jets& b, double s) {
    for (std::size_t i = 0; i < a.size(); ++i) a[i] += s * b[i];
    return a;
}

/// g_ik g^{jl} A^i_j A^k_l for A[i*n + j] = nabla_j v^i.
Jet mixed_norm2(const Jets& A, const Jets& g, const Jets& ginv, int n) {
    Jet s;
    for (int i = 0; i < n; ++i)
        for (int k = 0; k < n; ++k)
            for (int j = 0; j < n; ++j)
                for (int l = 0; l < n; ++l) s += g[sz(i * n + k)] * ginv[sz(j * n + l)] * A[sz(i * n + j)] * A[sz(k * n + l)];
    return s;
}

Jets apply_mixed(const Jets& A, const Jets& v, int n) {
    Jets out;
    for (int i = 0; i < n; ++i) {
        Jet s;
        for (int j = 0; j < n; ++j) s += A[sz(i * n + j)] * v[sz(j)];
        out.push_back(std::move(s));
    }
    return out;
}

std::vector<double> values(const Jets& a) {
    std::vector<double> out;
    out.reserve(a.size());
    for (const auto& j : a) out.push_back(j.value());
    return out;
}

}  // namespace calc

// --- metric checks -----------------------------------------------------------

double determinant(const std::vector<double>& a, int n) { return as_matrix(a, n).determinant(); }

int negative_eigenvalues(const std::vector<double>& a, int n) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(as_matrix(a, n), Eigen::EigenvaluesOnly);
    int c = 0;
    for (int i = 0; i < n; ++i)
        if (es.eigenvalues()(i) < 0) ++c;
    return c;
}

void check_metric_values(const std::vector<double>& g, int n, int signature, std::span<const double> point) {
    double scale = 0.0;
    for (double v : g) {
        if (!std::isfinite(v)) throw GeometryError("metric is not finite at " + describe(point));
        scale = std::max(scale, std::abs(v));
    }
    const double det = determinant(g, n);
    if (!(std::abs(det) >= 1e-10 * std::pow(scale, n)) || scale == 0.0)
        throw GeometryError("degenerate metric at " + describe(point));
    const int neg = negative_eigenvalues(g, n);
    if (neg != signature)
        throw GeometryError("metric signature mismatch at " + describe(point) + ": declared " +
                            std::to_string(signature) + " negative eigenvalues, found " + std::to_string(neg));
}

// --- PointGeometry -----------------------------------------------------------

PointGeometry::PointGeometry(const MetricField& metric, std::span<const double> point, int order)
    : metric_(&metric), n_(metric.dim()), order_(order), point_(point.begin(), point.end()) {
    g_ = metric.jets(point, order);
    auto vals = calc::values(g_);
    check_metric_values(vals, n_, metric.signature(), point);
    det_ = geoflow::determinant(vals, n_);
    ginv_ = invert_matrix(g_, n_);
    if (order_ >= 1) {
        Jets dg;
        for (int k = 0; k < n_; ++k)
            for (const auto& c : g_) dg.push_back(c.derivative(k));
        gamma_ = christoffel_from(ginv_, dg, n_);
    }
}

const Jets& PointGeometry::christoffel() const {
    if (order_ < 1) throw PreconditionError("Christoffel symbols need jet order >= 1");
    return gamma_;
}

const CurvatureTensors<Jet>& PointGeometry::curvature() const {
    if (order_ < 2) throw PreconditionError("curvature needs jet order >= 2");
    if (!curvature_) {
        MetricDerivatives<Jet> m;
        m.n = n_;
        m.g = g_;
        for (int k = 0; k < n_; ++k)
            for (const auto& c : g_) m.dg.push_back(c.derivative(k));
        for (int k = 0; k < n_; ++k)
            for (int l = 0; l < n_; ++l)
                for (const auto& c : g_) m.d2g.push_back(c.derivative(l).derivative(k));
        curvature_ = curvature_from(m);
    }
    return *curvature_;
}

Jets PointGeometry::vector(const VectorField& v) const {
    if (!same_chart(v.chart(), metric_->chart()))
        throw GeometryError("chart mismatch: vector field on '" + v.chart().name() + "', metric on '" +
                            metric_->chart().name() + "'");
    return v.jets(point_, order_);
}

Jet PointGeometry::scalar(const ScalarField& f) const {
    if (!same_chart(f.chart(), metric_->chart()))
        throw GeometryError("chart mismatch: scalar field on '" + f.chart().name() + "', metric on '" +
                            metric_->chart().name() + "'");
    return f.jet(point_, order_);
}

// --- values ------------------------------------------------------------------

double SymTensorValue::sup() const {
    double s = 0.0;
    for (double v : values) s = std::max(s, std::abs(v));
    return s;
}

std::vector<double> Residual::difference() const {
    std::vector<double> d(lhs.size());
    for (std::size_t i = 0; i < lhs.size(); ++i) d[i] = lhs[i] - rhs[i];
    return d;
}

double Residual::sup() const {
    double s = 0.0;
    for (std::size_t i = 0; i < lhs.size(); ++i) s = std::max(s, std::abs(lhs[i] - rhs[i]));
    return s;
}

double Residual::magnitude() const {
    double a = 0.0, b = 0.0;
    for (double v : lhs) a = std::max(a, std::abs(v));
    for (double v : rhs) b = std::max(b, std::abs(v));
    return std::max(a, b);
}

namespace {

SymTensorValue sym_value(const PointGeometry& pg, const Jets& T) {
    SymTensorValue out{pg.point(), pg.dim(), calc::values(T)};
    const int n = pg.dim();
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) {
            double a = out.values[sz(i * n + j)], b = out.values[sz(j * n + i)];
            double m = 0.5 * (a + b);
            out.values[sz(i * n + j)] = m;
            out.values[sz(j * n + i)] = m;
        }
    return out;
}

}  // namespace

std::vector<double> christoffel(const MetricField& g, std::span<const double> p) {
    PointGeometry pg(g, p, 1);
    return calc::values(pg.christoffel());
}

CurvatureBundle curvature(const MetricField& g, std::span<const double> p) {
    PointGeometry pg(g, p, 2);
    const auto& c = pg.curvature();
    CurvatureBundle out;
    out.point = pg.point();
    out.n = pg.dim();
    out.christoffel = calc::values(pg.christoffel());
    out.riemann = calc::values(c.riemann);
    out.ricci = calc::values(c.ricci);
    out.ricci_operator = calc::values(c.ricci_operator);
    out.scalar = c.scalar.value();
    return out;
}

FirstOrderOperators first_order_operators(const MetricField& g, const ScalarField& f, const VectorField& zeta,
                                          std::span<const double> p) {
    PointGeometry pg(g, p, 2);
    const int n = pg.dim();
    Jet fj = pg.scalar(f);
    Jets z = pg.vector(zeta);
    const auto& G = pg.christoffel();
    FirstOrderOperators out;
    Jets df = calc::partials(fj);
    Jets grad = calc::raise(df, pg.ginv(), n);
    out.grad = calc::values(grad);
    out.grad_norm2 = calc::pair(df, grad).value();
    Jets H = calc::hessian(fj, G, n);
    out.hessian = calc::values(H);
    out.laplacian = calc::trace(H, pg.ginv(), n).value();
    out.divergence = calc::divergence(z, G, n).value();
    Jets A = calc::covariant_vector(z, G, n);
    out.nabla_zeta = calc::values(A);
    out.nabla_zeta_norm2 = calc::mixed_norm2(A, pg.g(), pg.ginv(), n).value();
    out.nabla_zeta_zeta = calc::values(calc::apply_mixed(A, z, n));
    return out;
}

SymTensorValue lie_derivative_metric(const MetricField& g, const VectorField& zeta, std::span<const double> p) {
    PointGeometry pg(g, p, 1);
    return sym_value(pg, calc::lie_derivative(pg.g(), pg.vector(zeta), pg.dim()));
}

SymTensorValue second_lie_derivative_metric(const MetricField& g, const VectorField& zeta, std::span<const double> p) {
    PointGeometry pg(g, p, 2);
    Jets z = pg.vector(zeta);
    Jets L = calc::lie_derivative(pg.g(), z, pg.dim());
    return sym_value(pg, calc::lie_derivative(L, z, pg.dim()));
}

Residual identity_div_lie_residual(const MetricField& g, const VectorField& zeta, std::span<const double> p) {
    PointGeometry pg(g, p, 2);
    const int n = pg.dim();
    Jets z = pg.vector(zeta);
    const auto& G = pg.christoffel();
    Jets L = calc::lie_derivative(pg.g(), z, n);
    Residual r;
    r.lhs = calc::values(calc::divergence_02(L, pg.ginv(), G, n));
    Jet div = calc::divergence(z, G, n);
    const auto& Q = pg.curvature().ricci_operator;
    for (int j = 0; j < n; ++j) {
        double qz = 0.0;  // g_jk Q^k_l zeta^l
        for (int k = 0; k < n; ++k)
            for (int l = 0; l < n; ++l) qz += pg.g()[sz(j * n + k)].value() * Q[sz(k * n + l)].value() * z[sz(l)].value();
        r.rhs.push_back(2.0 * (div.derivative(j).value() + qz));
    }
    return r;
}

std::vector<double> codifferential_exterior(const MetricField& g, const VectorField& zeta, std::span<const double> p) {
    PointGeometry pg(g, p, 2);
    const int n = pg.dim();
    Jets w = calc::lower(pg.vector(zeta), pg.g(), n);
    Jets F;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) F.push_back(w[sz(j)].derivative(i) - w[sz(i)].derivative(j));
    // nabla^i F_ij
    return calc::values(calc::divergence_02(F, pg.ginv(), pg.christoffel(), n));
}

Residual weitzenbock_lie_residual(const MetricField& g, const VectorField& zeta, std::span<const double> p) {
    PointGeometry pg(g, p, 2);
    const int n = pg.dim();
    Jets z = pg.vector(zeta);
    const auto& G = pg.christoffel();
    Residual r;
    r.lhs = calc::values(calc::divergence_02(calc::lie_derivative(pg.g(), z, n), pg.ginv(), G, n));
    Jets w = calc::lower(z, pg.g(), n);
    Jets rough = calc::divergence_02(calc::covariant_covector(w, G, n), pg.ginv(), G, n);
    Jet div = calc::divergence(z, G, n);
    const auto& Ric = pg.curvature().ricci;
    for (int j = 0; j < n; ++j) {
        double rz = 0.0;
        for (int k = 0; k < n; ++k) rz += Ric[sz(j * n + k)].value() * z[sz(k)].value();
        r.rhs.push_back(rough[sz(j)].value() + div.derivative(j).value() + rz);
    }
    return r;
}

Residual identity_trace_lie2_residual(const MetricField& g, const VectorField& zeta, std::span<const double> p) {
    PointGeometry pg(g, p, 2);
    const int n = pg.dim();
    Jets z = pg.vector(zeta);
    const auto& G = pg.christoffel();
    Jets L2 = calc::lie_derivative(calc::lie_derivative(pg.g(), z, n), z, n);
    Residual r;
    r.lhs = {calc::trace(L2, pg.ginv(), n).value()};
    Jets A = calc::covariant_vector(z, G, n);
    double norm2 = calc::mixed_norm2(A, pg.g(), pg.ginv(), n).value();
    double divw = calc::divergence(calc::apply_mixed(A, z, n), G, n).value();
    double ric = calc::contract(pg.curvature().ricci, z, z, n).value();
    r.rhs = {2.0 * (norm2 + divw - ric)};
    return r;
}

Residual bochner_residual(const MetricField& g, const ScalarField& f, std::span<const double> p) {
    PointGeometry pg(g, p, 3);
    const int n = pg.dim();
    const auto& G = pg.christoffel();
    Jet fj = pg.scalar(f);
    Jets df = calc::partials(fj);
    Jets grad = calc::raise(df, pg.ginv(), n);
    Jet gn2 = calc::pair(df, grad);
    Residual r;
    r.lhs = {0.5 * calc::trace(calc::hessian(gn2, G, n), pg.ginv(), n).value()};
    Jets A = calc::covariant_vector(grad, G, n);
    double hess2 = calc::mixed_norm2(A, pg.g(), pg.ginv(), n).value();
    double gl = calc::directional(grad, calc::divergence(grad, G, n)).value();
    double ric = calc::contract(pg.curvature().ricci, grad, grad, n).value();
    r.rhs = {hess2 + gl + ric};
    return r;
}

Residual bianchi_residual(const MetricField& g, std::span<const double> p) {
    PointGeometry pg(g, p, 3);
    const int n = pg.dim();
    const auto& c = pg.curvature();
    Residual r;
    r.lhs = calc::values(calc::divergence_02(c.ricci, pg.ginv(), pg.christoffel(), n));
    for (int j = 0; j < n; ++j) r.rhs.push_back(0.5 * c.scalar.derivative(j).value());
    return r;
}

std::vector<double> torus_integrate_many(const MetricField& g,
                                         const std::function<std::vector<double>(std::span<const double>)>& s,
                                         std::size_t count, int resolution) {
    const Chart& chart = g.chart();
    if (!chart.fully_periodic()) throw PreconditionError("torus_integrate needs a fully periodic chart");
    if (resolution < 8) throw PreconditionError("torus_integrate needs resolution >= 8 per axis");
    const int n = chart.dim();
    std::size_t total = 1;
    for (int i = 0; i < n; ++i) total *= sz(resolution);
    double cell = 1.0;
    for (int i = 0; i < n; ++i) cell *= chart.period(i) / resolution;
    std::vector<std::vector<double>> node(total);
    parallel_for(total, [&](std::size_t idx) {
        std::vector<double> x(sz(n));
        std::size_t r = idx;
        for (int i = 0; i < n; ++i) {
            x[sz(i)] = chart.box()[sz(i)].lo + chart.period(i) * static_cast<double>(r % sz(resolution)) / resolution;
            r /= sz(resolution);
        }
        const double vol = std::sqrt(std::abs(geoflow::determinant(g.values(x), n)));
        node[idx] = s(x);
        if (node[idx].size() != count) throw std::logic_error("integrand returned wrong count");
        for (double& v : node[idx]) v *= vol;
    });
    std::vector<double> sum(count, 0.0);
    for (const auto& v : node)
        for (std::size_t k = 0; k < count; ++k) sum[k] += v[k];
    for (double& v : sum) v *= cell;
    return sum;
}

double torus_integrate(const MetricField& g, const std::function<double(std::span<const double>)>& s, int resolution) {
    return torus_integrate_many(g, [&](std::span<const double> x) { return std::vector<double>{s(x)}; }, 1, resolution)[0];
}

double torus_integrate(const MetricField& g, const ScalarField& s, int resolution) {
    if (!same_chart(s.chart(), g.chart())) throw GeometryError("chart mismatch in torus_integrate");
    return torus_integrate(g, [&](std::span<const double> x) { return s.value(x); }, resolution);
}

double tensor_norm2(const std::vector<double>& T, const std::vector<double>& g, int n) {
    Eigen::MatrixXd gi = as_matrix(g, n).inverse();
    Eigen::MatrixXd t = as_matrix(T, n);
    return (gi * t * gi).cwiseProduct(t).sum();
}

double majorant_norm2(const std::vector<double>& T, const std::vector<double>& g, int n) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(as_matrix(g, n));
    Eigen::VectorXd inv = es.eigenvalues().cwiseAbs().cwiseInverse();
    Eigen::MatrixXd hi = es.eigenvectors() * inv.asDiagonal() * es.eigenvectors().transpose();
    Eigen::MatrixXd t = as_matrix(T, n);
    return (hi * t * hi).cwiseProduct(t).sum();
}

}  // namespace geoflow
