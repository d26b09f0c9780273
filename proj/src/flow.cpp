#include "geoflow/flow.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <sstream>

#include "geoflow/curvature.hpp"
#include "geoflow/parallel.hpp"

namespace geoflow {
namespace {

std::size_t sz(int v) { return static_cast<std::size_t>(v); }

std::string fmt(double v) {
    std::ostringstream os;
    os.precision(6);
    os << v;
    return os.str();
}

std::string point_string(std::span<const double> p) {
    std::string s = "(";
    for (std::size_t i = 0; i < p.size(); ++i) s += (i ? ", " : "") + fmt(p[i]);
    return s + ")";
}

/// Node-local chunks so that parallel_for does not spawn work per node.
template <class F>
void for_nodes(std::size_t nodes, F&& body) {
    const std::size_t chunk = 64;
    const std::size_t chunks = (nodes + chunk - 1) / chunk;
    parallel_for(chunks, [&](std::size_t c) {
        const std::size_t end = std::min(nodes, (c + 1) * chunk);
        for (std::size_t k = c * chunk; k < end; ++k) body(k);
    });
}

}  // namespace

double FSchedule::minimum(double a, double b) const {
    double m = std::min((*this)(a), (*this)(b));
    if (mu != 0.0) {
        const double v = lambda / mu;
        if (v > a && v < b) m = std::min(m, (*this)(v));
    }
    return m;
}

FlowMapResult flow_map(const VectorField& zeta, const FSchedule& f, double t, std::span<const double> x) {
    const int n = zeta.dim();
    if (static_cast<int>(x.size()) != n) throw GeometryError("flow_map: point dimension mismatch");
    const double lo = std::min(0.0, t), hi = std::max(0.0, t);
    if (!(f.minimum(lo, hi) > 0.0))
        throw PreconditionError("flow_map: f is not positive on [" + fmt(lo) + ", " + fmt(hi) + "]");
    const Chart& chart = zeta.chart();
    if (!chart.contains(x)) throw PreconditionError("flow_map: start point " + point_string(x) + " outside the sampling box");

    FlowMapResult out;
    out.source.assign(x.begin(), x.end());
    out.t = t;
    out.f = f(t);
    const int steps = t == 0.0 ? 0 : std::max(1, static_cast<int>(std::ceil(std::abs(t) / kFlowMapStep - 1e-12)));
    out.steps = steps;
    const double ds = steps ? t / steps : 0.0;

    const std::size_t N = sz(n);
    // state: x (n) then J (n*n), row-major
    std::vector<double> y(N + N * N, 0.0);
    for (std::size_t i = 0; i < N; ++i) {
        y[i] = x[i];
        y[N + i * N + i] = 1.0;
    }
    auto rhs = [&](double s, const std::vector<double>& state, std::vector<double>& dy) {
        std::span<const double> p(state.data(), N);
        if (!chart.contains(p))
            throw PreconditionError("flow_map: trajectory left the sampling box at s = " + fmt(s) + ", point " +
                                    point_string(p));
        const auto jets = zeta.jets(p, 1);
        const double inv = 1.0 / f(s);
        for (std::size_t i = 0; i < N; ++i) dy[i] = jets[i].value() * inv;
        for (std::size_t i = 0; i < N; ++i)
            for (std::size_t j = 0; j < N; ++j) {
                double acc = 0.0;
                for (std::size_t k = 0; k < N; ++k)
                    acc += jets[i].derivative(static_cast<int>(k)).value() * state[N + k * N + j];
                dy[N + i * N + j] = acc * inv;
            }
    };
    std::vector<double> k1(y.size()), k2(y.size()), k3(y.size()), k4(y.size()), tmp(y.size());
    for (int step = 0; step < steps; ++step) {
        const double s = step * ds;
        rhs(s, y, k1);
        for (std::size_t i = 0; i < y.size(); ++i) tmp[i] = y[i] + 0.5 * ds * k1[i];
        rhs(s + 0.5 * ds, tmp, k2);
        for (std::size_t i = 0; i < y.size(); ++i) tmp[i] = y[i] + 0.5 * ds * k2[i];
        rhs(s + 0.5 * ds, tmp, k3);
        for (std::size_t i = 0; i < y.size(); ++i) tmp[i] = y[i] + ds * k3[i];
        rhs(s + ds, tmp, k4);
        for (std::size_t i = 0; i < y.size(); ++i) y[i] += ds / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    if (!chart.contains(std::span<const double>(y.data(), N)))
        throw PreconditionError("flow_map: trajectory left the sampling box at s = " + fmt(t));
    out.image.assign(y.begin(), y.begin() + static_cast<std::ptrdiff_t>(N));
    out.jacobian.assign(y.begin() + static_cast<std::ptrdiff_t>(N), y.end());
    return out;
}

SymTensorValue pullback_metric(const MetricField& g0, const FlowMapResult& m) {
    const int n = g0.dim();
    const std::size_t N = sz(n);
    if (m.image.size() != N || m.jacobian.size() != N * N) throw GeometryError("pullback_metric: dimension mismatch");
    if (std::abs(determinant(m.jacobian, n)) <= 1e-12)
        throw GeometryError("pullback_metric: singular Jacobian at " + point_string(m.source));
    const auto G = g0.values(m.image);
    SymTensorValue out;
    out.point = m.source;
    out.n = n;
    out.values.assign(N * N, 0.0);
    for (std::size_t i = 0; i < N; ++i)
        for (std::size_t j = i; j < N; ++j) {
            double acc = 0.0;
            for (std::size_t a = 0; a < N; ++a)
                for (std::size_t b = 0; b < N; ++b) acc += m.jacobian[a * N + i] * G[a * N + b] * m.jacobian[b * N + j];
            out.values[i * N + j] = out.values[j * N + i] = m.f * acc;
        }
    return out;
}

SymTensorValue family_second_derivative_residual(const FlowFamilySpec& spec, std::span<const double> x) {
    if (!spec.g0 || !spec.zeta) throw PreconditionError("flow family: metric and field are required");
    if (!same_chart(spec.g0->chart(), spec.zeta->chart())) throw GeometryError("flow family: chart mismatch");
    const double h = spec.h;
    if (!(h >= 1e-4 && h <= 1e-2)) throw PreconditionError("flow family: h = " + fmt(h) + " outside [1e-4, 1e-2]");
    if (!(spec.f.minimum(-2 * h, 2 * h) > 0.0)) throw PreconditionError("flow family: f is not positive on [-2h, 2h]");

    const auto plus = pullback_metric(*spec.g0, flow_map(*spec.zeta, spec.f, h, x));
    const auto minus = pullback_metric(*spec.g0, flow_map(*spec.zeta, spec.f, -h, x));
    const auto g0 = spec.g0->values(x);
    const double r = curvature(*spec.g0, x).scalar;
    SymTensorValue out;
    out.point.assign(x.begin(), x.end());
    out.n = spec.g0->dim();
    out.values.resize(g0.size());
    for (std::size_t k = 0; k < g0.size(); ++k)
        out.values[k] = (plus.values[k] - 2.0 * g0[k] + minus.values[k]) / (h * h) + r * g0[k];
    return out;
}

std::vector<FamilyLadderRung> family_residual_ladder(const FlowFamilySpec& spec, std::span<const double> x,
                                                     int rungs) {
    std::vector<FamilyLadderRung> out;
    FlowFamilySpec s = spec;
    for (int k = 0; k < rungs; ++k) {
        FamilyLadderRung rung;
        rung.h = s.h;
        rung.residual = family_second_derivative_residual(s, x).sup();
        if (!out.empty()) rung.ratio = out.back().residual / rung.residual;
        out.push_back(rung);
        s.h *= 0.5;
    }
    return out;
}

double conformal_flow_exact(double r0, double phi0, double v0, double t) {
    auto phi = [&](double s) { return phi0 + v0 * s - 0.5 * r0 * s * s; };
    const double lo = std::min(0.0, t), hi = std::max(0.0, t);
    double m = std::min(phi(lo), phi(hi));
    if (r0 < 0.0) {
        const double v = v0 / r0;
        if (v > lo && v < hi) m = std::min(m, phi(v));
    }
    if (!(m > 0.0)) throw PreconditionError("conformal flow: sign loss, phi is not positive on [" + fmt(lo) + ", " + fmt(hi) + "]");
    return phi(t);
}

std::size_t GridSpec::node_count() const {
    std::size_t c = 1;
    for (int p : points) c *= sz(p);
    return c;
}

double GridSpec::min_spacing() const {
    double m = std::numeric_limits<double>::infinity();
    for (int a = 0; a < dim; ++a) m = std::min(m, spacing(a));
    return m;
}

std::vector<double> GridSpec::node_point(std::size_t node) const {
    std::vector<double> x(sz(dim));
    for (int a = 0; a < dim; ++a) {
        x[sz(a)] = spacing(a) * static_cast<double>(node % sz(points[sz(a)]));
        node /= sz(points[sz(a)]);
    }
    return x;
}

void GridSpec::validate() const {
    if (dim < 1) throw PreconditionError("grid: dimension must be positive");
    if (points.size() != sz(dim) || period.size() != sz(dim)) throw PreconditionError("grid: per-axis sizes do not match the dimension");
    for (int a = 0; a < dim; ++a) {
        if (points[sz(a)] < 16) throw PreconditionError("grid: at least 16 points per axis required");
        if (!(period[sz(a)] > 0.0)) throw PreconditionError("grid: periods must be positive");
    }
    if (stencil_order != 4) throw PreconditionError("grid: only the 4th-order stencil is supported");
    if (!(dt > 0.0)) throw PreconditionError("grid: dt must be positive");
    if (!(final_time >= 0.0)) throw PreconditionError("grid: final time must be nonnegative");
    if (output_every < 0) throw PreconditionError("grid: output_every must be nonnegative");
}

FlowState grid_initial_state(const GridSpec& grid, const MetricField& g0, double velocity_scale,
                             const std::vector<Expr>& velocity) {
    grid.validate();
    const Chart& chart = g0.chart();
    const int n = grid.dim;
    if (chart.dim() != n) throw GeometryError("grid: chart dimension differs from grid dimension");
    if (!chart.fully_periodic()) throw PreconditionError("grid: the chart must be fully periodic");
    for (int a = 0; a < n; ++a)
        if (std::abs(chart.period(a) - grid.period[sz(a)]) > 1e-12 * grid.period[sz(a)])
            throw PreconditionError("grid: chart period differs from grid period on axis " + std::to_string(a));
    if (!velocity.empty() && velocity.size() != sz(n * n)) throw GeometryError("grid: velocity needs n*n components");
    const std::size_t nodes = grid.node_count();
    const std::size_t NN = sz(n * n);
    FlowState s;
    s.n = n;
    s.metric.assign(nodes * NN, 0.0);
    s.velocity.assign(nodes * NN, 0.0);
    for_nodes(nodes, [&](std::size_t k) {
        auto x = grid.node_point(k);
        for (int a = 0; a < n; ++a) x[sz(a)] += chart.box()[sz(a)].lo;
        const auto g = g0.values(x);
        for (std::size_t c = 0; c < NN; ++c) {
            s.metric[k * NN + c] = g[c];
            s.velocity[k * NN + c] = velocity_scale * g[c] + (velocity.empty() ? 0.0 : velocity[c].evaluate(x));
        }
    });
    return s;
}

std::string to_string(Termination t) {
    switch (t) {
        case Termination::Completed: return "completed";
        case Termination::Degenerated: return "degenerated";
        case Termination::Unstable: return "unstable";
    }
    return "unknown";
}

namespace {

// 4th-order central stencils, grouped so that constants give exact zeros and mirrored
// data give mirrored results
inline double d1(double m2, double m1, double p1, double p2) { return (8.0 * (p1 - m1) - (p2 - m2)) / 12.0; }
inline double d2(double m2, double m1, double c, double p1, double p2) {
    return (16.0 * (p1 + m1) - (p2 + m2) - 30.0 * c) / 12.0;
}

double max_abs(const std::vector<double>& v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

}  // namespace

LeapfrogIntegrator::LeapfrogIntegrator(const GridSpec& grid, FlowState initial) : grid_(grid) {
    grid.validate();
    n_ = grid.dim;
    nodes_ = grid.node_count();
    if (initial.n != n_ || initial.metric.size() != nodes_ * sz(n_ * n_) || initial.velocity.size() != initial.metric.size())
        throw PreconditionError("grid: initial state does not match the grid");
    dt_ = grid.dt;
    t_ = initial.t;
    spacing_ = grid.min_spacing();
    cell_ = 1.0;
    for (int a = 0; a < n_; ++a) cell_ *= grid.spacing(a);
    cur_ = std::move(initial.metric);
    initialize(initial.velocity);
}

LeapfrogIntegrator::LeapfrogIntegrator(const HomogeneousSpec& spec) : homogeneous_(spec) {
    n_ = spec.dim;
    if (n_ < 1) throw PreconditionError("homogeneous flow: dimension must be positive");
    auto& g0 = homogeneous_->g0;
    if (g0.empty()) {
        g0.assign(sz(n_ * n_), 0.0);
        for (int i = 0; i < n_; ++i) g0[sz(i * n_ + i)] = 1.0;
    }
    if (g0.size() != sz(n_ * n_)) throw PreconditionError("homogeneous flow: g0 needs n*n entries");
    if (!(spec.dt > 0.0)) throw PreconditionError("homogeneous flow: dt must be positive");
    if (!(spec.phi0 > 0.0)) throw PreconditionError("homogeneous flow: phi0 must be positive");
    g0_inverse_ = invert_matrix(g0, n_);
    nodes_ = 1;
    dt_ = spec.dt;
    spacing_ = 1.0;
    cell_ = 1.0;
    cur_.resize(g0.size());
    std::vector<double> v(g0.size());
    for (std::size_t c = 0; c < g0.size(); ++c) {
        cur_[c] = spec.phi0 * g0[c];
        v[c] = spec.v0 * g0[c];
    }
    initialize(v);
}

void LeapfrogIntegrator::initialize(const std::vector<double>& velocity) {
    const std::size_t NN = sz(n_ * n_);
    det0_nodes_.resize(nodes_);
    for (std::size_t k = 0; k < nodes_; ++k) {
        std::vector<double> g(cur_.begin() + static_cast<std::ptrdiff_t>(k * NN),
                              cur_.begin() + static_cast<std::ptrdiff_t>((k + 1) * NN));
        for (std::size_t i = 0; i < sz(n_); ++i)
            for (std::size_t j = i + 1; j < sz(n_); ++j)
                if (g[i * sz(n_) + j] != g[j * sz(n_) + i])
                    throw PreconditionError("grid: initial metric not symmetric at node " + std::to_string(k));
        const double d = std::abs(determinant(g, n_));
        if (!(d > 1e-8)) throw PreconditionError("grid: initial metric degenerate at node " + std::to_string(k));
        det0_nodes_[k] = d;
    }
    det0_ = *std::min_element(det0_nodes_.begin(), det0_nodes_.end());
    g_scale0_ = max_abs(cur_);
    compute_curvature(cur_, r_);
    const double bound = stability_bound(r_);
    if (dt_ > bound)
        throw PreconditionError("grid: dt = " + fmt(dt_) + " exceeds the stability bound " + fmt(bound));
    // ghost level so that the first step is g1 = g0 + dt v0 - dt^2/2 r0 g0
    prev_.resize(cur_.size());
    for (std::size_t k = 0; k < nodes_; ++k)
        for (std::size_t c = 0; c < NN; ++c) {
            const std::size_t q = k * NN + c;
            prev_[q] = cur_[q] - dt_ * velocity[q] - 0.5 * dt_ * dt_ * r_[k] * cur_[q];
        }
}

double LeapfrogIntegrator::stability_bound(const std::vector<double>& r) const {
    double m = 0.0;
    for (double v : r) m = std::max(m, std::sqrt(std::abs(v)));
    return kStabilityFactor * spacing_ / (1.0 + m);
}

void LeapfrogIntegrator::compute_curvature(const std::vector<double>& g, std::vector<double>& r) const {
    const std::size_t NN = sz(n_ * n_);
    r.assign(nodes_, 0.0);
    if (homogeneous_) {
        double tr = 0.0;
        for (std::size_t i = 0; i < NN; ++i) tr += g0_inverse_[i] * g[i];  // g0^{-1} symmetric
        const double phi = tr / n_;
        r[0] = homogeneous_->r0 / phi;
        return;
    }
    const GridSpec& grid = *grid_;
    const std::size_t N = sz(n_);
    std::vector<std::size_t> stride(N, 1);
    for (std::size_t a = 1; a < N; ++a) stride[a] = stride[a - 1] * sz(grid.points[a - 1]);
    auto shifted = [&](std::size_t node, std::size_t a, int offset) {
        const std::size_t P = sz(grid.points[a]);
        const std::size_t i = (node / stride[a]) % P;
        const auto j = static_cast<std::size_t>((static_cast<long>(i) + offset + static_cast<long>(P)) % static_cast<long>(P));
        return node - i * stride[a] + j * stride[a];
    };
    // first derivatives of every component along every axis, [a][node*NN + c]
    std::vector<std::vector<double>> D(N, std::vector<double>(nodes_ * NN));
    for (std::size_t a = 0; a < N; ++a) {
        const double inv = 1.0 / grid.spacing(static_cast<int>(a));
        for_nodes(nodes_, [&](std::size_t k) {
            const std::size_t m2 = shifted(k, a, -2) * NN, m1 = shifted(k, a, -1) * NN;
            const std::size_t p1 = shifted(k, a, 1) * NN, p2 = shifted(k, a, 2) * NN;
            for (std::size_t c = 0; c < NN; ++c) D[a][k * NN + c] = d1(g[m2 + c], g[m1 + c], g[p1 + c], g[p2 + c]) * inv;
        });
    }
    std::vector<std::string> failures(nodes_);
    for_nodes(nodes_, [&](std::size_t k) {
        MetricDerivatives<double> m;
        m.n = n_;
        m.g.assign(g.begin() + static_cast<std::ptrdiff_t>(k * NN), g.begin() + static_cast<std::ptrdiff_t>((k + 1) * NN));
        m.dg.resize(N * NN);
        m.d2g.resize(N * N * NN);
        for (std::size_t a = 0; a < N; ++a)
            for (std::size_t c = 0; c < NN; ++c) m.dg[a * NN + c] = D[a][k * NN + c];
        for (std::size_t a = 0; a < N; ++a) {
            const double ha = grid.spacing(static_cast<int>(a));
            const std::size_t m2 = shifted(k, a, -2) * NN, m1 = shifted(k, a, -1) * NN;
            const std::size_t p1 = shifted(k, a, 1) * NN, p2 = shifted(k, a, 2) * NN;
            for (std::size_t c = 0; c < NN; ++c)
                m.d2g[(a * N + a) * NN + c] = d2(g[m2 + c], g[m1 + c], g[k * NN + c], g[p1 + c], g[p2 + c]) / (ha * ha);
            for (std::size_t b = a + 1; b < N; ++b) {
                const double inv = 1.0 / grid.spacing(static_cast<int>(b));
                const std::size_t m2 = shifted(k, b, -2) * NN, m1 = shifted(k, b, -1) * NN;
                const std::size_t p1 = shifted(k, b, 1) * NN, p2 = shifted(k, b, 2) * NN;
                const auto& Da = D[a];
                for (std::size_t c = 0; c < NN; ++c)
                    m.d2g[(a * N + b) * NN + c] = m.d2g[(b * N + a) * NN + c] =
                        d1(Da[m2 + c], Da[m1 + c], Da[p1 + c], Da[p2 + c]) * inv;
            }
        }
        try {
            r[k] = curvature_from(m).scalar;
        } catch (const GeometryError&) {
            r[k] = std::numeric_limits<double>::quiet_NaN();
        }
    });
}

void LeapfrogIntegrator::advance(const std::vector<double>& prev, const std::vector<double>& cur,
                                 const std::vector<double>& r, std::vector<double>& next) const {
    const std::size_t NN = sz(n_ * n_);
    next.resize(cur.size());
    const double dt2 = dt_ * dt_;
    for_nodes(nodes_, [&](std::size_t k) {
        for (std::size_t c = 0; c < NN; ++c) {
            const std::size_t q = k * NN + c;
            next[q] = 2.0 * cur[q] - prev[q] - dt2 * r[k] * cur[q];
        }
    });
}

bool LeapfrogIntegrator::step() {
    if (termination_ != Termination::Completed) return false;
    std::vector<double> next;
    advance(prev_, cur_, r_, next);
    const double t_next = t_ + direction_ * dt_;
    const std::size_t NN = sz(n_ * n_);
    for (double v : next)
        if (!std::isfinite(v)) {
            termination_ = Termination::Unstable;
            event_ = "non-finite metric at t = " + fmt(t_next);
            return false;
        }
    for (std::size_t k = 0; k < nodes_; ++k) {
        std::vector<double> g(next.begin() + static_cast<std::ptrdiff_t>(k * NN),
                              next.begin() + static_cast<std::ptrdiff_t>((k + 1) * NN));
        if (std::abs(determinant(g, n_)) < kDegenerationRatio * det0_nodes_[k]) {
            termination_ = Termination::Degenerated;
            event_ = "degeneration at t = " + fmt(t_next) + ", node " + std::to_string(k) + ": |det g| below " +
                     fmt(kDegenerationRatio) + " times its initial value";
            return false;
        }
    }
    if (max_abs(next) > 1e8 * (1.0 + g_scale0_)) {
        termination_ = Termination::Unstable;
        event_ = "metric blow-up at t = " + fmt(t_next);
        return false;
    }
    std::vector<double> r;
    compute_curvature(next, r);
    for (double v : r)
        if (!std::isfinite(v)) {
            termination_ = Termination::Unstable;
            event_ = "non-finite scalar curvature at t = " + fmt(t_next);
            return false;
        }
    const double bound = stability_bound(r);
    if (dt_ > bound) {
        termination_ = Termination::Unstable;
        event_ = "stability guard violated at t = " + fmt(t_next) + ": dt = " + fmt(dt_) + " > " + fmt(bound);
        return false;
    }
    prev_ = std::move(cur_);
    cur_ = std::move(next);
    r_ = std::move(r);
    t_ = t_next;
    return true;
}

void LeapfrogIntegrator::reverse() {
    std::swap(prev_, cur_);
    compute_curvature(cur_, r_);
    t_ -= direction_ * dt_;
    direction_ = -direction_;
}

FlowState LeapfrogIntegrator::snapshot() const {
    std::vector<double> next;
    advance(prev_, cur_, r_, next);
    FlowState s;
    s.t = t_;
    s.n = n_;
    s.metric = cur_;
    s.velocity.resize(cur_.size());
    for (std::size_t q = 0; q < cur_.size(); ++q) s.velocity[q] = direction_ * (next[q] - prev_[q]) / (2.0 * dt_);
    return s;
}

FlowDiagnostics LeapfrogIntegrator::diagnostics(const FlowState& s) const {
    const std::size_t NN = sz(n_ * n_);
    FlowDiagnostics d;
    d.t = s.t;
    d.min_det = std::numeric_limits<double>::infinity();
    std::vector<double> energy(nodes_), dets(nodes_);
    for_nodes(nodes_, [&](std::size_t k) {
        std::vector<double> g(s.metric.begin() + static_cast<std::ptrdiff_t>(k * NN),
                              s.metric.begin() + static_cast<std::ptrdiff_t>((k + 1) * NN));
        std::vector<double> v(s.velocity.begin() + static_cast<std::ptrdiff_t>(k * NN),
                              s.velocity.begin() + static_cast<std::ptrdiff_t>((k + 1) * NN));
        dets[k] = std::abs(determinant(g, n_));
        energy[k] = tensor_norm2(v, g, n_) * std::sqrt(dets[k]) * cell_;
    });
    for (std::size_t k = 0; k < nodes_; ++k) {
        d.min_det = std::min(d.min_det, dets[k]);
        d.max_abs_r = std::max(d.max_abs_r, std::abs(r_[k]));
        d.energy += energy[k];
    }
    return d;
}

namespace {

FlowTrajectory run(LeapfrogIntegrator& lf, double final_time, int output_every) {
    const double steps_real = final_time / lf.dt();
    const long steps = std::lround(steps_real);
    if (std::abs(steps_real - static_cast<double>(steps)) > 1e-9 * std::max(1.0, steps_real))
        throw PreconditionError("flow run: final time " + fmt(final_time) + " is not a multiple of dt = " + fmt(lf.dt()));
    FlowTrajectory traj;
    traj.initial_det = lf.initial_det();
    auto record = [&] {
        auto s = lf.snapshot();
        traj.diagnostics.push_back(lf.diagnostics(s));
        traj.states.push_back(std::move(s));
    };
    record();
    long k = 0;
    for (; k < steps; ++k) {
        if (!lf.step()) break;
        if ((output_every > 0 && (k + 1) % output_every == 0) || k + 1 == steps) record();
    }
    traj.steps = k;
    traj.termination = lf.termination();
    traj.event = lf.event();
    traj.end_time = lf.time();
    if (traj.termination != Termination::Completed && traj.states.back().t != lf.time()) record();
    return traj;
}

}  // namespace

FlowTrajectory grid_flow_run(const GridSpec& grid, const FlowState& initial) {
    LeapfrogIntegrator lf(grid, initial);
    return run(lf, grid.final_time, grid.output_every);
}

FlowTrajectory grid_flow_run(const HomogeneousSpec& spec) {
    LeapfrogIntegrator lf(spec);
    return run(lf, spec.final_time, spec.output_every);
}

double homogeneous_factor(const HomogeneousSpec& spec, std::span<const double> metric) {
    std::vector<double> g0 = spec.g0;
    if (g0.empty()) {
        g0.assign(sz(spec.dim * spec.dim), 0.0);
        for (int i = 0; i < spec.dim; ++i) g0[sz(i * spec.dim + i)] = 1.0;
    }
    const auto inv = invert_matrix(g0, spec.dim);
    double tr = 0.0;
    for (std::size_t i = 0; i < inv.size(); ++i) tr += inv[i] * metric[i];
    return tr / spec.dim;
}

std::vector<ConvergenceRung> homogeneous_convergence(HomogeneousSpec spec, const std::vector<double>& dts) {
    const double exact = conformal_flow_exact(spec.r0, spec.phi0, spec.v0, spec.final_time);
    std::vector<ConvergenceRung> out;
    for (double dt : dts) {
        spec.dt = dt;
        const auto traj = grid_flow_run(spec);
        if (traj.termination != Termination::Completed)
            throw GeometryError("homogeneous flow ended early at dt = " + fmt(dt) + ": " + traj.event);
        ConvergenceRung rung;
        rung.dt = dt;
        rung.phi = homogeneous_factor(spec, traj.states.back().metric);
        rung.error = std::abs(rung.phi - exact);
        if (!out.empty()) rung.order = std::log(out.back().error / rung.error) / std::log(out.back().dt / dt);
        out.push_back(rung);
    }
    return out;
}

void write_trajectory_csv(const FlowTrajectory& traj, std::ostream& out) {
    const auto old = out.precision(17);
    out << "t,node,i,j,value\n";
    for (const auto& s : traj.states) {
        const std::size_t NN = sz(s.n * s.n);
        for (std::size_t k = 0; k < s.nodes(); ++k)
            for (int i = 0; i < s.n; ++i)
                for (int j = i; j < s.n; ++j)
                    out << s.t << ',' << k << ',' << i << ',' << j << ',' << s.metric[k * NN + sz(i * s.n + j)] << '\n';
    }
    out.precision(old);
}

nlohmann::json trajectory_summary(const FlowTrajectory& traj) {
    nlohmann::json j;
    j["termination"] = to_string(traj.termination);
    j["event"] = traj.event;
    j["steps"] = traj.steps;
    j["end_time"] = traj.end_time;
    j["initial_min_det"] = traj.initial_det;
    auto& d = j["diagnostics"] = nlohmann::json::array();
    for (const auto& x : traj.diagnostics)
        d.push_back({{"t", x.t}, {"min_det", x.min_det}, {"max_abs_r", x.max_abs_r}, {"energy", x.energy}});
    return j;
}

}  // namespace geoflow
