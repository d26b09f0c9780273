#include "geoflow/fields.hpp"

#include <cmath>
#include <stdexcept>

#include "geoflow/errors.hpp"

namespace geoflow {

Chart::Chart(std::string name, std::vector<std::string> coordinate_names, std::vector<Interval> box,
             std::vector<std::optional<double>> periods)
    : name_(std::move(name)), names_(std::move(coordinate_names)), box_(std::move(box)), periods_(std::move(periods)) {
    if (names_.empty()) throw GeometryError("chart '" + name_ + "' must have dimension >= 1");
    if (box_.size() != names_.size()) throw GeometryError("chart '" + name_ + "' sampling box has wrong size");
    if (periods_.empty()) periods_.resize(names_.size());
    if (periods_.size() != names_.size()) throw GeometryError("chart '" + name_ + "' periods have wrong size");
    for (std::size_t i = 0; i < names_.size(); ++i) {
        if (!(box_[i].lo < box_[i].hi)) throw GeometryError("chart '" + name_ + "' sampling box is empty");
        if (periods_[i] && !(*periods_[i] > 0.0)) throw GeometryError("chart '" + name_ + "' period must be positive");
    }
}

bool Chart::fully_periodic() const {
    for (const auto& p : periods_) {
        if (!p) return false;
    }
    return true;
}

bool Chart::contains(std::span<const double> p) const {
    if (static_cast<int>(p.size()) != dim()) return false;
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (periods_[i]) continue;
        if (p[i] < box_[i].lo || p[i] > box_[i].hi) return false;
    }
    return true;
}

ChartPtr make_chart(const std::string& name, int dim, Interval box) {
    std::vector<std::string> names;
    for (int i = 0; i < dim; ++i) names.push_back("x" + std::to_string(i));
    return std::make_shared<const Chart>(name, names, std::vector<Interval>(static_cast<std::size_t>(dim), box));
}

ChartPtr make_torus_chart(const std::string& name, int dim, double period) {
    std::vector<std::string> names;
    for (int i = 0; i < dim; ++i) names.push_back("x" + std::to_string(i));
    return std::make_shared<const Chart>(name, names,
                                         std::vector<Interval>(static_cast<std::size_t>(dim), Interval{0.0, period}),
                                         std::vector<std::optional<double>>(static_cast<std::size_t>(dim), period));
}

bool same_chart(const Chart& a, const Chart& b) { return &a == &b || (a.name() == b.name() && a.dim() == b.dim()); }

namespace {

void check_point(const Chart& chart, std::span<const double> point) {
    if (static_cast<int>(point.size()) != chart.dim())
        throw GeometryError("point dimension " + std::to_string(point.size()) + " does not match chart '" +
                            chart.name() + "' of dimension " + std::to_string(chart.dim()));
}

void check_expr(const Chart& chart, const Expr& e) {
    if (e.max_coordinate() >= chart.dim())
        throw GeometryError("expression " + e.to_string() + " references a coordinate outside chart '" + chart.name() +
                            "'");
}

void check_order(int order, int max_order) {
    if (order < 0 || order > max_order)
        throw std::invalid_argument("requested jet order " + std::to_string(order) + " exceeds supported order " +
                                    std::to_string(max_order));
}

}  // namespace

// --- MetricField -------------------------------------------------------------

MetricField::MetricField(ChartPtr chart, std::vector<Expr> components, int signature)
    : chart_(std::move(chart)), signature_(signature), components_(std::move(components)) {
    const auto n = static_cast<std::size_t>(chart_->dim());
    if (components_.size() != n * n) throw GeometryError("metric needs n*n components");
    if (signature_ < 0 || signature_ > chart_->dim()) throw GeometryError("signature out of range");
    for (const auto& e : components_) check_expr(*chart_, e);
}

MetricField::MetricField(ChartPtr chart, int signature, JetSource source, int max_order)
    : chart_(std::move(chart)), signature_(signature), source_(std::move(source)), max_order_(max_order) {
    if (signature_ < 0 || signature_ > chart_->dim()) throw GeometryError("signature out of range");
}

MetricField MetricField::diagonal(ChartPtr chart, const std::vector<Expr>& diag, int signature) {
    const int n = chart->dim();
    if (static_cast<int>(diag.size()) != n) throw GeometryError("diagonal metric needs n components");
    std::vector<Expr> comps(static_cast<std::size_t>(n * n), Expr::constant(0.0));
    for (int i = 0; i < n; ++i) comps[static_cast<std::size_t>(i * n + i)] = diag[static_cast<std::size_t>(i)];
    return MetricField(std::move(chart), std::move(comps), signature);
}

MetricField MetricField::euclidean(ChartPtr chart) {
    const int n = chart->dim();
    return diagonal(std::move(chart), std::vector<Expr>(static_cast<std::size_t>(n), Expr::constant(1.0)), 0);
}

std::vector<Jet> MetricField::jets(std::span<const double> point, int order) const {
    check_point(*chart_, point);
    check_order(order, max_order_);
    const int n = dim();
    std::vector<Jet> g;
    if (has_expressions()) {
        g.reserve(components_.size());
        for (const auto& e : components_) g.push_back(e.jet(point, order));
    } else {
        g = source_(point, order);
        if (g.size() != static_cast<std::size_t>(n * n)) throw GeometryError("metric source returned wrong size");
    }
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
            Jet& a = g[static_cast<std::size_t>(i * n + j)];
            Jet& b = g[static_cast<std::size_t>(j * n + i)];
            double defect = 0.0, scale = 0.0;
            for (std::size_t k = 0; k < a.coefficients().size(); ++k) {
                defect = std::max(defect, std::abs(a.coefficients()[k] - b.coefficients()[k]));
                scale = std::max(scale, std::abs(a.coefficients()[k]));
            }
            if (defect > 1e-12 * (1.0 + scale))
                throw GeometryError("metric components (" + std::to_string(i) + "," + std::to_string(j) +
                                    ") are not symmetric");
            Jet avg = 0.5 * (a + b);
            a = avg;
            b = avg;
        }
    }
    return g;
}

std::vector<double> MetricField::values(std::span<const double> point) const {
    std::vector<double> out;
    for (const auto& j : jets(point, 0)) out.push_back(j.value());
    return out;
}

MetricField MetricField::scaled(double c) const {
    if (!(c > 0.0)) throw GeometryError("metric scale must be positive");
    if (has_expressions()) {
        std::vector<Expr> comps;
        for (const auto& e : components_) comps.push_back(Expr::constant(c) * e);
        return MetricField(chart_, std::move(comps), signature_);
    }
    auto src = source_;
    return MetricField(
        chart_, signature_,
        [src, c](std::span<const double> p, int order) {
            auto g = src(p, order);
            for (auto& j : g) j *= c;
            return g;
        },
        max_order_);
}

// --- VectorField -------------------------------------------------------------

VectorField::VectorField(ChartPtr chart, std::vector<Expr> components)
    : chart_(std::move(chart)), components_(std::move(components)) {
    if (static_cast<int>(components_.size()) != chart_->dim()) throw GeometryError("vector field needs n components");
    for (const auto& e : components_) check_expr(*chart_, e);
}

VectorField::VectorField(ChartPtr chart, JetSource source, int max_order)
    : chart_(std::move(chart)), source_(std::move(source)), max_order_(max_order) {}

VectorField VectorField::zero(ChartPtr chart) {
    const int n = chart->dim();
    return VectorField(std::move(chart), std::vector<Expr>(static_cast<std::size_t>(n), Expr::constant(0.0)));
}

VectorField VectorField::position(ChartPtr chart) {
    std::vector<Expr> comps;
    for (int i = 0; i < chart->dim(); ++i) comps.push_back(Expr::coordinate(i));
    return VectorField(std::move(chart), std::move(comps));
}

std::vector<Jet> VectorField::jets(std::span<const double> point, int order) const {
    check_point(*chart_, point);
    check_order(order, max_order_);
    if (has_expressions()) {
        std::vector<Jet> out;
        out.reserve(components_.size());
        for (const auto& e : components_) out.push_back(e.jet(point, order));
        return out;
    }
    auto out = source_(point, order);
    if (static_cast<int>(out.size()) != dim()) throw GeometryError("vector source returned wrong size");
    return out;
}

std::vector<double> VectorField::values(std::span<const double> point) const {
    std::vector<double> out;
    for (const auto& j : jets(point, 0)) out.push_back(j.value());
    return out;
}

VectorField VectorField::negated() const {
    if (has_expressions()) {
        std::vector<Expr> comps;
        for (const auto& e : components_) comps.push_back(-e);
        return VectorField(chart_, std::move(comps));
    }
    auto src = source_;
    return VectorField(
        chart_,
        [src](std::span<const double> p, int order) {
            auto v = src(p, order);
            for (auto& j : v) j *= -1.0;
            return v;
        },
        max_order_);
}

// --- ScalarField -------------------------------------------------------------

ScalarField::ScalarField(ChartPtr chart, Expr expr) : chart_(std::move(chart)), expr_(std::move(expr)) {
    check_expr(*chart_, expr_);
}

Jet ScalarField::jet(std::span<const double> point, int order) const {
    check_point(*chart_, point);
    return expr_.jet(point, order);
}

}  // namespace geoflow
