#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "geoflow/expr.hpp"
#include "geoflow/jet.hpp"

namespace geoflow {

struct Interval {
    double lo = 0.0;
    double hi = 1.0;
    double width() const { return hi - lo; }
};

/// A single coordinate patch with a sampling box and optional periodic coordinates.
class Chart {
public:
    Chart(std::string name, std::vector<std::string> coordinate_names, std::vector<Interval> box,
          std::vector<std::optional<double>> periods = {});

    const std::string& name() const { return name_; }
    int dim() const { return static_cast<int>(names_.size()); }
    const std::vector<std::string>& coordinate_names() const { return names_; }
    const std::vector<Interval>& box() const { return box_; }
    bool periodic(int i) const { return periods_[static_cast<std::size_t>(i)].has_value(); }
    double period(int i) const { return periods_[static_cast<std::size_t>(i)].value(); }
    bool fully_periodic() const;
    bool contains(std::span<const double> p) const;

    Expr parse(const std::string& src) const { return parse_expression(src, dim(), names_); }

private:
    std::string name_;
    std::vector<std::string> names_;
    std::vector<Interval> box_;
    std::vector<std::optional<double>> periods_;
};

using ChartPtr = std::shared_ptr<const Chart>;

/// Convenience: chart with names x0..x{n-1} and the same interval on every axis.
ChartPtr make_chart(const std::string& name, int dim, Interval box);
/// Fully periodic chart [0, period)^n.
ChartPtr make_torus_chart(const std::string& name, int dim, double period);

/// Produces n-component (or n*n-component) jets at a point for a requested order.
using JetSource = std::function<std::vector<Jet>(std::span<const double> point, int order)>;

/// Pseudo-Riemannian metric g_ij on a chart, with declared number of negative eigenvalues.
///
/// Either expression-backed (components as Exprs) or backed by a jet source, as for the
/// induced metric of an immersion. Evaluated matrices are symmetrized; a nonzero
/// symmetrization defect is an error.
class MetricField {
public:
    MetricField(ChartPtr chart, std::vector<Expr> components, int signature);
    MetricField(ChartPtr chart, int signature, JetSource source, int max_order);

    static MetricField diagonal(ChartPtr chart, const std::vector<Expr>& diag, int signature);
    static MetricField euclidean(ChartPtr chart);

    const Chart& chart() const { return *chart_; }
    const ChartPtr& chart_ptr() const { return chart_; }
    int dim() const { return chart_->dim(); }
    int signature() const { return signature_; }
    int max_order() const { return max_order_; }

    bool has_expressions() const { return !components_.empty(); }
    const std::vector<Expr>& components() const { return components_; }
    const Expr& component(int i, int j) const { return components_.at(static_cast<std::size_t>(i * dim() + j)); }

    /// Row-major n*n jets of order `order`.
    std::vector<Jet> jets(std::span<const double> point, int order) const;
    std::vector<double> values(std::span<const double> point) const;

    /// c * g with the same signature (c > 0).
    MetricField scaled(double c) const;

private:
    ChartPtr chart_;
    int signature_;
    std::vector<Expr> components_;
    JetSource source_;
    int max_order_ = kMaxJetOrder;
};

/// Vector field zeta^i on a chart.
class VectorField {
public:
    VectorField(ChartPtr chart, std::vector<Expr> components);
    VectorField(ChartPtr chart, JetSource source, int max_order);

    static VectorField zero(ChartPtr chart);
    /// x^i d/dx^i.
    static VectorField position(ChartPtr chart);

    const Chart& chart() const { return *chart_; }
    const ChartPtr& chart_ptr() const { return chart_; }
    int dim() const { return chart_->dim(); }
    int max_order() const { return max_order_; }
    bool has_expressions() const { return !components_.empty(); }
    const std::vector<Expr>& components() const { return components_; }

    std::vector<Jet> jets(std::span<const double> point, int order) const;
    std::vector<double> values(std::span<const double> point) const;

    VectorField negated() const;

private:
    ChartPtr chart_;
    std::vector<Expr> components_;
    JetSource source_;
    int max_order_ = kMaxJetOrder;
};

/// Scalar function on a chart.
class ScalarField {
public:
    ScalarField(ChartPtr chart, Expr expr);

    const Chart& chart() const { return *chart_; }
    const ChartPtr& chart_ptr() const { return chart_; }
    const Expr& expr() const { return expr_; }
    Jet jet(std::span<const double> point, int order) const;
    double value(std::span<const double> point) const { return expr_.evaluate(point); }

private:
    ChartPtr chart_;
    Expr expr_;
};

/// Same chart name and dimension.
bool same_chart(const Chart& a, const Chart& b);

}  // namespace geoflow
