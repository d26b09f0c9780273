#pragma once

#include <array>
#include <cstdint>
#include <cstddef>
#include <span>
#include <vector>

namespace geoflow {

/// Largest supported truncation order of a jet.
inline constexpr int kMaxJetOrder = 4;

/// Exponent per coordinate of a partial derivative, e.g. (2,0,1) for d^3/dx0^2 dx2.
class MultiIndex {
public:
    MultiIndex() = default;
    explicit MultiIndex(std::vector<int> exponents);

    /// Multi-index of total order one along coordinate `i`.
    static MultiIndex unit(int dim, int i);

    int dim() const { return static_cast<int>(exponents_.size()); }
    int order() const;
    int operator[](int i) const { return exponents_[static_cast<std::size_t>(i)]; }
    const std::vector<int>& exponents() const { return exponents_; }
    /// alpha! = prod_i alpha_i!
    double factorial() const;

    friend bool operator==(const MultiIndex&, const MultiIndex&) = default;

private:
    std::vector<int> exponents_;
};

/// Enumeration of all multi-indices of a dimension up to kMaxJetOrder, graded by total
/// order so that the coefficients of an order-k jet form a prefix of the order-K layout.
/// Layouts are immutable and shared process-wide.
class JetLayout {
public:
    struct Product {
        std::uint32_t lhs;
        std::uint32_t rhs;
        std::uint32_t out;
    };

    static const JetLayout& get(int dim);

    int dim() const { return dim_; }
    /// Number of coefficients of a jet of order k: C(dim + k, k).
    std::size_t size(int order) const { return size_upto_[static_cast<std::size_t>(order)]; }
    /// Exponent of coordinate i at coefficient slot idx.
    int exponent(std::size_t idx, int i) const { return exps_[idx * static_cast<std::size_t>(dim_) + static_cast<std::size_t>(i)]; }
    int degree(std::size_t idx) const { return degree_[idx]; }
    /// Slot of alpha + e_i, or -1 when that exceeds kMaxJetOrder.
    int raised(std::size_t idx, int i) const { return raise_[idx * static_cast<std::size_t>(dim_) + static_cast<std::size_t>(i)]; }
    /// Slot of a multi-index; -1 when its order exceeds kMaxJetOrder.
    int index_of(const MultiIndex& alpha) const;
    /// All (lhs, rhs, out) slot triples with alpha_lhs + alpha_rhs = alpha_out, sorted by out degree.
    std::span<const Product> products(int order) const {
        return {products_.data(), products_upto_[static_cast<std::size_t>(order)]};
    }

private:
    explicit JetLayout(int dim);

    int dim_;
    std::vector<int> exps_;
    std::vector<int> degree_;
    std::vector<int> raise_;
    std::vector<Product> products_;
    std::array<std::size_t, kMaxJetOrder + 1> size_upto_{};
    std::array<std::size_t, kMaxJetOrder + 1> products_upto_{};
};

/// Truncated multivariate Taylor expansion of a scalar function at a point.
///
/// Coefficient at slot alpha is d^alpha f / alpha!, so multiplication is a plain
/// truncated convolution. Binary operations truncate to the smaller of the two orders.
class Jet {
public:
    Jet() = default;
    /// Zero jet.
    Jet(int dim, int order);

    static Jet constant(int dim, int order, double value);
    /// Jet of the coordinate function x_i at a point whose i-th coordinate is `value`.
    static Jet variable(int dim, int order, int i, double value);

    int dim() const { return layout_ ? layout_->dim() : 0; }
    int order() const { return order_; }
    bool empty() const { return layout_ == nullptr; }
    const JetLayout& layout() const { return *layout_; }

    double value() const { return coeffs_[0]; }
    std::span<const double> coefficients() const { return coeffs_; }
    std::span<double> coefficients() { return coeffs_; }
    double coefficient(const MultiIndex& alpha) const;
    /// alpha! times the coefficient at alpha.
    double partial(const MultiIndex& alpha) const;

    /// d/dx_i, one order lower.
    Jet derivative(int i) const;
    Jet truncated(int order) const;
    /// Same expansion with the constant term removed.
    Jet nilpotent_part() const;

    Jet& operator+=(const Jet& other);
    Jet& operator-=(const Jet& other);
    Jet& operator*=(double s);
    Jet& operator+=(double s) {
        coeffs_[0] += s;
        return *this;
    }

    friend Jet operator+(Jet a, const Jet& b);
    friend Jet operator-(Jet a, const Jet& b);
    friend Jet operator*(const Jet& a, const Jet& b);
    friend Jet operator/(const Jet& a, const Jet& b);
    friend Jet operator-(Jet a);
    friend Jet operator*(Jet a, double s) { return a *= s; }
    friend Jet operator*(double s, Jet a) { return a *= s; }
    friend Jet operator/(Jet a, double s) { return a *= (1.0 / s); }
    friend Jet operator+(Jet a, double s) { return a += s; }
    friend Jet operator+(double s, Jet a) { return a += s; }
    friend Jet operator-(Jet a, double s) { return a += -s; }
    friend Jet operator-(double s, Jet a) { return (-a) += s; }

private:
    const JetLayout* layout_ = nullptr;
    int order_ = 0;
    std::vector<double> coeffs_;
};

/// phi(a) for a univariate phi given its Taylor coefficients phi^(k)(a0)/k! at a0 = a.value(),
/// k = 0..a.order().
Jet compose(const Jet& a, std::span<const double> taylor);

Jet reciprocal(const Jet& a);
Jet exp(const Jet& a);
/// Requires a.value() > 0.
Jet log(const Jet& a);
Jet sin(const Jet& a);
Jet cos(const Jet& a);
Jet sinh(const Jet& a);
Jet cosh(const Jet& a);
/// Requires a.value() > 0.
Jet sqrt(const Jet& a);
Jet pow(const Jet& a, int k);

// Scalar helpers shared by templates that run on both double and Jet.
inline double value_of(double v) { return v; }
inline double value_of(const Jet& j) { return j.value(); }
inline double constant_like(double, double v) { return v; }
inline Jet constant_like(const Jet& like, double v) { return Jet::constant(like.dim(), like.order(), v); }

}  // namespace geoflow
