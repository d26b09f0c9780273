#include "geoflow/jet.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <stdexcept>

#include "geoflow/errors.hpp"

namespace geoflow {

MultiIndex::MultiIndex(std::vector<int> exponents) : exponents_(std::move(exponents)) {
    for (int e : exponents_) {
        if (e < 0) throw std::invalid_argument("multi-index exponents must be non-negative");
    }
}

MultiIndex MultiIndex::unit(int dim, int i) {
    std::vector<int> e(static_cast<std::size_t>(dim), 0);
    e.at(static_cast<std::size_t>(i)) = 1;
    return MultiIndex(std::move(e));
}

int MultiIndex::order() const {
    int s = 0;
    for (int e : exponents_) s += e;
    return s;
}

double MultiIndex::factorial() const {
    double f = 1.0;
    for (int e : exponents_) {
        for (int k = 2; k <= e; ++k) f *= k;
    }
    return f;
}

namespace {

void enumerate(int dim, int remaining, std::vector<int>& current, int pos, std::vector<std::vector<int>>& out) {
    if (pos == dim - 1) {
        current[static_cast<std::size_t>(pos)] = remaining;
        out.push_back(current);
        return;
    }
    for (int e = remaining; e >= 0; --e) {
        current[static_cast<std::size_t>(pos)] = e;
        enumerate(dim, remaining - e, current, pos + 1, out);
    }
}

}  // namespace

JetLayout::JetLayout(int dim) : dim_(dim) {
    const auto n = static_cast<std::size_t>(dim);
    std::vector<std::vector<int>> all;
    for (int k = 0; k <= kMaxJetOrder; ++k) {
        std::vector<int> cur(n, 0);
        enumerate(dim, k, cur, 0, all);
        size_upto_[static_cast<std::size_t>(k)] = all.size();
    }
    std::map<std::vector<int>, int> lookup;
    for (std::size_t idx = 0; idx < all.size(); ++idx) {
        lookup[all[idx]] = static_cast<int>(idx);
        exps_.insert(exps_.end(), all[idx].begin(), all[idx].end());
        int d = 0;
        for (int e : all[idx]) d += e;
        degree_.push_back(d);
    }
    raise_.assign(all.size() * n, -1);
    for (std::size_t idx = 0; idx < all.size(); ++idx) {
        for (std::size_t i = 0; i < n; ++i) {
            auto up = all[idx];
            ++up[i];
            auto it = lookup.find(up);
            if (it != lookup.end()) raise_[idx * n + i] = it->second;
        }
    }
    // Products sorted by the degree of the output slot so that order-k truncation is a prefix.
    for (int k = 0; k <= kMaxJetOrder; ++k) {
        for (std::size_t out = 0; out < all.size(); ++out) {
            if (degree_[out] != k) continue;
            for (std::size_t a = 0; a < all.size(); ++a) {
                if (degree_[a] > k) break;
                std::vector<int> rest(n);
                bool ok = true;
                for (std::size_t i = 0; i < n; ++i) {
                    rest[i] = all[out][i] - all[a][i];
                    if (rest[i] < 0) {
                        ok = false;
                        break;
                    }
                }
                if (!ok) continue;
                products_.push_back({static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(lookup.at(rest)),
                                     static_cast<std::uint32_t>(out)});
            }
        }
        products_upto_[static_cast<std::size_t>(k)] = products_.size();
    }
}

const JetLayout& JetLayout::get(int dim) {
    if (dim < 1) throw std::invalid_argument("jet dimension must be positive");
    static std::mutex mutex;
    static std::map<int, std::unique_ptr<const JetLayout>> cache;
    std::lock_guard<std::mutex> lock(mutex);
    auto& slot = cache[dim];
    if (!slot) slot.reset(new JetLayout(dim));
    return *slot;
}

int JetLayout::index_of(const MultiIndex& alpha) const {
    if (alpha.dim() != dim_) throw std::invalid_argument("multi-index dimension mismatch");
    const int k = alpha.order();
    if (k > kMaxJetOrder) return -1;
    const std::size_t lo = k == 0 ? 0 : size_upto_[static_cast<std::size_t>(k - 1)];
    for (std::size_t idx = lo; idx < size_upto_[static_cast<std::size_t>(k)]; ++idx) {
        bool same = true;
        for (int i = 0; i < dim_ && same; ++i) same = exponent(idx, i) == alpha[i];
        if (same) return static_cast<int>(idx);
    }
    return -1;
}

Jet::Jet(int dim, int order) : layout_(&JetLayout::get(dim)), order_(order) {
    if (order < 0 || order > kMaxJetOrder) throw std::invalid_argument("jet order out of range");
    coeffs_.assign(layout_->size(order), 0.0);
}

Jet Jet::constant(int dim, int order, double value) {
    Jet j(dim, order);
    j.coeffs_[0] = value;
    return j;
}

Jet Jet::variable(int dim, int order, int i, double value) {
    if (i < 0 || i >= dim) throw std::invalid_argument("coordinate index out of range");
    Jet j = constant(dim, order, value);
    if (order >= 1) j.coeffs_[static_cast<std::size_t>(1 + i)] = 1.0;
    return j;
}

double Jet::coefficient(const MultiIndex& alpha) const {
    if (alpha.order() > order_) throw std::out_of_range("multi-index order exceeds jet order");
    return coeffs_[static_cast<std::size_t>(layout_->index_of(alpha))];
}

double Jet::partial(const MultiIndex& alpha) const { return alpha.factorial() * coefficient(alpha); }

Jet Jet::derivative(int i) const {
    if (order_ == 0) throw std::logic_error("cannot differentiate an order-0 jet");
    Jet d(dim(), order_ - 1);
    for (std::size_t idx = 0; idx < d.coeffs_.size(); ++idx) {
        const int up = layout_->raised(idx, i);
        d.coeffs_[idx] = (layout_->exponent(idx, i) + 1) * coeffs_[static_cast<std::size_t>(up)];
    }
    return d;
}

Jet Jet::truncated(int order) const {
    if (order >= order_) return *this;
    Jet t = *this;
    t.order_ = order;
    t.coeffs_.resize(layout_->size(order));
    return t;
}

Jet Jet::nilpotent_part() const {
    Jet h = *this;
    h.coeffs_[0] = 0.0;
    return h;
}

Jet& Jet::operator+=(const Jet& other) {
    if (empty()) return *this = other;
    if (other.order_ < order_) *this = truncated(other.order_);
    for (std::size_t k = 0; k < coeffs_.size(); ++k) coeffs_[k] += other.coeffs_[k];
    return *this;
}

Jet& Jet::operator-=(const Jet& other) {
    if (empty()) return *this = -other;
    if (other.order_ < order_) *this = truncated(other.order_);
    for (std::size_t k = 0; k < coeffs_.size(); ++k) coeffs_[k] -= other.coeffs_[k];
    return *this;
}

Jet& Jet::operator*=(double s) {
    for (double& c : coeffs_) c *= s;
    return *this;
}

Jet operator+(Jet a, const Jet& b) { return a += b; }
Jet operator-(Jet a, const Jet& b) { return a -= b; }

Jet operator-(Jet a) {
    for (double& c : a.coeffs_) c = -c;
    return a;
}

Jet operator*(const Jet& a, const Jet& b) {
    const int order = std::min(a.order_, b.order_);
    Jet r(a.dim(), order);
    if (order == 0) {
        r.coeffs_[0] = a.coeffs_[0] * b.coeffs_[0];
        return r;
    }
    const double* x = a.coeffs_.data();
    const double* y = b.coeffs_.data();
    double* z = r.coeffs_.data();
    for (const auto& p : a.layout_->products(order)) z[p.out] += x[p.lhs] * y[p.rhs];
    return r;
}

Jet compose(const Jet& a, std::span<const double> taylor) {
    const int order = a.order();
    if (static_cast<int>(taylor.size()) < order + 1) throw std::invalid_argument("too few Taylor coefficients");
    Jet result = Jet::constant(a.dim(), order, taylor[static_cast<std::size_t>(order)]);
    if (order == 0) return result;
    const Jet h = a.nilpotent_part();
    for (int k = order - 1; k >= 0; --k) {
        result = result * h;
        result += taylor[static_cast<std::size_t>(k)];
    }
    return result;
}

Jet reciprocal(const Jet& a) {
    const double v = a.value();
    if (v == 0.0) throw DomainError("division by zero");
    std::array<double, kMaxJetOrder + 1> c{};
    double p = 1.0 / v;
    for (int k = 0; k <= a.order(); ++k) {
        c[static_cast<std::size_t>(k)] = (k % 2 == 0 ? 1.0 : -1.0) * p;
        p /= v;
    }
    return compose(a, c);
}

Jet operator/(const Jet& a, const Jet& b) {
    if (b.order() == 0 || a.order() == 0) {
        Jet r(a.dim(), 0);
        if (b.value() == 0.0) throw DomainError("division by zero");
        r.coeffs_[0] = a.value() / b.value();
        return r;
    }
    return a * reciprocal(b);
}

Jet exp(const Jet& a) {
    std::array<double, kMaxJetOrder + 1> c{};
    const double e = std::exp(a.value());
    double fact = 1.0;
    for (int k = 0; k <= a.order(); ++k) {
        if (k > 0) fact *= k;
        c[static_cast<std::size_t>(k)] = e / fact;
    }
    return compose(a, c);
}

Jet log(const Jet& a) {
    const double v = a.value();
    if (!(v > 0.0)) throw DomainError("log of non-positive value");
    std::array<double, kMaxJetOrder + 1> c{};
    c[0] = std::log(v);
    double p = 1.0;
    for (int k = 1; k <= a.order(); ++k) {
        p /= v;
        c[static_cast<std::size_t>(k)] = (k % 2 == 1 ? 1.0 : -1.0) * p / k;
    }
    return compose(a, c);
}

namespace {

// Derivative cycle of sin/cos/sinh/cosh evaluated at v: phi^(k) = cycle[k % period].
Jet periodic_compose(const Jet& a, const std::array<double, 4>& cycle, int period) {
    std::array<double, kMaxJetOrder + 1> c{};
    double fact = 1.0;
    for (int k = 0; k <= a.order(); ++k) {
        if (k > 0) fact *= k;
        c[static_cast<std::size_t>(k)] = cycle[static_cast<std::size_t>(k % period)] / fact;
    }
    return compose(a, c);
}

}  // namespace

Jet sin(const Jet& a) {
    const double s = std::sin(a.value()), co = std::cos(a.value());
    return periodic_compose(a, {s, co, -s, -co}, 4);
}

Jet cos(const Jet& a) {
    const double s = std::sin(a.value()), co = std::cos(a.value());
    return periodic_compose(a, {co, -s, -co, s}, 4);
}

Jet sinh(const Jet& a) {
    const double s = std::sinh(a.value()), co = std::cosh(a.value());
    return periodic_compose(a, {s, co, s, co}, 2);
}

Jet cosh(const Jet& a) {
    const double s = std::sinh(a.value()), co = std::cosh(a.value());
    return periodic_compose(a, {co, s, co, s}, 2);
}

Jet sqrt(const Jet& a) {
    const double v = a.value();
    if (a.order() == 0 && v == 0.0) return a;
    if (!(v > 0.0)) throw DomainError("sqrt of non-positive value");
    // Falling factorial of the exponent 1/2.
    std::array<double, kMaxJetOrder + 1> c{};
    double coef = 1.0, fact = 1.0;
    for (int k = 0; k <= a.order(); ++k) {
        if (k > 0) {
            coef *= (0.5 - (k - 1));
            fact *= k;
        }
        c[static_cast<std::size_t>(k)] = coef * std::pow(v, 0.5 - k) / fact;
    }
    return compose(a, c);
}

Jet pow(const Jet& a, int k) {
    if (k < 0) return pow(reciprocal(a), -k);
    Jet result = Jet::constant(a.dim(), a.order(), 1.0);
    Jet base = a;
    while (k > 0) {
        if (k & 1) result = result * base;
        k >>= 1;
        if (k) base = base * base;
    }
    return result;
}

}  // namespace geoflow
