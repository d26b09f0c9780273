#include "geoflow/product.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "geoflow/errors.hpp"
#include "geoflow/parallel.hpp"
#include "geoflow/sampling.hpp"

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

bool default_names(const Chart& c) {
    for (int i = 0; i < c.dim(); ++i)
        if (c.coordinate_names()[sz(i)] != "x" + std::to_string(i)) return false;
    return true;
}

ChartPtr product_chart(const std::vector<MetricField>& factors) {
    std::string name;
    std::vector<std::string> names;
    std::vector<Interval> box;
    std::vector<std::optional<double>> periods;
    bool custom = true;
    for (const auto& f : factors) {
        const Chart& c = f.chart();
        name += (name.empty() ? "" : " x ") + c.name();
        if (default_names(c)) custom = false;
        for (int i = 0; i < c.dim(); ++i) {
            names.push_back(c.coordinate_names()[sz(i)]);
            box.push_back(c.box()[sz(i)]);
            periods.push_back(c.periodic(i) ? std::optional<double>(c.period(i)) : std::nullopt);
        }
    }
    std::vector<std::string> sorted = names;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) custom = false;
    if (!custom)
        for (std::size_t i = 0; i < names.size(); ++i) names[i] = "x" + std::to_string(i);
    return std::make_shared<Chart>(name, names, box, periods);
}

/// Which factors each warping function may depend on.
std::vector<int> allowed_factors(ProductKind kind, int block) {
    switch (kind) {
        case ProductKind::Warped:
        case ProductKind::MultiplyWarped: return {0};
        case ProductKind::DoublyWarped: return {block == 0 ? 1 : 0};
        case ProductKind::MultiplyTwisted: return {0, block};
    }
    return {};
}

std::string warp_label(ProductKind kind, int block) {
    if (kind == ProductKind::Warped) return "f";
    if (kind == ProductKind::DoublyWarped) return block == 0 ? "f2" : "f1";
    return "f" + std::to_string(block);
}

Jet square(const Jet& a) { return a * a; }

}  // namespace

std::string to_string(ProductKind kind) {
    switch (kind) {
        case ProductKind::Warped: return "warped";
        case ProductKind::DoublyWarped: return "doubly_warped";
        case ProductKind::MultiplyWarped: return "multiply_warped";
        case ProductKind::MultiplyTwisted: return "multiply_twisted";
    }
    return "unknown";
}

ProductSpec::ProductSpec(ProductKind kind, std::vector<MetricField> factors, std::vector<Expr> scales)
    : kind_(kind), factors_(std::move(factors)), scales_(std::move(scales)) {
    if (factors_.size() < 2) throw std::invalid_argument("a product needs at least two factors");
    int total = 0;
    for (const auto& f : factors_) {
        if (!f.has_expressions()) throw std::invalid_argument("product factors must be expression-backed metrics");
        offsets_.push_back(total);
        total += f.dim();
    }
    chart_ = product_chart(factors_);

    for (int k = 0; k < factor_count(); ++k) {
        const Expr& F = scales_[sz(k)];
        if (F.is_constant()) continue;
        std::vector<int> allowed = allowed_factors(kind_, k);
        for (int c : F.coordinates_used()) {
            bool ok = false;
            for (int a : allowed) ok = ok || (c >= offsets_[sz(a)] && c < offsets_[sz(a)] + factors_[sz(a)].dim());
            if (!ok) {
                std::string owners;
                for (int a : allowed) owners += (owners.empty() ? "" : " and ") + std::to_string(a);
                throw GeometryError("warping function " + warp_label(kind_, k) + " of a " + to_string(kind_) +
                                    " product depends on " + chart_->coordinate_names()[sz(c)] + " (coordinate " +
                                    std::to_string(c) + "), outside factor " + owners);
            }
        }
    }

    std::vector<std::vector<double>> checks = sample_points(*chart_, 64, 0);
    std::vector<double> center;
    for (const auto& iv : chart_->box()) center.push_back(0.5 * (iv.lo + iv.hi));
    checks.push_back(center);
    for (int k = 0; k < factor_count(); ++k) {
        const Expr& F = scales_[sz(k)];
        for (const auto& p : checks) {
            double v = F.evaluate(p);
            if (!(v > 0.0) || !std::isfinite(v))
                throw GeometryError("warping function " + warp_label(kind_, k) + " is not positive at " +
                                    point_string(p) + " (value " + std::to_string(v) + ")");
        }
    }

    std::vector<Expr> comps(sz(total * total), Expr::constant(0.0));
    int signature = 0;
    for (int k = 0; k < factor_count(); ++k) {
        const MetricField& g = factors_[sz(k)];
        const int n = g.dim(), o = offsets_[sz(k)];
        const Expr& F = scales_[sz(k)];
        const bool unit = F.is_constant() && F.evaluate(std::vector<double>(sz(total), 0.0)) == 1.0;
        signature += g.signature();
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
                Expr c = g.component(i, j).shifted(o);
                if (!unit && !(c.is_constant() && c.evaluate(std::vector<double>(sz(total), 0.0)) == 0.0))
                    c = F * F * c;
                comps[sz((o + i) * total + o + j)] = c;
            }
    }
    metric_.emplace(chart_, comps, signature);
}

ProductSpec ProductSpec::warped(MetricField base, MetricField fiber, Expr f) {
    return ProductSpec(ProductKind::Warped, {std::move(base), std::move(fiber)}, {Expr::constant(1.0), std::move(f)});
}

ProductSpec ProductSpec::doubly_warped(MetricField first, MetricField second, Expr f1, Expr f2) {
    return ProductSpec(ProductKind::DoublyWarped, {std::move(first), std::move(second)}, {std::move(f2), std::move(f1)});
}

ProductSpec ProductSpec::multiply_warped(MetricField base, std::vector<MetricField> fibers, std::vector<Expr> f) {
    if (f.size() != fibers.size()) throw std::invalid_argument("one warping function per fiber is required");
    std::vector<MetricField> factors{std::move(base)};
    std::vector<Expr> scales{Expr::constant(1.0)};
    for (std::size_t i = 0; i < fibers.size(); ++i) {
        factors.push_back(std::move(fibers[i]));
        scales.push_back(std::move(f[i]));
    }
    return ProductSpec(ProductKind::MultiplyWarped, std::move(factors), std::move(scales));
}

ProductSpec ProductSpec::multiply_twisted(MetricField base, std::vector<MetricField> fibers, std::vector<Expr> f) {
    if (f.size() != fibers.size()) throw std::invalid_argument("one warping function per fiber is required");
    std::vector<MetricField> factors{std::move(base)};
    std::vector<Expr> scales{Expr::constant(1.0)};
    for (std::size_t i = 0; i < fibers.size(); ++i) {
        factors.push_back(std::move(fibers[i]));
        scales.push_back(std::move(f[i]));
    }
    return ProductSpec(ProductKind::MultiplyTwisted, std::move(factors), std::move(scales));
}

std::vector<double> ProductSpec::factor_point(int k, std::span<const double> p) const {
    if (static_cast<int>(p.size()) != chart_->dim())
        throw GeometryError("point dimension " + std::to_string(p.size()) + " does not match product dimension " +
                            std::to_string(chart_->dim()));
    auto first = p.begin() + offset(k);
    return std::vector<double>(first, first + factor_dim(k));
}

BuiltProduct build_product(const ProductSpec& spec) { return {spec.chart(), spec.metric()}; }

ProductField::ProductField(const ProductSpec& spec, std::vector<VectorField> parts)
    : parts_(std::move(parts)), lifted_(VectorField::zero(spec.chart())) {
    if (static_cast<int>(parts_.size()) != spec.factor_count())
        throw GeometryError("a product field needs one part per factor");
    const int total = spec.chart()->dim();
    std::vector<Expr> sum(sz(total), Expr::constant(0.0));
    for (int k = 0; k < spec.factor_count(); ++k) {
        const VectorField& v = parts_[sz(k)];
        if (!same_chart(v.chart(), spec.factor(k).chart()))
            throw GeometryError("part " + std::to_string(k) + " of the field is not a field on factor " +
                                std::to_string(k) + " (chart " + v.chart().name() + ")");
        if (!v.has_expressions()) throw std::invalid_argument("product field parts must be expression-backed");
        std::vector<Expr> comps(sz(total), Expr::constant(0.0));
        for (int i = 0; i < v.dim(); ++i) {
            comps[sz(spec.offset(k) + i)] = v.components()[sz(i)].shifted(spec.offset(k));
            sum[sz(spec.offset(k) + i)] = comps[sz(spec.offset(k) + i)];
        }
        lifted_parts_.emplace_back(spec.chart(), comps);
    }
    lifted_ = VectorField(spec.chart(), sum);
}

double warped_scalar_curvature(const ProductSpec& spec, std::span<const double> p) {
    if (spec.kind() != ProductKind::Warped)
        throw PreconditionError("warped_scalar_curvature needs a warped product, got " + to_string(spec.kind()));
    const MetricField& g1 = spec.factor(0);
    const MetricField& g2 = spec.factor(1);
    std::vector<double> p1 = spec.factor_point(0, p), p2 = spec.factor_point(1, p);
    const double r1 = curvature(g1, p1).scalar;
    const double r2 = curvature(g2, p2).scalar;
    const double n2 = g2.dim();
    ScalarField f(g1.chart_ptr(), spec.scale(1));
    FirstOrderOperators ops = first_order_operators(g1, f, VectorField::zero(g1.chart_ptr()), p1);
    const double fv = f.value(p1);
    return r1 + r2 / (fv * fv) - 2.0 * n2 * ops.laplacian / fv - n2 * (n2 - 1.0) * ops.grad_norm2 / (fv * fv);
}

namespace {

/// Factors whose parts of zeta can differentiate F_k.
std::vector<int> acting_parts(const ProductSpec& spec, int k) {
    if (!spec.warped_block(k)) return {};
    return allowed_factors(spec.kind(), k);
}

BlockCoefficients coefficients(const ProductSpec& spec, int k, const ProductField& zeta, std::span<const double> p) {
    BlockCoefficients c;
    Jet F2 = square(spec.scale(k).jet(p, 2));
    c.F2 = F2.value();
    std::vector<int> acting = acting_parts(spec, k);
    std::vector<Jets> z;
    for (int a : acting) z.push_back(zeta.lifted_part(a).jets(p, 2));
    for (std::size_t a = 0; a < acting.size(); ++a) {
        Jet za = calc::directional(z[a], F2);  // zeta_a(F^2), order 1
        c.alpha += za.value();
        for (std::size_t b = 0; b < acting.size(); ++b) {
            double zbza = calc::directional(z[b], za).value();  // zeta_b(zeta_a(F^2))
            c.beta += zbza;
            // Printed twisted form keeps zeta_0 outermost only.
            if (spec.kind() != ProductKind::MultiplyTwisted || acting[b] == 0) c.beta_printed += zbza;
        }
    }
    return c;
}

SymTensorValue block_value(std::vector<double> point, int n) {
    SymTensorValue v;
    v.point = std::move(point);
    v.n = n;
    v.values.assign(sz(n * n), 0.0);
    return v;
}

}  // namespace

BlockExpansion lie_expansion_blocks(const ProductSpec& spec, const ProductField& zeta, std::span<const double> p) {
    BlockExpansion out;
    std::vector<double> pp(p.begin(), p.end());
    for (int k = 0; k < spec.factor_count(); ++k) {
        const MetricField& gk = spec.factor(k);
        const int n = gk.dim();
        std::vector<double> pk = spec.factor_point(k, p);
        BlockCoefficients c = coefficients(spec, k, zeta, p);
        SymTensorValue L = lie_derivative_metric(gk, zeta.part(k), pk);
        SymTensorValue LL = second_lie_derivative_metric(gk, zeta.part(k), pk);
        std::vector<double> g = gk.values(pk);
        SymTensorValue lie = block_value(pp, n), lie2 = block_value(pp, n);
        for (int i = 0; i < n * n; ++i) {
            lie.values[sz(i)] = c.F2 * L.values[sz(i)] + c.alpha * g[sz(i)];
            lie2.values[sz(i)] = c.F2 * LL.values[sz(i)] + 2.0 * c.alpha * L.values[sz(i)] + c.beta * g[sz(i)];
        }
        out.coefficients.push_back(c);
        out.lie.push_back(std::move(lie));
        out.lie2.push_back(std::move(lie2));
        out.factor_scalar.push_back(curvature(gk, pk).scalar);
    }
    return out;
}

BruteForceBlocks brute_force_blocks(const ProductSpec& spec, const ProductField& zeta, std::span<const double> p) {
    const int N = spec.chart()->dim();
    SymTensorValue L = lie_derivative_metric(spec.metric(), zeta.lifted(), p);
    SymTensorValue LL = second_lie_derivative_metric(spec.metric(), zeta.lifted(), p);
    BruteForceBlocks out;
    std::vector<int> owner(sz(N));
    for (int k = 0; k < spec.factor_count(); ++k)
        for (int i = 0; i < spec.factor_dim(k); ++i) owner[sz(spec.offset(k) + i)] = k;
    for (int a = 0; a < N; ++a)
        for (int b = 0; b < N; ++b)
            if (owner[sz(a)] != owner[sz(b)])
                out.off_block_sup = std::max({out.off_block_sup, std::abs(L(a, b)), std::abs(LL(a, b))});
    std::vector<double> pp(p.begin(), p.end());
    for (int k = 0; k < spec.factor_count(); ++k) {
        const int n = spec.factor_dim(k), o = spec.offset(k);
        SymTensorValue lie = block_value(pp, n), lie2 = block_value(pp, n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
                lie.values[sz(i * n + j)] = L(o + i, o + j);
                lie2.values[sz(i * n + j)] = LL(o + i, o + j);
            }
        out.lie.push_back(std::move(lie));
        out.lie2.push_back(std::move(lie2));
    }
    return out;
}

double factor_soliton_target(const ProductSpec& spec, int k, const ProductField& zeta, const SolitonConstants& c,
                             std::span<const double> p) {
    if (k < 0 || k >= spec.factor_count()) throw std::out_of_range("factor index " + std::to_string(k));
    BlockCoefficients b = coefficients(spec, k, zeta, p);
    std::vector<double> pk = spec.factor_point(k, p);
    const double rk = curvature(spec.factor(k), pk).scalar;
    const double num = (c.mu - rk) * b.F2 + b.beta;
    const double den = c.lambda * b.F2 - 2.0 * b.alpha;
    if (!spec.warped_block(k)) {
        if (std::abs(c.lambda) <= 1e-10)
            throw PreconditionError("precondition lambda != 0 violated for unwarped factor " + std::to_string(k));
    } else if (std::abs(den) <= 1e-10) {
        throw ConditionViolated("condition (*) violated at p = " + point_string(p) + ": lambda F^2 - 2 zeta(F^2) = " +
                                std::to_string(den));
    }
    return num / den;
}

double factor_condition_defect(const ProductSpec& spec, int k, const ProductField& zeta, const SolitonConstants& c,
                               std::span<const double> p) {
    const double sigma = factor_soliton_target(spec, k, zeta, c, p);
    std::vector<double> pk = spec.factor_point(k, p);
    SymTensorValue L = lie_derivative_metric(spec.factor(k), zeta.part(k), pk);
    std::vector<double> g = spec.factor(k).values(pk);
    double sup = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) sup = std::max(sup, std::abs(L.values[i] - sigma * g[i]));
    return sup;
}

FactorConditionReport factor_constancy_report(const ProductSpec& spec, int k, const ProductField& zeta,
                                              const std::vector<std::vector<double>>& samples,
                                              std::optional<SolitonConstants> constants) {
    if (k < 0 || k >= spec.factor_count()) throw std::out_of_range("factor index " + std::to_string(k));
    if (samples.size() < 2) throw PreconditionError("factor_constancy_report needs at least 2 samples");
    const bool warped_fiber = spec.kind() == ProductKind::Warped && k == 1;
    std::vector<std::string> names;
    if (!spec.warped_block(k)) {
        names = {"rbar - r_" + std::to_string(k)};
    } else if (warped_fiber) {
        names = {"zeta_0(ln f)", "rbar - r_1 + 2[(zeta_0(f)/f)^2 + zeta_0(zeta_0(f))/f]"};
    } else {
        names = {"zeta(F^2)/F^2", "rbar - r_" + std::to_string(k) + " + zeta(zeta(F^2))/F^2"};
    }

    std::vector<std::vector<double>> rows(samples.size());
    parallel_for(samples.size(), [&](std::size_t s) {
        const auto& p = samples[s];
        const double rbar = curvature(spec.metric(), p).scalar;
        const double rk = curvature(spec.factor(k), spec.factor_point(k, p)).scalar;
        if (!spec.warped_block(k)) {
            rows[s] = {rbar - rk};
        } else if (warped_fiber) {
            Jet f = spec.scale(1).jet(p, 2);
            Jets z0 = zeta.lifted_part(0).jets(p, 2);
            Jet zf = calc::directional(z0, f);
            const double zzf = calc::directional(z0, zf).value();
            const double q = zf.value() / f.value();
            rows[s] = {q, rbar - rk + 2.0 * (q * q + zzf / f.value())};
        } else {
            BlockCoefficients b = coefficients(spec, k, zeta, p);
            rows[s] = {b.alpha / b.F2, rbar - rk + b.beta / b.F2};
        }
    });

    FactorConditionReport rep;
    rep.factor = k;
    rep.all_constant = true;
    for (std::size_t q = 0; q < names.size(); ++q) {
        ConstancyQuantity c;
        c.name = names[q];
        for (const auto& r : rows) c.values.push_back(r[q]);
        auto [lo, hi] = std::minmax_element(c.values.begin(), c.values.end());
        c.spread = *hi - *lo;
        for (double v : c.values) c.magnitude = std::max(c.magnitude, std::abs(v));
        c.constant = c.spread < 1e-7 * (1.0 + c.magnitude);
        rep.all_constant = rep.all_constant && c.constant;
        rep.quantities.push_back(std::move(c));
    }
    if (constants) {
        rep.sigma.resize(samples.size());
        for (std::size_t s = 0; s < samples.size(); ++s) {
            try {
                rep.sigma[s] = factor_soliton_target(spec, k, zeta, *constants, samples[s]);
            } catch (const PreconditionError&) {
                rep.inconclusive_points.push_back(samples[s]);
            }
        }
    }
    return rep;
}

}  // namespace geoflow
