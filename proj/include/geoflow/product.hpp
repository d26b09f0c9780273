#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "geoflow/fields.hpp"
#include "geoflow/geometry.hpp"
#include "geoflow/soliton.hpp"

namespace geoflow {

enum class ProductKind { Warped, DoublyWarped, MultiplyWarped, MultiplyTwisted };

std::string to_string(ProductKind kind);

/// Block product metric g = sum_k F_k^2 g_k on the concatenated chart.
///
/// Factors are indexed from 0; factor 0 is the base. Warping functions are Exprs in
/// product-chart coordinates (factor k occupies coordinates offset(k) .. offset(k)+dim(k)-1;
/// Expr::shifted lifts a factor expression). Dependency shapes:
///
///     warped            F_0 = 1,  F_1 = f    f on factor 0
///     doubly warped     F_0 = f2, F_1 = f1   f1 on factor 0, f2 on factor 1
///     multiply warped   F_0 = 1,  F_k = f_k  f_k on factor 0
///     multiply twisted  F_0 = 1,  F_k = f_k  f_k on factors 0 and k
///
/// Construction checks the shapes and positivity of every warping function at 64
/// quasi-random points of the product box and at its center.
class ProductSpec {
public:
    static ProductSpec warped(MetricField base, MetricField fiber, Expr f);
    /// g = f2^2 g_0 + f1^2 g_1.
    static ProductSpec doubly_warped(MetricField first, MetricField second, Expr f1, Expr f2);
    static ProductSpec multiply_warped(MetricField base, std::vector<MetricField> fibers, std::vector<Expr> f);
    static ProductSpec multiply_twisted(MetricField base, std::vector<MetricField> fibers, std::vector<Expr> f);

    ProductKind kind() const { return kind_; }
    int factor_count() const { return static_cast<int>(factors_.size()); }
    const MetricField& factor(int k) const { return factors_.at(static_cast<std::size_t>(k)); }
    int offset(int k) const { return offsets_.at(static_cast<std::size_t>(k)); }
    int factor_dim(int k) const { return factor(k).dim(); }
    /// F_k, the function whose square multiplies g_k (constant 1 for unwarped blocks).
    const Expr& scale(int k) const { return scales_.at(static_cast<std::size_t>(k)); }
    bool warped_block(int k) const { return !scales_[static_cast<std::size_t>(k)].is_constant(); }

    const ChartPtr& chart() const { return chart_; }
    const MetricField& metric() const { return *metric_; }

    /// The coordinates of factor k taken from a product point.
    std::vector<double> factor_point(int k, std::span<const double> p) const;

private:
    ProductSpec(ProductKind kind, std::vector<MetricField> factors, std::vector<Expr> scales);

    ProductKind kind_;
    std::vector<MetricField> factors_;
    std::vector<Expr> scales_;
    std::vector<int> offsets_;
    ChartPtr chart_;
    std::optional<MetricField> metric_;
};

struct BuiltProduct {
    ChartPtr chart;
    MetricField metric;
};

BuiltProduct build_product(const ProductSpec& spec);

/// zeta = sum_k zeta_k with zeta_k a field on factor k. Only this shape is representable.
class ProductField {
public:
    ProductField(const ProductSpec& spec, std::vector<VectorField> parts);

    const VectorField& part(int k) const { return parts_.at(static_cast<std::size_t>(k)); }
    /// Sum of the lifts as a field on the product chart.
    const VectorField& lifted() const { return lifted_; }
    /// Lift of zeta_k alone.
    const VectorField& lifted_part(int k) const { return lifted_parts_.at(static_cast<std::size_t>(k)); }

private:
    std::vector<VectorField> parts_;
    std::vector<VectorField> lifted_parts_;
    VectorField lifted_;
};

/// r_0 + r_1/f^2 - 2 n_1 Lap(f)/f - n_1 (n_1 - 1) |grad f|^2 / f^2 with factor-0 calculus.
double warped_scalar_curvature(const ProductSpec& spec, std::span<const double> p);

/// Scalar coefficients of block k:
///     L g   |_k = F^2 L g_k + alpha g_k
///     L L g |_k = F^2 L L g_k + 2 alpha L g_k + beta g_k
/// with alpha = zeta(F^2) and beta = zeta(zeta(F^2)).
struct BlockCoefficients {
    double F2 = 1.0;
    double alpha = 0.0;
    double beta = 0.0;
    /// The beta of the multiply twisted expansion as usually printed,
    /// zeta_0(zeta_0(F^2)) + zeta_0(zeta_k(F^2)). It omits zeta_k(zeta_0(F^2)) + zeta_k(zeta_k(F^2)).
    double beta_printed = 0.0;
};

struct BlockExpansion {
    std::vector<BlockCoefficients> coefficients;
    std::vector<SymTensorValue> lie;       // per factor, factor dimension
    std::vector<SymTensorValue> lie2;
    std::vector<double> factor_scalar;     // r_k at the factor point
};

/// Closed-form blocks from factor-level Lie derivatives.
BlockExpansion lie_expansion_blocks(const ProductSpec& spec, const ProductField& zeta, std::span<const double> p);

/// The diagonal blocks of L g and L L g computed on the assembled product chart, plus the
/// sup of all off-diagonal-block entries.
struct BruteForceBlocks {
    std::vector<SymTensorValue> lie;
    std::vector<SymTensorValue> lie2;
    double off_block_sup = 0.0;
};

BruteForceBlocks brute_force_blocks(const ProductSpec& spec, const ProductField& zeta, std::span<const double> p);

/// sigma_k with L_{zeta_k} g_k = sigma_k g_k, the factor-soliton condition under 2-Killing zeta:
///     sigma_k = ((mu - r_k) F^2 + beta) / (lambda F^2 - 2 alpha).
/// Unwarped blocks need lambda != 0 (PreconditionError); a denominator within 1e-10 of zero
/// on a warped block raises ConditionViolated.
double factor_soliton_target(const ProductSpec& spec, int k, const ProductField& zeta, const SolitonConstants& c,
                             std::span<const double> p);

/// sup |L_{zeta_k} g_k - sigma_k g_k| at the factor point.
double factor_condition_defect(const ProductSpec& spec, int k, const ProductField& zeta, const SolitonConstants& c,
                               std::span<const double> p);

struct ConstancyQuantity {
    std::string name;
    std::vector<double> values;
    double spread = 0.0;     // max - min
    double magnitude = 0.0;  // max |value|
    bool constant = false;   // spread < 1e-7 (1 + magnitude)
};

struct FactorConditionReport {
    int factor = 0;
    std::vector<ConstancyQuantity> quantities;
    bool all_constant = false;
    /// Sampled sigma_k when constants were given; empty entries mark points where condition (*) fails.
    std::vector<std::optional<double>> sigma;
    std::vector<std::vector<double>> inconclusive_points;
};

/// Constancy quantities for factor k over the samples (product points, at least 2):
///     unwarped block k:  rbar - r_k
///     warped block k:    alpha / F^2 and rbar - r_k + beta / F^2
/// For the warped kind, block 1 reports zeta_0(ln f) and rbar - r_1 + 2[(zeta_0 f / f)^2 + zeta_0(zeta_0 f)/f].
/// rbar is the scalar curvature of the assembled product.
FactorConditionReport factor_constancy_report(const ProductSpec& spec, int k, const ProductField& zeta,
                                              const std::vector<std::vector<double>>& samples,
                                              std::optional<SolitonConstants> constants = std::nullopt);

}  // namespace geoflow
