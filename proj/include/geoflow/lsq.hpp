#pragma once

#include <Eigen/Dense>
#include <array>
#include <cmath>
#include <optional>

#include "geoflow/soliton.hpp"

namespace geoflow {

/// Least squares for two unknowns by SVD. Rank deficiency: s_2 < 1e-10 s_1 (or s_1 = 0).
/// A deficient system returns the minimum-norm minimizer and the line of minimizers,
/// normalized so that the second coefficient is 1 when it enters, else the first is 1.
struct TwoParameterSolution {
    Eigen::Vector2d x = Eigen::Vector2d::Zero();
    std::array<double, 2> singular_values{};
    bool rank_deficient = false;
    std::optional<ConstraintLine> line;
};

inline TwoParameterSolution solve_two_parameter(const Eigen::MatrixXd& A, const Eigen::VectorXd& b) {
    TwoParameterSolution out;
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(A, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto& sv = svd.singularValues();
    out.singular_values = {sv(0), sv(1)};
    out.rank_deficient = !(sv(1) >= 1e-10 * sv(0)) || sv(0) == 0.0;
    if (!out.rank_deficient) {
        out.x = svd.solve(b);
        return out;
    }
    if (sv(0) == 0.0) return out;
    // minimizers: v1 . x = u1 . b / s1
    Eigen::Vector2d v = svd.matrixV().col(0);
    double c = svd.matrixU().col(0).dot(b) / sv(0);
    out.x = v * c;
    ConstraintLine line;
    if (std::abs(v(1)) > 1e-12) {
        line = {v(0) / v(1), 1.0, c / v(1)};
    } else {
        line = {1.0, v(1) / v(0), c / v(0)};
    }
    if (std::abs(line.a) < 1e-14) line.a = 0.0;
    if (std::abs(line.b) < 1e-14) line.b = 0.0;
    out.line = line;
    return out;
}

}  // namespace geoflow
