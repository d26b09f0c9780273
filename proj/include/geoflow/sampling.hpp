#pragma once

#include <cstdint>
#include <vector>

#include "geoflow/fields.hpp"

namespace geoflow {

/// Relative inset applied at each side of the sampling box.
inline constexpr double kSampleInset = 1e-3;

/// Seeded low-discrepancy points inside the chart's sampling box: a Halton sequence
/// with a random Cranley-Patterson rotation drawn from `seed`. Identical for equal
/// (chart box, count, seed).
std::vector<std::vector<double>> sample_points(const Chart& chart, int count, std::uint64_t seed);

/// Same as above for an explicit box.
std::vector<std::vector<double>> sample_box(const std::vector<Interval>& box, int count, std::uint64_t seed);

}  // namespace geoflow
