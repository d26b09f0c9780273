#include "geoflow/sampling.hpp"

#include <cmath>
#include <random>

#include "geoflow/errors.hpp"

namespace geoflow {

namespace {

constexpr int kPrimes[] = {2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53};

double radical_inverse(std::uint64_t i, int base) {
    double f = 1.0, r = 0.0;
    while (i > 0) {
        f /= base;
        r += f * static_cast<double>(i % static_cast<std::uint64_t>(base));
        i /= static_cast<std::uint64_t>(base);
    }
    return r;
}

}  // namespace

std::vector<std::vector<double>> sample_box(const std::vector<Interval>& box, int count, std::uint64_t seed) {
    const auto n = box.size();
    if (n > std::size(kPrimes)) throw PreconditionError("sampling supports at most 16 dimensions");
    if (count < 0) throw PreconditionError("sample count must be non-negative");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    std::vector<double> shift(n);
    for (auto& s : shift) s = U(rng);
    std::vector<std::vector<double>> out;
    out.reserve(static_cast<std::size_t>(count));
    for (int k = 0; k < count; ++k) {
        std::vector<double> p(n);
        for (std::size_t i = 0; i < n; ++i) {
            double u = radical_inverse(static_cast<std::uint64_t>(k) + 1, kPrimes[i]) + shift[i];
            u -= std::floor(u);
            const double w = box[i].width();
            const double lo = box[i].lo + kSampleInset * w;
            p[i] = lo + u * (w * (1.0 - 2.0 * kSampleInset));
        }
        out.push_back(std::move(p));
    }
    return out;
}

std::vector<std::vector<double>> sample_points(const Chart& chart, int count, std::uint64_t seed) {
    return sample_box(chart.box(), count, seed);
}

}  // namespace geoflow
