#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "geoflow/errors.hpp"
#include "geoflow/expr.hpp"
#include "geoflow/jet.hpp"
#include "oracles.hpp"

using namespace geoflow;

namespace {

double rel(double a, double b) { return std::abs(a - b) / std::max(1.0, std::abs(b)); }

std::vector<MultiIndex> all_indices(int dim, int order) {
    std::vector<MultiIndex> out;
    const auto& L = JetLayout::get(dim);
    for (std::size_t k = 0; k < L.size(order); ++k) {
        std::vector<int> e;
        for (int i = 0; i < dim; ++i) e.push_back(L.exponent(k, i));
        out.emplace_back(e);
    }
    return out;
}

}  // namespace

TEST_CASE("layout sizes are binomial and graded") {
    for (int n = 1; n <= 4; ++n) {
        const auto& L = JetLayout::get(n);
        for (int k = 0; k <= kMaxJetOrder; ++k) {
            double c = 1;
            for (int i = 1; i <= k; ++i) c = c * (n + i) / i;
            CHECK(L.size(k) == static_cast<std::size_t>(std::lround(c)));
            for (std::size_t s = (k ? L.size(k - 1) : 0); s < L.size(k); ++s) CHECK(L.degree(s) == k);
        }
        for (const auto& a : all_indices(n, kMaxJetOrder)) {
            CHECK(all_indices(n, kMaxJetOrder)[static_cast<std::size_t>(L.index_of(a))] == a);
        }
    }
}

TEST_CASE("parse: grammar cases") {
    Expr a = parse_expression("x0^2 + sin(x1)", 2);
    CHECK(a.op() == Op::Add);
    CHECK(a.lhs().op() == Op::Pow);
    CHECK(a.lhs().node().value == 2.0);
    CHECK(a.lhs().lhs().op() == Op::Coordinate);
    CHECK(a.rhs().op() == Op::Sin);
    CHECK(a.rhs().lhs().node().index == 1);

    Expr b = parse_expression("exp(x0 + x1)", 2);
    CHECK(b.op() == Op::Exp);
    CHECK(b.lhs().op() == Op::Add);

    CHECK(parse_expression("-x0^2", 1).evaluate(std::vector{3.0}) == doctest::Approx(-9));
    CHECK(parse_expression("2^3^2", 1).evaluate(std::vector{0.0}) == doctest::Approx(512));
    CHECK(parse_expression("1.5e1 - 2*pi", 1).evaluate(std::vector{0.0}) == doctest::Approx(15 - 2 * M_PI));
    CHECK(parse_expression("t*x*y*z", 4).coordinates_used() == std::set<int>{0, 1, 2, 3});
    CHECK(parse_expression("x + y", 2).coordinates_used() == std::set<int>{0, 1});
    CHECK(parse_expression("th*ph", 2, {"th", "ph"}).max_coordinate() == 1);
}

TEST_CASE("parse: errors") {
    CHECK_THROWS_AS(parse_expression("x5", 3), ParseError);
    try {
        parse_expression("x5", 3);
    } catch (const ParseError& e) {
        CHECK(std::string(e.what()).find("out of range") != std::string::npos);
    }
    CHECK_THROWS_AS(parse_expression("x0 +", 1), ParseError);
    CHECK_THROWS_AS(parse_expression("foo(x0)", 1), ParseError);
    CHECK_THROWS_AS(parse_expression("(x0", 1), ParseError);
    CHECK_THROWS_AS(parse_expression("x0^x0", 1), ParseError);
    CHECK_THROWS_AS(parse_expression("t", 2), ParseError);
    try {
        parse_expression("x0 * * 2", 1);
        FAIL("expected a parse error");
    } catch (const ParseError& e) {
        CHECK(e.position() == 5);
    }
}

TEST_CASE("jet: sin Maclaurin") {
    Jet j = parse_expression("sin(x0)", 1).jet(std::vector{0.0}, 3);
    auto c = j.coefficients();
    REQUIRE(c.size() == 4);
    CHECK(c[0] == doctest::Approx(0).epsilon(1e-15));
    CHECK(c[1] == doctest::Approx(1));
    CHECK(std::abs(c[2]) < 1e-15);
    CHECK(c[3] == doctest::Approx(-1.0 / 6));
}

TEST_CASE("jet: bilinear") {
    Jet j = parse_expression("x0*x1", 2).jet(std::vector{2.0, 3.0}, 2);
    CHECK(j.value() == 6);
    CHECK(j.coefficient(MultiIndex({1, 0})) == 3);
    CHECK(j.coefficient(MultiIndex({0, 1})) == 2);
    CHECK(j.coefficient(MultiIndex({1, 1})) == 1);
    CHECK(j.coefficient(MultiIndex({2, 0})) == 0);
}

TEST_CASE("jet: exp(x0^2) against finite differences") {
    Expr e = parse_expression("exp(x0^2)", 1);
    std::vector<double> p{0.7};
    Jet j = e.jet(p, 4);
    for (int k = 0; k <= 4; ++k) {
        MultiIndex a({k});
        double fd = static_cast<double>(oracle::fd_partial(oracle::as_fn(e), oracle::to_point(p), {k}, 1e-3L));
        CHECK(rel(j.partial(a), fd) < 1e-5);
    }
}

TEST_CASE("partial_derivative examples") {
    CHECK(partial_derivative(parse_expression("x0^3", 1), MultiIndex({2}), std::vector{2.0}) == doctest::Approx(12));
    CHECK(std::abs(partial_derivative(parse_expression("cos(x0)", 1), MultiIndex({1}), std::vector{0.0})) < 1e-15);
    Expr e = parse_expression("log(1+x0^2)", 1);
    double fd = static_cast<double>(oracle::fd_partial(oracle::as_fn(e), {0.5L}, {3}, 1e-3L));
    CHECK(rel(partial_derivative(e, MultiIndex({3}), std::vector{0.5}), fd) < 1e-5);
}

TEST_CASE("domain errors name the node") {
    CHECK_THROWS_AS(parse_expression("log(x0)", 1).jet(std::vector{-1.0}, 2), DomainError);
    CHECK_THROWS_AS(parse_expression("1/x0", 1).jet(std::vector{0.0}, 1), DomainError);
    CHECK_THROWS_AS(parse_expression("sqrt(x0)", 1).jet(std::vector{-0.5}, 0), DomainError);
    CHECK_THROWS_AS(parse_expression("x0^0.5", 1).jet(std::vector{-2.0}, 1), DomainError);
    try {
        parse_expression("1 + log(x0 - 1)", 1).evaluate(std::vector{0.5});
        FAIL("expected a domain error");
    } catch (const DomainError& e) {
        CHECK(std::string(e.what()).find("log") != std::string::npos);
    }
    CHECK(parse_expression("x0^-2", 1).evaluate(std::vector{-2.0}) == doctest::Approx(0.25));
    CHECK(parse_expression("x0^3", 1).evaluate(std::vector{-2.0}) == doctest::Approx(-8));
}

TEST_CASE("transcendental jets match FD oracle") {
    const char* srcs[] = {"sinh(x0*x1) + cosh(x1)", "sqrt(2 + sin(x0)*x1)", "x0^1.5 * log(x1 + 3)",
                          "exp(-x0) / (1 + x1^2)", "cos(x0 - 2*x1)^3", "(1 + x0*x1)^-2"};
    std::vector<double> p{0.8, 0.3};
    for (const char* s : srcs) {
        Expr e = parse_expression(s, 2);
        Jet j = e.jet(p, 4);
        for (const auto& a : all_indices(2, 4)) {
            double fd = static_cast<double>(oracle::fd_partial(oracle::as_fn(e), oracle::to_point(p), a.exponents(), 1e-3L));
            INFO(s << " alpha=(" << a[0] << "," << a[1] << ")");
            CHECK(rel(j.partial(a), fd) < 1e-5);
        }
    }
}

TEST_CASE("property: Leibniz rule on random expressions") {
    oracle::Gen gen(20240611);
    for (int trial = 0; trial < 200; ++trial) {
        int n = gen.integer(1, 4);
        Expr a = gen.smooth(n, 1.5) + gen.polynomial(n, 3, 1.0);
        Expr b = exp(gen.smooth(n, 0.7)) + gen.polynomial(n, 2, 1.0);
        auto p = gen.point(n, -1.5, 1.5);
        int K = gen.integer(0, 4);
        Jet direct = (a * b).jet(p, K);
        Jet prod = a.jet(p, K) * b.jet(p, K);
        double scale = 1;
        for (double c : prod.coefficients()) scale = std::max(scale, std::abs(c));
        for (std::size_t k = 0; k < prod.coefficients().size(); ++k)
            CHECK(std::abs(direct.coefficients()[k] - prod.coefficients()[k]) <= 1e-12 * scale);
    }
}

TEST_CASE("property: Leibniz against the binomial formula") {
    // d^k(uv)/dx^k = sum C(k,m) u^(m) v^(k-m), computed from independent univariate jets.
    oracle::Gen gen(7);
    for (int trial = 0; trial < 50; ++trial) {
        Expr u = gen.smooth(1, 2.0), v = gen.smooth(1, 1.0) + gen.polynomial(1, 3, 1.0);
        std::vector<double> p{gen.uniform(-2, 2)};
        Jet ju = u.jet(p, 4), jv = v.jet(p, 4), juv = (u * v).jet(p, 4);
        for (int k = 0; k <= 4; ++k) {
            double s = 0;
            double binom = 1;
            for (int m = 0; m <= k; ++m) {
                s += binom * ju.partial(MultiIndex({m})) * jv.partial(MultiIndex({k - m}));
                binom = binom * (k - m) / (m + 1);
            }
            CHECK(rel(juv.partial(MultiIndex({k})), s) < 1e-12);
        }
    }
}

TEST_CASE("property: chain consistency against finite differences") {
    oracle::Gen gen(99);
    for (int trial = 0; trial < 40; ++trial) {
        int n = gen.integer(1, 3);
        Expr inner = gen.smooth(n, 0.8) + gen.polynomial(n, 2, 0.5);
        Expr e;
        switch (trial % 5) {
            case 0: e = exp(inner); break;
            case 1: e = sin(inner) * cos(inner); break;
            case 2: e = log(Expr::constant(3.0) + inner); break;
            case 3: e = sqrt(Expr::constant(4.0) + inner); break;
            default: e = Expr::constant(1.0) / (Expr::constant(3.0) + inner); break;
        }
        auto p = gen.point(n, -1, 1);
        Jet j = e.jet(p, 4);
        for (const auto& a : all_indices(n, 4)) {
            double fd = static_cast<double>(oracle::fd_partial(oracle::as_fn(e), oracle::to_point(p), a.exponents(), 1e-3L));
            CHECK(rel(j.partial(a), fd) < 1e-4);
        }
    }
}

TEST_CASE("property: mixed partials are invariant under request order") {
    oracle::Gen gen(3);
    for (int trial = 0; trial < 30; ++trial) {
        Expr e = gen.smooth(3, 1.0) * gen.polynomial(3, 3, 1.0);
        auto p = gen.point(3, -1, 1);
        Jet j = e.jet(p, 4);
        std::vector<int> axes{gen.integer(0, 2), gen.integer(0, 2), gen.integer(0, 2)};
        std::sort(axes.begin(), axes.end());
        std::vector<double> seen;
        do {
            // differentiate one axis at a time in this order
            Jet cur = j;
            for (int ax : axes) cur = cur.derivative(ax);
            seen.push_back(cur.value());
        } while (std::next_permutation(axes.begin(), axes.end()));
        for (double s : seen) CHECK(s == seen.front());
        std::vector<int> ex(3, 0);
        for (int ax : axes) ex[static_cast<std::size_t>(ax)]++;
        CHECK(rel(partial_derivative(e, MultiIndex(ex), p), seen.front()) < 1e-13);
    }
}

TEST_CASE("jet orders mix by truncation") {
    Jet a = Jet::variable(2, 4, 0, 1.0);
    Jet b = Jet::variable(2, 2, 1, 2.0);
    Jet c = a * b;
    CHECK(c.order() == 2);
    CHECK(c.coefficients().size() == JetLayout::get(2).size(2));
    CHECK((a + b).order() == 2);
    CHECK(a.truncated(1).coefficients().size() == 3);
    CHECK_THROWS(parse_expression("x0", 1).jet(std::vector{0.0}, 5));
}

TEST_CASE("shifted and printed expressions round-trip") {
    Expr e = parse_expression("x0*sin(x1) + 0.1^2", 2);
    Expr s = e.shifted(2);
    CHECK(s.coordinates_used() == std::set<int>{2, 3});
    std::vector<double> p{0.3, 0.9}, q{7.0, 7.0, 0.3, 0.9};
    CHECK(s.evaluate(q) == doctest::Approx(e.evaluate(p)));
    Expr back = parse_expression(e.to_string(), 2);
    CHECK(back.evaluate(p) == e.evaluate(p));
}
