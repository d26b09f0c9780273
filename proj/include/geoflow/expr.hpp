#pragma once

#include <memory>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "geoflow/jet.hpp"

namespace geoflow {

enum class Op { Constant, Coordinate, Add, Sub, Mul, Div, Pow, Neg, Exp, Log, Sin, Cos, Sinh, Cosh, Sqrt };

/// Immutable closed-form scalar function of chart coordinates.
///
/// Grammar accepted by parse_expression (whitespace is ignored):
///
///     expr     = term { ("+" | "-") term } ;
///     term     = unary { ("*" | "/") unary } ;
///     unary    = ("-" | "+") unary | power ;
///     power    = primary [ "^" unary ] ;                 (* right associative *)
///     primary  = number | "pi" | coordinate | function "(" expr ")" | "(" expr ")" ;
///     function = "exp" | "log" | "sin" | "cos" | "sinh" | "cosh" | "sqrt" ;
///     number   = digits [ "." digits ] [ ("e" | "E") [ "+" | "-" ] digits ] ;
///     coordinate = "x0" | "x1" | ... | chart coordinate name | alias ;
///
/// Exponents must be constant. Integral exponents are evaluated by repeated products,
/// other exponents as exp(q log(base)), which requires a positive base.
/// Aliases: in dimension 4, t x y z are x0..x3; in dimensions 1 to 3, x y z are x0..x2
/// and, in dimension 1 only, t is x0.
class Expr {
public:
    struct Node {
        Op op = Op::Constant;
        double value = 0.0;     // Constant payload; exponent for Pow
        int index = 0;          // Coordinate index
        bool integer_exponent = false;
        std::shared_ptr<const Node> lhs, rhs;
    };

    Expr() : Expr(constant(0.0)) {}

    static Expr constant(double v);
    static Expr coordinate(int i);
    static Expr unary(Op op, const Expr& a);
    static Expr pow(const Expr& base, double exponent);

    const Node& node() const { return *root_; }
    Op op() const { return root_->op; }
    Expr lhs() const { return Expr(root_->lhs); }
    Expr rhs() const { return Expr(root_->rhs); }

    bool is_constant() const { return root_->op == Op::Constant; }
    /// Largest coordinate index referenced, or -1 for a coordinate-free expression.
    int max_coordinate() const;
    std::set<int> coordinates_used() const;
    /// Same function with coordinate i renamed to i + delta.
    Expr shifted(int delta) const;

    /// Taylor jet of order `order` at `point`. Throws DomainError naming the offending node.
    Jet jet(std::span<const double> point, int order) const;
    double evaluate(std::span<const double> point) const;

    std::string to_string() const;

    friend Expr operator+(const Expr& a, const Expr& b);
    friend Expr operator-(const Expr& a, const Expr& b);
    friend Expr operator*(const Expr& a, const Expr& b);
    friend Expr operator/(const Expr& a, const Expr& b);
    friend Expr operator-(const Expr& a);

private:
    explicit Expr(std::shared_ptr<const Node> root) : root_(std::move(root)) {}
    static Expr make(Node n);

    std::shared_ptr<const Node> root_;
};

Expr exp(const Expr& a);
Expr log(const Expr& a);
Expr sin(const Expr& a);
Expr cos(const Expr& a);
Expr sinh(const Expr& a);
Expr cosh(const Expr& a);
Expr sqrt(const Expr& a);

/// Parses `src` for a chart of dimension `dim`. `names`, when non-empty, are additional
/// coordinate names (one per coordinate). Custom names disable the t/x/y/z aliases;
/// the default names x0..x{dim-1} keep them.
Expr parse_expression(const std::string& src, int dim, const std::vector<std::string>& names = {});

/// Taylor-coefficient view: alpha! times the jet coefficient at alpha.
double partial_derivative(const Expr& e, const MultiIndex& alpha, std::span<const double> point);

}  // namespace geoflow
