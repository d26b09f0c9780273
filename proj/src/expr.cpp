#include "geoflow/expr.hpp"

#include <algorithm>
#include <charconv>
#include <cctype>
#include <cmath>
#include <functional>
#include <numbers>

#include "geoflow/errors.hpp"

namespace geoflow {

namespace {

std::string format_number(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

const char* function_name(Op op) {
    switch (op) {
        case Op::Exp: return "exp";
        case Op::Log: return "log";
        case Op::Sin: return "sin";
        case Op::Cos: return "cos";
        case Op::Sinh: return "sinh";
        case Op::Cosh: return "cosh";
        case Op::Sqrt: return "sqrt";
        default: return "?";
    }
}

}  // namespace

Expr Expr::make(Node n) { return Expr(std::make_shared<const Node>(std::move(n))); }

Expr Expr::constant(double v) {
    Node n;
    n.op = Op::Constant;
    n.value = v;
    return make(std::move(n));
}

Expr Expr::coordinate(int i) {
    if (i < 0) throw std::invalid_argument("negative coordinate index");
    Node n;
    n.op = Op::Coordinate;
    n.index = i;
    return make(std::move(n));
}

Expr Expr::unary(Op op, const Expr& a) {
    Node n;
    n.op = op;
    n.lhs = a.root_;
    return make(std::move(n));
}

Expr Expr::pow(const Expr& base, double exponent) {
    Node n;
    n.op = Op::Pow;
    n.value = exponent;
    n.integer_exponent = std::nearbyint(exponent) == exponent && std::abs(exponent) < 1e9;
    n.lhs = base.root_;
    return make(std::move(n));
}

Expr operator+(const Expr& a, const Expr& b) {
    if (a.is_constant() && b.is_constant()) return Expr::constant(a.node().value + b.node().value);
    if (a.is_constant() && a.node().value == 0.0) return b;
    if (b.is_constant() && b.node().value == 0.0) return a;
    Expr::Node n;
    n.op = Op::Add;
    n.lhs = a.root_;
    n.rhs = b.root_;
    return Expr::make(std::move(n));
}

Expr operator-(const Expr& a, const Expr& b) {
    if (a.is_constant() && b.is_constant()) return Expr::constant(a.node().value - b.node().value);
    if (b.is_constant() && b.node().value == 0.0) return a;
    Expr::Node n;
    n.op = Op::Sub;
    n.lhs = a.root_;
    n.rhs = b.root_;
    return Expr::make(std::move(n));
}

Expr operator*(const Expr& a, const Expr& b) {
    if (a.is_constant() && b.is_constant()) return Expr::constant(a.node().value * b.node().value);
    if ((a.is_constant() && a.node().value == 0.0) || (b.is_constant() && b.node().value == 0.0))
        return Expr::constant(0.0);
    if (a.is_constant() && a.node().value == 1.0) return b;
    if (b.is_constant() && b.node().value == 1.0) return a;
    Expr::Node n;
    n.op = Op::Mul;
    n.lhs = a.root_;
    n.rhs = b.root_;
    return Expr::make(std::move(n));
}

Expr operator/(const Expr& a, const Expr& b) {
    if (a.is_constant() && b.is_constant() && b.node().value != 0.0)
        return Expr::constant(a.node().value / b.node().value);
    if (b.is_constant() && b.node().value == 1.0) return a;
    Expr::Node n;
    n.op = Op::Div;
    n.lhs = a.root_;
    n.rhs = b.root_;
    return Expr::make(std::move(n));
}

Expr operator-(const Expr& a) {
    if (a.is_constant()) return Expr::constant(-a.node().value);
    return Expr::unary(Op::Neg, a);
}

Expr exp(const Expr& a) { return Expr::unary(Op::Exp, a); }
Expr log(const Expr& a) { return Expr::unary(Op::Log, a); }
Expr sin(const Expr& a) { return Expr::unary(Op::Sin, a); }
Expr cos(const Expr& a) { return Expr::unary(Op::Cos, a); }
Expr sinh(const Expr& a) { return Expr::unary(Op::Sinh, a); }
Expr cosh(const Expr& a) { return Expr::unary(Op::Cosh, a); }
Expr sqrt(const Expr& a) { return Expr::unary(Op::Sqrt, a); }

int Expr::max_coordinate() const {
    const auto used = coordinates_used();
    return used.empty() ? -1 : *used.rbegin();
}

std::set<int> Expr::coordinates_used() const {
    std::set<int> out;
    std::function<void(const Node&)> walk = [&](const Node& n) {
        if (n.op == Op::Coordinate) out.insert(n.index);
        if (n.lhs) walk(*n.lhs);
        if (n.rhs) walk(*n.rhs);
    };
    walk(*root_);
    return out;
}

Expr Expr::shifted(int delta) const {
    std::function<std::shared_ptr<const Node>(const std::shared_ptr<const Node>&)> rec =
        [&](const std::shared_ptr<const Node>& n) -> std::shared_ptr<const Node> {
        if (!n) return nullptr;
        if (n->op == Op::Constant) return n;
        Node copy = *n;
        if (n->op == Op::Coordinate) {
            copy.index = n->index + delta;
            if (copy.index < 0) throw std::invalid_argument("coordinate shift below zero");
        }
        copy.lhs = rec(n->lhs);
        copy.rhs = rec(n->rhs);
        return std::make_shared<const Node>(std::move(copy));
    };
    return Expr(rec(root_));
}

std::string Expr::to_string() const {
    const Node& n = *root_;
    switch (n.op) {
        case Op::Constant: return format_number(n.value);
        case Op::Coordinate: return "x" + std::to_string(n.index);
        case Op::Add: return "(" + lhs().to_string() + " + " + rhs().to_string() + ")";
        case Op::Sub: return "(" + lhs().to_string() + " - " + rhs().to_string() + ")";
        case Op::Mul: return "(" + lhs().to_string() + "*" + rhs().to_string() + ")";
        case Op::Div: return "(" + lhs().to_string() + "/" + rhs().to_string() + ")";
        case Op::Pow: return "(" + lhs().to_string() + "^" + format_number(n.value) + ")";
        case Op::Neg: return "(-" + lhs().to_string() + ")";
        default: return std::string(function_name(n.op)) + "(" + lhs().to_string() + ")";
    }
}

namespace {

Jet eval_node(const Expr& e, std::span<const double> point, int order) {
    const int dim = static_cast<int>(point.size());
    const Expr::Node& n = e.node();
    auto fail = [&](const std::string& what) { throw DomainError(what + " in " + e.to_string()); };
    switch (n.op) {
        case Op::Constant: return Jet::constant(dim, order, n.value);
        case Op::Coordinate:
            if (n.index >= dim) fail("coordinate index out of range for dimension " + std::to_string(dim));
            return Jet::variable(dim, order, n.index, point[static_cast<std::size_t>(n.index)]);
        case Op::Add: return eval_node(e.lhs(), point, order) + eval_node(e.rhs(), point, order);
        case Op::Sub: return eval_node(e.lhs(), point, order) - eval_node(e.rhs(), point, order);
        case Op::Mul: return eval_node(e.lhs(), point, order) * eval_node(e.rhs(), point, order);
        case Op::Div: {
            Jet num = eval_node(e.lhs(), point, order);
            Jet den = eval_node(e.rhs(), point, order);
            if (den.value() == 0.0) fail("division by zero");
            return num / den;
        }
        case Op::Neg: return -eval_node(e.lhs(), point, order);
        case Op::Pow: {
            Jet base = eval_node(e.lhs(), point, order);
            if (n.integer_exponent) {
                const int k = static_cast<int>(n.value);
                if (k < 0 && base.value() == 0.0) fail("negative power of zero");
                return pow(base, k);
            }
            if (!(base.value() > 0.0)) fail("non-integer power of non-positive base");
            return exp(n.value * log(base));
        }
        case Op::Exp: return exp(eval_node(e.lhs(), point, order));
        case Op::Log: {
            Jet a = eval_node(e.lhs(), point, order);
            if (!(a.value() > 0.0)) fail("log of non-positive value");
            return log(a);
        }
        case Op::Sqrt: {
            Jet a = eval_node(e.lhs(), point, order);
            if (a.value() < 0.0 || (a.value() == 0.0 && order > 0)) fail("sqrt of non-positive value");
            return sqrt(a);
        }
        case Op::Sin: return sin(eval_node(e.lhs(), point, order));
        case Op::Cos: return cos(eval_node(e.lhs(), point, order));
        case Op::Sinh: return sinh(eval_node(e.lhs(), point, order));
        case Op::Cosh: return cosh(eval_node(e.lhs(), point, order));
    }
    fail("unknown node");
    return {};
}

}  // namespace

Jet Expr::jet(std::span<const double> point, int order) const {
    if (point.empty()) throw std::invalid_argument("evaluation point must be non-empty");
    if (order < 0 || order > kMaxJetOrder) throw std::invalid_argument("jet order out of range");
    return eval_node(*this, point, order);
}

double Expr::evaluate(std::span<const double> point) const { return jet(point, 0).value(); }

double partial_derivative(const Expr& e, const MultiIndex& alpha, std::span<const double> point) {
    if (alpha.dim() != static_cast<int>(point.size())) throw std::invalid_argument("multi-index dimension mismatch");
    if (alpha.order() > kMaxJetOrder) throw std::invalid_argument("derivative order exceeds jet order");
    return e.jet(point, alpha.order()).partial(alpha);
}

// ---------------------------------------------------------------------------
// Parser

namespace {

class Parser {
public:
    Parser(const std::string& src, int dim, const std::vector<std::string>& names)
        : src_(src), dim_(dim), names_(names) {
        aliases_ = true;
        for (std::size_t i = 0; i < names_.size(); ++i)
            if (names_[i] != "x" + std::to_string(i)) aliases_ = false;
    }

    Expr parse() {
        Expr e = expr();
        skip_ws();
        if (pos_ != src_.size()) throw ParseError("unexpected character '" + std::string(1, src_[pos_]) + "'", pos_);
        return e;
    }

private:
    void skip_ws() {
        while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) ++pos_;
    }
    bool accept(char c) {
        skip_ws();
        if (pos_ < src_.size() && src_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }
    void expect(char c) {
        if (!accept(c)) throw ParseError(std::string("expected '") + c + "'", pos_);
    }

    Expr expr() {
        Expr e = term();
        for (;;) {
            if (accept('+')) e = e + term();
            else if (accept('-')) e = e - term();
            else return e;
        }
    }
    Expr term() {
        Expr e = unary();
        for (;;) {
            if (accept('*')) e = e * unary();
            else if (accept('/')) {
                const std::size_t at = pos_;
                Expr d = unary();
                if (d.is_constant() && d.node().value == 0.0) throw ParseError("division by constant zero", at);
                e = e / d;
            } else return e;
        }
    }
    Expr unary() {
        if (accept('-')) return -unary();
        if (accept('+')) return unary();
        return power();
    }
    Expr power() {
        Expr base = primary();
        if (accept('^')) {
            const std::size_t at = pos_;
            Expr ex = unary();
            if (ex.max_coordinate() >= 0) throw ParseError("exponent must be constant", at);
            const double q = ex.jet(std::vector<double>{0.0}, 0).value();
            return Expr::pow(base, q);
        }
        return base;
    }
    Expr primary() {
        skip_ws();
        if (pos_ >= src_.size()) throw ParseError("unexpected end of expression", pos_);
        const char c = src_[pos_];
        if (accept('(')) {
            Expr e = expr();
            expect(')');
            return e;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return identifier();
        throw ParseError("unexpected character '" + std::string(1, c) + "'", pos_);
    }
    Expr number() {
        const std::size_t start = pos_;
        while (pos_ < src_.size() && (std::isdigit(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '.')) ++pos_;
        if (pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
            std::size_t p = pos_ + 1;
            if (p < src_.size() && (src_[p] == '+' || src_[p] == '-')) ++p;
            if (p < src_.size() && std::isdigit(static_cast<unsigned char>(src_[p]))) {
                pos_ = p;
                while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) ++pos_;
            }
        }
        double v = 0.0;
        auto res = std::from_chars(src_.data() + start, src_.data() + pos_, v);
        if (res.ec != std::errc() || res.ptr != src_.data() + pos_) throw ParseError("malformed number", start);
        return Expr::constant(v);
    }
    Expr identifier() {
        const std::size_t start = pos_;
        while (pos_ < src_.size() && (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_')) ++pos_;
        const std::string id = src_.substr(start, pos_ - start);
        static const std::vector<std::pair<std::string, Op>> functions = {
            {"exp", Op::Exp}, {"log", Op::Log},   {"sin", Op::Sin},  {"cos", Op::Cos},
            {"sinh", Op::Sinh}, {"cosh", Op::Cosh}, {"sqrt", Op::Sqrt}};
        for (const auto& [name, op] : functions) {
            if (id == name) {
                expect('(');
                Expr arg = expr();
                expect(')');
                return Expr::unary(op, arg);
            }
        }
        if (id == "pi") return Expr::constant(std::numbers::pi);
        for (std::size_t i = 0; i < names_.size(); ++i) {
            if (names_[i] == id) return Expr::coordinate(static_cast<int>(i));
        }
        if (id.size() > 1 && id[0] == 'x' && std::all_of(id.begin() + 1, id.end(), [](char ch) {
                return std::isdigit(static_cast<unsigned char>(ch));
            })) {
            const int idx = std::stoi(id.substr(1));
            if (idx >= dim_)
                throw ParseError("coordinate " + id + " out of range for dimension " + std::to_string(dim_), start);
            return Expr::coordinate(idx);
        }
        if (aliases_) {
            if (const int idx = alias_index(id); idx >= 0) return Expr::coordinate(idx);
        }
        throw ParseError("unknown identifier '" + id + "'", start);
    }
    int alias_index(const std::string& id) const {
        if (dim_ == 4) {
            if (id == "t") return 0;
            if (id == "x") return 1;
            if (id == "y") return 2;
            if (id == "z") return 3;
            return -1;
        }
        if (dim_ <= 3) {
            if (id == "x") return 0;
            if (id == "y" && dim_ >= 2) return 1;
            if (id == "z" && dim_ >= 3) return 2;
            if (id == "t" && dim_ == 1) return 0;
        }
        return -1;
    }

    const std::string& src_;
    int dim_;
    const std::vector<std::string>& names_;
    bool aliases_ = true;
    std::size_t pos_ = 0;
};

}  // namespace

Expr parse_expression(const std::string& src, int dim, const std::vector<std::string>& names) {
    if (dim < 1) throw std::invalid_argument("dimension must be positive");
    if (!names.empty() && static_cast<int>(names.size()) != dim)
        throw std::invalid_argument("coordinate name count must equal the dimension");
    return Parser(src, dim, names).parse();
}

}  // namespace geoflow
