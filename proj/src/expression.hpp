#pragma once

// Coefficient expressions: recursive-descent parser, canonical printer,
// evaluator and symbolic differentiation. Grammar: numbers, the variable x,
// binary + - * / ^ (^ right-associative), unary -, functions
// exp/log/sqrt/sin/cos/abs, and piecewise blocks written
// pw(e0, b1, e1, ..., bk, ek) with strictly increasing constant breakpoints
// (e0 applies left of b1, ek right of bk; at a breakpoint the right piece
// is used).

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace stickysim {

class Expression {
public:
    Expression() = default;

    static Expression parse(std::string_view text);

    static Expression number(double v);
    static Expression var();

    double eval(double x) const;
    Expression derivative() const;
    Expression simplified() const;
    std::string str() const;

    bool empty() const { return root_ == nullptr; }
    // value if the expression contains no variable
    std::optional<double> constant_value() const;

    bool is_piecewise() const;
    const std::vector<double>& breakpoints() const;
    std::size_t piece_count() const;
    Expression piece(std::size_t i) const;

    bool same_tree(const Expression& other) const;

    // tree algebra (results are simplified)
    friend Expression operator+(const Expression& a, const Expression& b);
    friend Expression operator-(const Expression& a, const Expression& b);
    friend Expression operator*(const Expression& a, const Expression& b);
    friend Expression operator/(const Expression& a, const Expression& b);
    friend Expression operator-(const Expression& a);
    static Expression pow(const Expression& base, const Expression& exponent);
    static Expression apply(const std::string& fn, const Expression& arg);
    static Expression piecewise(std::vector<double> breaks, std::vector<Expression> pieces);

    struct Node;

private:
    explicit Expression(std::shared_ptr<const Node> n) : root_(std::move(n)) {}
    std::shared_ptr<const Node> root_;
};

} // namespace stickysim
