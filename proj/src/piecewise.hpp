#pragma once

// Piecewise real functions over a finite, strictly increasing breakpoint
// list. Segments are backed either by expression trees (analytic
// derivatives available) or by caller-supplied callables (derivatives fall
// back to finite differences, one-sided at breakpoints). One-sided limits
// at every breakpoint are captured at construction and may be overridden
// when a segment is singular at its endpoint.

#include "expression.hpp"

#include <functional>
#include <memory>
#include <span>
#include <vector>

namespace stickysim {

class PiecewiseFn {
public:
    using Fn = std::function<double(double)>;

    PiecewiseFn() = default;

    static PiecewiseFn constant(double c);
    static PiecewiseFn from_expression(const Expression& e);
    static PiecewiseFn from_callables(std::vector<double> breaks, std::vector<Fn> segments);

    // right-continuous at breakpoints
    double operator()(double x) const;

    std::span<const double> breakpoints() const { return breaks_; }
    std::size_t segment_count() const { return segs_.size(); }

    bool has_limit(std::size_t bp, int side) const;
    double limit(std::size_t bp, int side) const; // side < 0 left, side > 0 right
    void set_limits(std::size_t bp, double left, double right);

    bool segment_constant(std::size_t i, double* value = nullptr) const;
    // true when the whole function is a single constant
    bool constant_value(double* value = nullptr) const;

    bool analytic() const;
    double derivative(double x) const;
    double second_derivative(double x) const;
    double one_sided_derivative(std::size_t bp, int side) const;

    // same function with extra breakpoints inserted (no-ops where they
    // already exist)
    PiecewiseFn with_breakpoints(std::span<const double> extra) const;

    // segment access for compilers that transform coefficient functions
    const Expression* segment_expression(std::size_t i) const;
    const Fn& segment_callable(std::size_t i) const { return segs_[i].fn; }

    // pw expression tree; requires analytic()
    Expression to_expression() const;

    bool empty() const { return segs_.empty(); }

private:
    struct Segment {
        Fn fn;
        std::shared_ptr<const Expression> expr;           // null when callable-backed
        mutable std::shared_ptr<const Expression> dexpr;  // cached derivatives
        mutable std::shared_ptr<const Expression> ddexpr;
        bool is_const = false;
        double cval = 0.0;
    };

    struct Limits {
        double left = 0.0, right = 0.0;
        bool left_ok = false, right_ok = false;
    };

    std::size_t segment_index(double x) const;
    void capture_limits();
    double fd_step(double x) const;

    std::vector<double> breaks_;
    std::vector<Segment> segs_;
    std::vector<Limits> limits_;
};

} // namespace stickysim
