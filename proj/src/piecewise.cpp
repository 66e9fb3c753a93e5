#include "piecewise.hpp"

#include "error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace stickysim {

namespace {

PiecewiseFn::Fn expr_callable(const std::shared_ptr<const Expression>& e) {
    return [e](double x) { return e->eval(x); };
}

} // namespace

PiecewiseFn PiecewiseFn::constant(double c) {
    PiecewiseFn f;
    Segment s;
    s.fn = [c](double) { return c; };
    s.expr = std::make_shared<Expression>(Expression::number(c));
    s.is_const = true;
    s.cval = c;
    f.segs_.push_back(std::move(s));
    return f;
}

PiecewiseFn PiecewiseFn::from_expression(const Expression& e) {
    PiecewiseFn f;
    const std::size_t n = e.piece_count();
    if (n == 0) fail(errc::invalid_argument, "empty expression");
    f.breaks_.assign(e.breakpoints().begin(), e.breakpoints().end());
    for (std::size_t i = 0; i < n; ++i) {
        Segment s;
        auto piece = std::make_shared<Expression>(e.piece(i).simplified());
        s.expr = piece;
        s.fn = expr_callable(piece);
        if (auto c = piece->constant_value()) {
            s.is_const = true;
            s.cval = *c;
        }
        f.segs_.push_back(std::move(s));
    }
    f.capture_limits();
    return f;
}

PiecewiseFn PiecewiseFn::from_callables(std::vector<double> breaks, std::vector<Fn> segments) {
    if (segments.size() != breaks.size() + 1)
        fail(errc::invalid_argument, "need one more segment than breakpoints");
    for (std::size_t i = 1; i < breaks.size(); ++i)
        if (!(breaks[i] > breaks[i - 1]))
            fail(errc::spec_violation, "breakpoints must be strictly increasing");
    PiecewiseFn f;
    f.breaks_ = std::move(breaks);
    for (auto& fn : segments) {
        Segment s;
        s.fn = std::move(fn);
        f.segs_.push_back(std::move(s));
    }
    f.capture_limits();
    return f;
}

void PiecewiseFn::capture_limits() {
    limits_.assign(breaks_.size(), Limits{});
    for (std::size_t i = 0; i < breaks_.size(); ++i) {
        const double b = breaks_[i];
        try {
            limits_[i].left = segs_[i].fn(b);
            limits_[i].left_ok = std::isfinite(limits_[i].left);
        } catch (const Error&) {
        }
        try {
            limits_[i].right = segs_[i + 1].fn(b);
            limits_[i].right_ok = std::isfinite(limits_[i].right);
        } catch (const Error&) {
        }
    }
}

std::size_t PiecewiseFn::segment_index(double x) const {
    // segments are (-inf,b0), [b0,b1), ..., [bk,inf): right-continuous
    std::size_t i = 0;
    while (i < breaks_.size() && x >= breaks_[i]) ++i;
    return i;
}

double PiecewiseFn::operator()(double x) const {
    if (segs_.empty()) fail(errc::invalid_argument, "empty piecewise function");
    const std::size_t i = segment_index(x);
    const Segment& s = segs_[i];
    if (s.is_const) return s.cval;
    if (i > 0 && x == breaks_[i - 1] && limits_[i - 1].right_ok) return limits_[i - 1].right;
    return s.fn(x);
}

bool PiecewiseFn::has_limit(std::size_t bp, int side) const {
    return side < 0 ? limits_[bp].left_ok : limits_[bp].right_ok;
}

double PiecewiseFn::limit(std::size_t bp, int side) const {
    if (bp >= breaks_.size()) fail(errc::invalid_argument, "breakpoint index out of range");
    const Limits& l = limits_[bp];
    if (side < 0) {
        if (!l.left_ok)
            fail(errc::spec_violation, "missing left limit at breakpoint " + std::to_string(breaks_[bp]) +
                                           "; supply it explicitly");
        return l.left;
    }
    if (!l.right_ok)
        fail(errc::spec_violation, "missing right limit at breakpoint " + std::to_string(breaks_[bp]) +
                                       "; supply it explicitly");
    return l.right;
}

void PiecewiseFn::set_limits(std::size_t bp, double left, double right) {
    if (bp >= breaks_.size()) fail(errc::invalid_argument, "breakpoint index out of range");
    limits_[bp] = {left, right, true, true};
}

bool PiecewiseFn::segment_constant(std::size_t i, double* value) const {
    if (!segs_[i].is_const) return false;
    if (value) *value = segs_[i].cval;
    return true;
}

bool PiecewiseFn::constant_value(double* value) const {
    double first = 0.0;
    if (segs_.empty() || !segment_constant(0, &first)) return false;
    for (std::size_t i = 1; i < segs_.size(); ++i) {
        double c = 0.0;
        if (!segment_constant(i, &c) || c != first) return false;
    }
    if (value) *value = first;
    return true;
}

bool PiecewiseFn::analytic() const {
    for (const auto& s : segs_)
        if (!s.expr) return false;
    return !segs_.empty();
}

double PiecewiseFn::fd_step(double x) const { return std::max(1e-6, 1e-6 * std::fabs(x)); }

double PiecewiseFn::derivative(double x) const {
    const std::size_t i = segment_index(x);
    const Segment& s = segs_[i];
    if (s.expr) {
        if (!s.dexpr) s.dexpr = std::make_shared<Expression>(s.expr->derivative());
        return s.dexpr->eval(x);
    }
    const double h = fd_step(x);
    const double lo = i > 0 ? breaks_[i - 1] : -std::numeric_limits<double>::infinity();
    const double hi = i < breaks_.size() ? breaks_[i] : std::numeric_limits<double>::infinity();
    if (x - h > lo && x + h < hi) return (s.fn(x + h) - s.fn(x - h)) / (2.0 * h);
    if (x + 2 * h < hi) return (-3.0 * s.fn(x) + 4.0 * s.fn(x + h) - s.fn(x + 2 * h)) / (2.0 * h);
    return (3.0 * s.fn(x) - 4.0 * s.fn(x - h) + s.fn(x - 2 * h)) / (2.0 * h);
}

double PiecewiseFn::second_derivative(double x) const {
    const std::size_t i = segment_index(x);
    const Segment& s = segs_[i];
    if (s.expr) {
        if (!s.dexpr) s.dexpr = std::make_shared<Expression>(s.expr->derivative());
        if (!s.ddexpr) s.ddexpr = std::make_shared<Expression>(s.dexpr->derivative());
        return s.ddexpr->eval(x);
    }
    const double h = std::max(1e-5, 1e-5 * std::fabs(x)); // coarser step for f''
    return (s.fn(x + h) - 2.0 * s.fn(x) + s.fn(x - h)) / (h * h);
}

double PiecewiseFn::one_sided_derivative(std::size_t bp, int side) const {
    if (bp >= breaks_.size()) fail(errc::invalid_argument, "breakpoint index out of range");
    const double b = breaks_[bp];
    const std::size_t i = side < 0 ? bp : bp + 1;
    const Segment& s = segs_[i];
    if (s.expr) {
        if (!s.dexpr) s.dexpr = std::make_shared<Expression>(s.expr->derivative());
        try {
            const double d = s.dexpr->eval(b);
            if (std::isfinite(d)) return d;
        } catch (const Error&) {
            // singular derivative expression at the breakpoint: fall through
        }
    }
    const double h = fd_step(b);
    const double f0 = limit(bp, side);
    if (side > 0) return (-3.0 * f0 + 4.0 * s.fn(b + h) - s.fn(b + 2 * h)) / (2.0 * h);
    return (3.0 * f0 - 4.0 * s.fn(b - h) + s.fn(b - 2 * h)) / (2.0 * h);
}

PiecewiseFn PiecewiseFn::with_breakpoints(std::span<const double> extra) const {
    std::vector<double> merged(breaks_.begin(), breaks_.end());
    for (double b : extra)
        if (!std::binary_search(merged.begin(), merged.end(), b)) {
            merged.insert(std::upper_bound(merged.begin(), merged.end(), b), b);
        }
    if (merged.size() == breaks_.size()) return *this;

    PiecewiseFn out;
    out.breaks_ = merged;
    out.segs_.reserve(merged.size() + 1);
    std::size_t old = 0;
    for (std::size_t i = 0; i <= merged.size(); ++i) {
        // segment i of the output lies inside old segment `old`
        out.segs_.push_back(segs_[old]);
        if (i < merged.size() && old < breaks_.size() && merged[i] == breaks_[old]) ++old;
    }
    out.capture_limits();
    // carry over explicit limits at pre-existing breakpoints
    for (std::size_t i = 0, j = 0; i < merged.size(); ++i) {
        if (j < breaks_.size() && merged[i] == breaks_[j]) {
            out.limits_[i] = limits_[j];
            ++j;
        }
    }
    return out;
}

const Expression* PiecewiseFn::segment_expression(std::size_t i) const {
    return segs_[i].expr.get();
}

Expression PiecewiseFn::to_expression() const {
    if (!analytic()) fail(errc::invalid_argument, "function is not expression-backed");
    if (segs_.size() == 1) return *segs_[0].expr;
    std::vector<Expression> pieces;
    pieces.reserve(segs_.size());
    for (const auto& s : segs_) pieces.push_back(*s.expr);
    return Expression::piecewise(breaks_, std::move(pieces));
}

} // namespace stickysim
