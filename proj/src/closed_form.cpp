#include "closed_form.hpp"

#include "error.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <cmath>

namespace stickysim {

namespace {

constexpr double kSqrt2 = 1.4142135623730951;
constexpr double kInvSqrtPi = 0.5641895835477563;
// the guard threshold 2 sqrt(t)/alpha > 6 maps to erfcx argument 3 sqrt(2)
constexpr double kErfcxSwitch = 4.242640687119285;

using gk = boost::math::quadrature::gauss_kronrod<double, 15>;

double integrate(const auto& f, double a, double b, double rel_tol) {
    double error = 0.0;
    const double v = gk::integrate(f, a, b, 12, rel_tol, &error);
    const double scale = std::max(1.0, std::fabs(v));
    if (!std::isfinite(v) || error > 1e-4 * scale)
        fail(errc::numerical_failure, "quadrature failed to converge");
    return v;
}

} // namespace

double normal_cdf(double x) { return 0.5 * std::erfc(-x / kSqrt2); }

double erfcx(double x) {
    if (x < kErfcxSwitch) return std::exp(x * x) * std::erfc(x);
    // Laplace continued fraction, modified Lentz; converges fast for x >= 4
    const double tiny = 1e-300;
    double f = x, c = x, d = 0.0;
    for (int k = 1; k <= 60; ++k) {
        const double a = 0.5 * k;
        d = x + a * d;
        if (d == 0.0) d = tiny;
        c = x + a / c;
        if (c == 0.0) c = tiny;
        d = 1.0 / d;
        const double delta = c * d;
        f *= delta;
        if (std::fabs(delta - 1.0) < 1e-17) break;
    }
    return kInvSqrtPi / f;
}

double bm_local_time_tail(double t, double y) {
    if (!(t > 0.0)) fail(errc::invalid_argument, "bm_local_time_tail needs t > 0");
    if (y < 0.0) fail(errc::invalid_argument, "bm_local_time_tail needs y >= 0");
    // sqrt(2/(pi t)) int_y^inf e^{-z^2/2t} dz = erfc(y / sqrt(2t))
    return std::erfc(y / std::sqrt(2.0 * t));
}

double sticky_local_time_tail(double t, double y, double alpha) {
    if (!(t > 0.0)) fail(errc::invalid_argument, "sticky_local_time_tail needs t > 0");
    if (!(alpha > 0.0)) fail(errc::invalid_argument, "sticky_local_time_tail needs alpha > 0");
    if (y < 0.0) fail(errc::invalid_argument, "sticky_local_time_tail needs y >= 0");
    if (y >= t)
        fail(errc::out_of_range, "sticky_local_time_tail needs y < t (alpha L <= t a.s.)");
    return bm_local_time_tail(t - y, y / alpha);
}

double expected_occupation(double t, double alpha) {
    if (!(alpha > 0.0)) fail(errc::invalid_argument, "expected_occupation needs alpha > 0");
    if (t < 0.0) fail(errc::invalid_argument, "expected_occupation needs t >= 0");
    if (t == 0.0) return 0.0;
    // int_0^t tail(t,y) dy with y = t - w^2 flattening the steep endpoint
    const double sw = std::sqrt(t);
    const auto f = [&](double w) {
        const double y = t - w * w;
        if (y <= 0.0) return 2.0 * w; // tail -> 1 as y -> 0 ... w -> sqrt(t)
        if (y >= t) return 0.0;
        return 2.0 * w * sticky_local_time_tail(t, y, alpha);
    };
    const double v = integrate(f, 0.0, sw, 1e-9);
    return std::min(v, t);
}

double point_mass(double t, double alpha) {
    if (!(alpha > 0.0)) fail(errc::invalid_argument, "point_mass needs alpha > 0");
    if (t < 0.0) fail(errc::invalid_argument, "point_mass needs t >= 0");
    // 2 e^{2t/a^2}(1 - Phi(2 sqrt(t)/a)) = erfcx(sqrt(2t)/a)
    return erfcx(std::sqrt(2.0 * t) / alpha);
}

double char_fn(double lambda, double t, double alpha) {
    if (!(alpha > 0.0)) fail(errc::invalid_argument, "char_fn needs alpha > 0");
    if (t < 0.0) fail(errc::invalid_argument, "char_fn needs t >= 0");
    const double l2 = lambda * lambda;
    if (t == 0.0 || l2 == 0.0) return 1.0;
    // phi solves phi' = -(l^2/2)(phi - point_mass), phi(0) = 1:
    // phi = e^{-l^2 t/2} + (l^2/2) int_0^t e^{-l^2 (t-s)/2} point_mass(s) ds.
    // s = w^2 removes the sqrt cusp of point_mass at s = 0.
    const auto f = [&](double w) {
        const double s = w * w;
        return 2.0 * w * std::exp(-0.5 * l2 * (t - s)) * point_mass(s, alpha);
    };
    const double integral = integrate(f, 0.0, std::sqrt(t), 1e-9);
    return std::exp(-0.5 * l2 * t) + 0.5 * l2 * integral;
}

double char_fn_ode_residual(double lambda, double t, double alpha) {
    if (!(t > 0.0)) fail(errc::invalid_argument, "char_fn_ode_residual needs t > 0");
    const double h = std::min(5e-5, 0.25 * t);
    const double dphi = (char_fn(lambda, t + h, alpha) - char_fn(lambda, t - h, alpha)) / (2.0 * h);
    const double l2 = lambda * lambda;
    return std::fabs(dphi + 0.5 * l2 * (char_fn(lambda, t, alpha) - point_mass(t, alpha)));
}

} // namespace stickysim
