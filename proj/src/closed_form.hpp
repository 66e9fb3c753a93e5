#pragma once

// Exact laws of symmetric sticky Brownian motion started at the sticky
// point (generator f''/2 with delay alpha at 0): local-time tail, expected
// occupation time, the point mass P(X(t)=0) and the characteristic
// function. Only p_+ = p_- = 1/2 has closed forms; callers with asymmetric
// points go through the Monte Carlo route instead.

namespace stickysim {

double normal_cdf(double x);

// exp(x^2) erfc(x), stable for large x
double erfcx(double x);

// P(L^W(t,0) > y) for standard Brownian local time
double bm_local_time_tail(double t, double y);

// P(alpha L^X(t,0) > y) = P(alpha L^W(t-y,0) > y), 0 <= y < t
double sticky_local_time_tail(double t, double y, double alpha);

// E[alpha L^X(t,0)] = integral of the tail over [0,t]
double expected_occupation(double t, double alpha);

// P(X(t) = 0) = 2 e^{2t/alpha^2} (1 - Phi(2 sqrt(t)/alpha))
double point_mass(double t, double alpha);

// E e^{i lambda X(t)}; real and even in lambda for this symmetric law
double char_fn(double lambda, double t, double alpha);

// |d phi/dt + (lambda^2/2)(phi - point_mass)| by central differences
double char_fn_ode_residual(double lambda, double t, double alpha);

} // namespace stickysim
