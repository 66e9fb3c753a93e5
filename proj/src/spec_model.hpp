#pragma once

// Process specifications: drift/vol coefficient pairs with a finite list of
// sticky/skew points, plus the two compilers that produce them from a
// scale/speed pair (u, v) and from narrow-tube data (V1, beta, mu).

#include "piecewise.hpp"

#include <memory>
#include <span>
#include <string>
#include <vector>

namespace stickysim {

struct StickyPointSpec {
    double location = 0.0;
    double p_plus = 0.5;
    double p_minus = 0.5;
    double alpha = 0.0; // delay: time per unit local time
};

struct ProcessSpec {
    PiecewiseFn drift;
    PiecewiseFn vol;
    std::vector<StickyPointSpec> sticky_points;
    double ellipticity = 1e-8; // c with sigma^2 >= c

    // same spec with every sticky location present as a coefficient
    // breakpoint (trivial breakpoints inserted where missing)
    ProcessSpec normalized() const;
};

struct Violation {
    std::string what;
    double where = 0.0; // NaN when not tied to a location
};

struct ValidationReport {
    std::vector<Violation> violations;
    bool ok() const { return violations.empty(); }
    std::string summary() const;
};

ValidationReport validate_process_spec(const ProcessSpec& spec, std::span<const double> probe_grid);

std::vector<double> make_probe_grid(double lo, double hi, std::size_t n);

// A ProcessSpec that passed validation, with per-point data the simulator
// needs precomputed.
class ValidatedSpec {
public:
    struct PointData {
        double x = 0.0;
        double p_plus = 0.5, p_minus = 0.5, alpha = 0.0;
        double sigma_left = 1.0, sigma_right = 1.0, sigma_max = 1.0;
    };

    // throws Error(errc::spec_violation) listing all violations
    static ValidatedSpec create(ProcessSpec spec, std::span<const double> probe_grid);
    static ValidatedSpec create(ProcessSpec spec, double lo, double hi, std::size_t n_probe = 10000);

    const ProcessSpec& spec() const { return *spec_; }
    std::span<const PointData> points() const { return points_; }
    double sigma_probe_max() const { return sigma_probe_max_; }

private:
    std::shared_ptr<const ProcessSpec> spec_;
    std::vector<PointData> points_;
    double sigma_probe_max_ = 1.0;
};

struct ScaleSpeedSpec {
    PiecewiseFn u; // scale: continuous, strictly increasing
    PiecewiseFn v; // speed: right-continuous, strictly increasing
    std::vector<double> jump_set; // locations of skew/delay points
};

struct TubeSpec {
    PiecewiseFn v1; // smooth strictly positive cross-section part
    double beta = 0.0;
    double mu = 0.0;
};

// Feller D_v D_u compiler: b = -u''/((u')^2 v'), sigma = sqrt(2/(u' v')),
// p_+ = u'(x-)/(u'(x+)+u'(x-)), alpha = (v(x+)-v(x-)) u'(x+)u'(x-)/(u'(x+)+u'(x-)).
ProcessSpec feller_compile(const ScaleSpeedSpec& ss);

// Narrow-tube compiler: sigma = 1, b = (ln V1)'/2 left of 0 and
// (ln(V1+beta))'/2 right of it, one sticky point at 0 with
// p_+=(g+beta)/(2g+beta), p_-=g/(2g+beta), alpha=2 mu/(2g+beta), g=V1(0).
ProcessSpec tube_compile(const TubeSpec& ts);

// JSON round trip (requires expression-backed coefficients)
std::string process_spec_to_json(const ProcessSpec& spec);
ProcessSpec process_spec_from_json(std::string_view json_text);

} // namespace stickysim
