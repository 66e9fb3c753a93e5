#include "spec_model.hpp"

#include "error.hpp"

#include <json.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <limits>
#include <set>
#include <sstream>

namespace stickysim {

namespace {

constexpr double kProbTol = 1e-12;
constexpr double kJumpTol = 1e-9;
constexpr double kDerivFloor = 1e-12; // reject one-sided u' below this

void add(std::vector<Violation>& v, std::string what, double where = std::numeric_limits<double>::quiet_NaN()) {
    v.push_back({std::move(what), where});
}

} // namespace

ProcessSpec ProcessSpec::normalized() const {
    ProcessSpec out = *this;
    std::vector<double> locs;
    locs.reserve(sticky_points.size());
    for (const auto& p : sticky_points) locs.push_back(p.location);
    if (!out.drift.empty()) out.drift = out.drift.with_breakpoints(locs);
    if (!out.vol.empty()) out.vol = out.vol.with_breakpoints(locs);
    return out;
}

std::string ValidationReport::summary() const {
    std::ostringstream os;
    for (std::size_t i = 0; i < violations.size(); ++i) {
        if (i) os << "; ";
        os << violations[i].what;
        if (std::isfinite(violations[i].where)) os << " (at x=" << violations[i].where << ")";
    }
    return os.str();
}

std::vector<double> make_probe_grid(double lo, double hi, std::size_t n) {
    if (!(hi > lo) || n < 2) fail(errc::invalid_argument, "probe grid needs hi > lo and n >= 2");
    std::vector<double> g(n);
    for (std::size_t i = 0; i < n; ++i)
        g[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
    return g;
}

ValidationReport validate_process_spec(const ProcessSpec& raw, std::span<const double> probe_grid) {
    ValidationReport rep;
    auto& v = rep.violations;

    if (raw.drift.empty() || raw.vol.empty()) {
        add(v, "drift and vol must be supplied");
        return rep;
    }
    if (probe_grid.empty()) {
        add(v, "probe grid must be nonempty");
        return rep;
    }
    if (!(raw.ellipticity > 0.0)) add(v, "ellipticity constant must be positive");

    const ProcessSpec spec = raw.normalized();

    for (std::size_t i = 0; i < spec.sticky_points.size(); ++i) {
        const auto& p = spec.sticky_points[i];
        if (i > 0 && !(p.location > spec.sticky_points[i - 1].location))
            add(v, "sticky locations must be strictly increasing", p.location);
        if (p.p_plus < 0.0 || p.p_plus > 1.0 || p.p_minus < 0.0 || p.p_minus > 1.0)
            add(v, "p_+ and p_- must lie in [0,1]", p.location);
        if (std::fabs(p.p_plus + p.p_minus - 1.0) > kProbTol)
            add(v, "p_+ + p_- != 1", p.location);
        if (!(p.alpha >= 0.0)) add(v, "alpha must be nonnegative", p.location);
    }

    const double c = raw.ellipticity;
    auto check_sigma = [&](double s2, double where) {
        if (!std::isfinite(s2)) add(v, "vol evaluates to a non-finite value", where);
        else if (s2 < c) add(v, "ellipticity violation: sigma^2 < c", where);
    };

    for (double x : probe_grid) {
        try {
            const double s = spec.vol(x);
            check_sigma(s * s, x);
        } catch (const Error& e) {
            add(v, std::string("vol evaluation failed: ") + e.what(), x);
        }
        try {
            const double b = spec.drift(x);
            if (!std::isfinite(b)) add(v, "drift evaluates to a non-finite value", x);
        } catch (const Error& e) {
            add(v, std::string("drift evaluation failed: ") + e.what(), x);
        }
    }
    const auto bps = spec.vol.breakpoints();
    for (std::size_t i = 0; i < bps.size(); ++i) {
        for (int side : {-1, +1}) {
            try {
                const double s = spec.vol.limit(i, side);
                check_sigma(s * s, bps[i]);
            } catch (const Error& e) {
                add(v, std::string("missing one-sided vol limit: ") + e.what(), bps[i]);
            }
        }
    }
    return rep;
}

ValidatedSpec ValidatedSpec::create(ProcessSpec spec, std::span<const double> probe_grid) {
    ProcessSpec norm = spec.normalized();
    ValidationReport rep = validate_process_spec(norm, probe_grid);
    if (!rep.ok()) fail(errc::spec_violation, "invalid process spec: " + rep.summary());

    ValidatedSpec out;
    out.spec_ = std::make_shared<const ProcessSpec>(std::move(norm));

    double smax = 0.0;
    for (double x : probe_grid) smax = std::max(smax, std::fabs(out.spec_->vol(x)));

    const auto& s = *out.spec_;
    const auto bps = s.vol.breakpoints();
    for (const auto& p : s.sticky_points) {
        PointData d;
        d.x = p.location;
        d.p_plus = p.p_plus;
        d.p_minus = p.p_minus;
        d.alpha = p.alpha;
        const auto it = std::lower_bound(bps.begin(), bps.end(), p.location);
        const std::size_t bi = static_cast<std::size_t>(it - bps.begin());
        d.sigma_left = s.vol.limit(bi, -1);
        d.sigma_right = s.vol.limit(bi, +1);
        d.sigma_max = std::max(std::fabs(d.sigma_left), std::fabs(d.sigma_right));
        smax = std::max(smax, d.sigma_max);
        out.points_.push_back(d);
    }
    out.sigma_probe_max_ = smax;
    return out;
}

ValidatedSpec ValidatedSpec::create(ProcessSpec spec, double lo, double hi, std::size_t n_probe) {
    const auto grid = make_probe_grid(lo, hi, n_probe);
    return create(std::move(spec), grid);
}

namespace {

// sample points inside segment (breaks[i-1], breaks[i]) for monotonicity probes
std::vector<double> segment_probes(std::span<const double> breaks, std::size_t seg, int count) {
    const double inf = std::numeric_limits<double>::infinity();
    const double lo = seg == 0 ? -inf : breaks[seg - 1];
    const double hi = seg == breaks.size() ? inf : breaks[seg];
    double a = lo, b = hi;
    if (!std::isfinite(a)) a = std::isfinite(b) ? b - 10.0 : -10.0;
    if (!std::isfinite(b)) b = std::isfinite(lo) ? lo + 10.0 : 10.0;
    std::vector<double> out;
    for (int i = 0; i < count; ++i)
        out.push_back(a + (b - a) * (i + 0.5) / count);
    return out;
}

} // namespace

ProcessSpec feller_compile(const ScaleSpeedSpec& ss) {
    if (ss.u.empty() || ss.v.empty()) fail(errc::invalid_argument, "u and v must be supplied");

    // jump points must be structural breakpoints of u or v
    for (double x : ss.jump_set) {
        const auto ub = ss.u.breakpoints();
        const auto vb = ss.v.breakpoints();
        const bool in_u = std::binary_search(ub.begin(), ub.end(), x);
        const bool in_v = std::binary_search(vb.begin(), vb.end(), x);
        if (!in_u && !in_v)
            fail(errc::spec_violation,
                 "inconsistent jump set: " + std::to_string(x) + " is not a breakpoint of u or v");
    }

    std::vector<double> all;
    all.insert(all.end(), ss.u.breakpoints().begin(), ss.u.breakpoints().end());
    all.insert(all.end(), ss.v.breakpoints().begin(), ss.v.breakpoints().end());
    all.insert(all.end(), ss.jump_set.begin(), ss.jump_set.end());
    std::sort(all.begin(), all.end());
    all.erase(std::unique(all.begin(), all.end()), all.end());

    auto u = std::make_shared<PiecewiseFn>(ss.u.with_breakpoints(all));
    auto v = std::make_shared<PiecewiseFn>(ss.v.with_breakpoints(all));
    const auto breaks = u->breakpoints();
    const std::size_t nseg = u->segment_count();

    // regularity at every breakpoint
    std::set<double> jumps(ss.jump_set.begin(), ss.jump_set.end());
    for (std::size_t i = 0; i < breaks.size(); ++i) {
        const double x = breaks[i];
        const double scale_u = std::max({1.0, std::fabs(u->limit(i, -1)), std::fabs(u->limit(i, +1))});
        if (std::fabs(u->limit(i, +1) - u->limit(i, -1)) > kJumpTol * scale_u)
            fail(errc::spec_violation, "u must be continuous; jump found at x=" + std::to_string(x));
        const bool is_jump_point = jumps.count(x) > 0;
        if (!is_jump_point) {
            const double dvj = v->limit(i, +1) - v->limit(i, -1);
            const double scale_v = std::max({1.0, std::fabs(v->limit(i, -1)), std::fabs(v->limit(i, +1))});
            if (std::fabs(dvj) > kJumpTol * scale_v)
                fail(errc::spec_violation,
                     "inconsistent jump set: v jumps at x=" + std::to_string(x) +
                         " which is not a declared point");
            const double dl = u->one_sided_derivative(i, -1);
            const double dr = u->one_sided_derivative(i, +1);
            if (std::fabs(dl - dr) > 1e-6 * std::max({1.0, std::fabs(dl), std::fabs(dr)}))
                fail(errc::spec_violation,
                     "inconsistent jump set: u has a kink at x=" + std::to_string(x) +
                         " which is not a declared point");
        }
    }

    // monotonicity probes: u' > 0 and v' > 0 on every open segment
    for (std::size_t seg = 0; seg < nseg; ++seg) {
        for (double x : segment_probes(breaks, seg, 16)) {
            if (!(u->derivative(x) > 0.0))
                fail(errc::spec_violation, "monotonicity error: u' <= 0 at x=" + std::to_string(x));
            if (!(v->derivative(x) > 0.0))
                fail(errc::spec_violation, "monotonicity error: v' <= 0 at x=" + std::to_string(x));
        }
    }

    ProcessSpec out;
    std::vector<double> obreaks(breaks.begin(), breaks.end());
    std::vector<Expression> bexprs, sexprs;
    bool all_expr = true;

    for (std::size_t seg = 0; seg < nseg && all_expr; ++seg) {
        const Expression* ue = u->segment_expression(seg);
        const Expression* ve = v->segment_expression(seg);
        if (ue && ve) {
            Expression du = ue->derivative();
            Expression ddu = du.derivative();
            Expression dv = ve->derivative();
            bexprs.push_back((-ddu / (du * du * dv)).simplified());
            sexprs.push_back(Expression::apply("sqrt", Expression::number(2.0) / (du * dv)));
        } else {
            all_expr = false;
        }
    }

    if (all_expr) {
        out.drift = obreaks.empty() ? PiecewiseFn::from_expression(bexprs[0])
                                    : PiecewiseFn::from_expression(Expression::piecewise(obreaks, bexprs));
        out.vol = obreaks.empty() ? PiecewiseFn::from_expression(sexprs[0])
                                  : PiecewiseFn::from_expression(Expression::piecewise(obreaks, sexprs));
    } else {
        // mixed backings degrade uniformly to callables
        std::vector<PiecewiseFn::Fn> ball, sall;
        for (std::size_t seg = 0; seg < nseg; ++seg) {
            ball.push_back([u, v](double x) {
                const double du = u->derivative(x);
                return -u->second_derivative(x) / (du * du * v->derivative(x));
            });
            sall.push_back([u, v](double x) {
                return std::sqrt(2.0 / (u->derivative(x) * v->derivative(x)));
            });
        }
        out.drift = PiecewiseFn::from_callables(obreaks, std::move(ball));
        out.vol = PiecewiseFn::from_callables(obreaks, std::move(sall));
    }

    // one-sided coefficient limits from one-sided u', v'
    for (std::size_t i = 0; i < obreaks.size(); ++i) {
        const double ul = u->one_sided_derivative(i, -1);
        const double ur = u->one_sided_derivative(i, +1);
        const double vl = v->one_sided_derivative(i, -1);
        const double vr = v->one_sided_derivative(i, +1);
        out.vol.set_limits(i, std::sqrt(2.0 / (ul * vl)), std::sqrt(2.0 / (ur * vr)));
        if (!out.drift.has_limit(i, -1) || !out.drift.has_limit(i, +1)) {
            // second derivative limits via the segment evaluators just off the point
            const double h = 1e-6 * std::max(1.0, std::fabs(obreaks[i]));
            out.drift.set_limits(i, out.drift(obreaks[i] - h), out.drift(obreaks[i] + h));
        }
    }

    for (double x : ss.jump_set) {
        const auto it = std::lower_bound(obreaks.begin(), obreaks.end(), x);
        const std::size_t bi = static_cast<std::size_t>(it - obreaks.begin());
        const double ul = u->one_sided_derivative(bi, -1);
        const double ur = u->one_sided_derivative(bi, +1);
        if (ul < kDerivFloor || ur < kDerivFloor)
            fail(errc::spec_violation,
                 "one-sided u' below 1e-12 at x=" + std::to_string(x) +
                     "; p_+/p_- would be ill-conditioned");
        double jump = v->limit(bi, +1) - v->limit(bi, -1);
        if (jump < 0.0) {
            if (jump < -kJumpTol)
                fail(errc::spec_violation, "v(x+) < v(x-) at x=" + std::to_string(x));
            jump = 0.0;
        }
        StickyPointSpec p;
        p.location = x;
        p.p_plus = ul / (ur + ul);
        p.p_minus = ur / (ur + ul);
        p.alpha = jump * ur * ul / (ur + ul);
        out.sticky_points.push_back(p);
    }
    std::sort(out.sticky_points.begin(), out.sticky_points.end(),
              [](const auto& a, const auto& b) { return a.location < b.location; });

    // best-effort ellipticity constant from the monotonicity probes
    double s2min = std::numeric_limits<double>::infinity();
    for (std::size_t seg = 0; seg < nseg; ++seg)
        for (double x : segment_probes(breaks, seg, 16)) {
            const double s = out.vol(x);
            s2min = std::min(s2min, s * s);
        }
    out.ellipticity = std::isfinite(s2min) ? std::min(1.0, 0.5 * s2min) : 1e-8;
    if (!(out.ellipticity > 0.0)) out.ellipticity = 1e-12;
    return out;
}

ProcessSpec tube_compile(const TubeSpec& ts) {
    if (ts.v1.empty()) fail(errc::invalid_argument, "V1 must be supplied");
    if (!(ts.beta >= 0.0) || !(ts.mu >= 0.0))
        fail(errc::spec_violation, "beta and mu must be nonnegative");
    const double gamma = ts.v1(0.0);
    if (!(gamma > 0.0)) fail(errc::spec_violation, "invalid tube: V1(0) <= 0");

    for (double x : make_probe_grid(-10.0, 10.0, 201))
        if (!(ts.v1(x) > 0.0))
            fail(errc::spec_violation, "invalid tube: V1 <= 0 at x=" + std::to_string(x));

    auto v1 = std::make_shared<PiecewiseFn>(ts.v1.with_breakpoints(std::array<double, 1>{0.0}));
    const auto breaks = v1->breakpoints();
    const std::size_t nseg = v1->segment_count();
    const auto zero_it = std::lower_bound(breaks.begin(), breaks.end(), 0.0);
    const std::size_t zero_bi = static_cast<std::size_t>(zero_it - breaks.begin());
    const double beta = ts.beta;

    ProcessSpec out;
    std::vector<double> obreaks(breaks.begin(), breaks.end());

    bool all_expr = true;
    for (std::size_t i = 0; i < nseg; ++i)
        if (!v1->segment_expression(i)) all_expr = false;

    if (all_expr) {
        std::vector<Expression> bexprs;
        for (std::size_t seg = 0; seg < nseg; ++seg) {
            const Expression* e = v1->segment_expression(seg);
            Expression de = e->derivative();
            // segment fully right of 0 gets the beta-shifted branch
            const bool right_of_zero = seg > zero_bi;
            Expression denom = right_of_zero ? (*e + Expression::number(beta)) : *e;
            bexprs.push_back((de / (Expression::number(2.0) * denom)).simplified());
        }
        out.drift = PiecewiseFn::from_expression(Expression::piecewise(obreaks, bexprs));
    } else {
        std::vector<PiecewiseFn::Fn> bsegs;
        for (std::size_t seg = 0; seg < nseg; ++seg) {
            const bool right_of_zero = seg > zero_bi;
            bsegs.push_back([v1, beta, right_of_zero](double x) {
                const double denom = right_of_zero ? (*v1)(x) + beta : (*v1)(x);
                return v1->derivative(x) / (2.0 * denom);
            });
        }
        out.drift = PiecewiseFn::from_callables(obreaks, std::move(bsegs));
    }
    // one-sided drift limits at 0 follow the chi_{x<=0} / chi_{x>0} split
    const double d0l = v1->one_sided_derivative(zero_bi, -1);
    const double d0r = v1->one_sided_derivative(zero_bi, +1);
    out.drift.set_limits(zero_bi, d0l / (2.0 * gamma), d0r / (2.0 * (gamma + beta)));

    out.vol = PiecewiseFn::constant(1.0).with_breakpoints(obreaks);
    const double denom = 2.0 * gamma + beta;
    out.sticky_points.push_back({0.0, (gamma + beta) / denom, gamma / denom, 2.0 * ts.mu / denom});
    out.ellipticity = 1.0;
    return out;
}

// ---- JSON ---------------------------------------------------------------

namespace {

nlohmann::ordered_json piecewise_to_json(const PiecewiseFn& f) {
    if (!f.analytic())
        fail(errc::invalid_argument, "cannot serialize a callable-backed coefficient");
    nlohmann::ordered_json j;
    j["breakpoints"] = std::vector<double>(f.breakpoints().begin(), f.breakpoints().end());
    std::vector<std::string> segs;
    for (std::size_t i = 0; i < f.segment_count(); ++i)
        segs.push_back(f.segment_expression(i)->str());
    j["segments"] = segs;
    nlohmann::ordered_json lims = nlohmann::ordered_json::array();
    for (std::size_t i = 0; i < f.breakpoints().size(); ++i)
        lims.push_back({f.limit(i, -1), f.limit(i, +1)});
    j["limits"] = lims;
    return j;
}

PiecewiseFn piecewise_from_json(const nlohmann::json& j) {
    const auto breaks = j.at("breakpoints").get<std::vector<double>>();
    const auto segs = j.at("segments").get<std::vector<std::string>>();
    if (segs.size() != breaks.size() + 1)
        fail(errc::invalid_argument, "piecewise json: need one more segment than breakpoints");
    std::vector<Expression> pieces;
    for (const auto& s : segs) pieces.push_back(Expression::parse(s));
    PiecewiseFn f = breaks.empty()
                        ? PiecewiseFn::from_expression(pieces[0])
                        : PiecewiseFn::from_expression(Expression::piecewise(breaks, std::move(pieces)));
    if (j.contains("limits")) {
        const auto& lims = j.at("limits");
        for (std::size_t i = 0; i < breaks.size() && i < lims.size(); ++i)
            f.set_limits(i, lims[i][0].get<double>(), lims[i][1].get<double>());
    }
    return f;
}

} // namespace

std::string process_spec_to_json(const ProcessSpec& spec) {
    nlohmann::ordered_json j;
    j["drift"] = piecewise_to_json(spec.drift);
    j["vol"] = piecewise_to_json(spec.vol);
    nlohmann::ordered_json pts = nlohmann::ordered_json::array();
    for (const auto& p : spec.sticky_points) {
        nlohmann::ordered_json pj;
        pj["x"] = p.location;
        pj["p_plus"] = p.p_plus;
        pj["p_minus"] = p.p_minus;
        pj["alpha"] = p.alpha;
        pts.push_back(pj);
    }
    j["sticky_points"] = pts;
    j["ellipticity"] = spec.ellipticity;
    return j.dump(2) + "\n";
}

ProcessSpec process_spec_from_json(std::string_view text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        fail(errc::invalid_argument, std::string("spec json parse error: ") + e.what());
    }
    try {
        ProcessSpec spec;
        spec.drift = piecewise_from_json(j.at("drift"));
        spec.vol = piecewise_from_json(j.at("vol"));
        for (const auto& pj : j.at("sticky_points")) {
            StickyPointSpec p;
            p.location = pj.at("x").get<double>();
            p.p_plus = pj.at("p_plus").get<double>();
            p.p_minus = pj.at("p_minus").get<double>();
            p.alpha = pj.at("alpha").get<double>();
            spec.sticky_points.push_back(p);
        }
        spec.ellipticity = j.value("ellipticity", 1e-8);
        return spec.normalized();
    } catch (const nlohmann::json::exception& e) {
        fail(errc::invalid_argument, std::string("spec json: ") + e.what());
    }
}

} // namespace stickysim
