#include "fracqubit/model.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "fracqubit/error.hpp"
#include "fracqubit/specfun.hpp"

namespace fracqubit {

namespace {

constexpr cplx kI{0.0, 1.0};
const cplx kEighth = std::polar(1.0, std::numbers::pi / 4);        // e^{i pi/4}
const cplx kThreeEighths = std::polar(1.0, 3 * std::numbers::pi / 4);

void require_finite(double v, const char* name) {
    if (!std::isfinite(v)) throw Error(ErrorCode::non_finite_input, std::string(name) + " is not finite");
}

cplx frac_exp_value(double order, cplx rate, double t) {
    return specfun::frac_exp({order, rate, t}).value;
}

// p(Y, T) = Y^2 E_T(1/2, Y^2) + Y e^{Y^2 T} and its T derivative. Each
// distinct-root term of the amplitude is built from this pair.
struct RootTerm {
    cplx p;
    cplx dp;
};

RootTerm root_term(cplx y, double T) {
    const cplx a = y * y;
    if (a.real() * T > 1.0) {
        // The two pieces grow like e^{Re(a) T} and cancel when Re(Y) < 0;
        // combine them analytically as Y w(-i Y sqrt(T)).
        const cplx p = y * specfun::faddeeva(-kI * y * std::sqrt(T));
        return {p, a * p + a / std::sqrt(std::numbers::pi * T)};
    }
    const cplx growth = std::exp(a * T);
    const cplx e_half = frac_exp_value(0.5, a, T);
    const cplx e_minus = specfun::frac_exp_derivative({0.5, a, T}, 1.0).value;
    return {a * e_half + y * growth, a * e_minus + a * y * growth};
}

AmplitudePoint distinct_point(const IndicialRoots& r, double T) {
    const RootTerm t1 = root_term(r.y1, T);
    const RootTerm t2 = root_term(r.y2, T);
    const cplx gap = r.y1 - r.y2;
    return {(t1.p - t2.p) / gap, (t1.dp - t2.dp) / gap};
}

AmplitudePoint degenerate_point(double b, double T) {
    const cplx a = kI * b * b;
    const cplx e_half = frac_exp_value(0.5, a, T);
    const cplx e_minus = specfun::frac_exp_derivative({0.5, a, T}, 1.0).value;
    const cplx growth = std::exp(a * T);
    const double b3 = b * b * b;
    const double sqrt_pi_t = std::sqrt(std::numbers::pi * T);

    const cplx U = -2.0 * b3 * kThreeEighths * T * e_half - b * kEighth * e_half + (1.0 + 2.0 * a * T) * growth -
                   2.0 * b * kEighth * T / sqrt_pi_t;
    const cplx dU = -2.0 * b3 * kThreeEighths * (e_half + T * e_minus) - b * kEighth * e_minus +
                    a * (3.0 + 2.0 * a * T) * growth - b * kEighth / sqrt_pi_t;
    return {U, dU};
}

AmplitudeTrajectory build(const ReducedParams& rp, const TimeGrid& grid, Formula formula) {
    AmplitudeTrajectory traj{grid, {}, {}, {}, {}, rp, SolverTag::closed_form};
    const std::size_t n = grid.size();
    traj.U.resize(n);
    traj.u.resize(n);
    traj.dU.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const AmplitudePoint pt = closed_form_point(rp, grid[i], formula);
        traj.U[i] = pt.U;
        traj.dU[i] = pt.dU;
        traj.u[i] = std::polar(1.0, rp.delta * grid[i]) * pt.U;
    }
    return traj;
}

}  // namespace

double SystemParams::b() const { return std::sqrt(beta) / std::pow(f, 1.5); }

void validate(const SystemParams& p) {
    require_finite(p.beta, "beta");
    require_finite(p.delta, "delta");
    require_finite(p.f, "f");
    require_finite(p.theta0, "theta0");
    require_finite(p.phi0, "phi0");
    if (p.beta <= 0.0) throw Error(ErrorCode::invalid_argument, "beta must be positive");
    if (p.f <= 0.0) throw Error(ErrorCode::invalid_argument, "f must be positive");
    if (p.theta0 < 0.0 || p.theta0 > std::numbers::pi)
        throw Error(ErrorCode::invalid_argument, "theta0 must lie in [0, pi]");
}

void validate(const ReducedParams& p) {
    require_finite(p.b, "coupling");
    require_finite(p.delta, "detuning");
    if (p.b < 0.0) throw Error(ErrorCode::invalid_argument, "coupling must be nonnegative");
}

ReducedParams reduce(const SystemParams& p) {
    validate(p);
    return {std::pow(p.f, -1.5), p.delta / p.beta};
}

IndicialRoots indicial_roots(const ReducedParams& p) {
    validate(p);
    const cplx disc = std::sqrt(cplx(p.b * p.b - p.delta));
    IndicialRoots r;
    r.y1 = kEighth * (-p.b + disc);
    r.y2 = kEighth * (-p.b - disc);
    r.kind = std::abs(p.b * p.b - p.delta) <= kDegeneracyTolerance ? RootKind::degenerate : RootKind::distinct;
    return r;
}

IndicialRoots indicial_roots(const SystemParams& p) {
    IndicialRoots r = indicial_roots(reduce(p));
    const double scale = std::sqrt(p.beta);
    r.y1 *= scale;
    r.y2 *= scale;
    return r;
}

TimeGrid::TimeGrid(std::vector<double> points) : points_(std::move(points)) {
    if (points_.size() < 2) throw Error(ErrorCode::invalid_argument, "a time grid needs at least two points");
    for (std::size_t i = 0; i < points_.size(); ++i) {
        require_finite(points_[i], "time point");
        if (points_[i] < 0.0) throw Error(ErrorCode::invalid_argument, "time points must be nonnegative");
        if (i > 0 && points_[i] <= points_[i - 1])
            throw Error(ErrorCode::invalid_argument, "time points must be strictly increasing");
    }
}

TimeGrid TimeGrid::uniform(double t_max, std::size_t count) {
    require_finite(t_max, "t_max");
    if (t_max <= 0.0) throw Error(ErrorCode::invalid_argument, "t_max must be positive");
    if (count < 2) throw Error(ErrorCode::invalid_argument, "a time grid needs at least two points");
    std::vector<double> pts(count);
    const double step = t_max / static_cast<double>(count - 1);
    for (std::size_t i = 0; i < count; ++i) pts[i] = static_cast<double>(i) * step;
    pts.back() = t_max;
    return TimeGrid(std::move(pts));
}

const char* to_string(SolverTag tag) noexcept {
    switch (tag) {
        case SolverTag::closed_form: return "closed_form";
        case SolverTag::volterra: return "volterra";
        case SolverTag::laplace_inversion: return "laplace_inversion";
    }
    return "unknown";
}

cplx memory_kernel(const SystemParams& p, double lag) {
    validate(p);
    require_finite(lag, "lag");
    if (lag <= 0.0) throw Error(ErrorCode::non_positive_lag, "memory kernel is defined for lag > 0 only");
    const double magnitude = p.b() / (std::sqrt(std::numbers::pi) * std::pow(lag, 1.5));
    return std::polar(magnitude, p.delta * lag - 0.75 * std::numbers::pi);
}

cplx memory_kernel_from_dos(const SystemParams& p, double lag) {
    validate(p);
    require_finite(lag, "lag");
    if (lag <= 0.0) throw Error(ErrorCode::non_positive_lag, "memory kernel is defined for lag > 0 only");
    // x = -i s / lag turns the oscillatory integral into
    // e^{-i 3pi/4} lag^{-3/2} \int_0^inf sqrt(s) e^{-s} ds. With s = v^2 the
    // integrand 2 v^2 e^{-v^2} is smooth and the trapezoid rule converges
    // geometrically.
    constexpr int kNodes = 600;
    constexpr double kUpper = 9.0;
    const double h = kUpper / kNodes;
    double integral = 0.0;
    for (int i = 1; i < kNodes; ++i) {
        const double v = i * h;
        integral += 2.0 * v * v * std::exp(-v * v);
    }
    integral *= h;
    const cplx rotation = std::polar(std::pow(lag, -1.5), -0.75 * std::numbers::pi);
    return 2.0 * p.b() / std::numbers::pi * rotation * integral * std::polar(1.0, p.delta * lag);
}

double dos(const SystemParams&, double omega_minus_omega_c, double curvature) {
    require_finite(omega_minus_omega_c, "frequency offset");
    require_finite(curvature, "curvature");
    if (curvature <= 0.0) throw Error(ErrorCode::invalid_argument, "curvature must be positive");
    if (omega_minus_omega_c <= 0.0) return 0.0;
    return std::sqrt(omega_minus_omega_c / (curvature * curvature * curvature)) /
           (4.0 * std::numbers::pi * std::numbers::pi);
}

AmplitudePoint closed_form_point(const ReducedParams& p, double T, Formula formula) {
    const IndicialRoots roots = indicial_roots(p);
    if (formula == Formula::distinct && roots.kind == RootKind::degenerate)
        throw Error(ErrorCode::degeneracy_mismatch, "roots are degenerate; the distinct-root form does not apply");
    if (formula == Formula::degenerate && roots.kind == RootKind::distinct)
        throw Error(ErrorCode::degeneracy_mismatch, "roots are distinct; the degenerate form does not apply");
    require_finite(T, "time");
    if (T < 0.0) throw Error(ErrorCode::invalid_argument, "time must be nonnegative");
    if (T == 0.0) return {cplx(1.0), cplx(std::numeric_limits<double>::quiet_NaN(), 0.0)};
    if (p.b == 0.0) return {std::polar(1.0, -p.delta * T), -kI * p.delta * std::polar(1.0, -p.delta * T)};
    return roots.kind == RootKind::degenerate ? degenerate_point(p.b, T) : distinct_point(roots, T);
}

AmplitudeTrajectory closed_form_amplitude(const ReducedParams& p, const TimeGrid& grid, Formula formula) {
    AmplitudeTrajectory traj = build(p, grid, formula);
    traj.params.delta = p.delta;
    if (p.b > 0.0) traj.params.f = std::pow(p.b, -2.0 / 3.0);
    return traj;
}

AmplitudeTrajectory closed_form_amplitude(const SystemParams& p, const TimeGrid& grid, Formula formula) {
    AmplitudeTrajectory traj = build(reduce(p), grid, formula);
    traj.params = p;
    return traj;
}

std::optional<double> steady_state_probability(const ReducedParams& p) {
    validate(p);
    if (p.delta >= 0.0) return std::nullopt;
    const double residue = 1.0 - p.b / std::sqrt(p.b * p.b - p.delta);
    return residue * residue;
}

std::optional<double> steady_state_probability(const SystemParams& p) { return steady_state_probability(reduce(p)); }

}  // namespace fracqubit
