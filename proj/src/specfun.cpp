#include "fracqubit/specfun.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <string>

#include "fracqubit/error.hpp"

namespace fracqubit::specfun {

namespace {

using lcplx = std::complex<long double>;

constexpr double kEps = std::numeric_limits<double>::epsilon();
constexpr long double kEpsLong = std::numeric_limits<long double>::epsilon();
constexpr cplx kI{0.0, 1.0};

// Relative accuracy of the rational approximation below, measured against
// an independent Faddeeva implementation over the upper half plane.
constexpr double kFaddeevaRelErr = 3e-14;

bool is_integer(double x) { return std::nearbyint(x) == x; }
bool is_half_integer(double x) { return !is_integer(x) && is_integer(2.0 * x); }
bool is_finite(cplx z) { return std::isfinite(z.real()) && std::isfinite(z.imag()); }

long double rgamma_long(long double x) {
    if (x <= 0 && std::nearbyint(x) == x) return 0.0L;
    return 1.0L / std::tgamma(x);
}

// Weideman's rational series for w(z), Im z >= 0, with N = 40 terms.
struct WeidemanTable {
    static constexpr int kTerms = 40;
    double L = 0.0;
    std::array<double, kTerms> coeff{};  // coeff[k] multiplies Z^k
};

const WeidemanTable& weideman_table() {
    static const WeidemanTable table = [] {
        constexpr int n = WeidemanTable::kTerms;
        constexpr int m = 2 * n;
        constexpr int m2 = 2 * m;
        WeidemanTable t;
        t.L = std::sqrt(n / std::numbers::sqrt2);
        std::array<double, m2> f{};
        for (int i = 1; i < m2; ++i) {
            const double theta = (i - m) * std::numbers::pi / m;
            const double x = t.L * std::tan(0.5 * theta);
            f[i] = std::exp(-x * x) * (t.L * t.L + x * x);
        }
        for (int k = 1; k <= n; ++k) {
            long double acc = 0.0L;
            for (int j = 0; j < m2; ++j) {
                const double shifted = f[(j + m) % m2];
                acc += shifted * std::cos(2.0L * std::numbers::pi_v<long double> * j * k / m2);
            }
            t.coeff[k - 1] = static_cast<double>(acc / m2);
        }
        return t;
    }();
    return table;
}

cplx faddeeva_upper(cplx z) {
    const auto& t = weideman_table();
    const cplx denom = t.L - kI * z;
    const cplx Z = (t.L + kI * z) / denom;
    cplx p = 0.0;
    for (int k = WeidemanTable::kTerms - 1; k >= 0; --k) p = p * Z + t.coeff[k];
    return 2.0 * p / (denom * denom) + std::numbers::inv_sqrtpi / denom;
}

// S(alpha, z) = sum_{n >= 0} z^n / Gamma(alpha + n + 1), summed in long double.
struct SeriesSum {
    cplx value;
    double err;
    bool converged;
};

SeriesSum sum_series(double alpha, cplx z) {
    // Skip leading terms that sit on poles of Gamma (alpha = -1, -2, ...).
    int n0 = 0;
    if (alpha + 1.0 <= 0.0 && is_integer(alpha + 1.0)) n0 = static_cast<int>(-(alpha + 1.0)) + 1;

    const lcplx zl(z.real(), z.imag());
    lcplx term = rgamma_long(static_cast<long double>(alpha) + n0 + 1);
    for (int k = 0; k < n0; ++k) term *= zl;

    lcplx sum = 0.0L;
    long double abs_sum = 0.0L;
    long double running_max = 0.0L;
    int quiet = 0;
    for (int n = n0; n < n0 + kMaxSeriesTerms; ++n) {
        sum += term;
        abs_sum += std::abs(term);
        running_max = std::max(running_max, std::abs(sum));
        const long double mag = std::abs(term);
        term *= zl / (static_cast<long double>(alpha) + n + 1);
        if (mag <= 1e-18L * running_max) {
            if (++quiet == 2) {
                const long double ratio = std::abs(zl) / (alpha + n + 2);
                const long double tail = ratio < 0.5L ? std::abs(term) / (1.0L - ratio) : 2.0L * std::abs(term);
                const long double rounding = 8.0L * kEpsLong * abs_sum;
                const cplx value(static_cast<double>(sum.real()), static_cast<double>(sum.imag()));
                return {value, static_cast<double>(tail + rounding) + kEps * std::abs(value), true};
            }
        } else {
            quiet = 0;
        }
    }
    const cplx value(static_cast<double>(sum.real()), static_cast<double>(sum.imag()));
    return {value, static_cast<double>(std::abs(term)), false};
}

// exp(z) Q(alpha, z) together with the matching branch of z^alpha.
struct UpperScaled {
    cplx scaled_q;  // T = exp(z) Q(alpha, z)
    cplx z_pow;     // z^alpha, same branch as used in T
    double err;     // absolute error estimate of T
};

std::optional<UpperScaled> upper_scaled(double alpha, cplx z) {
    if (is_half_integer(alpha)) {
        const cplx root = std::sqrt(z);
        const cplx base = faddeeva(kI * root);  // exp(z) erfc(sqrt z)
        cplx t = base;
        cplx z_pow = root;
        double magnitude = std::abs(base);
        double a = 0.5;
        if (alpha > a) {
            while (a < alpha) {
                t += z_pow * rgamma(a + 1.0);
                magnitude = std::max(magnitude, std::abs(t));
                z_pow *= z;
                a += 1.0;
            }
        } else {
            while (a > alpha) {
                z_pow /= z;
                t -= z_pow * rgamma(a);
                magnitude = std::max(magnitude, std::abs(t));
                a -= 1.0;
            }
        }
        const double err = kFaddeevaRelErr * std::abs(base) + 4.0 * kEps * magnitude;
        return UpperScaled{t, z_pow, err};
    }

    if (is_integer(alpha)) {
        const int k = static_cast<int>(alpha);
        cplx t = 0.0;
        double magnitude = 0.0;
        cplx term = 1.0;
        for (int j = 0; j < k; ++j) {
            t += term;
            magnitude = std::max(magnitude, std::abs(t));
            term *= z / static_cast<double>(j + 1);
        }
        cplx z_pow = 1.0;
        for (int j = 0; j < std::abs(k); ++j) z_pow *= z;
        if (k < 0) z_pow = 1.0 / z_pow;
        return UpperScaled{t, z_pow, 4.0 * kEps * magnitude};
    }

    // Legendre continued fraction for exp(z) z^-alpha Gamma(alpha, z); it does
    // not converge on the branch cut, so stay clear of the negative real axis.
    if (std::abs(std::arg(z)) > std::numbers::pi - 0.1) return std::nullopt;
    constexpr double tiny = 1e-300;
    cplx b = z + 1.0 - alpha;
    cplx c = 1.0 / tiny;
    cplx d = 1.0 / b;
    cplx h = d;
    bool converged = false;
    for (int i = 1; i <= 2000; ++i) {
        const double an = -i * (i - alpha);
        b += 2.0;
        d = an * d + b;
        if (std::abs(d) < tiny) d = tiny;
        c = b + an / c;
        if (std::abs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const cplx delta = d * c;
        h *= delta;
        if (std::abs(delta - 1.0) < 4.0 * kEps) {
            converged = true;
            break;
        }
    }
    if (!converged || !is_finite(h)) return std::nullopt;
    const cplx z_pow = std::pow(z, alpha);
    const cplx t = z_pow * h * rgamma(alpha);
    return UpperScaled{t, z_pow, 64.0 * kEps * std::abs(t)};
}

struct ScaledSum {
    cplx value;
    double err;
};

std::optional<ScaledSum> sum_via_incomplete_gamma(double alpha, cplx z) {
    const auto upper = upper_scaled(alpha, z);
    if (!upper) return std::nullopt;
    const cplx ez = std::exp(z);
    const cplx value = (ez - upper->scaled_q) / upper->z_pow;
    const double scale = 1.0 / std::abs(upper->z_pow);
    const double err = (upper->err + 2.0 * kEps * std::abs(ez)) * scale + 2.0 * kEps * std::abs(value);
    return ScaledSum{value, err};
}

void check_finite(double v, const char* what) {
    if (!std::isfinite(v)) throw Error(ErrorCode::non_finite_input, std::string(what) + " is not finite");
}

void validate(const FracExpQuery& q) {
    check_finite(q.order, "order");
    check_finite(q.rate.real(), "rate");
    check_finite(q.rate.imag(), "rate");
    check_finite(q.time, "time");
    if (q.time < 0.0) throw Error(ErrorCode::invalid_argument, "time must be nonnegative");
}

EvalResult trivial_value(const FracExpQuery& q) {
    if (q.time == 0.0) {
        if (q.order < 0.0)
            throw Error(ErrorCode::divergent_at_origin,
                        "E_t(alpha, a) diverges at t = 0 for alpha = " + std::to_string(q.order));
        return {q.order == 0.0 ? cplx(1.0) : cplx(0.0), 0.0, EvalPath::trivial};
    }
    const double v = std::pow(q.time, q.order) * rgamma(q.order + 1.0);
    return {cplx(v), kEps * std::abs(v), EvalPath::trivial};
}

EvalResult finish(const FracExpQuery& q, ScaledSum s, EvalPath path, double tolerance) {
    const double scale = std::pow(q.time, q.order);
    // Rounding of z = a t shifts the sum by about eps |z| |S|.
    const double arg_err = kEps * (1.0 + std::abs(q.rate * q.time)) * std::abs(s.value * scale);
    EvalResult r{s.value * scale, s.err * scale + arg_err, path};
    if (!is_finite(r.value))
        throw Error(ErrorCode::precision_loss, "E_t(alpha, a) exceeds the double range");
    if (r.est_abs_error > tolerance * std::max(1.0, std::abs(r.value)))
        throw Error(ErrorCode::precision_loss, "estimated error " + std::to_string(r.est_abs_error) +
                                                   " exceeds tolerance");
    return r;
}

}  // namespace

const char* to_string(EvalPath path) noexcept {
    switch (path) {
        case EvalPath::series: return "series";
        case EvalPath::incomplete_gamma: return "incomplete_gamma";
        case EvalPath::trivial: return "trivial";
    }
    return "unknown";
}

double rgamma(double x) noexcept {
    if (x <= 0.0 && is_integer(x)) return 0.0;
    return 1.0 / std::tgamma(x);
}

cplx faddeeva(cplx z) noexcept {
    if (z.imag() >= 0.0) return faddeeva_upper(z);
    return 2.0 * std::exp(-z * z) - faddeeva_upper(-z);
}

EvalResult frac_exp_via(const FracExpQuery& q, EvalPath path, double tolerance) {
    validate(q);
    const bool degenerate = q.time == 0.0 || q.rate == cplx(0.0);
    if (path == EvalPath::trivial && !degenerate)
        throw Error(ErrorCode::invalid_argument, "trivial path requires a = 0 or t = 0");
    if (degenerate) return trivial_value(q);
    const cplx z = q.rate * q.time;
    if (path == EvalPath::series) {
        const auto s = sum_series(q.order, z);
        if (!s.converged)
            throw Error(ErrorCode::precision_loss, "series did not converge within the term cap");
        return finish(q, {s.value, s.err}, EvalPath::series, tolerance);
    }
    const auto s = sum_via_incomplete_gamma(q.order, z);
    if (!s) throw Error(ErrorCode::precision_loss, "continued fraction did not converge");
    return finish(q, *s, EvalPath::incomplete_gamma, tolerance);
}

EvalResult frac_exp(const FracExpQuery& q, double tolerance) {
    validate(q);
    if (q.time == 0.0 || q.rate == cplx(0.0)) return trivial_value(q);

    const cplx z = q.rate * q.time;
    std::optional<ScaledSum> result;
    EvalPath path = EvalPath::series;
    if (std::abs(z) <= kSeriesRadius) {
        const auto s = sum_series(q.order, z);
        if (s.converged) {
            result = ScaledSum{s.value, s.err};
        } else {
            result = sum_via_incomplete_gamma(q.order, z);
            path = EvalPath::incomplete_gamma;
        }
    } else {
        result = sum_via_incomplete_gamma(q.order, z);
        path = EvalPath::incomplete_gamma;
        if (!result) {
            const auto s = sum_series(q.order, z);
            result = ScaledSum{s.value, s.converged ? s.err : std::numeric_limits<double>::infinity()};
            path = EvalPath::series;
        }
    }
    if (!result) throw Error(ErrorCode::precision_loss, "no evaluation path converged");
    return finish(q, *result, path, tolerance);
}

EvalResult frac_exp_derivative(const FracExpQuery& q, double mu, double tolerance) {
    check_finite(mu, "mu");
    FracExpQuery shifted = q;
    shifted.order = q.order - mu;
    return frac_exp(shifted, tolerance);
}

EvalResult reg_lower_gamma(double alpha, cplx z, double tolerance) {
    check_finite(alpha, "alpha");
    check_finite(z.real(), "z");
    check_finite(z.imag(), "z");
    if (alpha <= 0.0 && is_integer(alpha))
        throw Error(ErrorCode::invalid_argument, "P(alpha, z) needs alpha > 0 or non-integer alpha");
    if (z == cplx(0.0)) {
        if (alpha < 0.0) throw Error(ErrorCode::divergent_at_origin, "P(alpha, 0) diverges for alpha < 0");
        return {0.0, 0.0, EvalPath::trivial};
    }

    EvalResult r;
    bool done = false;
    if (std::abs(z) > kSeriesRadius) {
        if (const auto upper = upper_scaled(alpha, z)) {
            const cplx emz = std::exp(-z);
            r.value = 1.0 - emz * upper->scaled_q;
            r.est_abs_error = std::abs(emz) * upper->err + 2.0 * kEps * std::max(1.0, std::abs(r.value));
            r.path = EvalPath::incomplete_gamma;
            done = true;
        }
    }
    if (!done) {
        const auto s = sum_series(alpha, z);
        const cplx prefactor = std::pow(z, alpha) * std::exp(-z);
        r.value = prefactor * s.value;
        r.est_abs_error = s.converged ? std::abs(prefactor) * s.err + 2.0 * kEps * std::abs(r.value)
                                      : std::numeric_limits<double>::infinity();
        r.path = EvalPath::series;
    }
    if (!is_finite(r.value)) throw Error(ErrorCode::precision_loss, "P(alpha, z) exceeds the double range");
    if (r.est_abs_error > tolerance * std::max(1.0, std::abs(r.value)))
        throw Error(ErrorCode::precision_loss, "estimated error exceeds tolerance");
    return r;
}

}  // namespace fracqubit::specfun
