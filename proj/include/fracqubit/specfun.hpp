#pragma once

// Fractional exponential function and the incomplete gamma machinery behind it.
//
//   E_t(alpha, a) = t^alpha * sum_{n>=0} (a t)^n / Gamma(alpha + n + 1)
//
// is the Riemann-Liouville integral of order alpha of exp(a t). Writing
// z = a t, the sum S(alpha, z) = sum z^n / Gamma(alpha + n + 1) is entire in z
// and equals exp(z) * gamma*(alpha, z) (Tricomi's entire incomplete gamma).
// Two evaluation paths are provided:
//
//   series            direct summation of S in extended precision, |z| small;
//   incomplete_gamma  S = z^-alpha (exp(z) - exp(z) Q(alpha, z)), with Q the
//                     regularized upper incomplete gamma function. Q reduces to
//                     the Faddeeva function for half-integer alpha and to a
//                     finite sum for integer alpha; other orders use the
//                     Legendre continued fraction.
//
// All functions are pure and thread-safe.

#include <complex>

namespace fracqubit::specfun {

using cplx = std::complex<double>;

enum class EvalPath { series, incomplete_gamma, trivial };

const char* to_string(EvalPath path) noexcept;

struct FracExpQuery {
    double order = 0.0;  // alpha
    cplx rate{};         // a, units of 1/time
    double time = 0.0;   // t >= 0
};

struct EvalResult {
    cplx value{};
    double est_abs_error = 0.0;  // heuristic bound on the truncation/rounding error
    EvalPath path = EvalPath::trivial;
};

/// |a t| at or below this radius is summed as a power series.
inline constexpr double kSeriesRadius = 12.0;
/// Series summation cap; past it the other path is tried.
inline constexpr int kMaxSeriesTerms = 400;
/// PrecisionLoss is raised when est_abs_error > tolerance * max(1, |value|).
inline constexpr double kDefaultTolerance = 1e-8;

/// Reciprocal gamma function; zero at the poles 0, -1, -2, ...
double rgamma(double x) noexcept;

/// Faddeeva function w(z) = exp(-z^2) erfc(-i z) for any complex z.
cplx faddeeva(cplx z) noexcept;

EvalResult frac_exp(const FracExpQuery& q, double tolerance = kDefaultTolerance);

/// Forces one evaluation path, bypassing the radius dispatch. Used to check
/// that the paths agree; throws PrecisionLoss if the forced path cannot reach
/// the tolerance.
EvalResult frac_exp_via(const FracExpQuery& q, EvalPath path,
                        double tolerance = kDefaultTolerance);

/// d^mu/dt^mu E_t(alpha, a) = E_t(alpha - mu, a).
EvalResult frac_exp_derivative(const FracExpQuery& q, double mu,
                               double tolerance = kDefaultTolerance);

/// Regularized lower incomplete gamma P(alpha, z) continued to complex z
/// (principal branch of z^alpha). alpha must be positive, or a negative
/// non-integer with z != 0.
EvalResult reg_lower_gamma(double alpha, cplx z, double tolerance = kDefaultTolerance);

}  // namespace fracqubit::specfun
