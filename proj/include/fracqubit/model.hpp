#pragma once

// Physical parameters, the power-law memory kernel, the indicial roots and
// the closed-form excited-state amplitude of a qubit coupled to an
// anisotropic band-edge reservoir.
//
// All solvers work in the dimensionless time T = beta t. With
// b = beta^{1/2} / f^{3/2}, the slowly varying amplitude U obeys
//
//   U(T) + i d \int_0^T U + 2 bh e^{i pi/4} I^{1/2}[U](T) = 1,
//
// where d = delta / beta, bh = f^{-3/2} and I^{1/2} is the Riemann-Liouville
// half integral. Its Laplace image is 1 / (s + i d + 2 bh e^{i pi/4} s^{1/2}).

#include <complex>
#include <cstddef>
#include <optional>
#include <vector>

namespace fracqubit {

using cplx = std::complex<double>;

struct SystemParams {
    double beta = 1.0;    // coupling constant, frequency units
    double delta = 0.0;   // detuning from the band edge, frequency units
    double f = 1.0;       // anisotropy scaling factor
    double theta0 = 0.0;  // initial polar angle on the Bloch sphere
    double phi0 = 0.0;    // initial azimuth

    /// beta^{1/2} / f^{3/2}
    double b() const;
};

/// Throws NonFiniteInput or InvalidArgument when an invariant is violated.
void validate(const SystemParams& p);

/// Dimensionless form of the amplitude equation: coupling bh and detuning d
/// in units where the time variable is beta t. A zero coupling is allowed.
struct ReducedParams {
    double b = 1.0;
    double delta = 0.0;
};

ReducedParams reduce(const SystemParams& p);
void validate(const ReducedParams& p);

enum class RootKind { distinct, degenerate };

struct IndicialRoots {
    cplx y1;
    cplx y2;
    RootKind kind = RootKind::distinct;
};

/// |b^2 - d| at or below this (in units of beta) selects the degenerate form.
inline constexpr double kDegeneracyTolerance = 1e-9;

/// Roots of Y^2 + 2 b e^{i pi/4} Y + i delta = 0 in physical units.
IndicialRoots indicial_roots(const SystemParams& p);
/// Same quadratic with b -> bh, delta -> d.
IndicialRoots indicial_roots(const ReducedParams& p);

class TimeGrid {
public:
    /// Throws InvalidArgument unless the points are nonnegative, strictly
    /// increasing and at least two.
    explicit TimeGrid(std::vector<double> points);

    static TimeGrid uniform(double t_max, std::size_t count);

    const std::vector<double>& points() const noexcept { return points_; }
    std::size_t size() const noexcept { return points_.size(); }
    double operator[](std::size_t i) const { return points_[i]; }

private:
    std::vector<double> points_;
};

enum class SolverTag { closed_form, volterra, laplace_inversion };

const char* to_string(SolverTag tag) noexcept;

/// Amplitudes on a grid in units of beta t. dU is dU/d(beta t); it diverges
/// like t^{-1/2} at the origin and is stored as NaN there.
struct AmplitudeTrajectory {
    TimeGrid grid;
    std::vector<cplx> U;
    std::vector<cplx> u;  // e^{i d T} U
    std::vector<cplx> dU;
    SystemParams params;
    ReducedParams reduced;
    SolverTag solver = SolverTag::closed_form;
};

/// G(lag) = b / (sqrt(pi) lag^{3/2}) exp(-i (3 pi/4 - delta lag)), lag in
/// physical time units. Throws NonPositiveLag for lag <= 0.
cplx memory_kernel(const SystemParams& p, double lag);

/// The same kernel rebuilt from the square-root density of states,
/// (2b/pi) \int_0^inf sqrt(x) exp(-i (x - delta) lag) dx, with the 1/omega
/// factor frozen at the band edge. The integral is evaluated numerically on
/// the rotated contour x = -i s / lag.
cplx memory_kernel_from_dos(const SystemParams& p, double lag);

/// rho(omega) = sqrt((omega - omega_c) / A^3) / (4 pi^2) above the band edge,
/// zero below.
double dos(const SystemParams& p, double omega_minus_omega_c, double curvature);

enum class Formula { automatic, distinct, degenerate };

struct AmplitudePoint {
    cplx U;
    cplx dU;
};

/// Closed-form U and dU/dT at a single dimensionless time T.
AmplitudePoint closed_form_point(const ReducedParams& p, double T, Formula formula = Formula::automatic);

AmplitudeTrajectory closed_form_amplitude(const SystemParams& p, const TimeGrid& grid,
                                          Formula formula = Formula::automatic);
AmplitudeTrajectory closed_form_amplitude(const ReducedParams& p, const TimeGrid& grid,
                                          Formula formula = Formula::automatic);

/// Long-time excited-state probability (1 - b / sqrt(b^2 - delta))^2 carried
/// by the bound-state pole; empty for delta >= 0.
std::optional<double> steady_state_probability(const SystemParams& p);
std::optional<double> steady_state_probability(const ReducedParams& p);

}  // namespace fracqubit
