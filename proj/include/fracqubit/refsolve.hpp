#pragma once

// Reference solvers for the amplitude equation, independent of the
// closed-form special-function route.
//
// Volterra form. The fractional Langevin equation
//
//   D^{1/2} U + i d I^{1/2} U + kappa U = T^{-1/2} / sqrt(pi)
//
// (D, I Riemann-Liouville) is integrated with I^{1/2}. For bounded U,
// I^{1/2} D^{1/2} U = U, I^{1/2} I^{1/2} = I^1 and I^{1/2} T^{-1/2}/sqrt(pi)
// = 1, leaving a weakly singular equation of the second kind in the
// dimensionless time T = beta t:
//
//   U(T) + i d \int_0^T U + kappa I^{1/2}[U](T) = 1,
//   kappa = 2 bh e^{i pi/4},
//
// whose Laplace transform is 1 / (s + i d + kappa s^{1/2}). It is solved by
// product integration: U is interpolated piecewise (constant or linear) and
// the (T - tau)^{-1/2} weight is integrated exactly against each basis
// function. Correction weights on the first nodes make the rules exact for
// T^{1/2} and T^{3/2} as well, which restores the nominal order in spite of
// the sqrt(T) behaviour of U at the origin.
//
// Bromwich form. The Laplace image is inverted by the trapezoid rule on the
// vertical line Re s = c after subtracting the leading terms of its
// expansion in s^{-1/2}; those terms invert to powers of T exactly.

#include <cstddef>
#include <optional>
#include <vector>

#include "fracqubit/model.hpp"

namespace fracqubit {

enum class ProductRule { product_rectangle, product_trapezoid };

const char* to_string(ProductRule rule) noexcept;

struct VolterraConfig {
    double step = 1.0 / 2048.0;  // Delta(beta t)
    ProductRule scheme = ProductRule::product_trapezoid;
    double t_max = 10.0;
    /// Re-solve at twice the step and raise StepTooCoarse when the two
    /// solutions differ by more than kStepChangeLimit.
    bool halving_check = true;
};

inline constexpr double kStepChangeLimit = 1e-2;

/// U on the uniform grid n * step, n = 0..ceil(t_max / step). dU is the
/// second-order finite difference of U (NaN at the origin).
AmplitudeTrajectory volterra_solve(const SystemParams& p, const VolterraConfig& cfg);
AmplitudeTrajectory volterra_solve(const ReducedParams& p, const VolterraConfig& cfg);

/// Coefficients c_0..c_order of U(T) = sum_k c_k T^{k/2} + O(T^{(order+1)/2}),
/// obtained by Picard iteration of the Volterra form. order is 1, 2 or 3.
std::vector<cplx> small_time_expansion(const SystemParams& p, int order);
std::vector<cplx> small_time_expansion(const ReducedParams& p, int order);

struct BromwichConfig {
    /// Abscissa c of the contour; defaults to 1 / t_max of the grid.
    std::optional<double> contour_abscissa;
    /// Nodes on the line, split evenly about the real axis.
    std::size_t n_nodes = std::size_t{1} << 20;
    /// Node spacing is 2 pi / (period_scale * t_max); the aliasing images sit
    /// period_scale * t_max away.
    double period_scale = 30.0;
    /// SlowConvergence when the estimated truncation tail exceeds this.
    double tail_tolerance = 1e-6;
};

inline constexpr double kContourFloor = 1e-8;

/// Bromwich inversion on the grid (beta t units). Intended for T >= 0.1.
AmplitudeTrajectory laplace_invert(const SystemParams& p, const TimeGrid& grid, const BromwichConfig& cfg = {});
AmplitudeTrajectory laplace_invert(const ReducedParams& p, const TimeGrid& grid, const BromwichConfig& cfg = {});

/// Newton iteration for a zero of s + i d + kappa sqrt(s) (principal branch)
/// in the s plane. Throws NonConvergence.
cplx find_pole(const ReducedParams& p, cplx guess);

/// Newton iteration for a zero of y^2 + kappa y + i d, y = sqrt(s).
cplx find_root_sqrt_plane(const ReducedParams& p, cplx guess);

}  // namespace fracqubit
