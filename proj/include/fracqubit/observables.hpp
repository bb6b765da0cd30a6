#pragma once

// Reduced density matrix of the qubit and the quantities read off it.
//
//   rho11 = |u|^2 cos^2(theta0/2)          rho10 = (1/2) conj(u) e^{-i phi0} sin(theta0)
//   rho01 = conj(rho10)                    rho00 = 1 - rho11
//
// u = e^{i d T} U is the excited-state amplitude; the ground-state amplitude is
// constant. Rates are in units of beta and use the trajectory's dU/d(beta t).

#include <array>
#include <cstddef>
#include <optional>
#include <vector>

#include "fracqubit/model.hpp"

namespace fracqubit {

struct QubitDensityMatrix {
    double rho11 = 1.0;
    double rho00 = 0.0;
    cplx rho10{};
    cplx rho01{};
    double time = 0.0;
};

/// Below this |U| (or |Re U|) a rate is reported as ill-conditioned.
inline constexpr double kConditioningFloor = 1e-8;
/// Rates diverge like t^{-1/2}; the series starts here by default.
inline constexpr double kDefaultTMin = 1e-3;

QubitDensityMatrix density_matrix(const AmplitudeTrajectory& traj, std::size_t index);

double excited_probability(const AmplitudeTrajectory& traj, std::size_t index);

/// -d ln rho11 / dt = -2 Re(dU / U). Throws InvalidArgument before t_min and
/// IllConditioned when |U| is below the floor.
double relaxation_rate(const AmplitudeTrajectory& traj, std::size_t index, double t_min = kDefaultTMin);

enum class PolarizationVariant {
    density_matrix,  // (rho10 + rho01) / 2
    real_part,       // Re(u), independent of the initial Bloch angles
};

double polarization(const AmplitudeTrajectory& traj, std::size_t index,
                    PolarizationVariant variant = PolarizationVariant::density_matrix);

/// -(dU + conj dU) / (U + conj U) = -Re(dU) / Re(U). Throws InvalidArgument
/// before t_min and IllConditioned near zeros of Re U.
double decoherence_rate(const AmplitudeTrajectory& traj, std::size_t index, double t_min = kDefaultTMin);

struct Eigenvalues {
    double plus = 1.0;
    double minus = 0.0;
};

/// (1 +- sqrt(1 - 4 det rho)) / 2; throws NonPhysicalEigenvalue outside
/// [-1e-10, 1 + 1e-10] and clamps to [0, 1] otherwise.
Eigenvalues eigenvalues(const QubitDensityMatrix& rho);
/// Same pair written through the amplitude:
/// (1 +- sqrt(1 - 4 cos^4(theta0/2) (|u|^2 - |u|^4))) / 2.
Eigenvalues eigenvalues(cplx u, double theta0);
/// Direct Hermitian eigendecomposition, for cross-checking.
Eigenvalues eigenvalues_decomposed(const QubitDensityMatrix& rho);

enum class LogBase { natural, two };

/// -sum lambda log lambda with 0 log 0 = 0. The closed-form eigenvalues are
/// checked against the eigendecomposition to 1e-10.
double von_neumann_entropy(const QubitDensityMatrix& rho, LogBase base = LogBase::natural);

/// Total photon number cos^2(theta0/2) (1 - |u|^2).
double photon_population(const AmplitudeTrajectory& traj, std::size_t index);

/// (2 Re rho01, 2 Im rho01, rho11 - rho00).
std::array<double, 3> bloch_vector(const QubitDensityMatrix& rho);

struct SeriesOptions {
    double t_min = kDefaultTMin;
    LogBase log_base = LogBase::natural;
};

/// Rates are empty before t_min or where the conditioning floor is hit.
struct ObservableSeries {
    TimeGrid grid;
    std::vector<double> P;
    std::vector<std::optional<double>> gamma_relax;
    std::vector<double> Pz;        // density-matrix variant
    std::vector<double> Pz_paper;  // Re(u)
    std::vector<std::optional<double>> gamma_dec;
    std::vector<std::optional<double>> ratio_dec_relax;
    std::vector<double> S;
    std::vector<double> lambda_plus;
    std::vector<double> lambda_minus;
    std::vector<double> photon_pop;
    std::vector<std::array<double, 3>> bloch;
};

ObservableSeries compute_series(const AmplitudeTrajectory& traj, const SeriesOptions& options = {});

}  // namespace fracqubit
