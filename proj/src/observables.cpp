#include "fracqubit/observables.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "fracqubit/error.hpp"

namespace fracqubit {

namespace {

constexpr double kEigenSlack = 1e-10;

void check_index(const AmplitudeTrajectory& traj, std::size_t index) {
    if (index >= traj.grid.size() || index >= traj.U.size())
        throw Error(ErrorCode::invalid_argument, "grid index " + std::to_string(index) + " out of range");
}

void check_time(const AmplitudeTrajectory& traj, std::size_t index, double t_min) {
    if (traj.grid[index] < t_min)
        throw Error(ErrorCode::invalid_argument, "rates are not evaluated before t_min = " + std::to_string(t_min));
}

Eigenvalues from_determinant(double det) {
    const double disc = 1.0 - 4.0 * det;
    if (disc < -4.0 * kEigenSlack)
        throw Error(ErrorCode::non_physical_eigenvalue, "density matrix determinant exceeds 1/4");
    const double plus = 0.5 * (1.0 + std::sqrt(std::max(disc, 0.0)));
    // det / plus avoids cancellation for nearly pure states.
    const double minus = det / plus;
    if (plus > 1.0 + kEigenSlack || minus < -kEigenSlack)
        throw Error(ErrorCode::non_physical_eigenvalue,
                    "eigenvalue outside [0, 1]: " + std::to_string(plus) + ", " + std::to_string(minus));
    return {std::clamp(plus, 0.0, 1.0), std::clamp(minus, 0.0, 1.0)};
}

double xlogx(double x) { return x > 0.0 ? x * std::log(x) : 0.0; }

}  // namespace

QubitDensityMatrix density_matrix(const AmplitudeTrajectory& traj, std::size_t index) {
    check_index(traj, index);
    const cplx u = traj.u[index];
    const double c = std::cos(0.5 * traj.params.theta0);
    QubitDensityMatrix rho;
    rho.rho11 = std::norm(u) * c * c;
    rho.rho00 = 1.0 - rho.rho11;
    rho.rho10 = 0.5 * std::conj(u) * std::polar(1.0, -traj.params.phi0) * std::sin(traj.params.theta0);
    rho.rho01 = std::conj(rho.rho10);
    rho.time = traj.grid[index];
    return rho;
}

double excited_probability(const AmplitudeTrajectory& traj, std::size_t index) {
    return density_matrix(traj, index).rho11;
}

double relaxation_rate(const AmplitudeTrajectory& traj, std::size_t index, double t_min) {
    check_index(traj, index);
    check_time(traj, index, t_min);
    const cplx U = traj.U[index];
    if (std::abs(U) < kConditioningFloor)
        throw Error(ErrorCode::ill_conditioned, "|U| below the conditioning floor at t = " + std::to_string(traj.grid[index]));
    return -2.0 * (traj.dU[index] / U).real();
}

double polarization(const AmplitudeTrajectory& traj, std::size_t index, PolarizationVariant variant) {
    check_index(traj, index);
    if (variant == PolarizationVariant::real_part) return traj.u[index].real();
    const QubitDensityMatrix rho = density_matrix(traj, index);
    return 0.5 * (rho.rho10 + rho.rho01).real();
}

double decoherence_rate(const AmplitudeTrajectory& traj, std::size_t index, double t_min) {
    check_index(traj, index);
    check_time(traj, index, t_min);
    const double re = traj.U[index].real();
    if (std::abs(re) < kConditioningFloor)
        throw Error(ErrorCode::ill_conditioned, "Re U below the conditioning floor at t = " + std::to_string(traj.grid[index]));
    return -traj.dU[index].real() / re;
}

Eigenvalues eigenvalues(const QubitDensityMatrix& rho) {
    return from_determinant(rho.rho11 * rho.rho00 - std::norm(rho.rho10));
}

Eigenvalues eigenvalues(cplx u, double theta0) {
    const double c2 = std::pow(std::cos(0.5 * theta0), 2);
    const double p = std::norm(u);
    return from_determinant(c2 * c2 * (p - p * p));
}

Eigenvalues eigenvalues_decomposed(const QubitDensityMatrix& rho) {
    Eigen::Matrix2cd m;
    m << rho.rho11, rho.rho10, rho.rho01, rho.rho00;
    const Eigen::SelfAdjointEigenSolver<Eigen::Matrix2cd> solver(m, Eigen::EigenvaluesOnly);
    const auto& ev = solver.eigenvalues();  // ascending
    return {ev[1], ev[0]};
}

double von_neumann_entropy(const QubitDensityMatrix& rho, LogBase base) {
    const Eigenvalues closed = eigenvalues(rho);
    const Eigenvalues direct = eigenvalues_decomposed(rho);
    if (std::abs(closed.plus - direct.plus) > kEigenSlack || std::abs(closed.minus - direct.minus) > kEigenSlack)
        throw Error(ErrorCode::non_physical_eigenvalue, "closed-form and decomposed eigenvalues disagree");
    const double s = -(xlogx(closed.plus) + xlogx(closed.minus));
    return base == LogBase::two ? s / std::numbers::ln2 : s;
}

double photon_population(const AmplitudeTrajectory& traj, std::size_t index) {
    check_index(traj, index);
    const double c = std::cos(0.5 * traj.params.theta0);
    return c * c * (1.0 - std::norm(traj.u[index]));
}

std::array<double, 3> bloch_vector(const QubitDensityMatrix& rho) {
    return {2.0 * rho.rho01.real(), 2.0 * rho.rho01.imag(), rho.rho11 - rho.rho00};
}

ObservableSeries compute_series(const AmplitudeTrajectory& traj, const SeriesOptions& options) {
    const std::size_t n = traj.grid.size();
    ObservableSeries out{traj.grid, {}, {}, {}, {}, {}, {}, {}, {}, {}, {}, {}};
    out.P.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        const QubitDensityMatrix rho = density_matrix(traj, i);
        out.P.push_back(rho.rho11);
        out.Pz.push_back(0.5 * (rho.rho10 + rho.rho01).real());
        out.Pz_paper.push_back(traj.u[i].real());

        std::optional<double> relax, dec;
        if (traj.grid[i] >= options.t_min) {
            if (std::abs(traj.U[i]) >= kConditioningFloor) relax = relaxation_rate(traj, i, options.t_min);
            if (std::abs(traj.U[i].real()) >= kConditioningFloor) dec = decoherence_rate(traj, i, options.t_min);
        }
        out.gamma_relax.push_back(relax);
        out.gamma_dec.push_back(dec);
        out.ratio_dec_relax.push_back(relax && dec && std::abs(*relax) >= kConditioningFloor
                                          ? std::optional<double>(*dec / *relax)
                                          : std::nullopt);

        const Eigenvalues ev = eigenvalues(rho);
        out.lambda_plus.push_back(ev.plus);
        out.lambda_minus.push_back(ev.minus);
        out.S.push_back(von_neumann_entropy(rho, options.log_base));
        out.photon_pop.push_back(photon_population(traj, i));
        out.bloch.push_back(bloch_vector(rho));
    }
    return out;
}

}  // namespace fracqubit
