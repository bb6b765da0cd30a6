#include "fracqubit/refsolve.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "fracqubit/error.hpp"

namespace fracqubit {

namespace {

constexpr cplx kI{0.0, 1.0};
const cplx kEighth = std::polar(1.0, std::numbers::pi / 4);
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Second differences of k^{3/2}: (k+1)^{3/2} - 2k^{3/2} + (k-1)^{3/2}. For
// large k the direct form cancels; expand k^{3/2} [(1+x)^{3/2} + (1-x)^{3/2} - 2]
// in x = 1/k instead.
long double second_difference(long double k) {
    if (k < 64.0L) return std::pow(k + 1.0L, 1.5L) - 2.0L * std::pow(k, 1.5L) + std::pow(k - 1.0L, 1.5L);
    const long double x2 = 1.0L / (k * k);
    long double binom = 1.0L;  // C(3/2, m)
    long double power = 1.0L;
    long double sum = 0.0L;
    for (int m = 1; m <= 24; ++m) {
        binom *= (1.5L - (m - 1)) / m;
        if (m % 2 == 0) {
            power *= x2;
            sum += 2.0L * binom * power;
        }
    }
    return std::pow(k, 1.5L) * sum;
}

// Weight of node 0 in the product-trapezoid half integral at node n:
// (n-1)^{3/2} - (n - 3/2) n^{1/2}.
long double trapezoid_origin_weight(long double n) {
    if (n < 64.0L) return std::pow(n - 1.0L, 1.5L) - (n - 1.5L) * std::sqrt(n);
    // n^{3/2} [(1-x)^{3/2} - 1 + 3x/2], x = 1/n
    const long double x = 1.0L / n;
    long double binom = 1.0L;
    long double power = 1.0L;
    long double sum = 0.0L;
    for (int m = 1; m <= 24; ++m) {
        binom *= (1.5L - (m - 1)) / m;
        power *= -x;
        if (m >= 2) sum += binom * power;
    }
    return std::pow(n, 1.5L) * sum;
}

// Product-integration weights in units where the step is 1. The half
// integral at node n is h^{1/2} sum_j W(n, j) U_j, the ordinary integral is
// h sum_j V(n, j) U_j. W(n, 0) = origin[n], W(n, j) = lag[n - j] for j >= 1.
// Correction weights on nodes 0..m-1 make both rules exact for T^gamma,
// gamma in the exponent list.
struct WeightTable {
    ProductRule rule;
    int m = 0;
    std::vector<double> lag;
    std::vector<double> origin;
    std::vector<std::array<double, 4>> half_corr;
    std::vector<std::array<double, 4>> int_corr;

    double int_weight(std::size_t n, std::size_t j) const {
        if (rule == ProductRule::product_rectangle) return j == 0 ? 0.0 : 1.0;
        return (j == 0 || j == n) ? 0.5 : 1.0;
    }
};

WeightTable build_weights(ProductRule rule, std::size_t N) {
    WeightTable w;
    w.rule = rule;
    const bool trap = rule == ProductRule::product_trapezoid;
    const std::vector<double> gammas = trap ? std::vector<double>{0.0, 0.5, 1.0, 1.5} : std::vector<double>{0.0, 0.5};
    w.m = static_cast<int>(gammas.size());

    std::vector<long double> lag(N + 1), origin(N + 1, 0.0L);
    if (trap) {
        const long double scale = 1.0L / std::tgamma(2.5L);
        lag[0] = scale;
        for (std::size_t k = 1; k <= N; ++k) lag[k] = scale * second_difference(static_cast<long double>(k));
        for (std::size_t n = 1; n <= N; ++n) origin[n] = scale * trapezoid_origin_weight(static_cast<long double>(n));
    } else {
        const long double scale = 1.0L / std::tgamma(1.5L);
        for (std::size_t k = 0; k <= N; ++k) {
            const long double kk = static_cast<long double>(k);
            lag[k] = scale / (std::sqrt(kk + 1.0L) + std::sqrt(kk));
        }
    }
    w.lag.assign(lag.begin(), lag.end());
    w.origin.assign(origin.begin(), origin.end());

    Eigen::MatrixXd V(w.m, w.m);
    for (int q = 0; q < w.m; ++q)
        for (int j = 0; j < w.m; ++j) V(q, j) = (gammas[q] == 0.0) ? 1.0 : std::pow(double(j), gammas[q]);
    const Eigen::PartialPivLU<Eigen::MatrixXd> lu(V);

    // Sums of the rules applied to j^gamma; only the half-integer exponents
    // leave a residual, integer ones are integrated exactly.
    std::vector<std::vector<long double>> pw;
    for (double g : gammas) {
        std::vector<long double> row(N + 1, 0.0L);
        for (std::size_t j = 1; j <= N; ++j) row[j] = std::pow(static_cast<long double>(j), static_cast<long double>(g));
        pw.push_back(std::move(row));
    }
    std::vector<long double> prefix(w.m, 0.0L);

    w.half_corr.assign(N + 1, {});
    w.int_corr.assign(N + 1, {});
    for (std::size_t n = 1; n <= N; ++n) {
        const long double nn = static_cast<long double>(n);
        Eigen::VectorXd rhs_half = Eigen::VectorXd::Zero(w.m);
        Eigen::VectorXd rhs_int = Eigen::VectorXd::Zero(w.m);
        for (int q = 0; q < w.m; ++q) {
            const long double g = gammas[q];
            prefix[q] += pw[q][n];
            if (std::nearbyint(g) == g) continue;
            long double half = 0.0L;
            for (std::size_t j = 1; j <= n; ++j) half += lag[n - j] * pw[q][j];
            const long double exact_half = std::tgamma(g + 1.0L) / std::tgamma(g + 1.5L) * std::pow(nn, g + 0.5L);
            rhs_half[q] = static_cast<double>(exact_half - half);
            const long double integral = trap ? prefix[q] - 0.5L * pw[q][n] : prefix[q];
            rhs_int[q] = static_cast<double>(std::pow(nn, g + 1.0L) / (g + 1.0L) - integral);
        }
        const Eigen::VectorXd sh = lu.solve(rhs_half);
        const Eigen::VectorXd si = lu.solve(rhs_int);
        for (int j = 0; j < w.m; ++j) {
            w.half_corr[n][j] = sh[j];
            w.int_corr[n][j] = si[j];
        }
    }
    return w;
}

// Solves on nodes 0..N with step h using the first N entries of the table.
std::vector<cplx> march(const ReducedParams& p, const WeightTable& w, std::size_t N, double h) {
    const cplx kappa = 2.0 * p.b * kEighth;
    const cplx a = kI * p.delta * h;        // multiplies the ordinary integral
    const cplx k = kappa * std::sqrt(h);    // multiplies the half integral
    const std::size_t m = static_cast<std::size_t>(w.m);
    const std::size_t start = std::min(N, m - 1);

    std::vector<cplx> U(N + 1);
    U[0] = 1.0;

    // Nodes 1..m-1 are coupled through the correction weights.
    if (start > 0) {
        Eigen::MatrixXcd A = Eigen::MatrixXcd::Zero(start, start);
        Eigen::VectorXcd rhs = Eigen::VectorXcd::Ones(start);
        for (std::size_t n = 1; n <= start; ++n) {
            const std::size_t row = n - 1;
            auto coeff = [&](std::size_t j) {
                cplx c = 0.0;
                if (j <= n) {
                    c += a * w.int_weight(n, j);
                    c += k * (j == 0 ? w.origin[n] : w.lag[n - j]);
                }
                if (j < m) c += a * w.int_corr[n][j] + k * w.half_corr[n][j];
                return c;
            };
            rhs[row] -= coeff(0) * U[0];
            for (std::size_t j = 1; j <= start; ++j) A(row, j - 1) += coeff(j);
            A(row, row) += 1.0;
        }
        const Eigen::VectorXcd sol = A.partialPivLu().solve(rhs);
        for (std::size_t j = 1; j <= start; ++j) U[j] = sol[j - 1];
    }

    const cplx diag_trap = 1.0 + a * w.int_weight(2, 2) + k * w.lag[0];
    cplx running = 0.0;  // sum of U_1..U_{n-1}
    for (std::size_t j = 1; j <= start; ++j) running += U[j];
    for (std::size_t n = start + 1; n <= N; ++n) {
        if (n > start + 1) running += U[n - 1];
        cplx hist = w.origin[n] * U[0];
        const double* lag = w.lag.data();
        double hr = 0.0, hi = 0.0;
        for (std::size_t j = 1; j < n; ++j) {
            hr += lag[n - j] * U[j].real();
            hi += lag[n - j] * U[j].imag();
        }
        hist += cplx(hr, hi);
        cplx integral = w.int_weight(n, 0) * U[0] + running;
        for (std::size_t j = 0; j < m; ++j) {
            hist += w.half_corr[n][j] * U[j];
            integral += w.int_corr[n][j] * U[j];
        }
        const cplx diag = w.rule == ProductRule::product_trapezoid ? diag_trap : 1.0 + a + k * w.lag[0];
        if (std::abs(diag) < 1e-14)
            throw Error(ErrorCode::non_convergence, "implicit Volterra update is singular at step " + std::to_string(n));
        U[n] = (1.0 - a * integral - k * hist) / diag;
        if (!std::isfinite(U[n].real()) || !std::isfinite(U[n].imag()))
            throw Error(ErrorCode::non_convergence, "Volterra solution is not finite at step " + std::to_string(n));
    }
    return U;
}

void validate(const VolterraConfig& cfg) {
    if (!std::isfinite(cfg.step) || !std::isfinite(cfg.t_max))
        throw Error(ErrorCode::non_finite_input, "Volterra step and t_max must be finite");
    if (cfg.step <= 0.0) throw Error(ErrorCode::invalid_argument, "Volterra step must be positive");
    if (cfg.t_max <= 0.0) throw Error(ErrorCode::invalid_argument, "t_max must be positive");
    if (cfg.step > cfg.t_max) throw Error(ErrorCode::invalid_argument, "Volterra step exceeds t_max");
}

std::vector<cplx> expansion_terms(const ReducedParams& p, int count) {
    const cplx kappa = 2.0 * p.b * kEighth;
    std::vector<cplx> d(count + 1);
    d[0] = 1.0;
    if (count >= 1) d[1] = -kappa;
    for (int k = 2; k <= count; ++k) d[k] = -kappa * d[k - 1] - kI * p.delta * d[k - 2];
    return d;
}

}  // namespace

const char* to_string(ProductRule rule) noexcept {
    switch (rule) {
        case ProductRule::product_rectangle: return "product_rectangle";
        case ProductRule::product_trapezoid: return "product_trapezoid";
    }
    return "unknown";
}

AmplitudeTrajectory volterra_solve(const ReducedParams& p, const VolterraConfig& cfg) {
    validate(p);
    validate(cfg);
    const double h = cfg.step;
    const auto N = static_cast<std::size_t>(std::ceil(cfg.t_max / h - 1e-9));
    const WeightTable table = build_weights(cfg.scheme, N);
    std::vector<cplx> U = march(p, table, N, h);

    const std::size_t coarse_n = N / 2;
    if (cfg.halving_check && coarse_n >= static_cast<std::size_t>(table.m)) {
        const std::vector<cplx> coarse = march(p, table, coarse_n, 2.0 * h);
        double change = 0.0;
        for (std::size_t i = 0; i <= coarse_n; ++i) change = std::max(change, std::abs(coarse[i] - U[2 * i]));
        if (change > kStepChangeLimit)
            throw Error(ErrorCode::step_too_coarse, "solution changes by " + std::to_string(change) +
                                                        " when the step " + std::to_string(h) + " is halved");
    }

    std::vector<double> pts(N + 1);
    for (std::size_t n = 0; n <= N; ++n) pts[n] = static_cast<double>(n) * h;

    std::vector<cplx> dU(N + 1);
    dU[0] = cplx(kNaN, 0.0);
    for (std::size_t n = 1; n < N; ++n) dU[n] = (U[n + 1] - U[n - 1]) / (2.0 * h);
    dU[N] = N >= 2 ? (3.0 * U[N] - 4.0 * U[N - 1] + U[N - 2]) / (2.0 * h) : (U[N] - U[N - 1]) / h;

    std::vector<cplx> u(N + 1);
    for (std::size_t n = 0; n <= N; ++n) u[n] = std::polar(1.0, p.delta * pts[n]) * U[n];

    AmplitudeTrajectory traj{TimeGrid(std::move(pts)), std::move(U), std::move(u), std::move(dU), {}, p,
                             SolverTag::volterra};
    traj.params.delta = p.delta;
    if (p.b > 0.0) traj.params.f = std::pow(p.b, -2.0 / 3.0);
    return traj;
}

AmplitudeTrajectory volterra_solve(const SystemParams& p, const VolterraConfig& cfg) {
    AmplitudeTrajectory traj = volterra_solve(reduce(p), cfg);
    traj.params = p;
    return traj;
}

std::vector<cplx> small_time_expansion(const ReducedParams& p, int order) {
    validate(p);
    if (order < 1 || order > 3) throw Error(ErrorCode::invalid_argument, "expansion order must be 1, 2 or 3");
    std::vector<cplx> c = expansion_terms(p, order);
    for (int k = 0; k <= order; ++k) c[k] /= std::tgamma(1.0 + 0.5 * k);
    return c;
}

std::vector<cplx> small_time_expansion(const SystemParams& p, int order) {
    return small_time_expansion(reduce(p), order);
}

AmplitudeTrajectory laplace_invert(const ReducedParams& p, const TimeGrid& grid, const BromwichConfig& cfg) {
    validate(p);
    const double t_max = grid.points().back();
    const double c = cfg.contour_abscissa.value_or(1.0 / t_max);
    if (!std::isfinite(c) || c <= 0.0) throw Error(ErrorCode::invalid_argument, "contour abscissa must be positive");
    if (cfg.n_nodes < 2) throw Error(ErrorCode::invalid_argument, "Bromwich rule needs at least two nodes");
    if (!std::isfinite(cfg.period_scale) || cfg.period_scale <= 0.0)
        throw Error(ErrorCode::invalid_argument, "period_scale must be positive");

    // U = sum_{k<=K} d_k s^{-1-k/2} + R(s), R = s^{-1} x^{K+1} (d_{K+1} - i d d_K x) / D(x),
    // x = s^{-1/2}, D = 1 + kappa x + i d x^2.
    constexpr int K = 3;
    const cplx kappa = 2.0 * p.b * kEighth;
    const std::vector<cplx> d = expansion_terms(p, K + 1);
    const double dy = 2.0 * std::numbers::pi / (cfg.period_scale * t_max);
    const auto half = static_cast<long long>(cfg.n_nodes / 2);

    std::vector<cplx> R(2 * half + 1), sR(2 * half + 1);
    for (long long m = -half; m <= half; ++m) {
        const cplx s(c, static_cast<double>(m) * dy);
        const cplx root = std::sqrt(s);
        const cplx denom = s + kI * p.delta + kappa * root;
        if (std::abs(denom) < kContourFloor)
            throw Error(ErrorCode::contour_too_close, "Laplace denominator vanishes near the contour");
        const cplx x = 1.0 / root;
        const cplx D = 1.0 + kappa * x + kI * p.delta * x * x;
        const cplx x2 = x * x;
        const cplx rem = x2 * x2 * (d[K + 1] - kI * p.delta * d[K] * x) / D;
        R[m + half] = rem / s;
        sR[m + half] = rem;
    }

    // |R| ~ |y|^{-3} beyond the last node; bound the discarded tails.
    const double y_end = static_cast<double>(half) * dy;
    const double tail = std::max(std::abs(R.front()), std::abs(R.back())) * y_end / (2.0 * std::numbers::pi) *
                        std::exp(c * t_max);
    if (tail > cfg.tail_tolerance)
        throw Error(ErrorCode::slow_convergence,
                    "Bromwich truncation tail " + std::to_string(tail) + " exceeds tolerance");

    std::vector<double> gk(K + 1);
    for (int k = 0; k <= K; ++k) gk[k] = std::tgamma(1.0 + 0.5 * k);

    AmplitudeTrajectory traj{grid, {}, {}, {}, {}, p, SolverTag::laplace_inversion};
    traj.U.resize(grid.size());
    traj.u.resize(grid.size());
    traj.dU.resize(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const double t = grid[i];
        if (t == 0.0) {
            traj.U[i] = 1.0;
            traj.dU[i] = cplx(kNaN, 0.0);
            traj.u[i] = 1.0;
            continue;
        }
        const cplx step = std::polar(1.0, dy * t);
        cplx phase;
        cplx sum_u = 0.0, sum_du = 0.0;
        for (long long m = -half; m <= half; ++m) {
            if ((m + half) % 256 == 0) phase = std::polar(1.0, static_cast<double>(m) * dy * t);
            sum_u += phase * R[m + half];
            sum_du += phase * sR[m + half];
            phase *= step;
        }
        const double weight = std::exp(c * t) * dy / (2.0 * std::numbers::pi);
        cplx U = weight * sum_u;
        cplx dU = weight * sum_du;
        const double rt = std::sqrt(t);
        double power = 1.0;
        for (int k = 0; k <= K; ++k) {
            U += d[k] / gk[k] * power;
            if (k >= 1) dU += d[k] / std::tgamma(0.5 * k) * power / t;
            power *= rt;
        }
        traj.U[i] = U;
        traj.dU[i] = dU;
        traj.u[i] = std::polar(1.0, p.delta * t) * U;
    }
    traj.params.delta = p.delta;
    if (p.b > 0.0) traj.params.f = std::pow(p.b, -2.0 / 3.0);
    return traj;
}

AmplitudeTrajectory laplace_invert(const SystemParams& p, const TimeGrid& grid, const BromwichConfig& cfg) {
    AmplitudeTrajectory traj = laplace_invert(reduce(p), grid, cfg);
    traj.params = p;
    return traj;
}

cplx find_pole(const ReducedParams& p, cplx guess) {
    validate(p);
    const cplx kappa = 2.0 * p.b * kEighth;
    cplx s = guess;
    for (int it = 0; it < 200; ++it) {
        const cplx root = std::sqrt(s);
        const cplx g = s + kI * p.delta + kappa * root;
        const cplx dg = 1.0 + kappa / (2.0 * root);
        const cplx delta_s = g / dg;
        s -= delta_s;
        if (std::abs(delta_s) <= 1e-15 * (1.0 + std::abs(s))) return s;
        if (!std::isfinite(s.real()) || !std::isfinite(s.imag())) break;
    }
    throw Error(ErrorCode::non_convergence, "Newton iteration for the Laplace pole did not converge");
}

cplx find_root_sqrt_plane(const ReducedParams& p, cplx guess) {
    validate(p);
    const cplx kappa = 2.0 * p.b * kEighth;
    cplx y = guess;
    for (int it = 0; it < 200; ++it) {
        const cplx g = y * y + kappa * y + kI * p.delta;
        const cplx step = g / (2.0 * y + kappa);
        y -= step;
        if (std::abs(step) <= 1e-15 * (1.0 + std::abs(y))) return y;
        if (!std::isfinite(y.real()) || !std::isfinite(y.imag())) break;
    }
    throw Error(ErrorCode::non_convergence, "Newton iteration for the indicial root did not converge");
}

}  // namespace fracqubit
