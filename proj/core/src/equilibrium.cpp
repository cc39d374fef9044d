#include "nlsd/equilibrium.hpp"

#include "nlsd/error.hpp"
#include "nlsd/io.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

namespace nlsd {

double compute_M1(const DelayProfile &profile) noexcept { return profile.alpha_bar; }

std::vector<bool> cond_fixed(const KernelWeights &kernel, double M1) {
    std::vector<bool> ok(static_cast<std::size_t>(kernel.age_count()));
    for (int i = 0; i < kernel.age_count(); ++i) {
        ok[static_cast<std::size_t>(i)] = M1 * kernel.interior_mass(i) < 1.0;
    }
    return ok;
}

FixedPoint solve_fixed_point(const KernelWeights &kernel, double M1, const ExteriorProfile &exterior) {
    const int n = kernel.age_count();
    const auto ok = cond_fixed(kernel, M1);
    for (int i = 0; i < n; ++i) {
        if (!ok[static_cast<std::size_t>(i)]) {
            throw Error(ErrorCode::NotDiagonallyDominant,
                        "M1 * interior kernel mass reaches 1 at age " + std::to_string(i) + " (M1=" +
                            io::format_double(M1) + ")");
        }
    }

    Eigen::MatrixXd A = Eigen::MatrixXd::Identity(n, n);
    Eigen::VectorXd rhs(n);
    const std::vector<double> zeros(static_cast<std::size_t>(n), 0.0);
    for (int i = 0; i < n; ++i) {
        const auto r = kernel.interior_row(i);
        for (int z = 0; z < n; ++z) {
            A(i, z) -= M1 * r[static_cast<std::size_t>(z)];
        }
        // Convolving a zero interior leaves only the exterior contribution.
        rhs(i) = M1 * convolve(kernel, zeros, exterior, i);
    }

    Eigen::PartialPivLU<Eigen::MatrixXd> lu(A);
    if (!(lu.rcond() > 1e-14)) {
        throw Error(ErrorCode::SingularSystem, "fixed-point matrix is singular");
    }
    const Eigen::VectorXd u = lu.solve(rhs);
    if (!u.allFinite()) {
        throw Error(ErrorCode::SingularSystem, "fixed-point solve produced non-finite values");
    }

    FixedPoint fp;
    fp.u_bar.assign(u.data(), u.data() + n);
    fp.residual_norm = (A * u - rhs).lpNorm<Eigen::Infinity>();
    return fp;
}

double compute_delta(const KernelWeights &kernel, double M1, double b) {
    double delta = std::numeric_limits<double>::infinity();
    for (int i = 0; i < kernel.age_count(); ++i) {
        delta = std::min(delta, 1.0 - b * b - M1 * kernel.interior_mass(i));
    }
    return delta;
}

Conditions check_conditions(double delta, double b, double h) {
    if (!(b >= 0.0) || b >= 1.0) {
        throw Error(ErrorCode::HypothesisViolated, "noise intensity b must lie in [0, 1), got " + io::format_double(b));
    }
    Conditions c;
    c.delta = delta;
    c.cond_m1_ok = delta > 0.0;
    const double one_b2 = 1.0 - b * b;
    const double denom = one_b2 - delta;
    if (!c.cond_m1_ok) {
        c.h_limit = -std::numeric_limits<double>::infinity();
        c.cond_h_ok = false;
        return c;
    }
    c.h_limit = denom > 0.0 ? std::log(one_b2 / denom) / (2.0 * one_b2) : std::numeric_limits<double>::infinity();
    c.cond_h_ok = h < c.h_limit;
    return c;
}

Conditions check_conditions(const KernelWeights &kernel, const DelayProfile &profile, double b, double h) {
    if (!(b >= 0.0) || b >= 1.0) {
        throw Error(ErrorCode::HypothesisViolated, "noise intensity b must lie in [0, 1), got " + io::format_double(b));
    }
    return check_conditions(compute_delta(kernel, compute_M1(profile), b), b, h);
}

double L_value(double delta, double b, double h, double lambda) noexcept {
    return 2.0 * (1.0 - delta - b * b) * std::exp(lambda * h);
}

std::optional<LambdaStar> find_lambda_star(double delta, double b, double h, const LambdaSearch &search) {
    const double upper = 2.0 * (1.0 - b * b);
    double lo = search.lo.value_or(0.0);
    double hi = search.hi.value_or(upper);
    if (!(lo < hi)) {
        return std::nullopt;
    }
    auto phi = [&](double lambda) { return lambda - L_value(delta, b, h, lambda); };

    // phi is concave, so golden-section search finds the maximum on [lo, hi].
    const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double c = hi - inv_phi * (hi - lo);
    double d = lo + inv_phi * (hi - lo);
    double fc = phi(c);
    double fd = phi(d);
    while (hi - lo > search.tolerance * std::max(1.0, std::abs(hi))) {
        if (fc < fd) {
            lo = c;
            c = d;
            fc = fd;
            d = lo + inv_phi * (hi - lo);
            fd = phi(d);
        } else {
            hi = d;
            d = c;
            fd = fc;
            c = hi - inv_phi * (hi - lo);
            fc = phi(c);
        }
    }
    const double lambda = 0.5 * (lo + hi);
    const double L = L_value(delta, b, h, lambda);
    if (!(lambda - L > 0.0)) {
        return std::nullopt;
    }
    return LambdaStar{lambda, L};
}

double theoretical_bound(std::span<const double> u_bar, double b, double lambda_star, double L) {
    if (!(lambda_star > L)) {
        throw Error(ErrorCode::BoundUnavailable, "lambda* must exceed L(h, lambda*)");
    }
    double norm2 = 0.0;
    for (double u : u_bar) {
        norm2 += u * u;
    }
    return 2.0 * b * b * norm2 / (lambda_star - L);
}

namespace {

double squared_distance(std::span<const double> u, std::span<const double> u_bar) {
    double s = 0.0;
    for (std::size_t x = 0; x < u.size(); ++x) {
        const double e = u[x] - u_bar[x];
        s += e * e;
    }
    return s;
}

} // namespace

double empirical_time_average(const EnsembleForecast &ensemble, std::span<const double> u_bar, int h, double T_end) {
    if (!(T_end > 0.0) || h < 0) {
        throw Error(ErrorCode::BadConfig, "time average needs T_end > 0 and h >= 0");
    }
    if (static_cast<int>(u_bar.size()) != ensemble.age_count()) {
        throw Error(ErrorCode::BadAge, "u_bar and ensemble disagree on the number of ages");
    }
    const double dt = ensemble.record_dt();
    const double horizon = ensemble.record_count() * dt;
    if (ensemble.trajectories.empty() || horizon + 1e-9 < T_end + h) {
        throw Error(ErrorCode::ShortHorizon, "ensemble covers " + io::format_double(horizon) + " years, need " +
                                                 io::format_double(T_end + h));
    }
    const double steps = T_end / dt;
    if (std::abs(steps - std::round(steps)) > 1e-9 * std::max(1.0, steps)) {
        throw Error(ErrorCode::BadConfig, "T_end must be a multiple of the record spacing");
    }
    if (ensemble.history.max_delay() < h) {
        throw Error(ErrorCode::ShortHistory, "history is shorter than the delay window");
    }

    // Mean squared distance on the time grid: history at -h..0, records after.
    std::vector<double> times;
    std::vector<double> msd;
    for (int d = h; d >= 0; --d) {
        times.push_back(-d);
        msd.push_back(squared_distance(ensemble.history.at_delay(d), u_bar));
    }
    const int needed = static_cast<int>(std::lround(steps));
    const double n = static_cast<double>(ensemble.trajectories.size());
    for (int k = 0; k < ensemble.record_count() && (k + 1) * dt <= T_end + 1e-9; ++k) {
        double sum = 0.0;
        for (const auto &traj : ensemble.trajectories) {
            sum += squared_distance(traj.record(k), u_bar);
        }
        times.push_back((k + 1) * dt);
        msd.push_back(sum / n);
    }

    const double eps = 1e-9 * std::max(1.0, T_end);
    std::vector<double> sup(static_cast<std::size_t>(needed) + 1);
    std::size_t start = 0;
    for (int i = 0; i <= needed; ++i) {
        const double s = i * dt;
        while (times[start] < s - h - eps) {
            ++start;
        }
        double m = 0.0;
        for (std::size_t j = start; j < times.size() && times[j] <= s + eps; ++j) {
            m = std::max(m, msd[j]);
        }
        sup[static_cast<std::size_t>(i)] = m;
    }

    double integral = 0.0;
    for (int i = 0; i < needed; ++i) {
        integral += 0.5 * dt * (sup[static_cast<std::size_t>(i)] + sup[static_cast<std::size_t>(i) + 1]);
    }
    return integral / T_end;
}

EquilibriumReport analyze_equilibrium(const KernelWeights &kernel, const DelayProfile &profile,
                                      const ExteriorProfile &exterior, double b) {
    EquilibriumReport r;
    r.M1 = compute_M1(profile);
    r.b = b;
    r.h = profile.max_delay;
    r.cond_fixed_ok = cond_fixed(kernel, r.M1);
    const auto fp = solve_fixed_point(kernel, r.M1, exterior);
    r.u_bar = fp.u_bar;
    r.residual_norm = fp.residual_norm;

    const auto c = check_conditions(kernel, profile, b, r.h);
    r.delta_h = c.delta;
    r.cond_m1_ok = c.cond_m1_ok;
    r.cond_h_ok = c.cond_h_ok;
    r.h_limit = c.h_limit;
    if (r.cond_m1_ok && r.cond_h_ok) {
        if (const auto ls = find_lambda_star(r.delta_h, b, r.h)) {
            r.lambda_star = ls->lambda;
            r.L_at_lambda_star = ls->L;
            r.theoretical_bound = theoretical_bound(r.u_bar, b, ls->lambda, ls->L);
        }
    }
    return r;
}

namespace {

std::string optional_text(const std::optional<double> &v) { return v ? io::format_double(*v) : "absent"; }

} // namespace

void write_equilibrium_report(std::ostream &out, const EquilibriumReport &r) {
    const bool all_fixed = std::all_of(r.cond_fixed_ok.begin(), r.cond_fixed_ok.end(), [](bool v) { return v; });
    double norm2 = 0.0;
    for (double u : r.u_bar) {
        norm2 += u * u;
    }
    out << "M1 = " << io::format_double(r.M1) << '\n'
        << "b = " << io::format_double(r.b) << '\n'
        << "h = " << r.h << '\n'
        << "residual_norm = " << io::format_double(r.residual_norm) << '\n'
        << "u_bar_norm2 = " << io::format_double(norm2) << '\n'
        << "cond_fixed_ok = " << (all_fixed ? "true" : "false") << '\n'
        << "delta_h = " << io::format_double(r.delta_h) << '\n'
        << "cond_m1_ok = " << (r.cond_m1_ok ? "true" : "false") << '\n'
        << "h_limit = " << io::format_double(r.h_limit) << '\n'
        << "cond_h_ok = " << (r.cond_h_ok ? "true" : "false") << '\n'
        << "lambda_star = " << optional_text(r.lambda_star) << '\n'
        << "L_at_lambda_star = " << optional_text(r.L_at_lambda_star) << '\n'
        << "theoretical_bound = " << optional_text(r.theoretical_bound) << '\n'
        << "empirical_time_average = " << optional_text(r.empirical_time_average) << '\n';
    if (r.empirical_time_average) {
        out << "T_end = " << io::format_double(r.T_end) << '\n';
    }
}

void write_u_bar_csv(std::ostream &out, const EquilibriumReport &r) {
    out << "age,u_bar,cond_fixed_ok\n";
    for (std::size_t x = 0; x < r.u_bar.size(); ++x) {
        out << x << ',' << io::format_double(r.u_bar[x]) << ','
            << (x < r.cond_fixed_ok.size() && r.cond_fixed_ok[x] ? 1 : 0) << '\n';
    }
}

} // namespace nlsd
