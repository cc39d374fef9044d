#pragma once

#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "nlsd/delay_profile.hpp"
#include "nlsd/kernel.hpp"
#include "nlsd/simulator.hpp"

namespace nlsd {

/// Sum over the delay grid of alpha(-d) f*(d).
double compute_M1(const DelayProfile &profile) noexcept;

struct FixedPoint {
    std::vector<double> u_bar;
    /// Max-norm of (I - M1 J_D) u_bar - b.
    double residual_norm = 0.0;
};

/// Solves (I - M1 J_D) u = b with b_i = M1 * sum over exterior r of j_{i-r} g_r.
FixedPoint solve_fixed_point(const KernelWeights &kernel, double M1, const ExteriorProfile &exterior);

/// Per-age check M1 * sum_{r in D} j_{i-r} < 1.
std::vector<bool> cond_fixed(const KernelWeights &kernel, double M1);

/// min over ages of 1 - b^2 - M1 * sum_{r in D} j_{i-r}.
double compute_delta(const KernelWeights &kernel, double M1, double b);

struct Conditions {
    double delta = 0.0;
    bool cond_m1_ok = false;
    bool cond_h_ok = false;
    /// Right-hand side of the delay condition; +inf when the drift has no interior mass.
    double h_limit = 0.0;
};

Conditions check_conditions(double delta, double b, double h);
Conditions check_conditions(const KernelWeights &kernel, const DelayProfile &profile, double b, double h);

/// L(h, lambda) = 2 (1 - delta - b^2) e^{lambda h}.
double L_value(double delta, double b, double h, double lambda) noexcept;

struct LambdaStar {
    double lambda = 0.0;
    double L = 0.0;
};

struct LambdaSearch {
    /// Search bracket; defaults to (0, 2(1-b^2)).
    std::optional<double> lo;
    std::optional<double> hi;
    double tolerance = 1e-12;
};

/// Maximizer of lambda - L(h, lambda) over the bracket, or nothing when the
/// maximum is not positive.
std::optional<LambdaStar> find_lambda_star(double delta, double b, double h, const LambdaSearch &search = {});

/// 2 b^2 |u_bar|^2 / (lambda* - L).
double theoretical_bound(std::span<const double> u_bar, double b, double lambda_star, double L);

/// (1/T) * integral over [0, T] of sup_{theta in [-h, 0]} of the ensemble mean
/// of |u(s + theta) - u_bar|^2. Time 0 is the launch instant; the history
/// slices sit at the negative integer times.
double empirical_time_average(const EnsembleForecast &ensemble, std::span<const double> u_bar, int h, double T_end);

struct EquilibriumReport {
    std::vector<double> u_bar;
    double M1 = 0.0;
    double b = 0.0;
    int h = 0;
    double residual_norm = 0.0;
    std::vector<bool> cond_fixed_ok;
    double delta_h = 0.0;
    bool cond_m1_ok = false;
    bool cond_h_ok = false;
    double h_limit = 0.0;
    std::optional<double> lambda_star;
    std::optional<double> L_at_lambda_star;
    std::optional<double> theoretical_bound;
    std::optional<double> empirical_time_average;
    double T_end = 0.0;
};

/// Fixed point, conditions, lambda* and the bound. The empirical average is
/// left for the caller to fill in from an ensemble.
EquilibriumReport analyze_equilibrium(const KernelWeights &kernel, const DelayProfile &profile,
                                      const ExteriorProfile &exterior, double b);

/// `key = value` lines; absent values are written as `absent`.
void write_equilibrium_report(std::ostream &out, const EquilibriumReport &report);
/// `age,u_bar,cond_fixed_ok`
void write_u_bar_csv(std::ostream &out, const EquilibriumReport &report);

} // namespace nlsd
