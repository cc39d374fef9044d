#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "nlsd/delay_profile.hpp"
#include "nlsd/kernel.hpp"
#include "nlsd/life_table.hpp"

namespace nlsd {

enum class NoiseKind { None, Linear, Logistic };

std::string_view to_string(NoiseKind kind) noexcept;
std::optional<NoiseKind> parse_noise_kind(std::string_view text) noexcept;

/// Diffusion coefficient b*sigma(q): b*q for linear noise, b*q*(1-q) for
/// logistic noise, zero for `None`.
struct NoiseSpec {
    NoiseKind kind = NoiseKind::Logistic;
    double intensity_b = 0.1;

    void validate() const;
    bool active() const noexcept { return kind != NoiseKind::None && intensity_b != 0.0; }
    double diffusion(double q) const noexcept;
};

struct SimConfig {
    /// Euler-Maruyama step in years; 1/time_step_tau must be an integer.
    double time_step_tau = 1.0;
    int horizon_years = 15;
    int n_trajectories = 500;
    std::uint64_t base_seed = 20181231;
    double clamp_epsilon = 1e-10;
    /// Worker threads for ensembles; 0 picks the hardware concurrency.
    int threads = 0;
    /// Steps between stored states; 0 stores one state per year.
    int record_every_steps = 0;

    void validate() const;
    int steps_per_year() const;
    int record_interval() const;
    double record_dt() const { return record_interval() * time_step_tau; }
};

/// Discrete-time safeguard bookkeeping. Raw counts refer to values produced by
/// the update before any clamping.
struct ClampCounters {
    std::uint64_t updates = 0;
    std::uint64_t clamp_events = 0;
    std::uint64_t raw_nonpositive = 0;
    std::uint64_t raw_at_or_above_one = 0;

    ClampCounters &operator+=(const ClampCounters &other) noexcept;
};

/// The initial segment: yearly age profiles for launch_year - h .. launch_year.
class History {
public:
    /// `slices` are ordered oldest first; the last one is the launch-year profile.
    History(int launch_year, std::vector<std::vector<double>> slices);
    static History from_table(const LifeTable &table, int launch_year, int max_delay);

    int launch_year() const noexcept { return launch_year_; }
    int max_delay() const noexcept { return static_cast<int>(slices_.size()) - 1; }
    int max_age() const noexcept { return static_cast<int>(slices_.front().size()) - 1; }
    int age_count() const noexcept { return max_age() + 1; }
    /// Profile of year launch_year - d.
    std::span<const double> at_delay(int d) const;

private:
    int launch_year_;
    std::vector<std::vector<double>> slices_;
};

/// Delayed state seen by the drift: delay 0 is the current state, delay d >= 1
/// is the stored yearly profile d years before the current year.
class DelayWindow {
public:
    /// Window over delays 0..max_delay, seeded from the most recent slices.
    DelayWindow(const History &history, int max_delay);
    /// `by_delay[d]` is the profile at delay d.
    explicit DelayWindow(std::vector<std::vector<double>> by_delay);

    int max_delay() const noexcept { return static_cast<int>(ring_.size()) - 1; }
    int age_count() const noexcept { return static_cast<int>(current_.size()); }

    std::span<const double> at(int d) const;
    std::span<const double> current() const noexcept { return current_; }
    void set_current(std::span<const double> state);
    /// Stores the current state as this year's profile and shifts every
    /// stored profile one delay further back.
    void advance_year();

private:
    std::vector<double> current_;
    std::vector<std::vector<double>> ring_; // ring_[(head_ + d) % size] is delay d's stored profile
    std::size_t head_ = 0;
};

/// Exterior rate at (age, delay) for the reference drift.
using DelayedExterior = std::function<double(int age, int delay)>;

/// Delayed nonlocal drift at age x by direct summation: for each delay the
/// kernel convolution of that delay's profile and exterior, weighted by
/// fstar(d) alpha(-d).
double drift(int x, const DelayWindow &window, const DelayProfile &profile, const KernelWeights &kernel,
             const DelayedExterior &exterior);

/// Drift at every age for an exterior given by a boundary rule. Uses the
/// linearity of the convolution: delays are aggregated first, then convolved
/// once, with the piecewise-constant exterior collapsed to two masses per row.
std::vector<double> drift_all(const DelayWindow &window, const DelayProfile &profile,
                              const KernelWeights &kernel, const BoundaryRule &rule);

/// Unclamped semi-implicit Euler-Maruyama update for one age:
/// q/(1+tau) + tau/(1+tau) * drift + b*sigma(q) * dW.
double em_update(double q, double drift_value, const NoiseSpec &noise, double tau, double dw) noexcept;

/// Clamps into (eps, 1-eps) (linear noise: only the lower side), counting events.
double clamp_state(double raw, NoiseKind kind, double eps, ClampCounters &counters) noexcept;

/// One full step for every age: drift, update, NaN guard, clamping.
std::vector<double> em_step(const DelayWindow &window, const DelayProfile &profile, const KernelWeights &kernel,
                            const BoundaryRule &rule, const NoiseSpec &noise, const SimConfig &cfg,
                            std::span<const double> increments, ClampCounters &counters);

struct Trajectory {
    std::uint64_t seed = 0;
    int age_count = 0;
    /// Stored states, one row per record; row k is the state at time (k+1)*record_dt after launch.
    std::vector<double> values;
    ClampCounters counters;

    int record_count() const noexcept {
        return age_count == 0 ? 0 : static_cast<int>(values.size()) / age_count;
    }
    std::span<const double> record(int k) const;
};

Trajectory simulate_trajectory(const History &history, const DelayProfile &profile, const KernelWeights &kernel,
                               const BoundaryRule &rule, const NoiseSpec &noise, const SimConfig &cfg,
                               std::uint64_t seed);

struct EnsembleForecast {
    std::vector<Trajectory> trajectories;
    SimConfig config;
    NoiseSpec noise;
    History history;

    int launch_year() const noexcept { return history.launch_year(); }
    int age_count() const noexcept { return history.age_count(); }
    int record_count() const noexcept { return trajectories.empty() ? 0 : trajectories.front().record_count(); }
    double record_dt() const { return config.record_dt(); }
    /// Record index holding calendar year `year`; throws ShortHorizon when absent.
    int record_for_year(int year) const;
    ClampCounters totals() const noexcept;
};

/// Runs `cfg.n_trajectories` trajectories, trajectory k seeded with
/// derive_seed(cfg.base_seed, k). Results do not depend on `cfg.threads`.
EnsembleForecast simulate_ensemble(const History &history, const DelayProfile &profile,
                                   const KernelWeights &kernel, const BoundaryRule &rule,
                                   const NoiseSpec &noise, const SimConfig &cfg);

/// `trajectory,year,age,q`
void write_ensemble_csv(std::ostream &out, const EnsembleForecast &ensemble);
/// JSON sidecar with configuration, seeds and clamp counters.
void write_ensemble_metadata(std::ostream &out, const EnsembleForecast &ensemble);

} // namespace nlsd
