#include "nlsd/simulator.hpp"

#include "nlsd/error.hpp"
#include "nlsd/io.hpp"
#include "nlsd/rng.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <ostream>
#include <thread>

namespace nlsd {

std::string_view to_string(NoiseKind kind) noexcept {
    switch (kind) {
    case NoiseKind::None: return "none";
    case NoiseKind::Linear: return "linear";
    case NoiseKind::Logistic: return "logistic";
    }
    return "none";
}

std::optional<NoiseKind> parse_noise_kind(std::string_view text) noexcept {
    if (text == "none") return NoiseKind::None;
    if (text == "linear") return NoiseKind::Linear;
    if (text == "logistic") return NoiseKind::Logistic;
    return std::nullopt;
}

void NoiseSpec::validate() const {
    if (!(intensity_b >= 0.0) || !std::isfinite(intensity_b)) {
        throw Error(ErrorCode::BadConfig, "noise.b must be a nonnegative number");
    }
}

double NoiseSpec::diffusion(double q) const noexcept {
    switch (kind) {
    case NoiseKind::Linear: return intensity_b * q;
    case NoiseKind::Logistic: return intensity_b * q * (1.0 - q);
    case NoiseKind::None: return 0.0;
    }
    return 0.0;
}

void SimConfig::validate() const {
    if (!(time_step_tau > 0.0) || time_step_tau > 1.0) {
        throw Error(ErrorCode::BadConfig, "sim.tau must lie in (0, 1]");
    }
    const double per_year = 1.0 / time_step_tau;
    if (std::abs(per_year - std::round(per_year)) > 1e-9 * per_year) {
        throw Error(ErrorCode::BadConfig, "sim.tau must divide one year into a whole number of steps");
    }
    if (horizon_years < 1) {
        throw Error(ErrorCode::BadConfig, "sim.horizon must be at least 1");
    }
    if (n_trajectories < 1) {
        throw Error(ErrorCode::BadConfig, "sim.n_trajectories must be at least 1");
    }
    if (!(clamp_epsilon > 0.0 && clamp_epsilon < 0.5)) {
        throw Error(ErrorCode::BadConfig, "sim.clamp_epsilon must lie in (0, 0.5)");
    }
    if (threads < 0) {
        throw Error(ErrorCode::BadConfig, "sim.threads must be nonnegative");
    }
    if (record_every_steps < 0) {
        throw Error(ErrorCode::BadConfig, "sim.record_every_steps must be nonnegative");
    }
}

int SimConfig::steps_per_year() const { return static_cast<int>(std::lround(1.0 / time_step_tau)); }

int SimConfig::record_interval() const {
    return record_every_steps == 0 ? steps_per_year() : record_every_steps;
}

ClampCounters &ClampCounters::operator+=(const ClampCounters &other) noexcept {
    updates += other.updates;
    clamp_events += other.clamp_events;
    raw_nonpositive += other.raw_nonpositive;
    raw_at_or_above_one += other.raw_at_or_above_one;
    return *this;
}

History::History(int launch_year, std::vector<std::vector<double>> slices)
    : launch_year_{launch_year}, slices_{std::move(slices)} {
    if (slices_.empty() || slices_.front().empty()) {
        throw Error(ErrorCode::ShortHistory, "history segment is empty");
    }
    for (const auto &s : slices_) {
        if (s.size() != slices_.front().size()) {
            throw Error(ErrorCode::ShortHistory, "history slices have different age counts");
        }
    }
}

History History::from_table(const LifeTable &table, int launch_year, int max_delay) {
    if (max_delay < 0 || launch_year > table.last_year() || launch_year - max_delay < table.first_year()) {
        throw Error(ErrorCode::ShortHistory, "table does not cover years " + std::to_string(launch_year - max_delay) +
                                                 ".." + std::to_string(launch_year));
    }
    std::vector<std::vector<double>> slices;
    for (int year = launch_year - max_delay; year <= launch_year; ++year) {
        const auto col = table.year_column(year);
        slices.emplace_back(col.begin(), col.end());
    }
    return History(launch_year, std::move(slices));
}

std::span<const double> History::at_delay(int d) const {
    if (d < 0 || d > max_delay()) {
        throw Error(ErrorCode::ShortHistory, "history has no slice at delay " + std::to_string(d));
    }
    return slices_[slices_.size() - 1 - static_cast<std::size_t>(d)];
}

DelayWindow::DelayWindow(const History &history, int max_delay) {
    if (max_delay < 0 || history.max_delay() < max_delay) {
        throw Error(ErrorCode::ShortHistory, "history covers " + std::to_string(history.max_delay() + 1) +
                                                 " years but the delay window needs " +
                                                 std::to_string(max_delay + 1));
    }
    for (int d = 0; d <= max_delay; ++d) {
        const auto s = history.at_delay(d);
        ring_.emplace_back(s.begin(), s.end());
    }
    current_ = ring_.front();
}

DelayWindow::DelayWindow(std::vector<std::vector<double>> by_delay) : ring_{std::move(by_delay)} {
    if (ring_.empty() || ring_.front().empty()) {
        throw Error(ErrorCode::ShortHistory, "delay window is empty");
    }
    for (const auto &s : ring_) {
        if (s.size() != ring_.front().size()) {
            throw Error(ErrorCode::ShortHistory, "delay window slices have different age counts");
        }
    }
    current_ = ring_.front();
}

std::span<const double> DelayWindow::at(int d) const {
    if (d == 0) {
        return current_;
    }
    if (d < 0 || d > max_delay()) {
        throw Error(ErrorCode::ShortHistory, "delay " + std::to_string(d) + " outside the window");
    }
    return ring_[(head_ + static_cast<std::size_t>(d)) % ring_.size()];
}

void DelayWindow::set_current(std::span<const double> state) {
    std::copy(state.begin(), state.end(), current_.begin());
}

void DelayWindow::advance_year() {
    head_ = (head_ + ring_.size() - 1) % ring_.size();
    ring_[head_] = current_;
}

namespace {

/// Fast drift for boundary-rule exteriors. Delays 1..h change only once a
/// year, so their aggregate is cached between calls to `refresh_history`.
class AggregatedDrift {
public:
    AggregatedDrift(const KernelWeights &kernel, const DelayProfile &profile, const BoundaryRule &rule)
        : kernel_{kernel}, profile_{profile}, rule_{rule},
          hist_interior_(static_cast<std::size_t>(kernel.age_count())),
          total_(static_cast<std::size_t>(kernel.age_count())) {
        const int ages = kernel.age_count();
        first_.resize(static_cast<std::size_t>(ages));
        last_.resize(static_cast<std::size_t>(ages));
        for (int x = 0; x < ages; ++x) {
            const auto r = kernel.interior_row(x);
            int lo = 0;
            int hi = ages - 1;
            while (lo < ages && r[static_cast<std::size_t>(lo)] == 0.0) ++lo;
            while (hi >= lo && r[static_cast<std::size_t>(hi)] == 0.0) --hi;
            first_[static_cast<std::size_t>(x)] = lo;
            last_[static_cast<std::size_t>(x)] = hi;
        }
        weight_sum_ = 0.0;
        for (int d = 0; d <= profile.max_delay; ++d) {
            weight_sum_ += profile.delay_weight(d);
        }
    }

    void refresh_history(const DelayWindow &window) {
        std::fill(hist_interior_.begin(), hist_interior_.end(), 0.0);
        hist_below_ = 0.0;
        for (int d = 1; d <= profile_.max_delay; ++d) {
            const double w = profile_.delay_weight(d);
            if (w == 0.0) {
                continue;
            }
            const auto s = window.at(d);
            for (std::size_t z = 0; z < s.size(); ++z) {
                hist_interior_[z] += w * s[z];
            }
            hist_below_ += w * rule_.at(-1, s);
        }
    }

    void evaluate(std::span<const double> current, std::span<double> out) {
        const double w0 = profile_.delay_weight(0);
        for (std::size_t z = 0; z < current.size(); ++z) {
            total_[z] = hist_interior_[z] + w0 * current[z];
        }
        const double below = hist_below_ + w0 * rule_.at(-1, current);
        const double above = weight_sum_ * rule_.above_infinity_rate;
        for (int x = 0; x < kernel_.age_count(); ++x) {
            const auto r = kernel_.interior_row(x);
            double sum = 0.0;
            for (int z = first_[static_cast<std::size_t>(x)]; z <= last_[static_cast<std::size_t>(x)]; ++z) {
                sum += r[static_cast<std::size_t>(z)] * total_[static_cast<std::size_t>(z)];
            }
            out[static_cast<std::size_t>(x)] = sum + kernel_.below_mass(x) * below + kernel_.above_mass(x) * above;
        }
    }

private:
    const KernelWeights &kernel_;
    const DelayProfile &profile_;
    const BoundaryRule &rule_;
    std::vector<int> first_;
    std::vector<int> last_;
    std::vector<double> hist_interior_;
    std::vector<double> total_;
    double hist_below_ = 0.0;
    double weight_sum_ = 0.0;
};

void check_shapes(const DelayWindow &window, const DelayProfile &profile, const KernelWeights &kernel) {
    if (window.max_delay() < profile.max_delay) {
        throw Error(ErrorCode::ShortHistory, "delay window covers " + std::to_string(window.max_delay() + 1) +
                                                 " years, profile needs " + std::to_string(profile.max_delay + 1));
    }
    if (window.age_count() != kernel.age_count()) {
        throw Error(ErrorCode::BadAge, "state and kernel disagree on the number of ages");
    }
}

} // namespace

double drift(int x, const DelayWindow &window, const DelayProfile &profile, const KernelWeights &kernel,
             const DelayedExterior &exterior) {
    check_shapes(window, profile, kernel);
    double sum = 0.0;
    for (int d = 0; d <= profile.max_delay; ++d) {
        const double w = profile.delay_weight(d);
        sum += w * convolve(kernel, window.at(d), [&](int z) { return exterior(z, d); }, x);
    }
    return sum;
}

std::vector<double> drift_all(const DelayWindow &window, const DelayProfile &profile, const KernelWeights &kernel,
                              const BoundaryRule &rule) {
    check_shapes(window, profile, kernel);
    AggregatedDrift engine(kernel, profile, rule);
    engine.refresh_history(window);
    std::vector<double> out(static_cast<std::size_t>(kernel.age_count()));
    engine.evaluate(window.current(), out);
    return out;
}

double em_update(double q, double drift_value, const NoiseSpec &noise, double tau, double dw) noexcept {
    return q / (1.0 + tau) + tau / (1.0 + tau) * drift_value + noise.diffusion(q) * dw;
}

double clamp_state(double raw, NoiseKind kind, double eps, ClampCounters &counters) noexcept {
    ++counters.updates;
    if (raw <= 0.0) {
        ++counters.raw_nonpositive;
    } else if (raw >= 1.0) {
        ++counters.raw_at_or_above_one;
    }
    if (raw < eps) {
        ++counters.clamp_events;
        return eps;
    }
    if (kind != NoiseKind::Linear && raw > 1.0 - eps) {
        ++counters.clamp_events;
        return 1.0 - eps;
    }
    return raw;
}

namespace {

void advance_state(std::span<const double> current, std::span<const double> drift_values,
                   std::span<const double> increments, const NoiseSpec &noise, const SimConfig &cfg,
                   std::span<double> next, ClampCounters &counters, long long step) {
    for (std::size_t x = 0; x < current.size(); ++x) {
        const double dw = increments.empty() ? 0.0 : increments[x];
        const double raw = em_update(current[x], drift_values[x], noise, cfg.time_step_tau, dw);
        if (!std::isfinite(raw)) {
            throw Error(ErrorCode::NumericalBlowup, "non-finite state at age " + std::to_string(x) + ", step " +
                                                        std::to_string(step) + " (q=" +
                                                        io::format_double(current[x]) + ")");
        }
        next[x] = clamp_state(raw, noise.kind, cfg.clamp_epsilon, counters);
    }
}

} // namespace

std::vector<double> em_step(const DelayWindow &window, const DelayProfile &profile, const KernelWeights &kernel,
                            const BoundaryRule &rule, const NoiseSpec &noise, const SimConfig &cfg,
                            std::span<const double> increments, ClampCounters &counters) {
    const auto drift_values = drift_all(window, profile, kernel, rule);
    if (!increments.empty() && increments.size() != drift_values.size()) {
        throw Error(ErrorCode::BadAge, "one increment per age is required");
    }
    std::vector<double> next(drift_values.size());
    advance_state(window.current(), drift_values, increments, noise, cfg, next, counters, 0);
    return next;
}

std::span<const double> Trajectory::record(int k) const {
    if (k < 0 || k >= record_count()) {
        throw Error(ErrorCode::ShortHorizon, "record " + std::to_string(k) + " not stored");
    }
    return std::span<const double>(values).subspan(static_cast<std::size_t>(k) * static_cast<std::size_t>(age_count),
                                                   static_cast<std::size_t>(age_count));
}

Trajectory simulate_trajectory(const History &history, const DelayProfile &profile, const KernelWeights &kernel,
                               const BoundaryRule &rule, const NoiseSpec &noise, const SimConfig &cfg,
                               std::uint64_t seed) {
    cfg.validate();
    noise.validate();
    DelayWindow window(history, profile.max_delay);
    check_shapes(window, profile, kernel);

    const int per_year = cfg.steps_per_year();
    const int record_every = cfg.record_interval();
    const long long total_steps = static_cast<long long>(cfg.horizon_years) * per_year;
    const auto ages = static_cast<std::size_t>(kernel.age_count());

    Trajectory traj;
    traj.seed = seed;
    traj.age_count = kernel.age_count();
    traj.values.reserve(static_cast<std::size_t>(total_steps / record_every) * ages);

    GaussianStream stream(seed);
    AggregatedDrift engine(kernel, profile, rule);
    engine.refresh_history(window);

    std::vector<double> drift_values(ages);
    std::vector<double> increments(noise.active() ? ages : 0);
    std::vector<double> next(ages);

    for (long long step = 1; step <= total_steps; ++step) {
        engine.evaluate(window.current(), drift_values);
        for (auto &dw : increments) {
            dw = stream.next_increment(cfg.time_step_tau);
        }
        advance_state(window.current(), drift_values, increments, noise, cfg, next, traj.counters, step);
        window.set_current(next);
        if (step % per_year == 0) {
            window.advance_year();
            engine.refresh_history(window);
        }
        if (step % record_every == 0) {
            traj.values.insert(traj.values.end(), next.begin(), next.end());
        }
    }
    return traj;
}

int EnsembleForecast::record_for_year(int year) const {
    const double t = year - launch_year();
    const double k = t / record_dt() - 1.0;
    const long long idx = std::llround(k);
    if (t <= 0 || std::abs(k - static_cast<double>(idx)) > 1e-9 || idx >= record_count()) {
        throw Error(ErrorCode::ShortHorizon, "year " + std::to_string(year) + " is not a stored forecast year");
    }
    return static_cast<int>(idx);
}

ClampCounters EnsembleForecast::totals() const noexcept {
    ClampCounters c;
    for (const auto &t : trajectories) {
        c += t.counters;
    }
    return c;
}

EnsembleForecast simulate_ensemble(const History &history, const DelayProfile &profile, const KernelWeights &kernel,
                                   const BoundaryRule &rule, const NoiseSpec &noise, const SimConfig &cfg) {
    cfg.validate();
    noise.validate();
    rule.validate();
    // Surface shape errors before spawning workers.
    {
        DelayWindow window(history, profile.max_delay);
        check_shapes(window, profile, kernel);
    }

    EnsembleForecast ensemble{{}, cfg, noise, history};
    const auto n = static_cast<std::size_t>(cfg.n_trajectories);
    ensemble.trajectories.resize(n);

    unsigned workers = cfg.threads > 0 ? static_cast<unsigned>(cfg.threads) : std::thread::hardware_concurrency();
    workers = std::clamp<unsigned>(workers, 1U, static_cast<unsigned>(n));

    std::atomic<std::size_t> next_index{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto work = [&] {
        while (true) {
            const std::size_t k = next_index.fetch_add(1);
            if (k >= n) {
                return;
            }
            try {
                ensemble.trajectories[k] =
                    simulate_trajectory(history, profile, kernel, rule, noise, cfg, derive_seed(cfg.base_seed, k));
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) {
                    failure = std::current_exception();
                }
                next_index = n;
                return;
            }
        }
    };

    if (workers == 1) {
        work();
    } else {
        std::vector<std::jthread> pool;
        pool.reserve(workers);
        for (unsigned w = 0; w < workers; ++w) {
            pool.emplace_back(work);
        }
    }
    if (failure) {
        std::rethrow_exception(failure);
    }
    return ensemble;
}

void write_ensemble_csv(std::ostream &out, const EnsembleForecast &ensemble) {
    out << "trajectory,year,age,q\n";
    const double dt = ensemble.record_dt();
    std::vector<std::string> year_labels;
    for (int k = 0; k < ensemble.record_count(); ++k) {
        year_labels.push_back(io::format_double(ensemble.launch_year() + (k + 1) * dt));
    }
    std::string line;
    for (std::size_t i = 0; i < ensemble.trajectories.size(); ++i) {
        const auto &traj = ensemble.trajectories[i];
        for (int k = 0; k < traj.record_count(); ++k) {
            const auto state = traj.record(k);
            for (std::size_t x = 0; x < state.size(); ++x) {
                line.clear();
                line += std::to_string(i);
                line += ',';
                line += year_labels[static_cast<std::size_t>(k)];
                line += ',';
                line += std::to_string(x);
                line += ',';
                line += io::format_double(state[x]);
                line += '\n';
                out << line;
            }
        }
    }
}

void write_ensemble_metadata(std::ostream &out, const EnsembleForecast &ensemble) {
    using json = nlohmann::ordered_json;
    const auto &cfg = ensemble.config;
    const auto totals = ensemble.totals();
    json meta;
    meta["launch_year"] = ensemble.launch_year();
    meta["history_years"] = ensemble.history.max_delay() + 1;
    meta["age_count"] = ensemble.age_count();
    meta["noise"] = {{"kind", std::string(to_string(ensemble.noise.kind))}, {"b", ensemble.noise.intensity_b}};
    meta["sim"] = {{"tau", cfg.time_step_tau},
                   {"horizon", cfg.horizon_years},
                   {"n_trajectories", cfg.n_trajectories},
                   {"base_seed", cfg.base_seed},
                   {"clamp_epsilon", cfg.clamp_epsilon},
                   {"record_dt", cfg.record_dt()}};
    meta["records"] = ensemble.record_count();
    meta["clamp_totals"] = {{"updates", totals.updates},
                            {"clamp_events", totals.clamp_events},
                            {"raw_nonpositive", totals.raw_nonpositive},
                            {"raw_at_or_above_one", totals.raw_at_or_above_one}};
    json seeds = json::array();
    for (std::size_t i = 0; i < ensemble.trajectories.size(); ++i) {
        const auto &t = ensemble.trajectories[i];
        seeds.push_back({{"trajectory", i},
                         {"seed", t.seed},
                         {"clamp_events", t.counters.clamp_events},
                         {"raw_nonpositive", t.counters.raw_nonpositive},
                         {"raw_at_or_above_one", t.counters.raw_at_or_above_one}});
    }
    meta["trajectories"] = std::move(seeds);
    out << meta.dump(2) << '\n';
}

} // namespace nlsd
