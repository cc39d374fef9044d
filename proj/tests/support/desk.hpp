#pragma once

// Small hand-sized systems and slow reference computations used by the tests.

#include <cstdint>
#include <random>
#include <vector>

#include "nlsd/delay_profile.hpp"
#include "nlsd/kernel.hpp"
#include "nlsd/life_table.hpp"
#include "nlsd/simulator.hpp"

namespace desk {

struct System {
    nlsd::KernelWeights kernel;
    nlsd::DelayProfile profile;
    nlsd::BoundaryRule rule;
    nlsd::History history;
};

/// Five ages, h = 2, moderate kernel; history is a fixed increasing profile.
System invariance_system();

/// Five ages, h = 2, very wide kernel so almost all mass is exterior; the
/// history sits on the fixed point.
System bound_system();

/// Random row-stochastic kernel with the given window.
nlsd::KernelWeights random_kernel(std::mt19937_64 &rng, int max_age, int lower, int upper);

/// Profile with a random nonpositive slope and exponential delay density.
nlsd::DelayProfile random_profile(std::mt19937_64 &rng, int h);

/// Oracle: kernel weights from the Gaussian formula, convolved by a direct
/// double loop with no use of KernelWeights.
std::vector<double> brute_force_convolution(double bandwidth, int lower, int max_age, int upper,
                                            const std::vector<double> &interior,
                                            const std::vector<double> &exterior_by_window_age);

/// Oracle: u <- M1 J_D u + b iterated until the update is below 1e-16.
std::vector<double> iterate_fixed_point(const nlsd::KernelWeights &kernel, double M1,
                                        const nlsd::ExteriorProfile &g);

/// Oracle: drift at every age by summing over delays and window ages directly.
std::vector<double> direct_drift(const std::vector<std::vector<double>> &by_delay,
                                 const nlsd::DelayProfile &profile, const nlsd::KernelWeights &kernel,
                                 const nlsd::BoundaryRule &rule);

/// Temporary directory removed on destruction.
class TempDir {
public:
    TempDir();
    ~TempDir();
    TempDir(const TempDir &) = delete;
    TempDir &operator=(const TempDir &) = delete;
    const std::string &path() const { return path_; }
    std::string file(const std::string &name) const { return path_ + "/" + name; }

private:
    std::string path_;
};

std::string read_file(const std::string &path);

} // namespace desk
