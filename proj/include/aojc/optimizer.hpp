#pragma once

// Per-subset policy design: multi-start simplex descent for the randomized
// family (mu, pi), grid + golden-section search for the max-age family
// (mu_bar), and assembly of the adaptive policy tables from the solutions.

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <vector>

#include "aojc/analytics.hpp"
#include "aojc/model.hpp"

namespace aojc {

class OptimizerError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct OptimizerSettings {
    double mu_lo = 1e-3;
    double mu_hi = 1.0 - 1e-3;
    double pi_floor = 1e-4;
    int restarts = 16;
    /// Simplex size at which a descent run is declared converged.
    double tolerance = 1e-8;
    int max_iterations = 5000;
    std::uint64_t seed = 20240611;
    /// Restart points are uniform in [-start_box, start_box]^d of the
    /// unconstrained coordinates.
    double start_box = 4.0;
    int grid_points = 200;
    double golden_tolerance = 1e-8;
    UserCountReading reading = UserCountReading::CardinalityOfS;
    int workers = 1;
};

struct OptResult {
    SubsetKey subset;
    SchedulerKind kind;
    double mu = 0.0;
    std::vector<double> pi;  // length N, empty for max-age
    double objective = 0.0;
    int iterations = 0;
    int restarts_used = 0;
    bool converged = false;
    /// Objective at every start point (canonical first), for descent checks.
    std::vector<double> start_objectives;
};

/// Smooth bijection between R^d and the feasible (mu, pi) region of a subset.
class RandomizedParametrization {
public:
    RandomizedParametrization(SubsetKey subset, int n_users, double mu_lo, double mu_hi,
                              double pi_floor);

    std::size_t dimension() const { return static_cast<std::size_t>(members_.size()); }
    double mu(const double* x) const;
    /// Length-N distribution supported on the subset with entries >= pi_floor.
    std::vector<double> pi(const double* x) const;
    /// Coordinates of mu = 0.5 (for the default symmetric box) and uniform pi.
    std::vector<double> canonical() const;

private:
    std::vector<int> members_;
    int n_users_;
    double mu_lo_, mu_hi_, pi_floor_;
};

OptResult optimize_randomized_subset(SubsetKey subset, const SystemParams& params,
                                     const OptimizerSettings& settings = {});

OptResult optimize_maxage_subset(SubsetKey subset, const SystemParams& params,
                                 const OptimizerSettings& settings = {});

struct ScalarMinimum {
    double x;
    double value;
    double grid_best_x;
    double grid_best_value;
};

/// Coarse grid over [lo, hi] then golden-section refinement around the best
/// grid bracket. The returned value never exceeds the grid best.
ScalarMinimum minimize_scalar(const std::function<double(double)>& f, double lo, double hi,
                              int grid_points, double tolerance);

struct PolicyCollection {
    AdaptivePolicy policy;
    std::vector<OptResult> results;  // ascending subset mask
};

/// Randomized table over all non-empty subsets.
PolicyCollection build_pi_c(const SystemParams& params, const OptimizerSettings& settings = {});
/// Max-age sampling table over all non-empty subsets.
PolicyCollection build_pibar_c(const SystemParams& params, const OptimizerSettings& settings = {});

}  // namespace aojc
