#pragma once

#include <span>
#include <string>

#include "aojc/simulator.hpp"

namespace aojc {

enum class DriftVerdict { Stable, Unstable, Inconclusive };

std::string to_string(DriftVerdict v);

/// Empirical proxy for strong stability: positive recurrence is not decidable
/// from a finite trace, so these are heuristic thresholds.
struct DriftThresholds {
    /// Stable needs slope*T <= stable_growth_fraction * max(trace) ...
    double stable_growth_fraction = 0.05;
    /// ... and a last/first quartile mean ratio below this.
    double stable_ratio = 2.0;
    /// Unstable needs slope*T > unstable_arrival_fraction * (sum p_i) * T ...
    double unstable_arrival_fraction = 0.2;
    /// ... and a quartile ratio above this.
    double unstable_ratio = 4.0;
    std::size_t min_samples = 100;
};

struct DriftReport {
    DriftVerdict verdict = DriftVerdict::Inconclusive;
    double slope = 0.0;             // least-squares d(sum Q)/d(slot)
    double span = 0.0;              // T: last slot - first slot of the trace
    double first_quartile_mean = 0.0;
    double last_quartile_mean = 0.0;
    double quartile_ratio = 1.0;    // last / first; +inf when first is 0 and last is not
    double max_value = 0.0;
};

/// `total_arrival_rate` scales the Unstable threshold. Throws ParamError on a
/// trace shorter than thresholds.min_samples.
DriftReport drift_diagnostic(std::span<const TracePoint> trace, double total_arrival_rate,
                             const DriftThresholds& thresholds = {});

}  // namespace aojc
