#include "aojc/drift.hpp"

#include <algorithm>
#include <limits>

namespace aojc {

std::string to_string(DriftVerdict v) {
    switch (v) {
        case DriftVerdict::Stable: return "stable";
        case DriftVerdict::Unstable: return "unstable";
        case DriftVerdict::Inconclusive: return "inconclusive";
    }
    return "inconclusive";
}

DriftReport drift_diagnostic(std::span<const TracePoint> trace, double total_arrival_rate,
                             const DriftThresholds& th) {
    if (trace.size() < th.min_samples)
        throw ParamError("drift diagnostic needs at least " + std::to_string(th.min_samples) +
                         " trace samples, got " + std::to_string(trace.size()));

    const auto n = static_cast<double>(trace.size());
    double mean_x = 0.0;
    double mean_y = 0.0;
    double max_y = 0.0;
    for (const auto& p : trace) {
        mean_x += static_cast<double>(p.slot);
        mean_y += static_cast<double>(p.total_queue);
        max_y = std::max(max_y, static_cast<double>(p.total_queue));
    }
    mean_x /= n;
    mean_y /= n;
    double sxx = 0.0;
    double sxy = 0.0;
    for (const auto& p : trace) {
        const double dx = static_cast<double>(p.slot) - mean_x;
        sxx += dx * dx;
        sxy += dx * (static_cast<double>(p.total_queue) - mean_y);
    }

    DriftReport r;
    r.slope = sxx > 0.0 ? sxy / sxx : 0.0;
    r.span = static_cast<double>(trace.back().slot - trace.front().slot);
    r.max_value = max_y;

    const std::size_t quarter = trace.size() / 4;
    double first = 0.0;
    double last = 0.0;
    for (std::size_t i = 0; i < quarter; ++i) {
        first += static_cast<double>(trace[i].total_queue);
        last += static_cast<double>(trace[trace.size() - quarter + i].total_queue);
    }
    r.first_quartile_mean = first / static_cast<double>(quarter);
    r.last_quartile_mean = last / static_cast<double>(quarter);
    if (r.first_quartile_mean > 0.0)
        r.quartile_ratio = r.last_quartile_mean / r.first_quartile_mean;
    else
        r.quartile_ratio = r.last_quartile_mean > 0.0 ? std::numeric_limits<double>::infinity() : 1.0;

    const double growth = r.slope * r.span;
    if (growth <= th.stable_growth_fraction * r.max_value && r.quartile_ratio < th.stable_ratio)
        r.verdict = DriftVerdict::Stable;
    else if (growth > th.unstable_arrival_fraction * total_arrival_rate * r.span &&
             r.quartile_ratio > th.unstable_ratio)
        r.verdict = DriftVerdict::Unstable;
    else
        r.verdict = DriftVerdict::Inconclusive;
    return r;
}

}  // namespace aojc
