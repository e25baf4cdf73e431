#pragma once

// Sufficient queue-stability conditions for adaptive policies, and a sweep
// that pairs them with the simulator's empirical drift verdicts.

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "aojc/drift.hpp"
#include "aojc/model.hpp"
#include "aojc/simulator.hpp"

namespace aojc {

inline constexpr double kDefaultStabilityEpsilon = 1e-6;

struct SubsetMargin {
    SubsetKey subset;
    double sampling_prob;
    /// sum_{i in S} pi_i(S) q_i (randomized) or min_{i in S} q_i (max-age).
    double service_term;
    /// sum_j p_j - mu(S) (1 - chi(q,s)) service_term
    double margin;
};

struct Cor1Result {
    double mu_min = 0.0;
    double q_min = 0.0;
    double margin = 0.0;
    bool satisfied = false;
};

struct StabilityReport {
    SchedulerKind kind = SchedulerKind::AdaptiveRandomized;
    double epsilon = kDefaultStabilityEpsilon;
    double chi = 0.0;
    std::vector<SubsetMargin> margins;  // ascending subset mask
    std::optional<SubsetKey> worst_subset;
    double worst_margin = 0.0;
    /// worst_margin <= -epsilon
    bool satisfied = false;
    std::optional<Cor1Result> corollary;
};

/// Per-subset condition for an adaptive randomized policy. Throws
/// std::out_of_range if a subset entry is missing.
StabilityReport prop1_check(const SystemParams& params, const AdaptivePolicy& policy,
                            double epsilon = kDefaultStabilityEpsilon);

/// Single uniform condition with mu_min over the table and q_min over users.
Cor1Result cor1_check(const SystemParams& params, const AdaptivePolicy& policy,
                      double epsilon = kDefaultStabilityEpsilon);

/// Per-subset condition for max-age scheduling; only sampling probabilities
/// of the table are used.
StabilityReport prop2_check(const SystemParams& params, const AdaptivePolicy& sampling_table,
                            double epsilon = kDefaultStabilityEpsilon);

/// Condition matching the policy's scheduler kind (prop1 + cor1 for
/// randomized tables, prop2 for max-age tables).
StabilityReport check_conditions(const SystemParams& params, const AdaptivePolicy& policy,
                                 double epsilon = kDefaultStabilityEpsilon);

struct EmpiricalStability {
    std::vector<std::uint64_t> seeds;
    std::vector<DriftReport> runs;
    std::vector<std::vector<TracePoint>> traces;  // filled only with keep_traces
    /// Unstable if any seed is Unstable, Stable if all are Stable, else Inconclusive.
    DriftVerdict verdict = DriftVerdict::Inconclusive;
};

struct EmpiricalSettings {
    std::int64_t horizon = 200'000;
    std::vector<std::uint64_t> seeds{1, 2, 3};
    std::int64_t trace_stride = 100;
    DriftThresholds thresholds{};
    bool keep_traces = false;
};

EmpiricalStability empirical_stability(const SystemParams& params, const AdaptivePolicy& policy,
                                       const EmpiricalSettings& settings);

struct SufficiencyCase {
    std::string id;
    SystemParams params;
    AdaptivePolicy policy;
};

struct SufficiencyRow {
    std::string id;
    SchedulerKind kind;
    StabilityReport conditions;
    EmpiricalStability empirical;
    /// Condition satisfied yet empirically Unstable.
    bool soundness_violation = false;
};

enum class SimulationScope { AllCases, SatisfiedOnly };

/// Evaluates conditions and empirical verdicts for every case, in input
/// order. With SatisfiedOnly, cases whose condition fails are not simulated
/// (they cannot be soundness violations) and carry an empty EmpiricalStability.
/// Up to `workers` cases run concurrently.
std::vector<SufficiencyRow> verify_sufficiency(const std::vector<SufficiencyCase>& cases,
                                               const EmpiricalSettings& settings, double epsilon,
                                               int workers = 1,
                                               SimulationScope scope = SimulationScope::AllCases);

/// Parameter-space sampler for soundness sweeps. Each configuration draws
/// N, q, s, q_i, a sampling table mu(S) and scheduling tables pi(S), then
/// sets the total arrival rate to `load` times the smallest per-subset capacity
/// min_S mu(S)(1-chi)sum_i pi_i(S)q_i, with load uniform in [load_lo, load_hi].
/// Every configuration yields a randomized case and a max-age case sharing
/// the same sampling table.
struct RandomCaseSettings {
    int count = 1000;
    std::uint64_t seed = 7;
    int max_users = 4;
    double q_lo = 0.05, q_hi = 0.95;
    double s_lo = 0.05, s_hi = 0.95;
    double service_lo = 0.1, service_hi = 1.0;
    double mu_lo = 0.1, mu_hi = 1.0;
    double load_lo = 0.2, load_hi = 1.05;
};

std::vector<SufficiencyCase> sample_random_cases(const RandomCaseSettings& settings);

}  // namespace aojc
