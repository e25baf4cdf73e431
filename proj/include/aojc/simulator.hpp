#pragma once

// Slot-level simulation of the single-machine job-assignment system.
//
// Order of events inside slot t:
//   (a) unless the machine is serving, the server samples with probability
//       mu(A) where A is the active set (the fixed subset in saturated mode);
//       a sample that finds the machine free assigns a job immediately, so
//       that slot is also the first service slot;
//   (b) ages v_i(t) and queue lengths Q_i(t) are recorded;
//   (c) a serving machine completes with probability q_j and then becomes
//       internally busy with probability s, otherwise free; an idle machine
//       flips free <-> internally busy with probability q;
//   (d) Bernoulli(p_i) arrivals join the queues (open mode only).
// A queue is decremented at completion, so the job in service still counts
// towards Q_j and towards the active set.

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "aojc/model.hpp"
#include "aojc/random_streams.hpp"

namespace aojc {

struct MachineActual {
    enum class Kind { InternalBusy, Free, Serving };
    Kind kind = Kind::Free;
    int user = -1;  // valid when Serving

    bool serving() const { return kind == Kind::Serving; }
    friend bool operator==(const MachineActual&, const MachineActual&) = default;
};

struct MachineKnowledge {
    enum class Kind { InternalBusy, Ambiguous, Serving, KnownFree };
    Kind kind = Kind::Ambiguous;
    int user = -1;

    friend bool operator==(const MachineKnowledge&, const MachineKnowledge&) = default;
};

/// Open: stochastic arrivals and the queue recursion. Saturated: the users in
/// `subset` are permanently backlogged, all other users are inert.
struct SimMode {
    std::optional<SubsetKey> saturated;

    static SimMode open() { return {}; }
    static SimMode saturated_on(SubsetKey s) { return SimMode{s}; }
    bool is_open() const { return !saturated.has_value(); }
};

struct SimOptions {
    /// Fraction of the horizon discarded before averaging (floor(f*T) slots).
    double burn_in_fraction = 0.1;
    /// Record (slot, sum Q_i) every `trace_stride` slots; 0 disables the trace.
    std::int64_t trace_stride = 0;

    static SimOptions no_burn_in() { return SimOptions{0.0, 0}; }
};

struct TracePoint {
    std::int64_t slot;
    std::int64_t total_queue;
};

struct SimMetrics {
    std::int64_t horizon = 0;
    std::int64_t measured_slots = 0;
    std::vector<double> delta_hat;        // per-user time-average age
    double sampling_cost = 0.0;           // L * samples / measured slots
    double delta_avg = 0.0;               // average of delta_hat over the reported users
    double total_cost = 0.0;              // delta_avg + sampling_cost
    std::vector<double> completion_rate;  // completions per measured slot
    std::vector<double> mean_queue;
    std::int64_t samples = 0;
    std::vector<std::int64_t> completions;
    std::vector<std::int64_t> arrivals;
    std::vector<TracePoint> trace;
};

/// Max-age scheduling: argmax of ages over `active`, ties to the lowest index.
int max_age_select(std::span<const std::int64_t> ages, SubsetKey active);

class Simulator {
public:
    Simulator(const SystemParams& params, const AdaptivePolicy& policy, SimMode mode,
              std::uint64_t seed, SimOptions options = {});

    /// Executes one slot. `measure` controls whether the slot is accumulated.
    void step(bool measure = true);
    /// Runs `horizon` slots from the current state and returns the metrics.
    SimMetrics run(std::int64_t horizon);

    std::int64_t slot() const { return slot_; }
    std::span<const std::int64_t> queues() const { return queues_; }
    std::span<const std::int64_t> ages() const { return ages_; }
    const MachineActual& actual() const { return actual_; }
    const MachineKnowledge& knowledge() const { return knowledge_; }
    std::int64_t samples() const { return samples_; }
    std::span<const std::int64_t> completions() const { return completions_; }
    std::span<const std::int64_t> arrivals() const { return arrivals_; }
    /// Completion indicator b_i of the last executed slot (-1 if none).
    int last_completed_user() const { return last_completed_; }
    /// Whether the last executed slot drew a sample / assigned a job.
    bool last_sampled() const { return last_sampled_; }
    bool last_assigned() const { return last_assigned_; }

private:
    int choose_user(SubsetKey active);

    const SystemParams& params_;
    const AdaptivePolicy& policy_;
    SimMode mode_;
    SimOptions options_;
    RandomStreams rng_;

    std::int64_t slot_ = 1;
    std::vector<std::int64_t> queues_;
    std::vector<std::int64_t> ages_;
    MachineActual actual_;
    MachineKnowledge knowledge_;

    std::int64_t samples_ = 0;
    std::vector<std::int64_t> completions_;
    std::vector<std::int64_t> arrivals_;

    std::int64_t measured_slots_ = 0;
    std::int64_t measured_samples_ = 0;
    std::vector<std::int64_t> measured_completions_;
    std::vector<std::int64_t> age_sums_;
    std::vector<std::int64_t> queue_sums_;
    std::vector<TracePoint> trace_;

    int last_completed_ = -1;
    bool last_sampled_ = false;
    bool last_assigned_ = false;
};

SimMetrics run_simulation(const SystemParams& params, const AdaptivePolicy& policy,
                          std::int64_t horizon, std::uint64_t seed, SimMode mode,
                          SimOptions options = {});

}  // namespace aojc
