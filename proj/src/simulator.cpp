#include "aojc/simulator.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace aojc {

namespace {

[[noreturn]] void invariant_failure(const std::string& what, std::int64_t slot) {
    std::ostringstream os;
    os << "simulator invariant violated at slot " << slot << ": " << what;
    throw std::logic_error(os.str());
}

}  // namespace

int max_age_select(std::span<const std::int64_t> ages, SubsetKey active) {
    int best = -1;
    std::int64_t best_age = -1;
    for (std::size_t i = 0; i < ages.size(); ++i) {
        if (!active.contains(static_cast<int>(i))) continue;
        if (ages[i] > best_age) {
            best_age = ages[i];
            best = static_cast<int>(i);
        }
    }
    return best;
}

Simulator::Simulator(const SystemParams& params, const AdaptivePolicy& policy, SimMode mode,
                     std::uint64_t seed, SimOptions options)
    : params_(params),
      policy_(policy),
      mode_(mode),
      options_(options),
      rng_(seed, params.n_users()) {
    const auto n = static_cast<std::size_t>(params.n_users());
    if (policy.n_users() != params.n_users())
        throw ParamError("policy and system parameters disagree on n_users");
    if (mode_.is_open()) {
        if (!policy.is_complete())
            throw ParamError("open-mode simulation needs a policy entry for every non-empty subset");
    } else {
        if (mode_.saturated->span() > params.n_users())
            throw ParamError("saturated subset exceeds n_users");
        (void)policy.at(*mode_.saturated);
    }
    if (!(options_.burn_in_fraction >= 0.0 && options_.burn_in_fraction < 1.0))
        throw ParamError("burn_in_fraction must lie in [0,1)");
    if (options_.trace_stride < 0) throw ParamError("trace_stride must be non-negative");

    queues_.assign(n, 0);
    ages_.assign(n, 1);
    completions_.assign(n, 0);
    arrivals_.assign(n, 0);
    measured_completions_.assign(n, 0);
    age_sums_.assign(n, 0);
    queue_sums_.assign(n, 0);

    // Stationary start of the symmetric chain.
    actual_.kind = rng_.initial_state().bernoulli(0.5) ? MachineActual::Kind::Free
                                                       : MachineActual::Kind::InternalBusy;
    knowledge_.kind = MachineKnowledge::Kind::Ambiguous;
}

int Simulator::choose_user(SubsetKey active) {
    if (policy_.kind() == SchedulerKind::MaxAge) return max_age_select(ages_, active);
    return rng_.schedule_choice().categorical(policy_.at(active).schedule_dist);
}

void Simulator::step(bool measure) {
    const int n = params_.n_users();
    last_completed_ = -1;
    last_sampled_ = false;
    last_assigned_ = false;

    // (a) sampling and assignment at the beginning of the slot.
    if (!actual_.serving()) {
        std::optional<SubsetKey> active =
            mode_.is_open() ? active_set(queues_) : std::optional<SubsetKey>(*mode_.saturated);
        if (active) {
            const double mu = policy_.sampling_prob(*active);
            if (rng_.sampling_decision().bernoulli(mu)) {
                last_sampled_ = true;
                ++samples_;
                if (measure) ++measured_samples_;
                if (actual_.kind == MachineActual::Kind::Free) {
                    const int j = choose_user(*active);
                    if (j < 0 || !active->contains(j)) invariant_failure("scheduled a user outside the active set", slot_);
                    if (mode_.is_open() && queues_[static_cast<std::size_t>(j)] <= 0)
                        invariant_failure("scheduled an empty queue", slot_);
                    actual_ = MachineActual{MachineActual::Kind::Serving, j};
                    knowledge_ = MachineKnowledge{MachineKnowledge::Kind::Serving, j};
                    last_assigned_ = true;
                } else {
                    knowledge_ = MachineKnowledge{MachineKnowledge::Kind::InternalBusy, -1};
                }
            }
        }
    }

    // (b) record ages and queue lengths of slot t.
    if (measure) {
        ++measured_slots_;
        for (int i = 0; i < n; ++i) {
            age_sums_[static_cast<std::size_t>(i)] += ages_[static_cast<std::size_t>(i)];
            queue_sums_[static_cast<std::size_t>(i)] += queues_[static_cast<std::size_t>(i)];
        }
    }
    if (options_.trace_stride > 0 && slot_ % options_.trace_stride == 0) {
        std::int64_t total = 0;
        for (auto q : queues_) total += q;
        trace_.push_back(TracePoint{slot_, total});
    }

    // (c) end of slot: service completion or machine flip.
    if (actual_.serving()) {
        const int j = actual_.user;
        if (rng_.service(j).bernoulli(params_.service_rate(j))) {
            last_completed_ = j;
            ++completions_[static_cast<std::size_t>(j)];
            if (measure) ++measured_completions_[static_cast<std::size_t>(j)];
            if (mode_.is_open()) {
                auto& q = queues_[static_cast<std::size_t>(j)];
                if (q <= 0) invariant_failure("completion from an empty queue", slot_);
                --q;
            }
            actual_.kind = rng_.post_completion().bernoulli(params_.post_busy_prob())
                               ? MachineActual::Kind::InternalBusy
                               : MachineActual::Kind::Free;
            actual_.user = -1;
            knowledge_ = MachineKnowledge{MachineKnowledge::Kind::Ambiguous, -1};
        }
    } else if (rng_.machine_flip().bernoulli(params_.flip_prob())) {
        actual_.kind = actual_.kind == MachineActual::Kind::Free ? MachineActual::Kind::InternalBusy
                                                                 : MachineActual::Kind::Free;
    }

    // Age recurrence: v(t+1) = 1 after a completion, v(t)+1 otherwise.
    for (int i = 0; i < n; ++i) {
        auto& v = ages_[static_cast<std::size_t>(i)];
        v = (i == last_completed_) ? 1 : v + 1;
    }

    // (d) arrivals at the end of the slot.
    if (mode_.is_open()) {
        for (int i = 0; i < n; ++i) {
            if (rng_.arrivals(i).bernoulli(params_.arrival_rate(i))) {
                ++queues_[static_cast<std::size_t>(i)];
                ++arrivals_[static_cast<std::size_t>(i)];
            }
        }
    }

    ++slot_;
}

SimMetrics Simulator::run(std::int64_t horizon) {
    if (horizon < 1) throw ParamError("horizon must be at least 1 slot");
    const auto burn_in =
        static_cast<std::int64_t>(std::floor(options_.burn_in_fraction * static_cast<double>(horizon)));
    for (std::int64_t k = 0; k < horizon; ++k) step(k >= burn_in);

    const int n = params_.n_users();
    const auto denom = static_cast<double>(measured_slots_);
    SimMetrics m;
    m.horizon = horizon;
    m.measured_slots = measured_slots_;
    m.samples = measured_samples_;
    m.completions = measured_completions_;
    m.arrivals = arrivals_;
    m.trace = trace_;
    m.delta_hat.resize(static_cast<std::size_t>(n));
    m.completion_rate.resize(static_cast<std::size_t>(n));
    m.mean_queue.resize(static_cast<std::size_t>(n));
    for (std::size_t i = 0; i < static_cast<std::size_t>(n); ++i) {
        m.delta_hat[i] = static_cast<double>(age_sums_[i]) / denom;
        m.completion_rate[i] = static_cast<double>(measured_completions_[i]) / denom;
        m.mean_queue[i] = static_cast<double>(queue_sums_[i]) / denom;
    }
    m.sampling_cost = params_.sampling_cost() * static_cast<double>(measured_samples_) / denom;

    // In saturated mode only the backlogged users exist for the cost.
    double acc = 0.0;
    int counted = 0;
    for (int i = 0; i < n; ++i) {
        if (!mode_.is_open() && !mode_.saturated->contains(i)) continue;
        acc += m.delta_hat[static_cast<std::size_t>(i)];
        ++counted;
    }
    m.delta_avg = acc / counted;
    m.total_cost = m.delta_avg + m.sampling_cost;
    return m;
}

SimMetrics run_simulation(const SystemParams& params, const AdaptivePolicy& policy,
                          std::int64_t horizon, std::uint64_t seed, SimMode mode,
                          SimOptions options) {
    Simulator sim(params, policy, mode, seed, options);
    return sim.run(horizon);
}

}  // namespace aojc
