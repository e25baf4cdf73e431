#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace aojc {

/// One named random stream. Uniforms are built from the top 53 bits of a
/// 64-bit Mersenne Twister draw so sequences are identical on every platform.
class RandomStream {
public:
    RandomStream(std::uint64_t master_seed, std::uint32_t stream_tag, std::uint32_t index);

    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
    bool bernoulli(double p) { return uniform() < p; }
    /// Index drawn from a discrete distribution given by `weights` (sum 1).
    /// Zero-weight entries are never returned.
    int categorical(const std::vector<double>& weights);

private:
    std::mt19937_64 engine_;
};

enum class StreamTag : std::uint32_t {
    Arrivals = 1,
    MachineFlip = 2,
    Service = 3,
    SamplingDecision = 4,
    ScheduleChoice = 5,
    PostCompletion = 6,
    InitialState = 7,
};

/// The per-run set of independent streams derived from a master seed.
/// Owned by exactly one simulation run.
class RandomStreams {
public:
    RandomStreams(std::uint64_t master_seed, int n_users);

    std::uint64_t master_seed() const { return master_seed_; }
    RandomStream& arrivals(int user) { return arrivals_[static_cast<std::size_t>(user)]; }
    RandomStream& service(int user) { return service_[static_cast<std::size_t>(user)]; }
    RandomStream& machine_flip() { return machine_flip_; }
    RandomStream& sampling_decision() { return sampling_decision_; }
    RandomStream& schedule_choice() { return schedule_choice_; }
    RandomStream& post_completion() { return post_completion_; }
    RandomStream& initial_state() { return initial_state_; }

private:
    std::uint64_t master_seed_;
    std::vector<RandomStream> arrivals_;
    std::vector<RandomStream> service_;
    RandomStream machine_flip_;
    RandomStream sampling_decision_;
    RandomStream schedule_choice_;
    RandomStream post_completion_;
    RandomStream initial_state_;
};

}  // namespace aojc
