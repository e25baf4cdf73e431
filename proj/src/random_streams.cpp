#include "aojc/random_streams.hpp"

namespace aojc {

RandomStream::RandomStream(std::uint64_t master_seed, std::uint32_t stream_tag, std::uint32_t index) {
    std::seed_seq seq{static_cast<std::uint32_t>(master_seed & 0xffffffffu),
                      static_cast<std::uint32_t>(master_seed >> 32), stream_tag, index,
                      0x616f6a63u};
    engine_.seed(seq);
}

int RandomStream::categorical(const std::vector<double>& weights) {
    const double u = uniform();
    double acc = 0.0;
    int last_positive = -1;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        if (weights[i] <= 0.0) continue;
        last_positive = static_cast<int>(i);
        acc += weights[i];
        if (u < acc) return last_positive;
    }
    return last_positive;
}

namespace {

std::vector<RandomStream> per_user(std::uint64_t seed, StreamTag tag, int n_users) {
    std::vector<RandomStream> out;
    out.reserve(static_cast<std::size_t>(n_users));
    for (int i = 0; i < n_users; ++i)
        out.emplace_back(seed, static_cast<std::uint32_t>(tag), static_cast<std::uint32_t>(i));
    return out;
}

RandomStream single(std::uint64_t seed, StreamTag tag) {
    return RandomStream(seed, static_cast<std::uint32_t>(tag), 0);
}

}  // namespace

RandomStreams::RandomStreams(std::uint64_t master_seed, int n_users)
    : master_seed_(master_seed),
      arrivals_(per_user(master_seed, StreamTag::Arrivals, n_users)),
      service_(per_user(master_seed, StreamTag::Service, n_users)),
      machine_flip_(single(master_seed, StreamTag::MachineFlip)),
      sampling_decision_(single(master_seed, StreamTag::SamplingDecision)),
      schedule_choice_(single(master_seed, StreamTag::ScheduleChoice)),
      post_completion_(single(master_seed, StreamTag::PostCompletion)),
      initial_state_(single(master_seed, StreamTag::InitialState)) {}

}  // namespace aojc
