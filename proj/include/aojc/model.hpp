#pragma once

// Domain types shared by the simulator, the closed-form evaluators, the
// stability checks and the policy optimizer.

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace aojc {

class ParamError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Unvalidated parameter record, as read from a config file.
struct RawParams {
    int n_users = 0;
    std::vector<double> arrival_rates;
    std::vector<double> service_rates;
    double flip_prob = 0.0;
    double post_busy_prob = 0.0;
    double sampling_cost = 0.0;
};

struct ValidationOptions {
    /// Admit p_i = 0. Only used by degenerate sanity configurations.
    bool allow_zero_arrivals = false;
};

/// Model constants. Only obtainable through validate_params, so every
/// instance satisfies the documented parameter ranges.
class SystemParams {
public:
    int n_users() const { return n_users_; }
    const std::vector<double>& arrival_rates() const { return arrival_rates_; }
    const std::vector<double>& service_rates() const { return service_rates_; }
    double arrival_rate(int i) const { return arrival_rates_[static_cast<std::size_t>(i)]; }
    double service_rate(int i) const { return service_rates_[static_cast<std::size_t>(i)]; }
    /// Machine free <-> internally-busy transition probability q.
    double flip_prob() const { return flip_prob_; }
    /// Probability s that the machine is internally busy right after a completion.
    double post_busy_prob() const { return post_busy_prob_; }
    double sampling_cost() const { return sampling_cost_; }
    double total_arrival_rate() const;

    RawParams raw() const;

private:
    friend SystemParams validate_params(const RawParams&, const ValidationOptions&);
    SystemParams() = default;

    int n_users_ = 0;
    std::vector<double> arrival_rates_;
    std::vector<double> service_rates_;
    double flip_prob_ = 0.0;
    double post_busy_prob_ = 0.0;
    double sampling_cost_ = 0.0;
};

/// Throws ParamError naming the violated bound.
SystemParams validate_params(const RawParams& raw, const ValidationOptions& opts = {});

/// Non-empty set of users encoded as a bitmask; bit i is user i (0-based).
class SubsetKey {
public:
    static constexpr int kMaxUsers = 30;

    /// Throws ParamError on an empty mask.
    explicit SubsetKey(std::uint32_t mask);
    static SubsetKey full(int n_users);
    static SubsetKey single(int user);
    static SubsetKey of(std::initializer_list<int> users);

    std::uint32_t mask() const { return mask_; }
    bool contains(int user) const { return (mask_ >> user) & 1u; }
    int size() const;
    std::vector<int> members() const;
    /// Highest user index + 1.
    int span() const;
    std::string to_string() const;

    friend bool operator==(SubsetKey, SubsetKey) = default;
    friend auto operator<=>(SubsetKey, SubsetKey) = default;

private:
    std::uint32_t mask_;
};

constexpr int kDefaultSubsetCap = 12;

/// All 2^N - 1 non-empty subsets in ascending mask order. N above `cap`
/// throws ParamError; pass a larger cap explicitly to override.
std::vector<SubsetKey> enumerate_subsets(int n_users, int cap = kDefaultSubsetCap);

/// Users with a non-empty queue, or nullopt when every queue is empty.
std::optional<SubsetKey> active_set(std::span<const std::int64_t> queues);

enum class SchedulerKind { AdaptiveRandomized, MaxAge };

std::string to_string(SchedulerKind kind);
SchedulerKind scheduler_kind_from_string(const std::string& name);

/// Stationary randomized rule attached to one subset. For max-age tables
/// schedule_dist is empty.
struct RandomizedSubsetPolicy {
    double sampling_prob = 1.0;
    std::vector<double> schedule_dist;
};

/// Subset-indexed table of sampling probabilities (and scheduling
/// distributions for the randomized family).
class AdaptivePolicy {
public:
    AdaptivePolicy(SchedulerKind kind, int n_users);

    SchedulerKind kind() const { return kind_; }
    int n_users() const { return n_users_; }

    /// Validates the entry against `subset` and stores it.
    void set(SubsetKey subset, RandomizedSubsetPolicy entry);
    void set_sampling_prob(SubsetKey subset, double mu);

    bool has(SubsetKey subset) const;
    /// Throws std::out_of_range for a missing subset.
    const RandomizedSubsetPolicy& at(SubsetKey subset) const;
    double sampling_prob(SubsetKey subset) const { return at(subset).sampling_prob; }

    /// True when every non-empty subset of [N] has an entry.
    bool is_complete() const;
    std::vector<SubsetKey> subsets() const;
    std::size_t size() const { return count_; }
    double min_sampling_prob() const;

    /// Convenience builders.
    static AdaptivePolicy uniform_randomized(int n_users, double mu);
    static AdaptivePolicy uniform_max_age(int n_users, double mu);

private:
    SchedulerKind kind_;
    int n_users_;
    std::size_t count_ = 0;
    std::vector<std::optional<RandomizedSubsetPolicy>> table_;
};

/// Checks support == subset and sum == 1 (within 1e-12). Throws ParamError.
void validate_subset_policy(SubsetKey subset, const RandomizedSubsetPolicy& entry, int n_users,
                            SchedulerKind kind);

}  // namespace aojc
