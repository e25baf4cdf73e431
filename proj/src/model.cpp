#include "aojc/model.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>
#include <sstream>

namespace aojc {

namespace {

std::string user_label(const char* what, std::size_t i) {
    std::ostringstream os;
    os << what << "[" << i << "]";
    return os.str();
}

void require(bool ok, const std::string& message) {
    if (!ok) throw ParamError(message);
}

}  // namespace

double SystemParams::total_arrival_rate() const {
    return std::accumulate(arrival_rates_.begin(), arrival_rates_.end(), 0.0);
}

RawParams SystemParams::raw() const {
    return RawParams{n_users_, arrival_rates_, service_rates_, flip_prob_, post_busy_prob_,
                     sampling_cost_};
}

SystemParams validate_params(const RawParams& raw, const ValidationOptions& opts) {
    require(raw.n_users >= 1, "n_users must be at least 1");
    require(raw.n_users <= SubsetKey::kMaxUsers, "n_users exceeds the bitmask width");
    const auto n = static_cast<std::size_t>(raw.n_users);
    require(raw.arrival_rates.size() == n, "arrival_rates length must equal n_users");
    require(raw.service_rates.size() == n, "service_rates length must equal n_users");

    for (std::size_t i = 0; i < n; ++i) {
        const double p = raw.arrival_rates[i];
        require(std::isfinite(p), user_label("arrival_rates", i) + " must be finite");
        if (opts.allow_zero_arrivals) {
            require(p >= 0.0, user_label("arrival_rates", i) + ": arrival rate must be non-negative");
        } else {
            require(p > 0.0, user_label("arrival_rates", i) + ": arrival rate must be positive");
        }
        require(p < 1.0, user_label("arrival_rates", i) + ": arrival rate must be below 1");

        const double qi = raw.service_rates[i];
        require(std::isfinite(qi) && qi > 0.0,
                user_label("service_rates", i) + ": service rate must be positive");
        require(qi <= 1.0, user_label("service_rates", i) + ": service rate must not exceed 1");
    }
    require(std::isfinite(raw.flip_prob) && raw.flip_prob > 0.0 && raw.flip_prob < 1.0,
            "flip_prob q must lie in (0,1)");
    require(std::isfinite(raw.post_busy_prob) && raw.post_busy_prob > 0.0 &&
                raw.post_busy_prob < 1.0,
            "post_busy_prob s must lie in (0,1)");
    require(std::isfinite(raw.sampling_cost) && raw.sampling_cost >= 0.0,
            "sampling_cost L must be non-negative");

    SystemParams out;
    out.n_users_ = raw.n_users;
    out.arrival_rates_ = raw.arrival_rates;
    out.service_rates_ = raw.service_rates;
    out.flip_prob_ = raw.flip_prob;
    out.post_busy_prob_ = raw.post_busy_prob;
    out.sampling_cost_ = raw.sampling_cost;
    return out;
}

// ---------------------------------------------------------------------------
// SubsetKey

SubsetKey::SubsetKey(std::uint32_t mask) : mask_(mask) {
    if (mask == 0) throw ParamError("subset must be non-empty");
    if (mask >> kMaxUsers) throw ParamError("subset mask exceeds the supported user count");
}

SubsetKey SubsetKey::full(int n_users) {
    if (n_users < 1 || n_users > kMaxUsers) throw ParamError("invalid user count for full subset");
    return SubsetKey((std::uint32_t{1} << n_users) - 1u);
}

SubsetKey SubsetKey::single(int user) {
    if (user < 0 || user >= kMaxUsers) throw ParamError("user index out of range");
    return SubsetKey(std::uint32_t{1} << user);
}

SubsetKey SubsetKey::of(std::initializer_list<int> users) {
    std::uint32_t mask = 0;
    for (int u : users) {
        if (u < 0 || u >= kMaxUsers) throw ParamError("user index out of range");
        mask |= std::uint32_t{1} << u;
    }
    return SubsetKey(mask);
}

int SubsetKey::size() const { return std::popcount(mask_); }

std::vector<int> SubsetKey::members() const {
    std::vector<int> out;
    out.reserve(static_cast<std::size_t>(size()));
    for (int i = 0; i < kMaxUsers; ++i)
        if (contains(i)) out.push_back(i);
    return out;
}

int SubsetKey::span() const { return std::bit_width(mask_); }

std::string SubsetKey::to_string() const {
    std::ostringstream os;
    os << '{';
    bool first = true;
    for (int u : members()) {
        if (!first) os << ',';
        os << (u + 1);
        first = false;
    }
    os << '}';
    return os.str();
}

std::vector<SubsetKey> enumerate_subsets(int n_users, int cap) {
    if (n_users < 1) throw ParamError("n_users must be at least 1");
    if (n_users > cap) {
        std::ostringstream os;
        os << "n_users=" << n_users << " exceeds the subset cap of " << cap
           << " (2^N - 1 subsets); raise the cap explicitly to proceed";
        throw ParamError(os.str());
    }
    if (n_users > SubsetKey::kMaxUsers) throw ParamError("n_users exceeds the bitmask width");
    const std::uint32_t last = (std::uint32_t{1} << n_users) - 1u;
    std::vector<SubsetKey> out;
    out.reserve(last);
    for (std::uint32_t m = 1; m <= last; ++m) out.emplace_back(m);
    return out;
}

std::optional<SubsetKey> active_set(std::span<const std::int64_t> queues) {
    std::uint32_t mask = 0;
    for (std::size_t i = 0; i < queues.size(); ++i)
        if (queues[i] > 0) mask |= std::uint32_t{1} << i;
    if (mask == 0) return std::nullopt;
    return SubsetKey(mask);
}

std::string to_string(SchedulerKind kind) {
    return kind == SchedulerKind::MaxAge ? "max_age" : "adaptive_randomized";
}

SchedulerKind scheduler_kind_from_string(const std::string& name) {
    if (name == "max_age") return SchedulerKind::MaxAge;
    if (name == "adaptive_randomized" || name == "randomized") return SchedulerKind::AdaptiveRandomized;
    throw ParamError("unknown scheduler kind '" + name + "'");
}

// ---------------------------------------------------------------------------
// AdaptivePolicy

void validate_subset_policy(SubsetKey subset, const RandomizedSubsetPolicy& entry, int n_users,
                            SchedulerKind kind) {
    if (subset.span() > n_users) throw ParamError("subset " + subset.to_string() + " exceeds n_users");
    const double mu = entry.sampling_prob;
    if (!(std::isfinite(mu) && mu > 0.0 && mu <= 1.0))
        throw ParamError("sampling probability for " + subset.to_string() + " must lie in (0,1]");
    if (kind == SchedulerKind::MaxAge) {
        if (!entry.schedule_dist.empty())
            throw ParamError("max-age entries carry no scheduling distribution");
        return;
    }
    if (entry.schedule_dist.size() != static_cast<std::size_t>(n_users))
        throw ParamError("scheduling distribution for " + subset.to_string() + " must have length N");
    double sum = 0.0;
    for (int i = 0; i < n_users; ++i) {
        const double pi = entry.schedule_dist[static_cast<std::size_t>(i)];
        if (subset.contains(i)) {
            if (!(std::isfinite(pi) && pi > 0.0))
                throw ParamError("pi_" + std::to_string(i + 1) + " must be positive inside " +
                                 subset.to_string());
        } else if (pi != 0.0) {
            throw ParamError("pi_" + std::to_string(i + 1) + " must be zero outside " +
                             subset.to_string());
        }
        sum += pi;
    }
    if (std::abs(sum - 1.0) > 1e-12)
        throw ParamError("scheduling distribution for " + subset.to_string() + " must sum to 1");
}

AdaptivePolicy::AdaptivePolicy(SchedulerKind kind, int n_users) : kind_(kind), n_users_(n_users) {
    if (n_users < 1 || n_users > SubsetKey::kMaxUsers) throw ParamError("invalid n_users for policy");
    table_.resize(std::size_t{1} << n_users);
}

void AdaptivePolicy::set(SubsetKey subset, RandomizedSubsetPolicy entry) {
    validate_subset_policy(subset, entry, n_users_, kind_);
    auto& slot = table_[subset.mask()];
    if (!slot) ++count_;
    slot = std::move(entry);
}

void AdaptivePolicy::set_sampling_prob(SubsetKey subset, double mu) {
    auto entry = has(subset) ? at(subset) : RandomizedSubsetPolicy{};
    entry.sampling_prob = mu;
    set(subset, std::move(entry));
}

bool AdaptivePolicy::has(SubsetKey subset) const {
    return subset.mask() < table_.size() && table_[subset.mask()].has_value();
}

const RandomizedSubsetPolicy& AdaptivePolicy::at(SubsetKey subset) const {
    if (!has(subset)) throw std::out_of_range("policy has no entry for subset " + subset.to_string());
    return *table_[subset.mask()];
}

bool AdaptivePolicy::is_complete() const { return count_ == table_.size() - 1; }

std::vector<SubsetKey> AdaptivePolicy::subsets() const {
    std::vector<SubsetKey> out;
    for (std::uint32_t m = 1; m < table_.size(); ++m)
        if (table_[m]) out.emplace_back(m);
    return out;
}

double AdaptivePolicy::min_sampling_prob() const {
    double best = 1.0;
    for (std::uint32_t m = 1; m < table_.size(); ++m)
        if (table_[m]) best = std::min(best, table_[m]->sampling_prob);
    return best;
}

AdaptivePolicy AdaptivePolicy::uniform_randomized(int n_users, double mu) {
    AdaptivePolicy policy(SchedulerKind::AdaptiveRandomized, n_users);
    for (SubsetKey s : enumerate_subsets(n_users, SubsetKey::kMaxUsers)) {
        RandomizedSubsetPolicy entry;
        entry.sampling_prob = mu;
        entry.schedule_dist.assign(static_cast<std::size_t>(n_users), 0.0);
        const auto members = s.members();
        // Last member absorbs the rounding residue so the sum is exactly 1.
        double acc = 0.0;
        for (std::size_t k = 0; k + 1 < members.size(); ++k) {
            const double w = 1.0 / static_cast<double>(members.size());
            entry.schedule_dist[static_cast<std::size_t>(members[k])] = w;
            acc += w;
        }
        entry.schedule_dist[static_cast<std::size_t>(members.back())] = 1.0 - acc;
        policy.set(s, std::move(entry));
    }
    return policy;
}

AdaptivePolicy AdaptivePolicy::uniform_max_age(int n_users, double mu) {
    AdaptivePolicy policy(SchedulerKind::MaxAge, n_users);
    for (SubsetKey s : enumerate_subsets(n_users, SubsetKey::kMaxUsers))
        policy.set(s, RandomizedSubsetPolicy{mu, {}});
    return policy;
}

}  // namespace aojc
