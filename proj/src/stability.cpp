#include "aojc/stability.hpp"

#include <algorithm>
#include <cstdio>
#include <limits>
#include <random>

#include "aojc/analytics.hpp"
#include "aojc/parallel.hpp"
#include "aojc/simulator.hpp"

namespace aojc {

namespace {

double weighted_service(const SystemParams& params, SubsetKey subset, const RandomizedSubsetPolicy& e) {
    double acc = 0.0;
    for (int i : subset.members())
        acc += e.schedule_dist[static_cast<std::size_t>(i)] * params.service_rate(i);
    return acc;
}

double min_service(const SystemParams& params, SubsetKey subset) {
    double best = std::numeric_limits<double>::infinity();
    for (int i : subset.members()) best = std::min(best, params.service_rate(i));
    return best;
}

StabilityReport check_per_subset(const SystemParams& params, const AdaptivePolicy& policy,
                                 double epsilon, bool use_min_service) {
    if (policy.n_users() != params.n_users())
        throw ParamError("policy and system parameters disagree on n_users");
    StabilityReport r;
    r.kind = use_min_service ? SchedulerKind::MaxAge : SchedulerKind::AdaptiveRandomized;
    r.epsilon = epsilon;
    r.chi = chi(params.flip_prob(), params.post_busy_prob());
    const double free_bound = 1.0 - r.chi;
    const double load = params.total_arrival_rate();

    r.worst_margin = -std::numeric_limits<double>::infinity();
    for (SubsetKey s : enumerate_subsets(params.n_users(), SubsetKey::kMaxUsers)) {
        const auto& entry = policy.at(s);
        const double service =
            use_min_service ? min_service(params, s) : weighted_service(params, s, entry);
        const double margin = load - entry.sampling_prob * free_bound * service;
        r.margins.push_back(SubsetMargin{s, entry.sampling_prob, service, margin});
        if (margin > r.worst_margin) {
            r.worst_margin = margin;
            r.worst_subset = s;
        }
    }
    r.satisfied = r.worst_margin <= -epsilon;
    return r;
}

}  // namespace

StabilityReport prop1_check(const SystemParams& params, const AdaptivePolicy& policy, double epsilon) {
    if (policy.kind() != SchedulerKind::AdaptiveRandomized)
        throw ParamError("prop1_check needs an adaptive randomized policy");
    auto r = check_per_subset(params, policy, epsilon, false);
    r.corollary = cor1_check(params, policy, epsilon);
    return r;
}

Cor1Result cor1_check(const SystemParams& params, const AdaptivePolicy& policy, double epsilon) {
    Cor1Result c;
    c.mu_min = policy.min_sampling_prob();
    c.q_min = *std::min_element(params.service_rates().begin(), params.service_rates().end());
    const double free_bound = 1.0 - chi(params.flip_prob(), params.post_busy_prob());
    c.margin = params.total_arrival_rate() - c.mu_min * free_bound * c.q_min;
    c.satisfied = c.margin <= -epsilon;
    return c;
}

StabilityReport prop2_check(const SystemParams& params, const AdaptivePolicy& sampling_table,
                            double epsilon) {
    return check_per_subset(params, sampling_table, epsilon, true);
}

StabilityReport check_conditions(const SystemParams& params, const AdaptivePolicy& policy,
                                 double epsilon) {
    return policy.kind() == SchedulerKind::MaxAge ? prop2_check(params, policy, epsilon)
                                                  : prop1_check(params, policy, epsilon);
}

EmpiricalStability empirical_stability(const SystemParams& params, const AdaptivePolicy& policy,
                                       const EmpiricalSettings& settings) {
    EmpiricalStability out;
    out.seeds = settings.seeds;
    bool all_stable = true;
    bool any_unstable = false;
    SimOptions opts;
    opts.burn_in_fraction = 0.0;
    opts.trace_stride = settings.trace_stride;
    for (std::uint64_t seed : settings.seeds) {
        const auto m = run_simulation(params, policy, settings.horizon, seed, SimMode::open(), opts);
        auto d = drift_diagnostic(m.trace, params.total_arrival_rate(), settings.thresholds);
        all_stable = all_stable && d.verdict == DriftVerdict::Stable;
        any_unstable = any_unstable || d.verdict == DriftVerdict::Unstable;
        out.runs.push_back(d);
        if (settings.keep_traces) out.traces.push_back(m.trace);
    }
    out.verdict = any_unstable ? DriftVerdict::Unstable
                               : (all_stable ? DriftVerdict::Stable : DriftVerdict::Inconclusive);
    return out;
}

std::vector<SufficiencyRow> verify_sufficiency(const std::vector<SufficiencyCase>& cases,
                                               const EmpiricalSettings& settings, double epsilon,
                                               int workers, SimulationScope scope) {
    return parallel_map(cases.size(), workers, [&](std::size_t i) {
        const auto& c = cases[i];
        SufficiencyRow row{c.id, c.policy.kind(), check_conditions(c.params, c.policy, epsilon), {}, false};
        if (scope == SimulationScope::SatisfiedOnly && !row.conditions.satisfied) return row;
        row.empirical = empirical_stability(c.params, c.policy, settings);
        row.soundness_violation =
            row.conditions.satisfied && row.empirical.verdict == DriftVerdict::Unstable;
        return row;
    });
}

std::vector<SufficiencyCase> sample_random_cases(const RandomCaseSettings& cfg) {
    if (cfg.count < 0 || cfg.max_users < 1) throw ParamError("invalid random case settings");
    std::seed_seq seq{static_cast<std::uint32_t>(cfg.seed & 0xffffffffu),
                      static_cast<std::uint32_t>(cfg.seed >> 32), 0x73746162u};
    std::mt19937_64 gen(seq);
    auto uniform = [&](double lo, double hi) {
        return lo + (hi - lo) * (static_cast<double>(gen() >> 11) * 0x1.0p-53);
    };

    std::vector<SufficiencyCase> out;
    out.reserve(static_cast<std::size_t>(cfg.count) * 2);
    for (int c = 0; c < cfg.count; ++c) {
        RawParams raw;
        raw.n_users = 1 + static_cast<int>(gen() % static_cast<std::uint64_t>(cfg.max_users));
        raw.flip_prob = uniform(cfg.q_lo, cfg.q_hi);
        raw.post_busy_prob = uniform(cfg.s_lo, cfg.s_hi);
        raw.sampling_cost = 5.0;
        for (int i = 0; i < raw.n_users; ++i) raw.service_rates.push_back(uniform(cfg.service_lo, cfg.service_hi));

        AdaptivePolicy randomized(SchedulerKind::AdaptiveRandomized, raw.n_users);
        AdaptivePolicy max_age(SchedulerKind::MaxAge, raw.n_users);
        const double free_bound = 1.0 - chi(raw.flip_prob, raw.post_busy_prob);
        double capacity = std::numeric_limits<double>::infinity();
        for (SubsetKey s : enumerate_subsets(raw.n_users)) {
            RandomizedSubsetPolicy e;
            e.sampling_prob = uniform(cfg.mu_lo, cfg.mu_hi);
            e.schedule_dist.assign(static_cast<std::size_t>(raw.n_users), 0.0);
            const auto members = s.members();
            double total = 0.0;
            for (int u : members) total += (e.schedule_dist[static_cast<std::size_t>(u)] = uniform(0.05, 1.0));
            double acc = 0.0;
            for (std::size_t k = 0; k + 1 < members.size(); ++k) {
                auto& w = e.schedule_dist[static_cast<std::size_t>(members[k])];
                w /= total;
                acc += w;
            }
            e.schedule_dist[static_cast<std::size_t>(members.back())] = 1.0 - acc;
            double service = 0.0;
            for (int u : members) service += e.schedule_dist[static_cast<std::size_t>(u)] * raw.service_rates[static_cast<std::size_t>(u)];
            capacity = std::min(capacity, e.sampling_prob * free_bound * service);
            max_age.set(s, RandomizedSubsetPolicy{e.sampling_prob, {}});
            randomized.set(s, std::move(e));
        }

        const double total_rate = uniform(cfg.load_lo, cfg.load_hi) * capacity;
        std::vector<double> split(static_cast<std::size_t>(raw.n_users));
        double split_total = 0.0;
        for (auto& w : split) split_total += (w = uniform(0.05, 1.0));
        for (auto w : split) raw.arrival_rates.push_back(total_rate * w / split_total);

        const auto params = validate_params(raw);
        char id[32];
        std::snprintf(id, sizeof id, "r%04d", c);
        out.push_back(SufficiencyCase{std::string(id) + "/randomized", params, std::move(randomized)});
        out.push_back(SufficiencyCase{std::string(id) + "/max_age", params, std::move(max_age)});
    }
    return out;
}

}  // namespace aojc
