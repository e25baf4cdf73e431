#include "aojc/experiments.hpp"

#include <boost/math/distributions/students_t.hpp>

#include <cmath>
#include <numeric>

#include "aojc/io.hpp"
#include "aojc/parallel.hpp"

namespace aojc {

std::string to_string(RowVerdict v) {
    switch (v) {
        case RowVerdict::Pass: return "pass";
        case RowVerdict::Fail: return "fail";
        case RowVerdict::Info: return "info";
    }
    return "info";
}

namespace {

double mean(const std::vector<double>& xs) {
    return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

double rel_error(double closed, double empirical) {
    return std::abs(empirical - closed) / std::abs(closed);
}

std::vector<std::uint64_t> derived_seeds(std::uint64_t master, const std::vector<std::uint64_t>& seeds) {
    std::vector<std::uint64_t> out;
    out.reserve(seeds.size());
    for (auto s : seeds) out.push_back(derive_seed(master, s));
    return out;
}

SystemParams make_params(int n, std::vector<double> p, std::vector<double> qs, double q, double s, double L) {
    return validate_params(RawParams{n, std::move(p), std::move(qs), q, s, L});
}

struct SaturatedEstimate {
    std::vector<double> delta_hat;  // per user, mean over seeds
    double sampling_cost;
};

SaturatedEstimate simulate_saturated(const VerifyCase& c, const VerifySettings& settings,
                                     std::uint64_t master_seed) {
    AdaptivePolicy policy(c.kind, c.params.n_users());
    RandomizedSubsetPolicy entry{c.mu, c.kind == SchedulerKind::MaxAge ? std::vector<double>{} : c.pi};
    policy.set(c.subset, entry);
    const auto n = static_cast<std::size_t>(c.params.n_users());
    SaturatedEstimate est{std::vector<double>(n, 0.0), 0.0};
    for (auto seed : derived_seeds(master_seed, settings.seeds)) {
        const auto m = run_simulation(c.params, policy, settings.horizon, seed,
                                      SimMode::saturated_on(c.subset), SimOptions::no_burn_in());
        for (std::size_t i = 0; i < n; ++i) est.delta_hat[i] += m.delta_hat[i];
        est.sampling_cost += m.sampling_cost;
    }
    const auto k = static_cast<double>(settings.seeds.size());
    for (auto& d : est.delta_hat) d /= k;
    est.sampling_cost /= k;
    return est;
}

}  // namespace

// ---------------------------------------------------------------------------

std::vector<VerifyCase> default_verify_cases() {
    using K = SchedulerKind;
    const auto one = [](double q, double s, double qi) { return make_params(1, {0.1}, {qi}, q, s, 5.0); };
    const auto pair = make_params(2, {0.1, 0.1}, {0.4, 0.8}, 0.5, 0.5, 5.0);
    const auto pair_b = make_params(2, {0.1, 0.1}, {0.4, 0.8}, 0.3, 0.6, 5.0);
    const auto four = make_params(4, {0.01, 0.02, 0.05, 0.06}, {0.1, 0.4, 0.6, 0.9}, 0.5, 0.5, 5.0);
    const auto four_b = make_params(4, {0.01, 0.02, 0.05, 0.06}, {0.3, 0.5, 0.7, 0.95}, 0.3, 0.6, 5.0);

    const SubsetKey s1 = SubsetKey::single(0);
    const SubsetKey s12 = SubsetKey::of({0, 1});
    const SubsetKey full = SubsetKey::full(4);
    const SubsetKey s24 = SubsetKey::of({1, 3});
    const SubsetKey s13 = SubsetKey::of({0, 2});

    return {
        {"single_mu1_q050", one(0.5, 0.5, 1.0), s1, K::AdaptiveRandomized, 1.0, {1.0}},
        {"single_mu1_q025", one(0.25, 0.5, 1.0), s1, K::AdaptiveRandomized, 1.0, {1.0}},
        {"single_mu06_q030", one(0.3, 0.4, 0.5), s1, K::AdaptiveRandomized, 0.6, {1.0}},
        {"pair_mu07_q050", pair, s12, K::AdaptiveRandomized, 0.7, {0.3, 0.7}},
        {"pair_mu07_q030", pair_b, s12, K::AdaptiveRandomized, 0.7, {0.3, 0.7}},
        {"full_mu06_uniform", four, full, K::AdaptiveRandomized, 0.6, {0.25, 0.25, 0.25, 0.25}},
        {"full_mu08_skewed", four_b, full, K::AdaptiveRandomized, 0.8, {0.1, 0.2, 0.3, 0.4}},
        {"proper_13_mu05", four, s13, K::AdaptiveRandomized, 0.5, {0.6, 0.0, 0.4, 0.0}},

        {"ma_single_mu1_q050", one(0.5, 0.5, 1.0), s1, K::MaxAge, 1.0, {}},
        {"ma_single_mu06_q030", one(0.3, 0.4, 0.5), s1, K::MaxAge, 0.6, {}},
        {"ma_pair_mu05_q050", pair, s12, K::MaxAge, 0.5, {}},
        {"ma_pair_mu1_q030", pair_b, s12, K::MaxAge, 1.0, {}},
        {"ma_full_mu06", four, full, K::MaxAge, 0.6, {}},
        {"ma_full_mu1", four, full, K::MaxAge, 1.0, {}},
        {"ma_full_mu08_q030", four_b, full, K::MaxAge, 0.8, {}},
        {"ma_proper_24_mu1", four, s24, K::MaxAge, 1.0, {}},
        {"ma_proper_24_mu07", four, s24, K::MaxAge, 0.7, {}},
    };
}

VerifyReport run_verify(const std::vector<VerifyCase>& cases, const VerifySettings& settings,
                        std::uint64_t master_seed) {
    auto estimates = parallel_map(cases.size(), settings.workers, [&](std::size_t i) {
        return simulate_saturated(cases[i], settings, master_seed);
    });

    VerifyReport report;
    auto judge = [&](double err) {
        const auto v = err <= settings.tolerance ? RowVerdict::Pass : RowVerdict::Fail;
        if (v == RowVerdict::Fail) report.all_pass = false;
        return v;
    };

    for (std::size_t c = 0; c < cases.size(); ++c) {
        const auto& vc = cases[c];
        const auto& est = estimates[c];
        SubsystemSpec spec{vc.subset, vc.params, vc.mu, vc.pi};

        if (vc.kind == SchedulerKind::AdaptiveRandomized) {
            for (int k : vc.subset.members()) {
                const double cf = thm1_age(spec, k);
                const double em = est.delta_hat[static_cast<std::size_t>(k)];
                const double err = rel_error(cf, em);
                report.rows.push_back({vc.id, vc.subset, k + 1, "thm1_age", cf, em, err, CostTag::Exact, judge(err)});
            }
            const double bound = thm2_sampling_ub(spec);
            report.rows.push_back({vc.id, vc.subset, 0, "thm2_sampling_ub", bound, est.sampling_cost,
                                   rel_error(bound, est.sampling_cost), CostTag::UpperBound, RowVerdict::Info});
            report.bounds.push_back({vc.id, est.sampling_cost, bound, est.sampling_cost > bound});
            continue;
        }

        const auto reading = UserCountReading::CardinalityOfS;
        double age_err_card = 0.0;
        for (int k : vc.subset.members()) {
            const double cf = thm3_age_maxage(spec, k, reading);
            const double em = est.delta_hat[static_cast<std::size_t>(k)];
            const double err = rel_error(cf, em);
            age_err_card = std::max(age_err_card, err);
            report.rows.push_back({vc.id, vc.subset, k + 1, "thm3_age_maxage", cf, em, err, CostTag::Exact, judge(err)});
        }
        const double cost_cf = thm4_sampling_maxage(spec, reading);
        const double cost_err_card = rel_error(cost_cf, est.sampling_cost);
        report.rows.push_back({vc.id, vc.subset, 0, "thm4_sampling_maxage", cost_cf, est.sampling_cost,
                               cost_err_card, CostTag::Exact, judge(cost_err_card)});

        if (vc.subset.size() < vc.params.n_users()) {
            const auto total = UserCountReading::TotalN;
            double age_err_total = 0.0;
            for (int k : vc.subset.members()) {
                const double cf = thm3_age_maxage(spec, k, total);
                const double em = est.delta_hat[static_cast<std::size_t>(k)];
                const double err = rel_error(cf, em);
                age_err_total = std::max(age_err_total, err);
                report.rows.push_back({vc.id, vc.subset, k + 1, "thm3_age_maxage_total_N", cf, em, err,
                                       CostTag::Exact, RowVerdict::Info});
            }
            const double cf_total = thm4_sampling_maxage(spec, total);
            const double cost_err_total = rel_error(cf_total, est.sampling_cost);
            report.rows.push_back({vc.id, vc.subset, 0, "thm4_sampling_maxage_total_N", cf_total,
                                   est.sampling_cost, cost_err_total, CostTag::Exact, RowVerdict::Info});
            report.readings.push_back({vc.id, age_err_card, age_err_total, cost_err_card, cost_err_total,
                                       age_err_card + cost_err_card <= age_err_total + cost_err_total
                                           ? to_string(UserCountReading::CardinalityOfS)
                                           : to_string(UserCountReading::TotalN)});
        }
    }
    return report;
}

std::string verify_csv(const VerifyReport& report) {
    CsvWriter csv({"case_id", "subset", "user", "thm", "closed_form", "empirical", "rel_error", "tag", "verdict"});
    for (const auto& r : report.rows) {
        csv.field(r.case_id).field(r.subset.to_string()).field(r.user).field(r.thm).field(r.closed_form)
            .field(r.empirical).field(r.rel_error).field(to_string(r.tag)).field(to_string(r.verdict));
        csv.end_row();
    }
    return csv.str();
}

nlohmann::json verify_findings(const VerifyReport& report) {
    nlohmann::json j;
    j["all_pass"] = report.all_pass;
    auto failures = nlohmann::json::array();
    for (const auto& r : report.rows)
        if (r.verdict == RowVerdict::Fail)
            failures.push_back({{"case_id", r.case_id}, {"user", r.user}, {"thm", r.thm},
                                {"closed_form", r.closed_form}, {"empirical", r.empirical},
                                {"rel_error", r.rel_error}});
    j["failures"] = failures;
    auto readings = nlohmann::json::array();
    for (const auto& f : report.readings)
        readings.push_back({{"case_id", f.case_id},
                            {"age_rel_error_cardinality_of_S", f.age_error_cardinality},
                            {"age_rel_error_total_N", f.age_error_total},
                            {"cost_rel_error_cardinality_of_S", f.cost_error_cardinality},
                            {"cost_rel_error_total_N", f.cost_error_total},
                            {"closer_reading", f.closer}});
    j["user_count_reading"] = readings;
    auto bounds = nlohmann::json::array();
    int exceed = 0;
    for (const auto& b : report.bounds) {
        bounds.push_back({{"case_id", b.case_id}, {"empirical_sampling_cost", b.empirical},
                          {"sampling_upper_bound", b.bound}, {"empirical_exceeds_bound", b.empirical_exceeds_bound}});
        exceed += b.empirical_exceeds_bound ? 1 : 0;
    }
    j["sampling_bound"] = {{"cases", bounds}, {"cases_exceeding_bound", exceed}};
    return j;
}

// ---------------------------------------------------------------------------

Fig4Settings default_fig4_settings() {
    Fig4Settings s;
    s.base = RawParams{4, {}, {0.1, 0.4, 0.6, 0.9}, 0.5, 0.5, 5.0};
    for (int k = 1; k <= 9; ++k) s.q_grid.push_back(k / 10.0);
    s.arrivals = {{"p", {0.01, 0.02, 0.05, 0.06}}, {"p_tilde", {0.05, 0.2, 0.5, 0.6}}};
    return s;
}

double ci_halfwidth(const std::vector<double>& xs) {
    if (xs.size() < 2) return 0.0;
    const double m = mean(xs);
    double ss = 0.0;
    for (double x : xs) ss += (x - m) * (x - m);
    const double n = static_cast<double>(xs.size());
    const double sd = std::sqrt(ss / (n - 1.0));
    const boost::math::students_t dist(n - 1.0);
    return boost::math::quantile(boost::math::complement(dist, 0.025)) * sd / std::sqrt(n);
}

std::vector<Fig4Row> run_fig4(const Fig4Settings& settings, std::uint64_t master_seed) {
    if (settings.q_grid.empty()) throw ParamError("fig4 needs a non-empty q grid");
    if (settings.arrivals.empty()) throw ParamError("fig4 needs at least one arrival configuration");
    const auto seeds = derived_seeds(master_seed, settings.seeds);

    auto per_q = parallel_map(settings.q_grid.size(), settings.workers, [&](std::size_t qi) {
        const double q = settings.q_grid[qi];
        std::vector<Fig4Row> rows;
        std::string policy_name = "optimizer";
        std::string config_name = "-";
        try {
            RawParams raw = settings.base;
            raw.flip_prob = q;
            raw.arrival_rates = settings.arrivals.front().rates;
            const auto design = validate_params(raw);
            auto opt = settings.optimizer;
            opt.workers = 1;
            const auto policies = {build_pi_c(design, opt).policy, build_pibar_c(design, opt).policy};
            for (const auto& arrival : settings.arrivals) {
                config_name = arrival.name;
                policy_name = "-";
                raw.arrival_rates = arrival.rates;
                const auto params = validate_params(raw);
                for (const auto& policy : policies) {
                    policy_name = to_string(policy.kind());
                    std::vector<double> total, age, sampling;
                    SimOptions opts;
                    opts.burn_in_fraction = settings.burn_in_fraction;
                    for (auto seed : seeds) {
                        const auto m = run_simulation(params, policy, settings.horizon, seed, SimMode::open(), opts);
                        if (!std::isfinite(m.total_cost)) throw ExperimentError("non-finite total cost");
                        total.push_back(m.total_cost);
                        age.push_back(m.delta_avg);
                        sampling.push_back(m.sampling_cost);
                    }
                    rows.push_back(Fig4Row{q, policy.kind(), arrival.name, mean(total), mean(age),
                                           mean(sampling), ci_halfwidth(total)});
                }
            }
        } catch (const std::exception& e) {
            throw ExperimentError("fig4 cell failed (q=" + format_double(q) + ", policy=" + policy_name +
                                  ", arrival_config=" + config_name + "): " + e.what());
        }
        return rows;
    });

    std::vector<Fig4Row> out;
    for (auto& rows : per_q) out.insert(out.end(), rows.begin(), rows.end());
    return out;
}

std::string fig4_csv(const std::vector<Fig4Row>& rows) {
    CsvWriter csv({"q", "policy", "arrival_config", "total_cost", "delta_avg", "sampling_cost", "ci_halfwidth"});
    for (const auto& r : rows) {
        csv.field(r.q).field(to_string(r.policy)).field(r.arrival_config).field(r.total_cost)
            .field(r.delta_avg).field(r.sampling_cost).field(r.ci_halfwidth);
        csv.end_row();
    }
    return csv.str();
}

// ---------------------------------------------------------------------------

std::vector<StabilityCaseConfig> default_stability_cases() {
    return {
        {"config_A", make_params(4, {0.09, 0.09, 0.12, 0.14}, {0.55, 0.73, 0.84, 0.91}, 0.35, 0.3, 5.0)},
        {"config_B", make_params(4, {0.04, 0.05, 0.06, 0.06}, {0.4, 0.6, 0.8, 0.94}, 0.5, 0.5, 5.0)},
        {"zero_arrivals", validate_params(RawParams{4, {0.0, 0.0, 0.0, 0.0}, {0.4, 0.6, 0.8, 0.94}, 0.5, 0.5, 5.0},
                                          ValidationOptions{true})},
    };
}

std::vector<StabilityCaseResult> run_stability_cases(const std::vector<StabilityCaseConfig>& cases,
                                                     const StabilitySettings& settings,
                                                     std::uint64_t master_seed) {
    EmpiricalSettings empirical = settings.empirical;
    empirical.seeds = derived_seeds(master_seed, settings.empirical.seeds);
    return parallel_map(cases.size(), settings.workers, [&](std::size_t i) {
        const auto& c = cases[i];
        auto opt = settings.optimizer;
        opt.workers = 1;
        StabilityCaseResult res{c.id, c.params, {}};
        for (const auto& policy : {build_pi_c(c.params, opt).policy, build_pibar_c(c.params, opt).policy}) {
            res.policies.push_back(StabilityPolicyResult{policy.kind(),
                                                         check_conditions(c.params, policy, settings.epsilon),
                                                         empirical_stability(c.params, policy, empirical)});
        }
        return res;
    });
}

std::string stability_margins_csv(const std::vector<StabilityCaseResult>& results) {
    CsvWriter csv({"config_id", "subset_mask", "margin", "satisfied", "q_min_or_weighted", "policy_kind"});
    for (const auto& r : results)
        for (const auto& p : r.policies)
            for (const auto& m : p.conditions.margins) {
                csv.field(r.id).field(static_cast<std::int64_t>(m.subset.mask())).field(m.margin)
                    .field(m.margin <= -p.conditions.epsilon).field(m.service_term).field(to_string(p.kind));
                csv.end_row();
            }
    return csv.str();
}

std::string stability_verdicts_csv(const std::vector<StabilityCaseResult>& results) {
    CsvWriter csv({"config_id", "policy_kind", "conditions_satisfied", "worst_margin", "worst_subset_mask",
                   "cor1_margin", "cor1_satisfied", "empirical_verdict", "seed", "seed_verdict", "slope",
                   "quartile_ratio", "max_total_queue"});
    for (const auto& r : results)
        for (const auto& p : r.policies)
            for (std::size_t k = 0; k < p.empirical.runs.size(); ++k) {
                const auto& d = p.empirical.runs[k];
                const auto& cor = p.conditions.corollary;
                csv.field(r.id).field(to_string(p.kind)).field(p.conditions.satisfied)
                    .field(p.conditions.worst_margin)
                    .field(static_cast<std::int64_t>(p.conditions.worst_subset ? p.conditions.worst_subset->mask() : 0))
                    .field(cor ? format_double(cor->margin) : std::string("NA"))
                    .field(cor ? (cor->satisfied ? "true" : "false") : "NA")
                    .field(to_string(p.empirical.verdict)).field(p.empirical.seeds[k]).field(to_string(d.verdict))
                    .field(d.slope).field(d.quartile_ratio).field(d.max_value);
                csv.end_row();
            }
    return csv.str();
}

SoundnessSummary run_soundness_sweep(const RandomCaseSettings& sampler, const EmpiricalSettings& empirical,
                                     double epsilon, int workers) {
    const auto cases = sample_random_cases(sampler);
    SoundnessSummary s;
    s.configs = sampler.count;
    s.rows = verify_sufficiency(cases, empirical, epsilon, workers, SimulationScope::SatisfiedOnly);
    for (const auto& c : cases) s.params.push_back(c.params);
    for (const auto& row : s.rows) {
        if (row.kind == SchedulerKind::AdaptiveRandomized) {
            s.prop1_satisfied += row.conditions.satisfied ? 1 : 0;
            const bool cor = row.conditions.corollary && row.conditions.corollary->satisfied;
            s.cor1_satisfied += cor ? 1 : 0;
            s.cor1_without_prop1 += (cor && !row.conditions.satisfied) ? 1 : 0;
        } else {
            s.prop2_satisfied += row.conditions.satisfied ? 1 : 0;
        }
        s.violations += row.soundness_violation ? 1 : 0;
    }
    return s;
}

std::string soundness_csv(const SoundnessSummary& summary) {
    CsvWriter csv({"case_id", "policy_kind", "n_users", "flip_prob", "post_busy_prob", "total_arrival_rate",
                   "worst_margin", "satisfied", "cor1_satisfied", "empirical_verdict", "soundness_violation"});
    for (std::size_t k = 0; k < summary.rows.size(); ++k) {
        const auto& r = summary.rows[k];
        const auto& p = summary.params[k];
        const auto& cor = r.conditions.corollary;
        csv.field(r.id).field(to_string(r.kind)).field(p.n_users()).field(p.flip_prob())
            .field(p.post_busy_prob()).field(p.total_arrival_rate());
        csv.field(r.conditions.worst_margin).field(r.conditions.satisfied)
            .field(cor ? (cor->satisfied ? "true" : "false") : "NA")
            .field(r.empirical.runs.empty() ? std::string("not_simulated") : to_string(r.empirical.verdict))
            .field(r.soundness_violation);
        csv.end_row();
    }
    return csv.str();
}

}  // namespace aojc
