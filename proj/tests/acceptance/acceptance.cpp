// One line per acceptance criterion; non-zero exit if any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <map>
#include <set>
#include <string>
#include <thread>

#include "aojc/analytics.hpp"
#include "aojc/experiments.hpp"
#include "aojc/optimizer.hpp"
#include "aojc/stability.hpp"

using namespace aojc;

namespace {

int g_failed = 0;

void report(const std::string& name, bool ok, const std::string& detail) {
    std::printf("%s %s: %s\n", ok ? "PASS" : "FAIL", name.c_str(), detail.c_str());
    std::fflush(stdout);
    if (!ok) ++g_failed;
}

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0) {
    char buf[256];
    std::snprintf(buf, sizeof buf, f, a, b, c);
    return buf;
}

int workers() { return std::max(1u, std::thread::hardware_concurrency()); }

SystemParams params(std::vector<double> p, std::vector<double> qs, double q, double s, double L = 5.0) {
    const int n = static_cast<int>(qs.size());
    return validate_params(RawParams{n, std::move(p), std::move(qs), q, s, L});
}

SubsystemSpec singleton(double mu, double q1, double q, double s, double L, bool max_age) {
    return SubsystemSpec{SubsetKey::single(0), params({0.1}, {q1}, q, s, L), mu,
                         max_age ? std::vector<double>{} : std::vector<double>{1.0}};
}

// ---------------------------------------------------------------------------

void hand_values() {
    constexpr double tol = 1e-9;
    const auto t0 = std::chrono::steady_clock::now();
    const double a = thm1_age(singleton(1.0, 1.0, 0.5, 0.5, 5.0, false), 0);
    const double b = thm1_age(singleton(1.0, 1.0, 0.25, 0.5, 5.0, false), 0);
    const double c = thm2_sampling_ub(singleton(1.0, 1.0, 0.5, 0.5, 5.0, false));
    const double d = thm3_age_maxage(singleton(1.0, 1.0, 0.5, 0.5, 5.0, true), 0);
    const double e = thm4_sampling_maxage(singleton(1.0, 1.0, 0.5, 0.5, 5.0, true));
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const double err = std::max({std::abs(a - 2.0), std::abs(b - 11.0 / 3.0), std::abs(c - 4.0), std::abs(d - 2.0),
                                 std::abs(e - 5.0)});
    report("hand_values", err <= tol && secs < 1.0,
           fmt("max abs error %.3g (tol 1e-9), %.3g s (limit 1 s)", err, secs));
}

void singleton_identity() {
    double worst = 0.0, at_mu = 0.0, at_q = 0.0;
    for (double mu : {0.2, 0.4, 0.6, 0.8, 1.0})
        for (double q1 : {0.2, 0.4, 0.6, 0.8, 1.0}) {
            const double r = thm1_age(singleton(mu, q1, 0.5, 0.5, 5.0, false), 0);
            const double m = thm3_age_maxage(singleton(mu, q1, 0.5, 0.5, 5.0, true), 0);
            if (std::abs(r - m) > worst) {
                worst = std::abs(r - m);
                at_mu = mu;
                at_q = q1;
            }
        }
    report("singleton_identity", worst <= 1e-9,
           fmt("max |randomized - max-age| age %.6g at mu=%.1f q1=%.1f over 5x5 grid (tol 1e-9)", worst, at_mu, at_q));
}

void chi_properties() {
    double jump = 0.0;
    for (int k = 1; k <= 99; ++k) {
        const double s = k / 100.0;
        for (double h = 1e-2; h >= 1e-15; h /= 10.0)
            jump = std::max({jump, std::abs(chi(0.5 - h, s) - chi(0.5, s)) - 2.0 * h,
                             std::abs(chi(0.5 + h, s) - chi(0.5, s)) - 2.0 * h});
    }
    // Jumps are measured net of the linear change allowed over the step.
    bool in_range = true;
    double lo = 1.0, hi = 0.0;
    for (int i = 1; i <= 50; ++i)
        for (int j = 1; j <= 50; ++j) {
            const double v = chi(i / 51.0, j / 51.0);
            lo = std::min(lo, v);
            hi = std::max(hi, v);
            in_range = in_range && v > 0.0 && v < 1.0;
        }
    report("chi_properties", jump <= 1e-12 && in_range,
           fmt("excess jump at q=1/2 %.3g (tol 1e-12); range over 50x50 grid [%.4f, %.4f] inside (0,1)",
               std::max(jump, 0.0), lo, hi));
}

// ---------------------------------------------------------------------------

std::string verify_twice_and_check() {
    VerifySettings vs;  // T = 1e6, seeds {1,2,3}, 2% relative
    vs.workers = workers();
    const auto cases = default_verify_cases();
    const auto rep = run_verify(cases, vs, 1);

    std::map<std::string, const VerifyCase*> by_id;
    for (const auto& c : cases) by_id[c.id] = &c;

    // thm1 per user and thm4, on every case.
    int rows = 0, failed = 0;
    double worst = 0.0;
    std::set<std::string> ids;
    std::set<std::size_t> sizes;
    bool heterogeneous = false;
    for (const auto& r : rep.rows) {
        if (r.thm != "thm1_age" && r.thm != "thm4_sampling_maxage") continue;
        ++rows;
        failed += r.verdict == RowVerdict::Fail;
        worst = std::max(worst, r.rel_error);
        ids.insert(r.case_id);
        const auto& c = *by_id.at(r.case_id);
        const auto m = c.subset.members();
        sizes.insert(m.size());
        for (int i : m)
            if (c.params.service_rate(i) != c.params.service_rate(m.front())) heterogeneous = true;
    }
    const bool shapes = sizes.count(1) && sizes.count(2) && sizes.count(4);
    report("theorem_vs_simulation",
           failed == 0 && ids.size() >= 6 && shapes && heterogeneous,
           std::to_string(rows) + " rows over " + std::to_string(ids.size()) + " cases, " + std::to_string(failed) +
               " beyond 2%" + fmt(" (worst %.4f)", worst) + (shapes ? ", sizes 1/2/4" : ", missing sizes") +
               (heterogeneous ? ", heterogeneous rates" : ""));

    // Max-age age on the full set.
    int full_rows = 0, full_failed = 0;
    double full_worst = 0.0;
    std::string worst_case;
    for (const auto& r : rep.rows) {
        if (r.thm != "thm3_age_maxage") continue;
        const auto& c = *by_id.at(r.case_id);
        if (r.subset != SubsetKey::full(c.params.n_users())) continue;
        ++full_rows;
        full_failed += r.verdict == RowVerdict::Fail;
        if (r.rel_error > full_worst) {
            full_worst = r.rel_error;
            worst_case = r.case_id;
        }
    }
    report("maxage_age_full_set_vs_simulation", full_rows > 0 && full_failed == 0,
           std::to_string(full_failed) + "/" + std::to_string(full_rows) + " full-set rows beyond 2%" +
               fmt(", worst %.4f", full_worst) + " (" + worst_case + ")");

    // n = |S| versus n = N on proper subsets.
    int card = 0;
    for (const auto& f : rep.readings) card += f.closer == to_string(UserCountReading::CardinalityOfS);
    const bool agree = card == 0 || card == static_cast<int>(rep.readings.size());
    report("user_count_reading_recorded", !rep.readings.empty() && agree,
           std::to_string(card) + "/" + std::to_string(rep.readings.size()) +
               " proper-subset cases closer under n = |S|");

    // Sampling bound pairs for every randomized case.
    std::size_t randomized = 0;
    for (const auto& c : cases) randomized += c.kind == SchedulerKind::AdaptiveRandomized;
    bool complete = rep.bounds.size() == randomized;
    int exceed = 0;
    for (const auto& b : rep.bounds) {
        complete = complete && std::isfinite(b.empirical) && std::isfinite(b.bound);
        exceed += b.empirical_exceeds_bound;
    }
    report("sampling_bound_report", complete,
           std::to_string(rep.bounds.size()) + "/" + std::to_string(randomized) +
               " randomized cases reported; empirical above bound in " + std::to_string(exceed));

    return verify_csv(rep) + verify_findings(rep).dump();
}

// ---------------------------------------------------------------------------

void soundness() {
    RandomCaseSettings rs;  // 1000 configs
    EmpiricalSettings es;   // T = 2e5, 3 seeds
    const auto sum = run_soundness_sweep(rs, es, 0.01, workers());
    report("stability_soundness", sum.configs >= 1000 && sum.violations == 0,
           std::to_string(sum.configs) + " configs, " + std::to_string(sum.prop1_satisfied) + " randomized and " +
               std::to_string(sum.prop2_satisfied) + " max-age satisfied at eps=0.01, " +
               std::to_string(sum.violations) + " satisfied-but-unstable");
    report("uniform_implies_per_subset", sum.cor1_without_prop1 == 0,
           std::to_string(sum.cor1_satisfied) + " uniform-condition hits, " +
               std::to_string(sum.cor1_without_prop1) + " without the per-subset condition");
}

void case_studies() {
    StabilitySettings st;
    st.workers = workers();
    const auto all = default_stability_cases();
    const auto res = run_stability_cases({all[0], all[1]}, st, 1);
    auto describe = [](const StabilityCaseResult& r) {
        std::string out;
        for (const auto& p : r.policies)
            out += " " + to_string(p.kind) + "=" + to_string(p.empirical.verdict) +
                   (p.conditions.satisfied ? "/satisfied" : "/unsatisfied") + fmt("(margin %.3f)", p.conditions.worst_margin);
        return out;
    };
    bool a_ok = true, b_ok = true;
    for (const auto& p : res[0].policies)
        a_ok = a_ok && !p.conditions.satisfied && p.empirical.verdict == DriftVerdict::Unstable;
    for (const auto& p : res[1].policies)
        b_ok = b_ok && !p.conditions.satisfied && p.empirical.verdict == DriftVerdict::Stable;
    report("case_study_A", a_ok, "expect unsatisfied and Unstable under both:" + describe(res[0]));
    report("case_study_B", b_ok, "expect unsatisfied and Stable under both:" + describe(res[1]));
}

// ---------------------------------------------------------------------------

std::string fig4() {
    auto s = default_fig4_settings();  // T = 5e5, 5 seeds, 9 q points
    s.workers = workers();
    const auto rows = run_fig4(s, 1);
    const auto csv = fig4_csv(rows);

    // (arrival, kind) -> rows in q order
    std::map<std::pair<std::string, SchedulerKind>, std::vector<Fig4Row>> series;
    for (const auto& r : rows) series[{r.arrival_config, r.policy}].push_back(r);
    const auto& tilde_r = series.at({"p_tilde", SchedulerKind::AdaptiveRandomized});
    const auto& tilde_m = series.at({"p_tilde", SchedulerKind::MaxAge});
    const auto& low_r = series.at({"p", SchedulerKind::AdaptiveRandomized});
    const auto& low_m = series.at({"p", SchedulerKind::MaxAge});

    // (i) max-age no worse up to the summed half-widths; positive mean gap.
    bool ok1 = true;
    double gap = 0.0;
    for (std::size_t k = 0; k < tilde_r.size(); ++k) {
        ok1 = ok1 && tilde_m[k].total_cost <= tilde_r[k].total_cost + tilde_r[k].ci_halfwidth + tilde_m[k].ci_halfwidth;
        gap += tilde_r[k].total_cost - tilde_m[k].total_cost;
    }
    gap /= static_cast<double>(tilde_r.size());
    report("fig4_high_load_maxage_better", ok1 && gap > 0.0 && tilde_r.size() >= 5,
           std::to_string(tilde_r.size()) + " q points" + fmt(", mean gap %.3f", gap));

    // (ii) relative gap under low load, relative to the randomized cost.
    double worst = 0.0, at = 0.0;
    for (std::size_t k = 0; k < low_r.size(); ++k) {
        const double rel = std::abs(low_m[k].total_cost - low_r[k].total_cost) / low_r[k].total_cost;
        if (rel > worst) {
            worst = rel;
            at = low_r[k].q;
        }
    }
    report("fig4_low_load_similar", worst <= 0.05, fmt("max relative gap %.4f at q=%.1f (tol 0.05)", worst, at));

    // (iii) cost[k+1] <= cost[k] + ci[k] + ci[k+1] for all four series.
    bool ok3 = true;
    std::string where;
    for (const auto& [key, seq] : series)
        for (std::size_t k = 0; k + 1 < seq.size(); ++k)
            if (seq[k + 1].total_cost > seq[k].total_cost + seq[k].ci_halfwidth + seq[k + 1].ci_halfwidth) {
                ok3 = false;
                where += " " + key.first + "/" + to_string(key.second) + fmt("@q=%.1f", seq[k + 1].q);
            }
    report("fig4_cost_nonincreasing_in_q", ok3, ok3 ? "all four series within CI" : "violations:" + where);
    return csv;
}

// ---------------------------------------------------------------------------

void optimizer() {
    const auto prm = params({0.05, 0.2, 0.5, 0.6}, {0.1, 0.4, 0.6, 0.9}, 0.5, 0.5);
    OptimizerSettings os;
    os.workers = workers();
    const auto pi_c = build_pi_c(prm, os);
    const auto pibar_c = build_pibar_c(prm, os);

    bool invariants = true;
    for (const auto& r : pi_c.results) {
        for (double v : r.start_objectives) invariants = invariants && r.objective <= v;
        invariants = invariants && r.mu >= os.mu_lo && r.mu <= os.mu_hi;
        double sum = 0.0;
        for (int i = 0; i < 4; ++i) {
            const double w = r.pi[static_cast<std::size_t>(i)];
            invariants = invariants && (r.subset.contains(i) ? w >= os.pi_floor : w == 0.0);
            sum += w;
        }
        invariants = invariants && std::abs(sum - 1.0) <= 1e-12;
    }
    for (const auto& r : pibar_c.results)
        invariants = invariants && r.mu >= os.mu_lo && r.mu <= os.mu_hi && r.objective <= r.start_objectives.front();
    report("optimizer_invariants", invariants && pi_c.results.size() == 15 && pibar_c.results.size() == 15,
           "descent and feasibility over 15 randomized and 15 max-age subsets");

    // 50 x 50 grid over (mu, first-member weight); 50-point mu grid for max-age.
    double worst = 0.0;
    int compared = 0;
    for (std::size_t k = 0; k < 15; ++k) {
        const SubsetKey s = pi_c.results[k].subset;
        const auto m = s.members();
        if (m.size() > 2) continue;
        double best_r = INFINITY, best_m = INFINITY;
        for (int a = 0; a < 50; ++a) {
            const double mu = os.mu_lo + (os.mu_hi - os.mu_lo) * a / 49.0;
            best_m = std::min(best_m, total_cost_maxage(SubsystemSpec{s, prm, mu, {}}));
            for (int b = 0; b < (m.size() == 1 ? 1 : 50); ++b) {
                std::vector<double> pi(4, 0.0);
                if (m.size() == 1) {
                    pi[static_cast<std::size_t>(m[0])] = 1.0;
                } else {
                    const double w = os.pi_floor + (1.0 - 2.0 * os.pi_floor) * b / 49.0;
                    pi[static_cast<std::size_t>(m[0])] = w;
                    pi[static_cast<std::size_t>(m[1])] = 1.0 - w;
                }
                best_r = std::min(best_r, total_cost_randomized(SubsystemSpec{s, prm, mu, pi}));
            }
        }
        worst = std::max({worst, std::abs(pi_c.results[k].objective - best_r) / best_r,
                          std::abs(pibar_c.results[k].objective - best_m) / best_m});
        compared += 2;
    }
    report("optimizer_brute_force", worst <= 0.01,
           std::to_string(compared) + " subset optima vs grid" + fmt(", max relative difference %.5f (tol 0.01)", worst));

    const auto again = build_pi_c(prm, os);
    const auto again_m = build_pibar_c(prm, os);
    bool same = true;
    for (std::size_t k = 0; k < 15; ++k) {
        const auto &x = pi_c.results[k], &y = again.results[k];
        same = same && x.mu == y.mu && x.pi == y.pi && x.objective == y.objective && x.iterations == y.iterations &&
               x.start_objectives == y.start_objectives;
        same = same && pibar_c.results[k].mu == again_m.results[k].mu &&
               pibar_c.results[k].objective == again_m.results[k].objective;
    }
    report("optimizer_deterministic", same, "two seeded builds of both tables compared field by field");
}

}  // namespace

int main() {
    const auto t0 = std::chrono::steady_clock::now();
    hand_values();
    singleton_identity();
    chi_properties();
    const auto v1 = verify_twice_and_check();
    soundness();
    case_studies();
    const auto f1 = fig4();
    optimizer();

    VerifySettings vs;
    vs.workers = 1;
    const auto rep = run_verify(default_verify_cases(), vs, 1);
    const bool v_same = verify_csv(rep) + verify_findings(rep).dump() == v1;
    auto s = default_fig4_settings();
    s.workers = 1;
    const bool f_same = fig4_csv(run_fig4(s, 1)) == f1;
    report("determinism", v_same && f_same,
           std::string("verify ") + (v_same ? "identical" : "differs") + ", fig4 " + (f_same ? "identical" : "differs") +
               " across two runs with the same seeds");

    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("%d criteria failed, %.0f s\n", g_failed, secs);
    return g_failed == 0 ? 0 : 1;
}
