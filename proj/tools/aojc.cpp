// aojc: closed-form evaluation, simulation, policy design and the
// experiment pipelines, driven by a JSON config file.

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "aojc/config.hpp"
#include "aojc/experiments.hpp"
#include "aojc/io.hpp"

namespace fs = std::filesystem;
using namespace aojc;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitVerification = 3;

struct CommonArgs {
    std::string config_path;
    std::string out_dir = "out";
    std::optional<std::uint64_t> seed;
    std::optional<int> workers;
};

struct Context {
    ExperimentConfig config;
    RunMetadata meta;
    fs::path out;
    int workers = 1;

    void write(const std::string& name, const std::string& body) const {
        write_artifact(out / name, body, meta);
        std::cout << "wrote " << (out / name).string() << '\n';
    }
};

Context make_context(const std::string& command, const CommonArgs& args) {
    Context ctx;
    std::string text;
    if (!args.config_path.empty()) {
        ctx.config = load_config(args.config_path);
        text = read_file(args.config_path);
    }
    ctx.meta.command = command;
    ctx.meta.config_sha256 = sha256_hex(text);
    ctx.meta.master_seed = resolve_master_seed(args.seed, ctx.config);
    ctx.out = args.out_dir;
    ctx.workers = args.workers.value_or(ctx.config.workers.value_or(1));
    if (ctx.workers < 1) throw ConfigError("--workers must be positive");
    return ctx;
}

std::vector<double> uniform_pi(SubsetKey subset, int n) {
    std::vector<double> pi(static_cast<std::size_t>(n), 0.0);
    for (int u : subset.members()) pi[static_cast<std::size_t>(u)] = 1.0 / subset.size();
    return pi;
}

std::vector<double> policy_pi(const PolicyBlock& p, SubsetKey subset, int n) {
    if (!p.pi) return uniform_pi(subset, n);
    const auto members = subset.members();
    if (p.pi->size() != members.size()) throw ConfigError("policy.pi must have one entry per subset member");
    std::vector<double> pi(static_cast<std::size_t>(n), 0.0);
    for (std::size_t k = 0; k < members.size(); ++k) pi[static_cast<std::size_t>(members[k])] = (*p.pi)[k];
    return pi;
}

// ---------------------------------------------------------------------------

int cmd_evaluate(const Context& ctx) {
    const auto& cfg = ctx.config;
    const auto params = cfg.system_params();
    const auto subset = cfg.policy.subset.value_or(SubsetKey::full(params.n_users()));
    if (subset.members().back() >= params.n_users()) throw ConfigError("policy.subset exceeds n_users");
    if (!cfg.policy.mu) throw ConfigError("evaluate needs policy.mu");
    const auto kind = cfg.policy.kind.value_or(SchedulerKind::AdaptiveRandomized);

    SubsystemSpec spec{subset, params, *cfg.policy.mu, {}};
    if (kind == SchedulerKind::AdaptiveRandomized) spec.pi = policy_pi(cfg.policy, subset, params.n_users());
    spec.validate(kind == SchedulerKind::AdaptiveRandomized);
    const auto rep = kind == SchedulerKind::AdaptiveRandomized ? evaluate_randomized(spec)
                                                               : evaluate_maxage(spec, cfg.optimizer.reading);

    const std::string age_thm = kind == SchedulerKind::MaxAge ? "thm3_age_maxage" : "thm1_age";
    const std::string cost_thm = kind == SchedulerKind::MaxAge ? "thm4_sampling_maxage" : "thm2_sampling_ub";
    CsvWriter csv({"subset", "user", "thm", "value", "tag"});
    for (std::size_t k = 0; k < rep.users.size(); ++k) {
        csv.field(subset.to_string()).field(rep.users[k] + 1).field(age_thm).field(rep.ages[k])
            .field(to_string(CostTag::Exact));
        csv.end_row();
    }
    csv.field(subset.to_string()).field(0).field(cost_thm).field(rep.sampling_cost).field(to_string(rep.sampling_tag));
    csv.end_row();
    csv.field(subset.to_string()).field(0).field("objective").field(rep.objective).field(to_string(rep.sampling_tag));
    csv.end_row();

    nlohmann::json j;
    j["subset"] = subset.to_string();
    j["kind"] = to_string(kind);
    j["mu"] = spec.mu;
    std::vector<int> users;
    for (int u : rep.users) users.push_back(u + 1);
    j["users"] = users;
    j["ages"] = rep.ages;
    j["sampling_cost"] = rep.sampling_cost;
    j["sampling_tag"] = to_string(rep.sampling_tag);
    j["objective"] = rep.objective;
    j["p_star"] = rep.p_star;
    if (kind == SchedulerKind::AdaptiveRandomized) {
        j["pi"] = spec.pi;
        j["eta_bar"] = rep.eta_bar;
        j["eta"] = rep.eta;
        j["psi"] = rep.psi;
    } else {
        j["user_count_reading"] = to_string(cfg.optimizer.reading);
        j["p1_star"] = rep.p1_star;
        j["alpha"] = rep.alpha;
        j["beta1"] = rep.beta1;
        j["beta2"] = rep.beta2;
    }
    std::vector<int> below;
    for (int u : rep.below_one) below.push_back(u + 1);
    j["ages_below_one"] = below;

    std::cout << j.dump(2) << '\n';
    ctx.write("evaluate.csv", csv.str());
    ctx.write("evaluate_report.json", j.dump(2) + "\n");
    return kExitOk;
}

int cmd_simulate(const Context& ctx) {
    const auto& cfg = ctx.config;
    const auto params = cfg.system_params();
    const int n = params.n_users();

    std::optional<AdaptivePolicy> policy;
    if (cfg.policy.table) {
        policy = load_policy(*cfg.policy.table);
        if (policy->n_users() != n) throw ConfigError("policy table and system disagree on n_users");
    } else {
        if (!cfg.policy.mu) throw ConfigError("simulate needs policy.table or policy.mu");
        const auto kind = cfg.policy.kind.value_or(SchedulerKind::MaxAge);
        policy = kind == SchedulerKind::MaxAge ? AdaptivePolicy::uniform_max_age(n, *cfg.policy.mu)
                                               : AdaptivePolicy::uniform_randomized(n, *cfg.policy.mu);
        if (cfg.policy.subset && kind == SchedulerKind::AdaptiveRandomized)
            policy->set(*cfg.policy.subset, {*cfg.policy.mu, policy_pi(cfg.policy, *cfg.policy.subset, n)});
    }

    SimMode mode = SimMode::open();
    if (cfg.sim.mode.value_or("open") == "saturated") {
        const auto subset = cfg.sim.subset.value_or(cfg.policy.subset.value_or(SubsetKey::full(n)));
        if (subset.members().back() >= n) throw ConfigError("sim.subset exceeds n_users");
        mode = SimMode::saturated_on(subset);
    }
    SimOptions opts;
    opts.burn_in_fraction = cfg.sim.burn_in.value_or(0.1);
    opts.trace_stride = cfg.sim.trace_stride.value_or(0);
    const auto horizon = cfg.sim.horizon.value_or(100'000);
    const auto seeds = cfg.sim.seeds.value_or(std::vector<std::uint64_t>{1});

    CsvWriter metrics({"config_id", "seed", "T", "user", "delta_hat", "completion_rate", "mean_queue"});
    CsvWriter trace({"config_id", "seed", "slot", "total_queue"});
    CsvWriter summary({"config_id", "seed", "T", "delta_avg", "sampling_cost", "total_cost"});
    for (auto seed : seeds) {
        const auto m = run_simulation(params, *policy, horizon, derive_seed(ctx.meta.master_seed, seed), mode, opts);
        for (int i = 0; i < n; ++i) {
            const auto k = static_cast<std::size_t>(i);
            metrics.field(cfg.id).field(seed).field(horizon).field(i + 1).field(m.delta_hat[k])
                .field(m.completion_rate[k]).field(m.mean_queue[k]);
            metrics.end_row();
        }
        for (const auto& t : m.trace) {
            trace.field(cfg.id).field(seed).field(t.slot).field(t.total_queue);
            trace.end_row();
        }
        summary.field(cfg.id).field(seed).field(horizon).field(m.delta_avg).field(m.sampling_cost).field(m.total_cost);
        summary.end_row();
    }
    ctx.write("simulate_metrics.csv", metrics.str());
    ctx.write("simulate_summary.csv", summary.str());
    if (opts.trace_stride > 0) ctx.write("simulate_trace.csv", trace.str());
    return kExitOk;
}

int cmd_optimize(const Context& ctx) {
    const auto& cfg = ctx.config;
    const auto params = cfg.system_params();
    auto settings = cfg.optimizer;
    settings.workers = ctx.workers;

    std::vector<SchedulerKind> kinds;
    if (cfg.policy.kind) kinds.push_back(*cfg.policy.kind);
    else kinds = {SchedulerKind::AdaptiveRandomized, SchedulerKind::MaxAge};

    for (auto kind : kinds) {
        const auto collection = kind == SchedulerKind::MaxAge ? build_pibar_c(params, settings)
                                                              : build_pi_c(params, settings);
        CsvWriter csv({"subset_mask", "mu_star", "pi_star_json", "objective", "converged"});
        for (const auto& r : collection.results) {
            nlohmann::json pi = nlohmann::json::array();
            for (int u : r.subset.members()) pi.push_back(r.pi.empty() ? 0.0 : r.pi[static_cast<std::size_t>(u)]);
            csv.field(static_cast<std::int64_t>(r.subset.mask())).field(r.mu)
                .field(kind == SchedulerKind::MaxAge ? std::string("[]") : pi.dump())
                .field(r.objective).field(r.converged);
            csv.end_row();
        }
        const auto name = to_string(kind);
        ctx.write("optimize_" + name + ".csv", csv.str());
        ctx.write("policy_" + name + ".json", policy_to_json(collection.policy).dump(2) + "\n");
    }
    return kExitOk;
}

int cmd_verify(const Context& ctx) {
    const auto& cfg = ctx.config;
    VerifySettings settings;
    if (cfg.verify.horizon) settings.horizon = *cfg.verify.horizon;
    if (cfg.verify.seeds) settings.seeds = *cfg.verify.seeds;
    if (cfg.verify.tolerance) settings.tolerance = *cfg.verify.tolerance;
    settings.workers = ctx.workers;
    const auto cases = cfg.verify.cases.empty() ? default_verify_cases() : cfg.verify.cases;

    const auto report = run_verify(cases, settings, ctx.meta.master_seed);
    ctx.write("verify.csv", verify_csv(report));
    ctx.write("verify_findings.json", verify_findings(report).dump(2) + "\n");
    int failed = 0;
    for (const auto& r : report.rows) failed += r.verdict == RowVerdict::Fail ? 1 : 0;
    std::cout << "verify: " << report.rows.size() << " rows, " << failed << " failed\n";
    return report.all_pass ? kExitOk : kExitVerification;
}

int cmd_fig4(const Context& ctx) {
    const auto& cfg = ctx.config;
    auto settings = default_fig4_settings();
    if (cfg.system) settings.base = cfg.system->raw;
    if (cfg.sweep) {
        settings.q_grid = cfg.sweep->values;
        if (!cfg.sweep->arrivals.empty()) settings.arrivals = cfg.sweep->arrivals;
    }
    if (cfg.sim.horizon) settings.horizon = *cfg.sim.horizon;
    if (cfg.sim.seeds) settings.seeds = *cfg.sim.seeds;
    if (cfg.sim.burn_in) settings.burn_in_fraction = *cfg.sim.burn_in;
    settings.optimizer = cfg.optimizer;
    settings.workers = ctx.workers;
    for (const auto& a : settings.arrivals)
        if (static_cast<int>(a.rates.size()) != settings.base.n_users)
            throw ConfigError("arrival configuration " + a.name + " does not match n_users");

    ctx.write("fig4.csv", fig4_csv(run_fig4(settings, ctx.meta.master_seed)));
    return kExitOk;
}

int cmd_stability(const Context& ctx) {
    const auto& cfg = ctx.config;
    const auto& sb = cfg.stability;
    StabilitySettings settings;
    if (sb.epsilon) settings.epsilon = *sb.epsilon;
    if (sb.horizon) settings.empirical.horizon = *sb.horizon;
    if (sb.seeds) settings.empirical.seeds = *sb.seeds;
    if (sb.trace_stride) settings.empirical.trace_stride = *sb.trace_stride;
    if (sb.thresholds) settings.empirical.thresholds = *sb.thresholds;
    settings.empirical.keep_traces = true;
    settings.optimizer = cfg.optimizer;
    settings.workers = ctx.workers;
    const auto cases = sb.cases.empty() ? default_stability_cases() : sb.cases;

    const auto results = run_stability_cases(cases, settings, ctx.meta.master_seed);
    CsvWriter trace({"config_id", "seed", "slot", "total_queue"});
    nlohmann::json report = nlohmann::json::array();
    for (const auto& r : results) {
        for (const auto& p : r.policies) {
            const auto id = r.id + "/" + to_string(p.kind);
            for (std::size_t k = 0; k < p.empirical.traces.size(); ++k)
                for (const auto& t : p.empirical.traces[k]) {
                    trace.field(id).field(p.empirical.seeds[k]).field(t.slot).field(t.total_queue);
                    trace.end_row();
                }
            nlohmann::json entry{{"config_id", r.id},
                                 {"policy_kind", to_string(p.kind)},
                                 {"chi", p.conditions.chi},
                                 {"worst_margin", p.conditions.worst_margin},
                                 {"conditions_satisfied", p.conditions.satisfied},
                                 {"empirical_verdict", to_string(p.empirical.verdict)}};
            if (p.conditions.corollary)
                entry["uniform_condition"] = {{"margin", p.conditions.corollary->margin},
                                              {"satisfied", p.conditions.corollary->satisfied}};
            report.push_back(entry);
            std::cout << id << ": conditions " << (p.conditions.satisfied ? "satisfied" : "not satisfied")
                      << ", empirical " << to_string(p.empirical.verdict) << '\n';
        }
    }
    ctx.write("stability_margins.csv", stability_margins_csv(results));
    ctx.write("stability_verdicts.csv", stability_verdicts_csv(results));
    ctx.write("stability_traces.csv", trace.str());
    ctx.write("stability_report.json", report.dump(2) + "\n");

    if (!sb.soundness) return kExitOk;
    auto empirical = settings.empirical;
    empirical.keep_traces = false;
    std::vector<std::uint64_t> derived;
    for (auto s : empirical.seeds) derived.push_back(derive_seed(ctx.meta.master_seed, s));
    empirical.seeds = derived;
    const auto summary = run_soundness_sweep(sb.soundness->sampler, empirical, sb.soundness->epsilon, ctx.workers);
    ctx.write("soundness.csv", soundness_csv(summary));
    nlohmann::json js{{"configs", summary.configs},
                      {"epsilon", sb.soundness->epsilon},
                      {"randomized_condition_satisfied", summary.prop1_satisfied},
                      {"max_age_condition_satisfied", summary.prop2_satisfied},
                      {"uniform_condition_satisfied", summary.cor1_satisfied},
                      {"uniform_without_per_subset", summary.cor1_without_prop1},
                      {"soundness_violations", summary.violations}};
    ctx.write("soundness_summary.json", js.dump(2) + "\n");
    std::cout << "soundness: " << summary.violations << " violations over " << summary.configs << " configs\n";
    return summary.violations == 0 && summary.cor1_without_prop1 == 0 ? kExitOk : kExitVerification;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Sampling-and-scheduling policies for a shared machine with hidden state"};
    app.set_version_flag("--version", std::string(kToolName) + " " + kToolVersion);
    app.require_subcommand(1);

    CommonArgs args;
    using Handler = int (*)(const Context&);
    const std::vector<std::tuple<std::string, std::string, Handler>> commands{
        {"evaluate", "Closed-form ages and sampling cost for one subset", cmd_evaluate},
        {"simulate", "Monte Carlo run of a policy table", cmd_simulate},
        {"optimize", "Design the per-subset policy tables", cmd_optimize},
        {"verify", "Closed forms against saturated simulation", cmd_verify},
        {"fig4", "Total cost vs flip probability for both policy families", cmd_fig4},
        {"stability", "Stability conditions and empirical drift verdicts", cmd_stability},
    };
    for (const auto& [name, help, fn] : commands) {
        auto* sub = app.add_subcommand(name, help);
        sub->add_option("--config", args.config_path, "JSON config file")->check(CLI::ExistingFile);
        sub->add_option("--out", args.out_dir, "Output directory")->capture_default_str();
        sub->add_option("--seed", args.seed, "Master seed (overrides " + std::string(kSeedEnvVar) + " and the config)");
        sub->add_option("--workers", args.workers, "Concurrent workers");
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitConfig;
    }

    for (const auto& [name, help, fn] : commands) {
        if (!app.got_subcommand(name)) continue;
        try {
            return fn(make_context(name, args));
        } catch (const ParamError& e) {
            std::cerr << "config error: " << e.what() << '\n';
            return kExitConfig;
        } catch (const std::exception& e) {
            std::cerr << "error: " << e.what() << '\n';
            return 1;
        }
    }
    return 1;
}
