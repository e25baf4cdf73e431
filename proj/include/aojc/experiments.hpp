#pragma once

// Experiment drivers shared by the command-line tool and the acceptance
// suite: closed-form vs Monte Carlo verification, the cost-vs-q sweep, and
// the stability case studies. Each driver returns plain rows; the *_csv
// helpers render them in fixed column layouts.

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "aojc/analytics.hpp"
#include "aojc/optimizer.hpp"
#include "aojc/simulator.hpp"
#include "aojc/stability.hpp"

namespace aojc {

class ExperimentError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Closed form vs saturated simulation

struct VerifyCase {
    std::string id;
    SystemParams params;
    SubsetKey subset;
    SchedulerKind kind;
    double mu;
    std::vector<double> pi;  // randomized only, length N
};

struct VerifySettings {
    std::int64_t horizon = 1'000'000;
    std::vector<std::uint64_t> seeds{1, 2, 3};
    double tolerance = 0.02;
    int workers = 1;
};

enum class RowVerdict { Pass, Fail, Info };
std::string to_string(RowVerdict v);

struct VerifyRow {
    std::string case_id;
    SubsetKey subset;
    int user;  // 1-based; 0 for subsystem-wide quantities
    std::string thm;
    double closed_form;
    double empirical;
    double rel_error;
    CostTag tag;
    RowVerdict verdict;
};

struct ReadingFinding {
    std::string case_id;
    double age_error_cardinality;    // relative error of the age with n = |S|
    double age_error_total;          // ... with n = N
    double cost_error_cardinality;   // relative error of the sampling cost with n = |S|
    double cost_error_total;
    std::string closer;              // reading with the smaller combined error
};

struct BoundFinding {
    std::string case_id;
    double empirical;
    double bound;
    bool empirical_exceeds_bound;
};

struct VerifyReport {
    std::vector<VerifyRow> rows;
    std::vector<ReadingFinding> readings;  // max-age cases on proper subsets
    std::vector<BoundFinding> bounds;      // every randomized case
    bool all_pass = true;
};

VerifyReport run_verify(const std::vector<VerifyCase>& cases, const VerifySettings& settings,
                        std::uint64_t master_seed);
std::string verify_csv(const VerifyReport& report);
nlohmann::json verify_findings(const VerifyReport& report);

/// The built-in verification cases (|S| in {1,2,4}, heterogeneous q_i).
std::vector<VerifyCase> default_verify_cases();

// ---------------------------------------------------------------------------
// Total cost vs q

struct ArrivalConfig {
    std::string name;
    std::vector<double> rates;
};

struct Fig4Settings {
    RawParams base;  // arrival rates and flip_prob are overridden per cell
    std::vector<double> q_grid;
    std::vector<ArrivalConfig> arrivals;
    std::int64_t horizon = 500'000;
    std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
    double burn_in_fraction = 0.1;
    OptimizerSettings optimizer{};
    int workers = 1;
};

/// Reference setup: N=4, s=0.5, L=5, q_i = [0.1,0.4,0.6,0.9], two
/// arrival vectors, q in {0.1,...,0.9}.
Fig4Settings default_fig4_settings();

struct Fig4Row {
    double q;
    SchedulerKind policy;
    std::string arrival_config;
    double total_cost;      // mean over seeds of (1/N) sum delta_hat + S_hat
    double delta_avg;
    double sampling_cost;
    double ci_halfwidth;    // 95% Student-t half-width over seeds
};

std::vector<Fig4Row> run_fig4(const Fig4Settings& settings, std::uint64_t master_seed);
std::string fig4_csv(const std::vector<Fig4Row>& rows);

/// 95% two-sided Student-t half-width of the sample mean; 0 for one sample.
double ci_halfwidth(const std::vector<double>& samples);

// ---------------------------------------------------------------------------
// Stability case studies

struct StabilityCaseConfig {
    std::string id;
    SystemParams params;
};

struct StabilitySettings {
    double epsilon = kDefaultStabilityEpsilon;
    EmpiricalSettings empirical{};
    OptimizerSettings optimizer{};
    int workers = 1;
};

struct StabilityPolicyResult {
    SchedulerKind kind;
    StabilityReport conditions;
    EmpiricalStability empirical;
};

struct StabilityCaseResult {
    std::string id;
    SystemParams params;
    std::vector<StabilityPolicyResult> policies;  // randomized, then max-age
};

/// Builds both optimized policy families for each case, checks the
/// conditions and runs the empirical drift diagnostic.
std::vector<StabilityCaseResult> run_stability_cases(const std::vector<StabilityCaseConfig>& cases,
                                                     const StabilitySettings& settings,
                                                     std::uint64_t master_seed);
/// Two reference configurations plus a zero-arrival sanity case.
std::vector<StabilityCaseConfig> default_stability_cases();

std::string stability_margins_csv(const std::vector<StabilityCaseResult>& results);
std::string stability_verdicts_csv(const std::vector<StabilityCaseResult>& results);

struct SoundnessSummary {
    int configs = 0;
    int prop1_satisfied = 0;
    int prop2_satisfied = 0;
    int cor1_satisfied = 0;
    int cor1_without_prop1 = 0;  // implication failures
    int violations = 0;
    std::vector<SufficiencyRow> rows;
    std::vector<SystemParams> params;  // parallel to rows
};

SoundnessSummary run_soundness_sweep(const RandomCaseSettings& sampler, const EmpiricalSettings& empirical,
                                     double epsilon, int workers);
std::string soundness_csv(const SoundnessSummary& summary);

}  // namespace aojc
