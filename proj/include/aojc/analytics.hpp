#pragma once

// Closed-form age and sampling-cost expressions for a permanently backlogged
// subsystem S, under a stationary randomized rule (mu, pi) or under max-age
// (round-robin) scheduling with sampling probability mu_bar.

#include <vector>

#include "aojc/model.hpp"

namespace aojc {

/// A backlogged subsystem together with the rule applied to it. `pi` has
/// length N and is only consulted by the randomized evaluators.
struct SubsystemSpec {
    SubsetKey subset;
    SystemParams params;
    double mu = 1.0;
    std::vector<double> pi;

    /// Throws ParamError unless mu is in (0,1] and, when `need_pi`, pi is
    /// supported exactly on the subset and sums to one.
    void validate(bool need_pi) const;
};

/// How the user count n is read in the max-age expressions.
enum class UserCountReading { CardinalityOfS, TotalN };

enum class CostTag { UpperBound, Exact };

std::string to_string(UserCountReading r);
std::string to_string(CostTag t);

/// eta_bar = sum_{i in S} pi_i / q_i.
double eta_bar(const SubsystemSpec& spec);
/// eta_k = eta_bar - pi_k / q_k.
double eta_k(const SubsystemSpec& spec, int k);
/// psi_k = eta_k + pi_k + 2(1/mu - 1) + s/q.
double psi_k(const SubsystemSpec& spec, int k);
/// p* = q / (1 - (1 - 2q)(1 - mu)).
double p_star(double q, double mu);
/// p1* = s(1-mu)p* + (1-s)(1-(1-mu)p*).
double p1_star(double q, double s, double mu);

struct MaxAgeMoments {
    double alpha;
    double beta1;
    double beta2;
};
/// alpha, beta1, beta2 of the max-age age expression. At mu_bar = 1 beta2
/// is its limit 2 s alpha^2 + beta1.
MaxAgeMoments max_age_moments(double q, double s, double mu_bar);

/// Average age of user k under the randomized rule.
double thm1_age(const SubsystemSpec& spec, int k);
/// Upper bound on the average sampling cost under the randomized rule.
double thm2_sampling_ub(const SubsystemSpec& spec);
/// Average age of any user of S under max-age scheduling (spec.mu is mu_bar).
double thm3_age_maxage(const SubsystemSpec& spec, int k,
                       UserCountReading reading = UserCountReading::CardinalityOfS);
/// Average sampling cost under max-age scheduling.
double thm4_sampling_maxage(const SubsystemSpec& spec,
                            UserCountReading reading = UserCountReading::CardinalityOfS);

/// Sum of ages over S plus the sampling bound (the randomized design objective).
double total_cost_randomized(const SubsystemSpec& spec);
/// Sum of ages over S plus the exact sampling cost (the max-age design objective).
double total_cost_maxage(const SubsystemSpec& spec,
                         UserCountReading reading = UserCountReading::CardinalityOfS);

/// Piecewise chi(q,s); 1 - chi lower-bounds the probability of finding the
/// machine free at a sample. Throws ParamError outside the open unit square.
double chi(double q, double s);

struct ClosedFormReport {
    SubsetKey subset;
    SchedulerKind kind;
    std::vector<int> users;        // members of S
    std::vector<double> ages;      // one per member
    double sampling_cost = 0.0;
    CostTag sampling_tag = CostTag::Exact;
    double objective = 0.0;        // sum of ages + sampling term
    double eta_bar = 0.0;          // randomized only
    std::vector<double> eta;       // randomized only, per member
    std::vector<double> psi;       // randomized only, per member
    double p_star = 0.0;
    double p1_star = 0.0;          // max-age only
    double alpha = 0.0, beta1 = 0.0, beta2 = 0.0;  // max-age only
    /// Members whose age evaluated below one slot.
    std::vector<int> below_one;
};

ClosedFormReport evaluate_randomized(const SubsystemSpec& spec);
ClosedFormReport evaluate_maxage(const SubsystemSpec& spec,
                                 UserCountReading reading = UserCountReading::CardinalityOfS);

}  // namespace aojc
