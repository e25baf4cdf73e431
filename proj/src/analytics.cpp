#include "aojc/analytics.hpp"

#include <cmath>

namespace aojc {

namespace {

double pi_of(const SubsystemSpec& spec, int i) { return spec.pi[static_cast<std::size_t>(i)]; }

void require_member(const SubsystemSpec& spec, int k) {
    if (!spec.subset.contains(k))
        throw ParamError("user " + std::to_string(k + 1) + " is not in subset " + spec.subset.to_string());
}

double user_count(const SubsystemSpec& spec, UserCountReading reading) {
    return reading == UserCountReading::CardinalityOfS ? spec.subset.size()
                                                       : spec.params.n_users();
}

// sum_{i in S} (1 - q_i) / q_i^power
double residual_service_sum(const SubsystemSpec& spec, int power) {
    double acc = 0.0;
    for (int i : spec.subset.members()) {
        const double qi = spec.params.service_rate(i);
        acc += (1.0 - qi) / std::pow(qi, power);
    }
    return acc;
}

}  // namespace

std::string to_string(UserCountReading r) {
    return r == UserCountReading::CardinalityOfS ? "cardinality_of_S" : "total_N";
}

std::string to_string(CostTag t) { return t == CostTag::UpperBound ? "upper_bound" : "exact"; }

void SubsystemSpec::validate(bool need_pi) const {
    if (subset.span() > params.n_users()) throw ParamError("subset exceeds n_users");
    if (!(std::isfinite(mu) && mu > 0.0 && mu <= 1.0))
        throw ParamError("sampling probability must lie in (0,1]");
    if (need_pi)
        validate_subset_policy(subset, RandomizedSubsetPolicy{mu, pi}, params.n_users(),
                               SchedulerKind::AdaptiveRandomized);
}

double eta_bar(const SubsystemSpec& spec) {
    double acc = 0.0;
    for (int i : spec.subset.members()) acc += pi_of(spec, i) / spec.params.service_rate(i);
    return acc;
}

double eta_k(const SubsystemSpec& spec, int k) {
    return eta_bar(spec) - pi_of(spec, k) / spec.params.service_rate(k);
}

double psi_k(const SubsystemSpec& spec, int k) {
    const double q = spec.params.flip_prob();
    const double s = spec.params.post_busy_prob();
    return eta_k(spec, k) + pi_of(spec, k) + 2.0 * (1.0 / spec.mu - 1.0) + s / q;
}

double p_star(double q, double mu) { return q / (1.0 - (1.0 - 2.0 * q) * (1.0 - mu)); }

double p1_star(double q, double s, double mu) {
    const double ps = p_star(q, mu);
    return s * (1.0 - mu) * ps + (1.0 - s) * (1.0 - (1.0 - mu) * ps);
}

MaxAgeMoments max_age_moments(double q, double s, double mu_bar) {
    if (!(mu_bar > 0.0 && mu_bar <= 1.0)) throw ParamError("mu_bar must lie in (0,1]");
    MaxAgeMoments m{};
    m.alpha = 1.0 - mu_bar + mu_bar / q;
    m.beta1 = (1.0 / mu_bar) * ((1.0 - mu_bar) + s * mu_bar / q + 1.0);
    if (mu_bar == 1.0) {
        // s/(1-mu) alpha^2 times (1-mu)/mu leaves s alpha^2 / mu; the rest vanishes.
        m.beta2 = 2.0 * s * m.alpha * m.alpha / mu_bar + m.beta1;
    } else {
        m.beta2 = 2.0 * ((1.0 - mu_bar) / mu_bar) *
                      (s / (1.0 - mu_bar) * m.alpha * m.alpha + m.alpha - s -
                       mu_bar * (1.0 - s) + 3.0) +
                  m.beta1;
    }
    return m;
}

double thm1_age(const SubsystemSpec& spec, int k) {
    spec.validate(true);
    require_member(spec, k);
    const double q = spec.params.flip_prob();
    const double s = spec.params.post_busy_prob();
    const double mu = spec.mu;
    const double qk = spec.params.service_rate(k);
    const double pik = pi_of(spec, k);

    const double eb = eta_bar(spec);
    const double ek = eb - pik / qk;
    const double psi = ek + pik + 2.0 * (1.0 / mu - 1.0) + s / q;

    double weighted_residual = 0.0;
    for (int i : spec.subset.members()) {
        const double qi = spec.params.service_rate(i);
        weighted_residual += pi_of(spec, i) * (1.0 - qi) / (qi * qi);
    }

    const double numerator = psi * psi / pik + (1.0 / qk + (1.0 - s) / q - 2.0) * psi +
                             (1.0 / q) * ((1.0 - s) * (1.0 - pik - ek) - 1.0 / mu) -
                             pik * (1.0 - qk) / qk + weighted_residual;
    const double cycle = s / q + 2.0 * (1.0 / mu - 1.0) + eb;
    return numerator / cycle + 1.0;
}

double thm2_sampling_ub(const SubsystemSpec& spec) {
    spec.validate(true);
    const double L = spec.params.sampling_cost();
    const double mu = spec.mu;
    const double ps = p_star(spec.params.flip_prob(), mu);
    return (L + 1.0) * mu / ps * (1.0 / (1.0 / (mu * ps) + eta_bar(spec)));
}

double thm3_age_maxage(const SubsystemSpec& spec, int k, UserCountReading reading) {
    spec.validate(false);
    require_member(spec, k);
    const auto m = max_age_moments(spec.params.flip_prob(), spec.params.post_busy_prob(), spec.mu);
    const double n = user_count(spec, reading);
    const double r1 = residual_service_sum(spec, 1);
    const double r2 = residual_service_sum(spec, 2);
    const double mean_cycle = n * m.beta1 + r1;
    return (n * (m.beta2 - m.beta1 * m.beta1) + r2) / (2.0 * mean_cycle) + 0.5 * (mean_cycle + 1.0);
}

double thm4_sampling_maxage(const SubsystemSpec& spec, UserCountReading reading) {
    spec.validate(false);
    const double q = spec.params.flip_prob();
    const double s = spec.params.post_busy_prob();
    const double L = spec.params.sampling_cost();
    const double mu = spec.mu;
    const double n = user_count(spec, reading);
    const double ps = p_star(q, mu);
    const double p1 = p1_star(q, s, mu);
    const double rate = mu * n * L / (n * ((1.0 - mu) + s * mu / q + 1.0) + mu * residual_service_sum(spec, 1));
    return rate * (p1 + (1.0 - p1) * (1.0 + ps) / ps);
}

double total_cost_randomized(const SubsystemSpec& spec) {
    double acc = 0.0;
    for (int k : spec.subset.members()) acc += thm1_age(spec, k);
    return acc + thm2_sampling_ub(spec);
}

double total_cost_maxage(const SubsystemSpec& spec, UserCountReading reading) {
    double acc = 0.0;
    for (int k : spec.subset.members()) acc += thm3_age_maxage(spec, k, reading);
    return acc + thm4_sampling_maxage(spec, reading);
}

double chi(double q, double s) {
    if (!(q > 0.0 && q < 1.0 && s > 0.0 && s < 1.0))
        throw ParamError("chi(q,s) is defined on the open unit square only");
    if (q <= 0.5) return 1.0 - q;
    const double a = 1.0 - 2.0 * q;
    if (s <= 0.5) return (a * std::min(a, 2.0 * s - 1.0) + 1.0) / 2.0;
    return (a * a * (2.0 * s - 1.0) + 1.0) / 2.0;
}

ClosedFormReport evaluate_randomized(const SubsystemSpec& spec) {
    spec.validate(true);
    ClosedFormReport r{spec.subset, SchedulerKind::AdaptiveRandomized};
    r.users = spec.subset.members();
    r.eta_bar = eta_bar(spec);
    for (int k : r.users) {
        const double age = thm1_age(spec, k);
        r.ages.push_back(age);
        r.eta.push_back(eta_k(spec, k));
        r.psi.push_back(psi_k(spec, k));
        r.objective += age;
        if (age < 1.0) r.below_one.push_back(k);
    }
    r.sampling_cost = thm2_sampling_ub(spec);
    r.sampling_tag = CostTag::UpperBound;
    r.objective += r.sampling_cost;
    r.p_star = p_star(spec.params.flip_prob(), spec.mu);
    return r;
}

ClosedFormReport evaluate_maxage(const SubsystemSpec& spec, UserCountReading reading) {
    spec.validate(false);
    ClosedFormReport r{spec.subset, SchedulerKind::MaxAge};
    r.users = spec.subset.members();
    for (int k : r.users) {
        const double age = thm3_age_maxage(spec, k, reading);
        r.ages.push_back(age);
        r.objective += age;
        if (age < 1.0) r.below_one.push_back(k);
    }
    r.sampling_cost = thm4_sampling_maxage(spec, reading);
    r.sampling_tag = CostTag::Exact;
    r.objective += r.sampling_cost;
    const double q = spec.params.flip_prob();
    const double s = spec.params.post_busy_prob();
    r.p_star = p_star(q, spec.mu);
    r.p1_star = p1_star(q, s, spec.mu);
    const auto m = max_age_moments(q, s, spec.mu);
    r.alpha = m.alpha;
    r.beta1 = m.beta1;
    r.beta2 = m.beta2;
    return r;
}

}  // namespace aojc
