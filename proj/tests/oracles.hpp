#pragma once

// Independent reference values for the test suites. Nothing here reuses the
// library's closed forms: the backlogged subsystem is a renewal process whose
// inter-completion interval is a search phase (slots until a sample finds
// the machine free) followed by a geometric service, and its moments come
// from solving small absorbing-chain systems directly.

#include <cmath>
#include <functional>
#include <vector>

namespace oracle {

struct Moments {
    double m1;
    double m2;
};

// Slots until a sample finds the machine free, started just after a
// completion (busy with prob s, free otherwise). Per slot: a free machine is
// found with prob mu, otherwise it flips to busy with prob q; a busy machine
// flips to free with prob q whether sampled or not.
inline Moments search_time(double mu, double q, double s) {
    // First moments: m_F = 1 + (1-mu)((1-q) m_F + q m_B), m_B = 1 + q m_F + (1-q) m_B.
    // Solved as a 2x2 system a * m = b.
    const double a11 = 1.0 - (1.0 - mu) * (1.0 - q), a12 = -(1.0 - mu) * q;
    const double a21 = -q, a22 = q;
    const double det = a11 * a22 - a12 * a21;
    auto solve = [&](double b1, double b2) {
        return std::pair{(b1 * a22 - a12 * b2) / det, (a11 * b2 - a21 * b1) / det};
    };
    const auto [mF, mB] = solve(1.0, 1.0);
    // Second moments: E[(1+T')^2] = 1 + 2E[T'] + E[T'^2] over the continuation.
    const double cF = 1.0 + 2.0 * (1.0 - mu) * ((1.0 - q) * mF + q * mB);
    const double cB = 1.0 + 2.0 * (q * mF + (1.0 - q) * mB);
    const auto [gF, gB] = solve(cF, cB);
    return {(1.0 - s) * mF + s * mB, (1.0 - s) * gF + s * gB};
}

// Service slots ~ Geometric(qi) on {1,2,...}; the first service slot is the
// last search slot, so an interval is D + G - 1.
inline Moments interval(const Moments& d, double qi) {
    const double e = (1.0 - qi) / qi;                           // E[G-1]
    const double e2 = (1.0 - qi) / (qi * qi) + e * e;           // E[(G-1)^2]
    return {d.m1 + e, d.m2 + 2.0 * d.m1 * e + e2};
}

// Time-average of an age that runs 1, 2, ..., C over each renewal cycle C.
inline double renewal_age(const Moments& c) { return (c.m2 + c.m1) / (2.0 * c.m1); }

// Round-robin cycle over users with service rates qs.
inline Moments cycle(double mu, double q, double s, const std::vector<double>& qs) {
    const auto d = search_time(mu, q, s);
    double m1 = 0.0, var = 0.0;
    for (double qi : qs) {
        const auto i = interval(d, qi);
        m1 += i.m1;
        var += i.m2 - i.m1 * i.m1;
    }
    return {m1, var + m1 * m1};
}

inline double maxage_age(double mu, double q, double s, const std::vector<double>& qs) {
    return renewal_age(cycle(mu, q, s, qs));
}

// Each search slot draws a sample with prob mu independently of the past, so
// samples per cycle average mu * (number of users) * E[D].
inline double maxage_sampling(double mu, double q, double s, const std::vector<double>& qs, double L) {
    const auto d = search_time(mu, q, s);
    return L * mu * static_cast<double>(qs.size()) * d.m1 / cycle(mu, q, s, qs).m1;
}

// Randomized scheduling: intervals pick user i with prob pi_i. The age cycle
// of user k is a Geometric(pi_k)-1 number of other-user intervals followed
// by one interval of user k.
inline double randomized_age(double mu, double q, double s, const std::vector<double>& qs,
                             const std::vector<double>& pi, std::size_t k) {
    const auto d = search_time(mu, q, s);
    const auto own = interval(d, qs[k]);
    double o1 = 0.0, o2 = 0.0, w = 0.0;
    for (std::size_t i = 0; i < qs.size(); ++i) {
        if (i == k || pi[i] == 0.0) continue;
        const auto iv = interval(d, qs[i]);
        o1 += pi[i] * iv.m1;
        o2 += pi[i] * iv.m2;
        w += pi[i];
    }
    Moments c{own.m1, own.m2};
    if (w > 0.0) {
        o1 /= w;
        o2 /= w;
        const double p = pi[k];
        const double n1 = (1.0 - p) / p;                        // E[M-1]
        const double n2 = (1.0 - p) / (p * p) + n1 * n1;        // E[(M-1)^2]
        const double s1 = n1 * o1;
        const double s2 = n1 * (o2 - o1 * o1) + n2 * o1 * o1;
        c = {s1 + own.m1, s2 + 2.0 * s1 * own.m1 + own.m2};
    }
    return renewal_age(c);
}

inline double randomized_sampling(double mu, double q, double s, const std::vector<double>& qs,
                                  const std::vector<double>& pi, double L) {
    const auto d = search_time(mu, q, s);
    double mean_interval = 0.0;
    for (std::size_t i = 0; i < qs.size(); ++i)
        if (pi[i] > 0.0) mean_interval += pi[i] * interval(d, qs[i]).m1;
    return L * mu * d.m1 / mean_interval;
}

// Dense scan of f over [lo, hi].
inline double grid_min(const std::function<double(double)>& f, double lo, double hi, int points) {
    double best = INFINITY;
    for (int i = 0; i < points; ++i) best = std::min(best, f(lo + (hi - lo) * i / (points - 1)));
    return best;
}

}  // namespace oracle
