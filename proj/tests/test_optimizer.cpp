#include <doctest.h>

#include <cmath>

#include "aojc/optimizer.hpp"
#include "oracles.hpp"

using namespace aojc;

namespace {

SystemParams params(std::vector<double> qs, double q = 0.5, double s = 0.5, double L = 5.0) {
    const int n = static_cast<int>(qs.size());
    return validate_params(RawParams{n, std::vector<double>(qs.size(), 0.01), std::move(qs), q, s, L});
}

const SystemParams kFig = params({0.1, 0.4, 0.6, 0.9});

double randomized_objective(const SystemParams& p, SubsetKey s, double mu, std::vector<double> pi) {
    return total_cost_randomized(SubsystemSpec{s, p, mu, std::move(pi)});
}

}  // namespace

TEST_CASE("parametrization stays feasible") {
    const RandomizedParametrization par(SubsetKey::of({0, 2, 3}), 4, 1e-3, 1.0 - 1e-3, 1e-4);
    CHECK(par.dimension() == 3);
    for (double a : {-50.0, -1.0, 0.0, 2.0, 50.0})
        for (double b : {-30.0, 0.0, 30.0}) {
            const double x[3] = {a, b, -b};
            const double mu = par.mu(x);
            CHECK(mu >= 1e-3);
            CHECK(mu <= 1.0 - 1e-3);
            const auto pi = par.pi(x);
            REQUIRE(pi.size() == 4);
            CHECK(pi[1] == 0.0);
            double sum = 0.0;
            for (int i : {0, 2, 3}) {
                CHECK(pi[static_cast<std::size_t>(i)] >= 1e-4);
                sum += pi[static_cast<std::size_t>(i)];
            }
            CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
        }
    const auto c = par.canonical();
    CHECK(par.mu(c.data()) == doctest::Approx(0.5));
    CHECK(par.pi(c.data())[0] == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("singleton randomized optimum matches a 1-D search") {
    const auto p = params({0.6}, 0.3, 0.6, 5.0);
    const auto r = optimize_randomized_subset(SubsetKey::single(0), p);
    const auto one_d = minimize_scalar([&](double mu) { return randomized_objective(p, SubsetKey::single(0), mu, {1.0}); },
                                       1e-3, 1.0 - 1e-3, 2000, 1e-12);
    CHECK(r.converged);
    CHECK(r.objective == doctest::Approx(one_d.value).epsilon(1e-6));
    CHECK(r.mu == doctest::Approx(one_d.x).epsilon(1e-3));
    CHECK(r.pi == std::vector<double>{1.0});
}

TEST_CASE("symmetric users get symmetric weights") {
    const auto p = params({0.5, 0.5});
    const auto r = optimize_randomized_subset(SubsetKey::full(2), p);
    CHECK(r.pi[0] == doctest::Approx(0.5).epsilon(1e-4));
    CHECK(r.pi[1] == doctest::Approx(0.5).epsilon(1e-4));
}

TEST_CASE("swapping users swaps the weights") {
    const auto a = optimize_randomized_subset(SubsetKey::full(2), params({0.3, 0.8}));
    const auto b = optimize_randomized_subset(SubsetKey::full(2), params({0.8, 0.3}));
    CHECK(a.objective == doctest::Approx(b.objective).epsilon(1e-7));
    CHECK(a.pi[0] == doctest::Approx(b.pi[1]).epsilon(1e-3));
    CHECK(a.mu == doctest::Approx(b.mu).epsilon(1e-3));
}

TEST_CASE("descent never ends above any start") {
    for (SubsetKey s : enumerate_subsets(4)) {
        const auto r = optimize_randomized_subset(s, kFig);
        REQUIRE(r.start_objectives.size() == 17);
        for (double v : r.start_objectives) CHECK(r.objective <= v + 1e-12);
        CHECK(r.mu >= 1e-3);
        CHECK(r.mu <= 1.0 - 1e-3);
        for (int i = 0; i < 4; ++i) {
            if (s.contains(i)) CHECK(r.pi[static_cast<std::size_t>(i)] >= 1e-4);
            else CHECK(r.pi[static_cast<std::size_t>(i)] == 0.0);
        }
        CHECK(r.objective == doctest::Approx(randomized_objective(kFig, s, r.mu, r.pi)).epsilon(1e-12));
    }
}

TEST_CASE("randomized optimum agrees with a brute-force grid") {
    // Grid of 50 sampling probabilities by 50 first-member weights (pairs), or
    // by the sampling probability alone for singletons.
    for (SubsetKey s : enumerate_subsets(4)) {
        const auto m = s.members();
        if (m.size() > 2) continue;
        double best = INFINITY;
        for (int a = 1; a <= 50; ++a) {
            const double mu = 1e-3 + (1.0 - 2e-3) * (a - 1) / 49.0;
            if (m.size() == 1) {
                std::vector<double> pi(4, 0.0);
                pi[static_cast<std::size_t>(m[0])] = 1.0;
                best = std::min(best, randomized_objective(kFig, s, mu, pi));
                continue;
            }
            for (int b = 1; b <= 50; ++b) {
                std::vector<double> pi(4, 0.0);
                pi[static_cast<std::size_t>(m[0])] = b / 51.0;
                pi[static_cast<std::size_t>(m[1])] = 1.0 - b / 51.0;
                best = std::min(best, randomized_objective(kFig, s, mu, pi));
            }
        }
        const auto r = optimize_randomized_subset(s, kFig);
        CHECK(r.objective <= best * 1.01);
        CHECK(r.objective >= best * 0.9);
    }
}

TEST_CASE("full-set optimum is no worse than a coarse grid over the simplex") {
    double best = INFINITY;
    for (int a = 1; a <= 20; ++a) {
        const double mu = a / 20.0 - 1e-3;
        for (int i = 1; i < 10; ++i)
            for (int j = 1; i + j < 10; ++j)
                for (int k = 1; i + j + k < 10; ++k) {
                    const double l = 10 - i - j - k;
                    best = std::min(best, randomized_objective(kFig, SubsetKey::full(4), mu,
                                                               {i / 10.0, j / 10.0, k / 10.0, l / 10.0}));
                }
    }
    CHECK(optimize_randomized_subset(SubsetKey::full(4), kFig).objective <= best + 1e-9);
}

TEST_CASE("more restarts never hurt") {
    OptimizerSettings few;
    few.restarts = 2;
    OptimizerSettings many;
    many.restarts = 24;
    const auto s = SubsetKey::full(4);
    CHECK(optimize_randomized_subset(s, kFig, many).objective <= optimize_randomized_subset(s, kFig, few).objective + 1e-12);
}

TEST_CASE("optimizer is deterministic across worker counts") {
    OptimizerSettings one;
    OptimizerSettings four;
    four.workers = 4;
    const auto a = build_pi_c(kFig, one), b = build_pi_c(kFig, four);
    REQUIRE(a.results.size() == b.results.size());
    for (std::size_t k = 0; k < a.results.size(); ++k) {
        CHECK(a.results[k].objective == b.results[k].objective);
        CHECK(a.results[k].mu == b.results[k].mu);
        CHECK(a.results[k].pi == b.results[k].pi);
    }
}

TEST_CASE("tables cover every subset") {
    const auto three = params({0.2, 0.5, 0.9});
    CHECK(build_pi_c(three).results.size() == 7);
    CHECK(build_pibar_c(three).results.size() == 7);
    const auto c = build_pi_c(kFig);
    CHECK(c.results.size() == 15);
    CHECK(c.policy.subsets().size() == 15);
    const auto direct = optimize_randomized_subset(SubsetKey::full(4), kFig);
    CHECK(c.policy.sampling_prob(SubsetKey::full(4)) == direct.mu);
    CHECK(c.results.back().subset == SubsetKey::full(4));
    for (std::size_t k = 1; k < c.results.size(); ++k)
        CHECK(c.results[k - 1].subset.mask() < c.results[k].subset.mask());
    const auto m = build_pibar_c(kFig);
    CHECK(m.policy.kind() == SchedulerKind::MaxAge);
}

TEST_CASE("max-age optimum is a local minimum and beats its grid") {
    for (SubsetKey s : enumerate_subsets(4)) {
        const auto r = optimize_maxage_subset(s, kFig);
        auto f = [&](double mu) { return total_cost_maxage(SubsystemSpec{s, kFig, mu, {}}); };
        CHECK(r.objective == doctest::Approx(f(r.mu)).epsilon(1e-12));
        if (r.mu - 1e-3 >= 1e-3) CHECK(r.objective <= f(r.mu - 1e-3) + 1e-12);
        if (r.mu + 1e-3 <= 1.0 - 1e-3) CHECK(r.objective <= f(r.mu + 1e-3) + 1e-12);
        CHECK(r.objective <= oracle::grid_min(f, 1e-3, 1.0 - 1e-3, 200) + 1e-12);
        CHECK(r.pi.empty());
    }
}

TEST_CASE("scalar minimizer") {
    const auto m = minimize_scalar([](double x) { return (x - 0.3) * (x - 0.3); }, 0.0, 1.0, 11, 1e-10);
    CHECK(m.x == doctest::Approx(0.3).epsilon(1e-4));
    CHECK(m.value <= m.grid_best_value);
    const auto edge = minimize_scalar([](double x) { return x; }, 0.2, 0.9, 8, 1e-10);
    CHECK(edge.x == doctest::Approx(0.2));
}
