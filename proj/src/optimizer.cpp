#include "aojc/optimizer.hpp"

#include <gsl/gsl_errno.h>
#include <gsl/gsl_min.h>
#include <gsl/gsl_multimin.h>

#include <cmath>
#include <limits>
#include <memory>
#include <random>
#include <sstream>

#include "aojc/parallel.hpp"

namespace aojc {

namespace {

double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

struct GslErrorsOff {
    GslErrorsOff() { gsl_set_error_handler_off(); }
};
const GslErrorsOff gsl_errors_off;

struct VectorDeleter {
    void operator()(gsl_vector* v) const { gsl_vector_free(v); }
};
struct SimplexDeleter {
    void operator()(gsl_multimin_fminimizer* m) const { gsl_multimin_fminimizer_free(m); }
};
struct ScalarMinDeleter {
    void operator()(gsl_min_fminimizer* m) const { gsl_min_fminimizer_free(m); }
};
using VectorPtr = std::unique_ptr<gsl_vector, VectorDeleter>;

/// Objective wrapper handed to GSL; records the first non-finite evaluation
/// instead of throwing through C frames.
struct Objective {
    std::function<double(const double*)> fn;
    std::size_t dim = 0;
    bool failed = false;
    std::vector<double> bad_point;

    double operator()(const double* x) {
        const double v = fn(x);
        if (!std::isfinite(v)) {
            if (!failed) bad_point.assign(x, x + dim);
            failed = true;
            return std::numeric_limits<double>::max();
        }
        return v;
    }
};

double simplex_trampoline(const gsl_vector* x, void* params) {
    return (*static_cast<Objective*>(params))(x->data);
}

double scalar_trampoline(double x, void* params) {
    return (*static_cast<std::function<double(double)>*>(params))(x);
}

[[noreturn]] void report_non_finite(SubsetKey subset, const std::vector<double>& point) {
    std::ostringstream os;
    os << "non-finite objective for subset " << subset.to_string() << " at coordinates [";
    for (std::size_t i = 0; i < point.size(); ++i) os << (i ? ", " : "") << point[i];
    os << "]";
    throw OptimizerError(os.str());
}

struct DescentOutcome {
    std::vector<double> x;
    double value;
    int iterations;
    bool converged;
};

DescentOutcome simplex_descent(Objective& obj, const std::vector<double>& start,
                               const OptimizerSettings& settings) {
    const std::size_t d = start.size();
    std::unique_ptr<gsl_multimin_fminimizer, SimplexDeleter> m(
        gsl_multimin_fminimizer_alloc(gsl_multimin_fminimizer_nmsimplex2, d));
    VectorPtr x0(gsl_vector_alloc(d));
    VectorPtr steps(gsl_vector_alloc(d));
    for (std::size_t i = 0; i < d; ++i) gsl_vector_set(x0.get(), i, start[i]);
    gsl_vector_set_all(steps.get(), 1.0);

    gsl_multimin_function f{&simplex_trampoline, d, &obj};
    gsl_multimin_fminimizer_set(m.get(), &f, x0.get(), steps.get());

    DescentOutcome out{{}, 0.0, 0, false};
    // One restart from the reached point guards against simplex collapse.
    for (int pass = 0; pass < 2 && !obj.failed; ++pass) {
        bool pass_converged = false;
        while (out.iterations < settings.max_iterations) {
            ++out.iterations;
            const int status = gsl_multimin_fminimizer_iterate(m.get());
            if (obj.failed || status != GSL_SUCCESS) break;
            if (gsl_multimin_test_size(gsl_multimin_fminimizer_size(m.get()), settings.tolerance) ==
                GSL_SUCCESS) {
                pass_converged = true;
                break;
            }
        }
        out.converged = pass_converged;
        if (!pass_converged || pass == 1) break;
        gsl_vector_memcpy(x0.get(), gsl_multimin_fminimizer_x(m.get()));
        gsl_vector_set_all(steps.get(), 0.1);
        gsl_multimin_fminimizer_set(m.get(), &f, x0.get(), steps.get());
    }
    const gsl_vector* best = gsl_multimin_fminimizer_x(m.get());
    out.x.assign(best->data, best->data + d);
    out.value = gsl_multimin_fminimizer_minimum(m.get());
    return out;
}

}  // namespace

// ---------------------------------------------------------------------------

RandomizedParametrization::RandomizedParametrization(SubsetKey subset, int n_users, double mu_lo,
                                                     double mu_hi, double pi_floor)
    : members_(subset.members()), n_users_(n_users), mu_lo_(mu_lo), mu_hi_(mu_hi), pi_floor_(pi_floor) {
    if (!(0.0 < mu_lo && mu_lo < mu_hi && mu_hi <= 1.0)) throw ParamError("invalid mu box");
    if (!(pi_floor >= 0.0 && pi_floor * static_cast<double>(members_.size()) < 1.0))
        throw ParamError("pi floor too large for the subset");
}

double RandomizedParametrization::mu(const double* x) const {
    return mu_lo_ + (mu_hi_ - mu_lo_) * logistic(x[0]);
}

std::vector<double> RandomizedParametrization::pi(const double* x) const {
    const std::size_t k = members_.size();
    std::vector<double> out(static_cast<std::size_t>(n_users_), 0.0);
    if (k == 1) {
        out[static_cast<std::size_t>(members_[0])] = 1.0;
        return out;
    }
    // Softmax over logits (x[1..k-1], 0), shifted for numerical safety.
    std::vector<double> logits(k, 0.0);
    for (std::size_t j = 0; j + 1 < k; ++j) logits[j] = x[1 + j];
    double top = 0.0;
    for (double l : logits) top = std::max(top, l);
    double z = 0.0;
    for (double& l : logits) {
        l = std::exp(l - top);
        z += l;
    }
    const double free_mass = 1.0 - pi_floor_ * static_cast<double>(k);
    double acc = 0.0;
    for (std::size_t j = 0; j + 1 < k; ++j) {
        const double p = pi_floor_ + free_mass * logits[j] / z;
        out[static_cast<std::size_t>(members_[j])] = p;
        acc += p;
    }
    out[static_cast<std::size_t>(members_.back())] = 1.0 - acc;
    return out;
}

std::vector<double> RandomizedParametrization::canonical() const {
    std::vector<double> x(dimension(), 0.0);
    // logistic(x0) = (0.5 - lo) / (hi - lo)
    const double t = (0.5 - mu_lo_) / (mu_hi_ - mu_lo_);
    x[0] = std::log(t / (1.0 - t));
    return x;
}

OptResult optimize_randomized_subset(SubsetKey subset, const SystemParams& params,
                                     const OptimizerSettings& settings) {
    if (subset.span() > params.n_users()) throw ParamError("subset exceeds n_users");
    if (settings.restarts < 0) throw ParamError("restarts must be non-negative");
    const RandomizedParametrization chart(subset, params.n_users(), settings.mu_lo, settings.mu_hi,
                                          settings.pi_floor);
    const std::size_t d = chart.dimension();

    SubsystemSpec spec{subset, params, 0.5, {}};
    Objective obj;
    obj.dim = d;
    obj.fn = [&](const double* x) {
        spec.mu = chart.mu(x);
        spec.pi = chart.pi(x);
        return total_cost_randomized(spec);
    };

    std::vector<std::vector<double>> starts{chart.canonical()};
    std::seed_seq seq{static_cast<std::uint32_t>(settings.seed & 0xffffffffu),
                      static_cast<std::uint32_t>(settings.seed >> 32), subset.mask(), 0x726e64u};
    std::mt19937_64 gen(seq);
    for (int r = 0; r < settings.restarts; ++r) {
        std::vector<double> x(d);
        for (auto& v : x) {
            const double u = static_cast<double>(gen() >> 11) * 0x1.0p-53;
            v = settings.start_box * (2.0 * u - 1.0);
        }
        starts.push_back(std::move(x));
    }

    OptResult res{subset, SchedulerKind::AdaptiveRandomized};
    res.objective = std::numeric_limits<double>::infinity();
    std::vector<double> best_x;
    for (const auto& start : starts) {
        const double f0 = obj(start.data());
        if (obj.failed) report_non_finite(subset, obj.bad_point);
        res.start_objectives.push_back(f0);

        auto run = simplex_descent(obj, start, settings);
        if (obj.failed) report_non_finite(subset, obj.bad_point);
        res.iterations += run.iterations;
        ++res.restarts_used;
        // Keep the start itself if descent somehow ended above it.
        if (f0 < run.value) {
            run.value = f0;
            run.x = start;
        }
        if (run.value < res.objective) {
            res.objective = run.value;
            res.converged = run.converged;
            best_x = run.x;
        }
    }
    res.restarts_used -= 1;  // canonical start is not a restart
    res.mu = chart.mu(best_x.data());
    res.pi = chart.pi(best_x.data());
    // Report the objective evaluated at the reported point, bit for bit.
    spec.mu = res.mu;
    spec.pi = res.pi;
    res.objective = total_cost_randomized(spec);
    return res;
}

ScalarMinimum minimize_scalar(const std::function<double(double)>& f, double lo, double hi,
                              int grid_points, double tolerance) {
    if (grid_points < 3) throw ParamError("grid needs at least 3 points");
    if (!(lo < hi)) throw ParamError("empty search interval");
    std::vector<double> xs(static_cast<std::size_t>(grid_points));
    std::vector<double> fs(xs.size());
    std::size_t best = 0;
    for (std::size_t j = 0; j < xs.size(); ++j) {
        xs[j] = lo + (hi - lo) * static_cast<double>(j) / static_cast<double>(grid_points - 1);
        fs[j] = f(xs[j]);
        if (!std::isfinite(fs[j])) {
            std::ostringstream os;
            os << "non-finite objective at x = " << xs[j];
            throw OptimizerError(os.str());
        }
        if (fs[j] < fs[best]) best = j;
    }
    ScalarMinimum out{xs[best], fs[best], xs[best], fs[best]};
    if (best == 0 || best + 1 == xs.size()) return out;

    std::unique_ptr<gsl_min_fminimizer, ScalarMinDeleter> m(
        gsl_min_fminimizer_alloc(gsl_min_fminimizer_goldensection));
    auto fn = f;
    gsl_function gf{&scalar_trampoline, &fn};
    if (gsl_min_fminimizer_set_with_values(m.get(), &gf, xs[best], fs[best], xs[best - 1], fs[best - 1],
                                           xs[best + 1], fs[best + 1]) != GSL_SUCCESS)
        return out;
    for (int iter = 0; iter < 500; ++iter) {
        if (gsl_min_fminimizer_iterate(m.get()) != GSL_SUCCESS) break;
        const double a = gsl_min_fminimizer_x_lower(m.get());
        const double b = gsl_min_fminimizer_x_upper(m.get());
        if (gsl_min_test_interval(a, b, tolerance, 0.0) == GSL_SUCCESS) break;
    }
    const double x = gsl_min_fminimizer_x_minimum(m.get());
    const double v = f(x);
    if (std::isfinite(v) && v <= out.value) {
        out.x = x;
        out.value = v;
    }
    return out;
}

OptResult optimize_maxage_subset(SubsetKey subset, const SystemParams& params,
                                 const OptimizerSettings& settings) {
    if (subset.span() > params.n_users()) throw ParamError("subset exceeds n_users");
    SubsystemSpec spec{subset, params, 0.5, {}};
    auto objective = [&](double mu) {
        spec.mu = mu;
        return total_cost_maxage(spec, settings.reading);
    };
    const auto m = minimize_scalar(objective, settings.mu_lo, settings.mu_hi, settings.grid_points,
                                   settings.golden_tolerance);
    OptResult res{subset, SchedulerKind::MaxAge};
    res.mu = m.x;
    res.objective = m.value;
    res.iterations = settings.grid_points;
    res.converged = true;
    res.start_objectives.push_back(m.grid_best_value);
    return res;
}

namespace {

PolicyCollection build_collection(const SystemParams& params, const OptimizerSettings& settings,
                                  SchedulerKind kind) {
    const auto subsets = enumerate_subsets(params.n_users());
    auto results = parallel_map(subsets.size(), settings.workers, [&](std::size_t i) {
        return kind == SchedulerKind::MaxAge ? optimize_maxage_subset(subsets[i], params, settings)
                                             : optimize_randomized_subset(subsets[i], params, settings);
    });
    AdaptivePolicy policy(kind, params.n_users());
    for (const auto& r : results) policy.set(r.subset, RandomizedSubsetPolicy{r.mu, r.pi});
    return PolicyCollection{std::move(policy), std::move(results)};
}

}  // namespace

PolicyCollection build_pi_c(const SystemParams& params, const OptimizerSettings& settings) {
    return build_collection(params, settings, SchedulerKind::AdaptiveRandomized);
}

PolicyCollection build_pibar_c(const SystemParams& params, const OptimizerSettings& settings) {
    return build_collection(params, settings, SchedulerKind::MaxAge);
}

}  // namespace aojc
