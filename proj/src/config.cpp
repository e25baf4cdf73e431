#include "aojc/config.hpp"

#include <cerrno>
#include <cstdlib>
#include <set>

#include "aojc/io.hpp"

namespace aojc {

namespace {

using nlohmann::json;

// Wraps an object and remembers which keys were read, so leftovers can be
// reported as unknown.
class Section {
public:
    Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) throw ConfigError(path_ + " must be an object");
    }

    bool has(const std::string& key) {
        used_.insert(key);
        return j_.contains(key);
    }

    const json& at(const std::string& key) {
        used_.insert(key);
        if (!j_.contains(key)) throw ConfigError(path_ + "." + key + " is required");
        return j_.at(key);
    }

    template <class T>
    T get(const std::string& key) {
        try {
            return at(key).get<T>();
        } catch (const json::exception&) {
            throw ConfigError(path_ + "." + key + " has the wrong type");
        }
    }

    template <class T>
    std::optional<T> opt(const std::string& key) {
        if (!has(key)) return std::nullopt;
        return get<T>(key);
    }

    Section child(const std::string& key) { return Section(at(key), path_ + "." + key); }
    std::string path(const std::string& key) const { return path_ + "." + key; }

    void finish() const {
        for (auto it = j_.begin(); it != j_.end(); ++it)
            if (!used_.count(it.key())) throw ConfigError("unknown key " + path_ + "." + it.key());
    }

private:
    const json& j_;
    std::string path_;
    std::set<std::string> used_;
};

SubsetKey parse_users(const std::vector<int>& users, const std::string& where) {
    if (users.empty()) throw ConfigError(where + " must list at least one user");
    std::uint32_t mask = 0;
    for (int u : users) {
        if (u < 1 || u > SubsetKey::kMaxUsers) throw ConfigError(where + ": user " + std::to_string(u) + " out of range");
        const std::uint32_t bit = 1u << (u - 1);
        if (mask & bit) throw ConfigError(where + ": user " + std::to_string(u) + " listed twice");
        mask |= bit;
    }
    return SubsetKey(mask);
}

std::vector<std::uint64_t> parse_seeds(Section& sec, const std::string& key) {
    const auto seeds = sec.get<std::vector<std::uint64_t>>(key);
    if (seeds.empty()) throw ConfigError(sec.path(key) + " must not be empty");
    if (std::set<std::uint64_t>(seeds.begin(), seeds.end()).size() != seeds.size())
        throw ConfigError(sec.path(key) + " must not repeat a seed");
    return seeds;
}

std::int64_t parse_positive(Section& sec, const std::string& key) {
    const auto v = sec.get<std::int64_t>(key);
    if (v < 1) throw ConfigError(sec.path(key) + " must be positive");
    return v;
}

SystemBlock parse_system(Section sec) {
    SystemBlock b;
    b.raw.n_users = sec.get<int>("n_users");
    b.raw.arrival_rates = sec.get<std::vector<double>>("arrival_rates");
    b.raw.service_rates = sec.get<std::vector<double>>("service_rates");
    b.raw.flip_prob = sec.get<double>("flip_prob");
    b.raw.post_busy_prob = sec.get<double>("post_busy_prob");
    b.raw.sampling_cost = sec.get<double>("sampling_cost");
    b.validation.allow_zero_arrivals = sec.opt<bool>("allow_zero_arrivals").value_or(false);
    sec.finish();
    try {
        validate_params(b.raw, b.validation);
    } catch (const ParamError& e) {
        throw ConfigError(std::string("system: ") + e.what());
    }
    return b;
}

SchedulerKind parse_kind(Section& sec, const std::string& key) {
    try {
        return scheduler_kind_from_string(sec.get<std::string>(key));
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception& e) {
        throw ConfigError(sec.path(key) + ": " + e.what());
    }
}

// pi listed over the subset members in ascending user order; expanded to length N.
std::vector<double> expand_pi(const std::vector<double>& over_members, SubsetKey subset, int n,
                              const std::string& where) {
    const auto members = subset.members();
    if (over_members.size() != members.size())
        throw ConfigError(where + " must have one entry per subset member");
    std::vector<double> pi(static_cast<std::size_t>(n), 0.0);
    for (std::size_t k = 0; k < members.size(); ++k) {
        if (members[k] >= n) throw ConfigError(where + ": subset exceeds n_users");
        pi[static_cast<std::size_t>(members[k])] = over_members[k];
    }
    return pi;
}

OptimizerSettings parse_optimizer(Section sec) {
    OptimizerSettings o;
    if (auto v = sec.opt<double>("mu_lo")) o.mu_lo = *v;
    if (auto v = sec.opt<double>("mu_hi")) o.mu_hi = *v;
    if (auto v = sec.opt<double>("pi_floor")) o.pi_floor = *v;
    if (auto v = sec.opt<int>("restarts")) o.restarts = *v;
    if (auto v = sec.opt<double>("tolerance")) o.tolerance = *v;
    if (auto v = sec.opt<int>("max_iterations")) o.max_iterations = *v;
    if (auto v = sec.opt<std::uint64_t>("seed")) o.seed = *v;
    if (auto v = sec.opt<double>("start_box")) o.start_box = *v;
    if (auto v = sec.opt<int>("grid_points")) o.grid_points = *v;
    if (auto v = sec.opt<double>("golden_tolerance")) o.golden_tolerance = *v;
    if (auto v = sec.opt<std::string>("user_count_reading")) {
        if (*v == "cardinality_of_S") o.reading = UserCountReading::CardinalityOfS;
        else if (*v == "total_N") o.reading = UserCountReading::TotalN;
        else throw ConfigError(sec.path("user_count_reading") + " must be cardinality_of_S or total_N");
    }
    sec.finish();
    if (!(0.0 < o.mu_lo && o.mu_lo < o.mu_hi && o.mu_hi <= 1.0))
        throw ConfigError("optimizer: need 0 < mu_lo < mu_hi <= 1");
    if (!(o.pi_floor > 0.0 && o.pi_floor < 1.0 / SubsetKey::kMaxUsers))
        throw ConfigError("optimizer: pi_floor out of range");
    if (o.restarts < 0 || o.max_iterations < 1 || o.grid_points < 3 || !(o.tolerance > 0.0) ||
        !(o.golden_tolerance > 0.0) || !(o.start_box > 0.0))
        throw ConfigError("optimizer: invalid iteration or tolerance settings");
    return o;
}

DriftThresholds parse_thresholds(Section sec) {
    DriftThresholds t;
    if (auto v = sec.opt<double>("stable_growth_fraction")) t.stable_growth_fraction = *v;
    if (auto v = sec.opt<double>("stable_ratio")) t.stable_ratio = *v;
    if (auto v = sec.opt<double>("unstable_arrival_fraction")) t.unstable_arrival_fraction = *v;
    if (auto v = sec.opt<double>("unstable_ratio")) t.unstable_ratio = *v;
    if (auto v = sec.opt<std::size_t>("min_samples")) t.min_samples = *v;
    sec.finish();
    return t;
}

void read_range(Section& sec, const std::string& key, double& lo, double& hi) {
    const auto v = sec.opt<std::vector<double>>(key);
    if (!v) return;
    if (v->size() != 2 || !((*v)[0] <= (*v)[1])) throw ConfigError(sec.path(key) + " must be [lo, hi]");
    lo = (*v)[0];
    hi = (*v)[1];
}

SoundnessBlock parse_soundness(Section sec) {
    SoundnessBlock b;
    auto& r = b.sampler;
    if (auto v = sec.opt<int>("count")) r.count = *v;
    if (auto v = sec.opt<std::uint64_t>("seed")) r.seed = *v;
    if (auto v = sec.opt<int>("max_users")) r.max_users = *v;
    read_range(sec, "flip_prob_range", r.q_lo, r.q_hi);
    read_range(sec, "post_busy_prob_range", r.s_lo, r.s_hi);
    read_range(sec, "service_rate_range", r.service_lo, r.service_hi);
    read_range(sec, "mu_range", r.mu_lo, r.mu_hi);
    read_range(sec, "load_range", r.load_lo, r.load_hi);
    if (auto v = sec.opt<double>("epsilon")) b.epsilon = *v;
    sec.finish();
    if (r.count < 1 || r.max_users < 1 || r.max_users > kDefaultSubsetCap)
        throw ConfigError("stability.soundness: invalid count or max_users");
    return b;
}

}  // namespace

SystemParams ExperimentConfig::system_params() const {
    if (!system) throw ConfigError("this command needs a system section");
    return validate_params(system->raw, system->validation);
}

ExperimentConfig parse_config(const std::string& text, const std::filesystem::path& base_dir) {
    json root;
    try {
        root = json::parse(text, nullptr, true, true);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }

    ExperimentConfig c;
    Section top(root, "config");
    if (auto v = top.opt<std::string>("id")) c.id = *v;
    c.seed = top.opt<std::uint64_t>("seed");
    if (auto v = top.opt<int>("workers")) {
        if (*v < 1) throw ConfigError("config.workers must be positive");
        c.workers = *v;
    }
    if (top.has("system")) c.system = parse_system(top.child("system"));

    if (top.has("policy")) {
        Section p = top.child("policy");
        if (p.has("kind")) c.policy.kind = parse_kind(p, "kind");
        if (auto v = p.opt<std::string>("table")) {
            std::filesystem::path path(*v);
            if (path.is_relative()) path = base_dir / path;
            if (!std::filesystem::exists(path)) throw ConfigError("policy.table " + path.string() + " does not exist");
            c.policy.table = path;
        }
        if (auto v = p.opt<std::vector<int>>("subset")) c.policy.subset = parse_users(*v, p.path("subset"));
        c.policy.mu = p.opt<double>("mu");
        c.policy.pi = p.opt<std::vector<double>>("pi");
        p.finish();
    }

    if (top.has("sim")) {
        Section s = top.child("sim");
        if (s.has("horizon")) c.sim.horizon = parse_positive(s, "horizon");
        if (s.has("seeds")) c.sim.seeds = parse_seeds(s, "seeds");
        if (auto v = s.opt<std::string>("mode")) {
            if (*v != "open" && *v != "saturated") throw ConfigError("sim.mode must be open or saturated");
            c.sim.mode = *v;
        }
        if (auto v = s.opt<std::vector<int>>("subset")) c.sim.subset = parse_users(*v, s.path("subset"));
        if (auto v = s.opt<double>("burn_in")) {
            if (!(*v >= 0.0 && *v < 1.0)) throw ConfigError("sim.burn_in must lie in [0, 1)");
            c.sim.burn_in = *v;
        }
        if (auto v = s.opt<std::int64_t>("trace_stride")) {
            if (*v < 0) throw ConfigError("sim.trace_stride must be non-negative");
            c.sim.trace_stride = *v;
        }
        s.finish();
    }

    if (top.has("optimizer")) c.optimizer = parse_optimizer(top.child("optimizer"));

    if (top.has("sweep")) {
        Section s = top.child("sweep");
        SweepBlock b;
        if (auto v = s.opt<std::string>("parameter")) b.parameter = *v;
        if (b.parameter != "flip_prob")
            throw ConfigError("sweep.parameter: only flip_prob can be swept");
        b.values = s.get<std::vector<double>>("values");
        if (b.values.empty()) throw ConfigError("sweep.values must not be empty");
        if (s.has("arrivals")) {
            const auto& arr = s.at("arrivals");
            if (!arr.is_array() || arr.empty()) throw ConfigError("sweep.arrivals must be a non-empty array");
            for (std::size_t k = 0; k < arr.size(); ++k) {
                Section a(arr[k], "sweep.arrivals[" + std::to_string(k) + "]");
                b.arrivals.push_back({a.get<std::string>("name"), a.get<std::vector<double>>("rates")});
                a.finish();
            }
        }
        s.finish();
        c.sweep = std::move(b);
    }

    if (top.has("verify")) {
        Section v = top.child("verify");
        if (v.has("horizon")) c.verify.horizon = parse_positive(v, "horizon");
        if (v.has("seeds")) c.verify.seeds = parse_seeds(v, "seeds");
        if (auto t = v.opt<double>("tolerance")) c.verify.tolerance = *t;
        if (v.has("cases")) {
            const auto& arr = v.at("cases");
            if (!arr.is_array() || arr.empty()) throw ConfigError("verify.cases must be a non-empty array");
            for (std::size_t k = 0; k < arr.size(); ++k) {
                const std::string where = "verify.cases[" + std::to_string(k) + "]";
                Section cs(arr[k], where);
                const auto id = cs.get<std::string>("id");
                const auto block = cs.has("system") ? parse_system(cs.child("system"))
                                                    : (c.system ? *c.system : throw ConfigError(where + " needs a system"));
                const auto params = validate_params(block.raw, block.validation);
                const auto subset = parse_users(cs.get<std::vector<int>>("subset"), where + ".subset");
                if (subset.members().back() >= params.n_users()) throw ConfigError(where + ": subset exceeds n_users");
                const auto kind = parse_kind(cs, "kind");
                const auto mu = cs.get<double>("mu");
                std::vector<double> pi;
                if (kind == SchedulerKind::AdaptiveRandomized) {
                    const auto given = cs.opt<std::vector<double>>("pi");
                    pi = given ? expand_pi(*given, subset, params.n_users(), where + ".pi")
                               : expand_pi(std::vector<double>(static_cast<std::size_t>(subset.size()),
                                                               1.0 / subset.size()),
                                           subset, params.n_users(), where + ".pi");
                }
                cs.finish();
                try {
                    validate_subset_policy(subset, RandomizedSubsetPolicy{mu, pi}, params.n_users(), kind);
                } catch (const ParamError& e) {
                    throw ConfigError(where + ": " + e.what());
                }
                c.verify.cases.push_back(VerifyCase{id, params, subset, kind, mu, pi});
            }
        }
        v.finish();
    }

    if (top.has("stability")) {
        Section s = top.child("stability");
        c.stability.epsilon = s.opt<double>("epsilon");
        if (s.has("horizon")) c.stability.horizon = parse_positive(s, "horizon");
        if (s.has("seeds")) c.stability.seeds = parse_seeds(s, "seeds");
        if (s.has("trace_stride")) c.stability.trace_stride = parse_positive(s, "trace_stride");
        if (s.has("thresholds")) c.stability.thresholds = parse_thresholds(s.child("thresholds"));
        if (s.has("soundness")) c.stability.soundness = parse_soundness(s.child("soundness"));
        if (s.has("cases")) {
            const auto& arr = s.at("cases");
            if (!arr.is_array() || arr.empty()) throw ConfigError("stability.cases must be a non-empty array");
            for (std::size_t k = 0; k < arr.size(); ++k) {
                Section cs(arr[k], "stability.cases[" + std::to_string(k) + "]");
                const auto id = cs.get<std::string>("id");
                const auto block = parse_system(cs.child("system"));
                cs.finish();
                c.stability.cases.push_back({id, validate_params(block.raw, block.validation)});
            }
        }
        s.finish();
    }

    top.finish();
    return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::string text;
    try {
        text = read_file(path);
    } catch (const ParamError& e) {
        throw ConfigError(e.what());
    }
    return parse_config(text, path.parent_path().empty() ? std::filesystem::path(".") : path.parent_path());
}

std::uint64_t resolve_master_seed(std::optional<std::uint64_t> flag, const ExperimentConfig& config) {
    if (flag) return *flag;
    if (const char* env = std::getenv(kSeedEnvVar); env && *env) {
        char* end = nullptr;
        errno = 0;
        const unsigned long long v = std::strtoull(env, &end, 10);
        if (errno != 0 || *end != '\0' || env[0] == '-')
            throw ConfigError(std::string(kSeedEnvVar) + " is not an unsigned 64-bit integer");
        return v;
    }
    return config.seed.value_or(1);
}

}  // namespace aojc
