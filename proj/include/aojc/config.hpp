#pragma once

// Experiment configuration files: JSON with comments allowed, nested
// sections, unknown keys rejected. Every section is optional; commands
// fall back to built-in defaults for whatever they need and is absent.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "aojc/experiments.hpp"

namespace aojc {

class ConfigError : public ParamError {
public:
    using ParamError::ParamError;
};

/// Environment variable that overrides the config's master seed.
inline constexpr const char* kSeedEnvVar = "AOJC_SEED";

struct SystemBlock {
    RawParams raw;
    ValidationOptions validation;
};

struct PolicyBlock {
    std::optional<SchedulerKind> kind;
    std::optional<std::filesystem::path> table;  // pre-solved table file
    std::optional<SubsetKey> subset;
    std::optional<double> mu;
    std::optional<std::vector<double>> pi;  // over the subset members, in order
};

struct SimBlock {
    std::optional<std::int64_t> horizon;
    std::optional<std::vector<std::uint64_t>> seeds;
    std::optional<std::string> mode;  // "open" | "saturated"
    std::optional<SubsetKey> subset;  // saturated users
    std::optional<double> burn_in;
    std::optional<std::int64_t> trace_stride;
};

struct SweepBlock {
    std::string parameter = "flip_prob";
    std::vector<double> values;
    std::vector<ArrivalConfig> arrivals;
};

struct VerifyBlock {
    std::vector<VerifyCase> cases;  // empty: built-in cases
    std::optional<std::int64_t> horizon;
    std::optional<std::vector<std::uint64_t>> seeds;
    std::optional<double> tolerance;
};

struct SoundnessBlock {
    RandomCaseSettings sampler;
    double epsilon = 0.01;
};

struct StabilityBlock {
    std::vector<StabilityCaseConfig> cases;  // empty: built-in cases
    std::optional<double> epsilon;
    std::optional<std::int64_t> horizon;
    std::optional<std::vector<std::uint64_t>> seeds;
    std::optional<std::int64_t> trace_stride;
    std::optional<DriftThresholds> thresholds;
    std::optional<SoundnessBlock> soundness;
};

struct ExperimentConfig {
    std::string id = "config";
    std::optional<std::uint64_t> seed;
    std::optional<int> workers;
    std::optional<SystemBlock> system;
    PolicyBlock policy;
    SimBlock sim;
    OptimizerSettings optimizer;
    std::optional<SweepBlock> sweep;
    VerifyBlock verify;
    StabilityBlock stability;

    /// Validated system parameters; throws ConfigError if the block is absent.
    SystemParams system_params() const;
};

/// Throws ConfigError on syntax errors, unknown keys, wrong types and
/// invalid values (grids empty, seeds repeated, parameters out of range).
ExperimentConfig parse_config(const std::string& text, const std::filesystem::path& base_dir = ".");
ExperimentConfig load_config(const std::filesystem::path& path);

/// Precedence: explicit flag, then the environment variable, then the
/// config file, then 1.
std::uint64_t resolve_master_seed(std::optional<std::uint64_t> flag, const ExperimentConfig& config);

}  // namespace aojc
