#pragma once

// CSV emission, policy-table files and reproducibility sidecars.

#include <cstdint>
#include <filesystem>
#include <initializer_list>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "aojc/model.hpp"

namespace aojc {

inline constexpr const char* kToolName = "aojc";
inline constexpr const char* kToolVersion = "1.0.0";

/// Shortest text that round-trips the double; identical inputs always give
/// identical bytes.
std::string format_double(double v);

class CsvWriter {
public:
    explicit CsvWriter(std::vector<std::string> header);

    CsvWriter& field(const std::string& v);
    CsvWriter& field(const char* v) { return field(std::string(v)); }
    CsvWriter& field(double v);
    CsvWriter& field(std::int64_t v);
    CsvWriter& field(int v) { return field(static_cast<std::int64_t>(v)); }
    CsvWriter& field(std::uint64_t v);
    CsvWriter& field(bool v);
    void end_row();

    std::string str() const { return out_.str(); }
    std::size_t rows() const { return rows_; }

private:
    void separator();

    std::ostringstream out_;
    std::size_t columns_;
    std::size_t in_row_ = 0;
    std::size_t rows_ = 0;
};

nlohmann::json policy_to_json(const AdaptivePolicy& policy);
/// Throws ParamError on a malformed table.
AdaptivePolicy policy_from_json(const nlohmann::json& j);
void save_policy(const AdaptivePolicy& policy, const std::filesystem::path& path);
AdaptivePolicy load_policy(const std::filesystem::path& path);

/// Hex SHA-256 digest.
std::string sha256_hex(const std::string& bytes);

struct RunMetadata {
    std::string command;
    std::string config_sha256;
    std::uint64_t master_seed = 0;
};

/// Writes `body` to `path` and the metadata sidecar to `path` + ".meta.json".
void write_artifact(const std::filesystem::path& path, const std::string& body, const RunMetadata& meta);

std::string read_file(const std::filesystem::path& path);

/// Deterministic per-run seed derived from the master seed and a run seed.
std::uint64_t derive_seed(std::uint64_t master_seed, std::uint64_t run_seed);

}  // namespace aojc
