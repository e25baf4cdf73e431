#include "aojc/io.hpp"

#include <openssl/evp.h>

#include <array>
#include <charconv>
#include <fstream>
#include <iomanip>
#include <random>
#include <stdexcept>

namespace aojc {

std::string format_double(double v) {
    std::array<char, 64> buf{};
    const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    return std::string(buf.data(), res.ptr);
}

CsvWriter::CsvWriter(std::vector<std::string> header) : columns_(header.size()) {
    for (const auto& h : header) field(h);
    end_row();
    rows_ = 0;
}

void CsvWriter::separator() {
    if (in_row_ > 0) out_ << ',';
    ++in_row_;
}

CsvWriter& CsvWriter::field(const std::string& v) {
    separator();
    if (v.find_first_of(",\"\n") == std::string::npos) {
        out_ << v;
    } else {
        out_ << '"';
        for (char c : v) {
            if (c == '"') out_ << '"';
            out_ << c;
        }
        out_ << '"';
    }
    return *this;
}

CsvWriter& CsvWriter::field(double v) {
    separator();
    out_ << format_double(v);
    return *this;
}

CsvWriter& CsvWriter::field(std::int64_t v) {
    separator();
    out_ << v;
    return *this;
}

CsvWriter& CsvWriter::field(std::uint64_t v) {
    separator();
    out_ << v;
    return *this;
}

CsvWriter& CsvWriter::field(bool v) {
    separator();
    out_ << (v ? "true" : "false");
    return *this;
}

void CsvWriter::end_row() {
    if (in_row_ != columns_)
        throw std::logic_error("csv row has " + std::to_string(in_row_) + " fields, expected " +
                               std::to_string(columns_));
    out_ << '\n';
    in_row_ = 0;
    ++rows_;
}

// ---------------------------------------------------------------------------

nlohmann::json policy_to_json(const AdaptivePolicy& policy) {
    nlohmann::json j;
    j["format"] = "aojc-policy-table";
    j["version"] = 1;
    j["kind"] = to_string(policy.kind());
    j["n_users"] = policy.n_users();
    auto entries = nlohmann::json::array();
    for (SubsetKey s : policy.subsets()) {
        const auto& e = policy.at(s);
        nlohmann::json row;
        row["subset_mask"] = s.mask();
        std::vector<int> users;
        for (int u : s.members()) users.push_back(u + 1);
        row["users"] = users;
        row["mu"] = e.sampling_prob;
        if (policy.kind() == SchedulerKind::AdaptiveRandomized) row["pi"] = e.schedule_dist;
        entries.push_back(std::move(row));
    }
    j["entries"] = std::move(entries);
    return j;
}

AdaptivePolicy policy_from_json(const nlohmann::json& j) {
    try {
        if (j.at("format").get<std::string>() != "aojc-policy-table")
            throw ParamError("not a policy table file");
        const auto kind = scheduler_kind_from_string(j.at("kind").get<std::string>());
        AdaptivePolicy policy(kind, j.at("n_users").get<int>());
        for (const auto& row : j.at("entries")) {
            RandomizedSubsetPolicy e;
            e.sampling_prob = row.at("mu").get<double>();
            if (kind == SchedulerKind::AdaptiveRandomized) e.schedule_dist = row.at("pi").get<std::vector<double>>();
            policy.set(SubsetKey(row.at("subset_mask").get<std::uint32_t>()), std::move(e));
        }
        return policy;
    } catch (const nlohmann::json::exception& e) {
        throw ParamError(std::string("malformed policy table: ") + e.what());
    }
}

void save_policy(const AdaptivePolicy& policy, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << policy_to_json(policy).dump(2) << '\n';
}

AdaptivePolicy load_policy(const std::filesystem::path& path) {
    const auto text = read_file(path);
    try {
        return policy_from_json(nlohmann::json::parse(text));
    } catch (const nlohmann::json::parse_error& e) {
        throw ParamError("policy table " + path.string() + " is not valid JSON: " + e.what());
    }
}

std::string sha256_hex(const std::string& bytes) {
    std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), digest.data(), &len, EVP_sha256(), nullptr) != 1)
        throw std::runtime_error("sha256 failed");
    std::ostringstream os;
    for (unsigned int i = 0; i < len; ++i) os << std::hex << std::setw(2) << std::setfill('0') << int(digest[i]);
    return os.str();
}

void write_artifact(const std::filesystem::path& path, const std::string& body, const RunMetadata& meta) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    {
        std::ofstream out(path, std::ios::binary);
        if (!out) throw std::runtime_error("cannot write " + path.string());
        out << body;
    }
    nlohmann::json m;
    m["tool"] = kToolName;
    m["version"] = kToolVersion;
    m["command"] = meta.command;
    m["config_sha256"] = meta.config_sha256;
    m["master_seed"] = meta.master_seed;
    m["body_sha256"] = sha256_hex(body);
    std::ofstream side(path.string() + ".meta.json", std::ios::binary);
    if (!side) throw std::runtime_error("cannot write metadata for " + path.string());
    side << m.dump(2) << '\n';
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParamError("cannot read " + path.string());
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

std::uint64_t derive_seed(std::uint64_t master_seed, std::uint64_t run_seed) {
    std::seed_seq seq{static_cast<std::uint32_t>(master_seed & 0xffffffffu),
                      static_cast<std::uint32_t>(master_seed >> 32),
                      static_cast<std::uint32_t>(run_seed & 0xffffffffu),
                      static_cast<std::uint32_t>(run_seed >> 32)};
    std::array<std::uint32_t, 2> out{};
    seq.generate(out.begin(), out.end());
    return (std::uint64_t{out[0]} << 32) | out[1];
}

}  // namespace aojc
