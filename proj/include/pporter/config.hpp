#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <regex>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "pporter/backend.hpp"
#include "pporter/mining.hpp"
#include "pporter/reduction.hpp"

namespace pporter {

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct RunConfig {
    std::string source_repo;
    std::string fork_repo;
    std::string source_repo_id = "source";
    std::string fork_repo_id = "fork";
    mining::PairingConfig pairing;
    std::string allowlist_file;
    std::optional<std::string> until;
    // Ported patches at or after this date form the test set.
    std::string test_since = "2022-07-01";
    // Finetuning commits strictly before this date.
    std::string cutoff = "2022-07-01";
    reduction::MappingConfig mapping;
    BackendConfig backend;
    std::string output_dir = "out";

    void validate() const
    {
        try {
            mapping.validate();
            backend.validate();
            (void)mining::parse_utc_date(test_since);
            (void)mining::parse_utc_date(cutoff);
            if (until)
                (void)mining::parse_utc_date(*until);
            (void)std::regex(pairing.url_pattern);
        } catch (const std::exception& e) {
            throw ConfigError(e.what());
        }
        if (pairing.marker.empty())
            throw ConfigError("marker must not be empty");
    }
};

// Overlays keys of a JSON config object onto `cfg`. Unknown keys are
// rejected; secrets are never read from here.
inline void apply_config_json(RunConfig& cfg, const nlohmann::json& j)
{
    if (!j.is_object())
        throw ConfigError("config must be a JSON object");
    static const std::set<std::string> known {
        "source_repo", "fork_repo", "source_repo_id", "fork_repo_id", "marker", "source_url_pattern", "tag_format", "allowlist",
        "until", "test_since", "cutoff", "thres_self", "thres_parent", "min_segment_lines", "backend_url", "tokenize_url", "model",
        "length_limit", "max_new_tokens", "temperature", "stop", "auth_env", "retries", "backoff_ms", "timeout_s", "concurrency",
        "output_dir",
    };
    for (const auto& [key, value] : j.items()) {
        if (!known.count(key))
            throw ConfigError("unknown config key: " + key);
    }
    try {
        auto str = [&](const char* key, std::string& into) {
            if (j.contains(key))
                into = j.at(key).get<std::string>();
        };
        str("source_repo", cfg.source_repo);
        str("fork_repo", cfg.fork_repo);
        str("source_repo_id", cfg.source_repo_id);
        str("fork_repo_id", cfg.fork_repo_id);
        str("marker", cfg.pairing.marker);
        str("source_url_pattern", cfg.pairing.url_pattern);
        str("tag_format", cfg.pairing.tag_format);
        str("allowlist", cfg.allowlist_file);
        str("test_since", cfg.test_since);
        str("cutoff", cfg.cutoff);
        str("backend_url", cfg.backend.endpoint);
        str("tokenize_url", cfg.backend.tokenize_endpoint);
        str("model", cfg.backend.model);
        str("auth_env", cfg.backend.auth_env);
        str("output_dir", cfg.output_dir);
        if (j.contains("until"))
            cfg.until = j.at("until").get<std::string>();
        if (j.contains("thres_self"))
            cfg.mapping.thres_self = j.at("thres_self").get<double>();
        if (j.contains("thres_parent"))
            cfg.mapping.thres_parent = j.at("thres_parent").get<double>();
        if (j.contains("min_segment_lines"))
            cfg.mapping.min_segment_lines = j.at("min_segment_lines").get<std::size_t>();
        if (j.contains("length_limit"))
            cfg.backend.length_limit = j.at("length_limit").get<std::size_t>();
        if (j.contains("max_new_tokens") && !j.at("max_new_tokens").is_null())
            cfg.backend.max_new_tokens = j.at("max_new_tokens").get<std::size_t>();
        if (j.contains("temperature"))
            cfg.backend.temperature = j.at("temperature").get<double>();
        if (j.contains("stop"))
            cfg.backend.stop = j.at("stop").get<std::vector<std::string>>();
        if (j.contains("retries"))
            cfg.backend.retries = j.at("retries").get<int>();
        if (j.contains("backoff_ms"))
            cfg.backend.backoff_ms = j.at("backoff_ms").get<int>();
        if (j.contains("timeout_s"))
            cfg.backend.timeout_s = j.at("timeout_s").get<int>();
        if (j.contains("concurrency"))
            cfg.backend.concurrency = j.at("concurrency").get<std::size_t>();
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("bad config value: ") + e.what());
    }
}

// Allowlist file: one "<fork-hash> <source-hash>" pair per line; '#'
// starts a comment.
inline std::map<std::string, std::string> parse_allowlist(const std::string& text)
{
    std::map<std::string, std::string> out;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        if (auto hash = line.find('#'); hash != std::string::npos)
            line.erase(hash);
        std::istringstream fields(line);
        std::string fork, source, extra;
        if (!(fields >> fork))
            continue;
        if (!(fields >> source) || (fields >> extra))
            throw ConfigError("allowlist lines need exactly two hashes: " + line);
        out[fork] = source;
    }
    return out;
}

} // namespace pporter
