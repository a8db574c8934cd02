#pragma once

// Line-delimited JSON records exchanged between subcommands. Records read
// back by a later subcommand carry a `schema` tag that readers check;
// finetune records keep the bare {prompt, completion, repo, hash} shape.

#include <unistd.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "pporter/evaluation.hpp"
#include "pporter/mining.hpp"
#include "pporter/porting.hpp"
#include "pporter/reduction.hpp"

namespace pporter::records {

using nlohmann::json;

inline constexpr const char* task_schema = "pporter.task/1";
inline constexpr const char* reduced_schema = "pporter.reduced/1";
inline constexpr const char* outcome_schema = "pporter.outcome/1";
inline constexpr const char* report_schema = "pporter.report/1";

class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Writes via a temporary sibling and renames over the target.
inline void write_atomic(const std::filesystem::path& path, const std::string& content)
{
    if (path.has_parent_path())
        std::filesystem::create_directories(path.parent_path());
    std::filesystem::path tmp = path;
    tmp += ".tmp." + std::to_string(::getpid());
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out)
            throw DataError("cannot write " + tmp.string());
        out << content;
        out.flush();
        if (!out)
            throw DataError("short write to " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

inline std::string read_file(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw DataError("cannot read " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline std::vector<json> read_jsonl(const std::filesystem::path& path, const char* schema)
{
    std::vector<json> out;
    std::istringstream in(read_file(path));
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos)
            continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::parse_error& e) {
            throw DataError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
        }
        if (!j.is_object() || j.value("schema", "") != schema)
            throw DataError(path.string() + ":" + std::to_string(lineno) + ": expected schema " + schema);
        out.push_back(std::move(j));
    }
    return out;
}

inline std::string to_jsonl(const std::vector<json>& records)
{
    std::string out;
    for (const json& j : records) {
        out += j.dump();
        out += '\n';
    }
    return out;
}

template <class T>
T field(const json& j, const char* key)
{
    if (!j.contains(key))
        throw DataError(std::string("record is missing field '") + key + "'");
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw DataError(std::string("bad field '") + key + "': " + e.what());
    }
}

inline json to_json(const mining::PortingTask& t)
{
    json j {
        { "schema", task_schema },
        { "id", t.id },
        { "source_hash", t.source_hash },
        { "fork_hash", t.fork_hash },
        { "file", t.file },
        { "function", t.function },
        { "f_s", t.fs },
        { "f_s_post", t.fs_post },
        { "f_f", t.ff },
        { "fork_time", mining::format_utc(t.fork_time) },
    };
    j["f_f_post"] = t.ff_post ? json(*t.ff_post) : json(nullptr);
    return j;
}

inline mining::PortingTask task_from_json(const json& j)
{
    mining::PortingTask t;
    t.id = field<std::string>(j, "id");
    t.source_hash = j.value("source_hash", "");
    t.fork_hash = j.value("fork_hash", "");
    t.file = j.value("file", "");
    t.function = j.value("function", "");
    t.fs = field<std::string>(j, "f_s");
    t.fs_post = field<std::string>(j, "f_s_post");
    t.ff = field<std::string>(j, "f_f");
    if (j.contains("f_f_post") && j["f_f_post"].is_string())
        t.ff_post = j["f_f_post"].get<std::string>();
    if (j.contains("fork_time") && j["fork_time"].is_string())
        t.fork_time = mining::parse_utc_date(j["fork_time"].get<std::string>());
    return t;
}

inline json to_json(const syntax::Segment& s)
{
    return json {
        { "kind", s.node_kind },
        { "lines", { s.lines.first, s.lines.last } },
        { "bytes", { s.bytes.begin, s.bytes.end } },
        { "parent_lines", { s.parent_lines.first, s.parent_lines.last } },
        { "parent_bytes", { s.parent_bytes.begin, s.parent_bytes.end } },
    };
}

inline syntax::Segment segment_from_json(const json& j)
{
    syntax::Segment s;
    s.node_kind = field<std::string>(j, "kind");
    auto pair = [&](const char* key) { return field<std::vector<std::size_t>>(j, key); };
    auto lines = pair("lines"), bytes = pair("bytes"), plines = pair("parent_lines"), pbytes = pair("parent_bytes");
    if (lines.size() != 2 || bytes.size() != 2 || plines.size() != 2 || pbytes.size() != 2)
        throw DataError("segment spans must have two elements");
    s.lines = { lines[0], lines[1] };
    s.bytes = { bytes[0], bytes[1] };
    s.parent_lines = { plines[0], plines[1] };
    s.parent_bytes = { pbytes[0], pbytes[1] };
    return s;
}

inline json to_json(const reduction::RemovablePair& p)
{
    return json {
        { "index", p.index },
        { "source_text", p.source_text },
        { "fork_text", p.fork_text },
        { "spans",
            {
                { "source", to_json(p.source_segment) },
                { "source_post", to_json(p.source_post_segment) },
                { "fork", to_json(p.fork_segment) },
            } },
    };
}

inline reduction::RemovablePair pair_from_json(const json& j)
{
    reduction::RemovablePair p;
    p.index = field<std::size_t>(j, "index");
    p.source_text = field<std::string>(j, "source_text");
    p.fork_text = field<std::string>(j, "fork_text");
    const json& spans = field<json>(j, "spans");
    p.source_segment = segment_from_json(field<json>(spans, "source"));
    p.source_post_segment = segment_from_json(field<json>(spans, "source_post"));
    p.fork_segment = segment_from_json(field<json>(spans, "fork"));
    return p;
}

// A reduced record embeds its task so later stages need only this file.
inline json to_json(const mining::PortingTask& t, const reduction::ReducedTask& r, bool reduced)
{
    json j = to_json(t);
    j["schema"] = reduced_schema;
    j["reduction"] = reduced;
    j["reduced_fs"] = r.reduced_fs;
    j["reduced_fs_post"] = r.reduced_fs_post;
    j["reduced_ff"] = r.reduced_ff;
    json pairs = json::array();
    for (const auto& p : r.pairs)
        pairs.push_back(to_json(p));
    j["pairs"] = pairs;
    return j;
}

inline reduction::ReducedTask reduced_from_json(const json& j)
{
    reduction::ReducedTask r;
    r.reduced_fs = field<std::string>(j, "reduced_fs");
    r.reduced_fs_post = field<std::string>(j, "reduced_fs_post");
    r.reduced_ff = field<std::string>(j, "reduced_ff");
    for (const json& p : field<json>(j, "pairs"))
        r.pairs.push_back(pair_from_json(p));
    for (std::size_t i = 0; i < r.pairs.size(); ++i) {
        if (r.pairs[i].index != i)
            throw DataError("pair indices must be dense and ordered");
    }
    return r;
}

inline json to_json(const reduction::RecoveryReport& r)
{
    return json { { "missing", r.missing }, { "duplicated", r.duplicated }, { "out_of_range", r.out_of_range }, { "fatal", r.fatal } };
}

inline json to_json(const std::string& id, const std::string& approach, const PortOutcome& o)
{
    json j {
        { "schema", outcome_schema },
        { "id", id },
        { "approach", approach },
        { "status", std::string(to_string(o.status)) },
        { "raw_completion", o.raw_completion },
        { "recovery_report", to_json(o.recovery_report) },
        { "error", o.error },
        { "attempts", o.attempts },
        { "pairs", o.pairs },
        { "prompt_tokens", o.budget.prompt.tokens },
        { "prompt_tokens_exact", o.budget.prompt.from_tokenizer },
        { "max_new_tokens", o.budget.max_new_tokens },
    };
    j["recovered"] = o.recovered ? json(*o.recovered) : json(nullptr);
    return j;
}

struct OutcomeRecord {
    std::string id;
    std::string approach;
    PortStatus status = PortStatus::backend_error;
    std::optional<std::string> recovered;
};

inline OutcomeRecord outcome_from_json(const json& j)
{
    OutcomeRecord o;
    o.id = field<std::string>(j, "id");
    o.approach = field<std::string>(j, "approach");
    try {
        o.status = port_status_from_string(field<std::string>(j, "status"));
    } catch (const std::invalid_argument& e) {
        throw DataError(e.what());
    }
    if (j.contains("recovered") && j["recovered"].is_string())
        o.recovered = j["recovered"].get<std::string>();
    if ((o.status == PortStatus::complete) != o.recovered.has_value())
        throw DataError("outcome " + o.id + ": recovered must be present iff status is complete");
    return o;
}

inline json to_json(const mining::FinetuneExample& ex, const PromptTemplate& tpl = {})
{
    FinetunePrompt fp = render_finetune_prompt(ex.f, ex.f_post, ex.message, tpl);
    return json {
        { "prompt", fp.prompt },
        { "completion", fp.completion },
        { "repo", ex.repo },
        { "hash", ex.hash },
    };
}

inline json to_json(const evaluation::ApproachReport& r)
{
    json samples = json::array();
    for (const auto& s : r.samples) {
        samples.push_back(json {
            { "id", s.id },
            { "status", s.complete ? "complete" : "default" },
            { "correct", s.correct },
            { "edit_distance_to_truth", s.distance },
            { "denominator", s.denominator },
        });
    }
    json j {
        { "approach", r.approach },
        { "n", r.n },
        { "complete_count", r.complete_count },
        { "accuracy_count", r.accuracy_count },
        { "accuracy_pct", r.accuracy_pct },
        { "aed", r.aed },
        { "red", r.red },
        { "samples", samples },
    };
    j["aed_complete_only"] = r.aed_complete ? json(*r.aed_complete) : json(nullptr);
    j["red_complete_only"] = r.red_complete ? json(*r.red_complete) : json(nullptr);
    return j;
}

inline json to_json(const std::vector<evaluation::ApproachReport>& reports)
{
    json approaches = json::array();
    for (const auto& r : reports)
        approaches.push_back(to_json(r));
    return json { { "schema", report_schema }, { "approaches", approaches } };
}

} // namespace pporter::records
