#pragma once

// Subcommand bodies shared by the CLI and the integration tests.

#include <filesystem>
#include <map>
#include <memory>
#include <ostream>
#include <set>
#include <string>
#include <vector>

#include "pporter/config.hpp"
#include "pporter/evaluation.hpp"
#include "pporter/mining.hpp"
#include "pporter/porting.hpp"
#include "pporter/records.hpp"
#include "pporter/reduction.hpp"

namespace pporter::commands {

namespace fs = std::filesystem;
using records::json;

enum ExitCode : int {
    ok = 0,
    usage_error = 1,
    data_error = 2,
    backend_error = 3,
};

inline const std::set<std::string>& known_approaches()
{
    static const std::set<std::string> names { "origin", "naive_apply", "pipeline", "pipeline_no_reduction" };
    return names;
}

inline mining::PairingConfig pairing_with_allowlist(const RunConfig& cfg)
{
    mining::PairingConfig pairing = cfg.pairing;
    if (!cfg.allowlist_file.empty())
        pairing.allowlist = parse_allowlist(records::read_file(cfg.allowlist_file));
    return pairing;
}

inline std::vector<mining::MinedCommit> scan(const std::string& path, const std::string& id, const RunConfig& cfg)
{
    if (path.empty())
        throw ConfigError("repository path for '" + id + "' is not set");
    mining::ScanOptions opts;
    opts.repo_id = id;
    if (cfg.until)
        opts.until = mining::parse_utc_date(*cfg.until);
    return mining::scan_history(path, opts);
}

inline std::vector<json> finetune_records(const std::vector<mining::MinedCommit>& source, const std::vector<mining::MinedCommit>& fork,
    mining::Timestamp cutoff)
{
    std::vector<json> out;
    for (const auto* commits : { &source, &fork }) {
        for (const auto& ex : mining::build_finetune_dataset(*commits, cutoff))
            out.push_back(records::to_json(ex));
    }
    return out;
}

// tasks.jsonl, finetune.jsonl and a small summary in `out_dir`.
inline int cmd_mine(const RunConfig& cfg, const fs::path& out_dir, std::ostream& log)
{
    cfg.validate();
    mining::PairingConfig pairing = pairing_with_allowlist(cfg);
    auto fork = scan(cfg.fork_repo, cfg.fork_repo_id, cfg);
    auto source = scan(cfg.source_repo, cfg.source_repo_id, cfg);
    mining::PairingResult paired = mining::pair_ported_patches(fork, cfg.source_repo, pairing, cfg.source_repo_id);

    const mining::Timestamp since = mining::parse_utc_date(cfg.test_since);
    std::vector<json> tasks;
    for (const auto& pair : paired.pairs) {
        if (pair.fork_commit.commit_time < since)
            continue;
        if (auto task = mining::extract_task(pair))
            tasks.push_back(records::to_json(*task));
    }
    std::vector<json> finetune = finetune_records(source, fork, mining::parse_utc_date(cfg.cutoff));

    json summary {
        { "schema", "pporter.mine-summary/1" },
        { "fork_commits", fork.size() },
        { "source_commits", source.size() },
        { "marked", paired.marked },
        { "paired", paired.pairs.size() },
        { "unresolved", paired.unresolved.size() },
        { "tasks", tasks.size() },
        { "finetune", finetune.size() },
    };
    json unresolved = json::array();
    for (const auto& c : paired.unresolved)
        unresolved.push_back(json { { "hash", c.hash }, { "title", c.title() } });
    summary["unresolved_commits"] = unresolved;

    records::write_atomic(out_dir / "tasks.jsonl", records::to_jsonl(tasks));
    records::write_atomic(out_dir / "finetune.jsonl", records::to_jsonl(finetune));
    records::write_atomic(out_dir / "mine_summary.json", summary.dump(2) + "\n");
    log << "marked " << paired.marked << ", paired " << paired.pairs.size() << ", unresolved " << paired.unresolved.size() << ", tasks "
        << tasks.size() << ", finetune " << finetune.size() << "\n";
    return ok;
}

inline int cmd_ft_data(const RunConfig& cfg, const fs::path& out_path, std::ostream& log)
{
    cfg.validate();
    auto source = scan(cfg.source_repo, cfg.source_repo_id, cfg);
    auto fork = scan(cfg.fork_repo, cfg.fork_repo_id, cfg);
    std::vector<json> finetune = finetune_records(source, fork, mining::parse_utc_date(cfg.cutoff));
    records::write_atomic(out_path, records::to_jsonl(finetune));
    log << "finetune examples: " << finetune.size() << "\n";
    return ok;
}

inline std::vector<mining::PortingTask> read_tasks(const fs::path& path)
{
    std::vector<mining::PortingTask> tasks;
    for (const json& j : records::read_jsonl(path, records::task_schema))
        tasks.push_back(records::task_from_json(j));
    return tasks;
}

inline int cmd_reduce(const RunConfig& cfg, const fs::path& tasks_path, const fs::path& out_path, bool reduce, std::ostream& log)
{
    cfg.validate();
    std::vector<mining::PortingTask> tasks = read_tasks(tasks_path);
    std::vector<json> out(tasks.size());
    parallel_for(tasks.size(), cfg.backend.concurrency, [&](std::size_t i) {
        const auto& t = tasks[i];
        reduction::ReducedTask r;
        try {
            r = reduce ? reduction::reduce_task(t.fs, t.fs_post, t.ff, cfg.mapping) : reduction::unreduced_task(t.fs, t.fs_post, t.ff);
        } catch (const syntax::ParseError& e) {
            throw records::DataError("task " + t.id + ": " + e.what());
        }
        out[i] = records::to_json(t, r, reduce);
    });
    std::size_t pairs = 0;
    for (const json& j : out)
        pairs += j["pairs"].size();
    records::write_atomic(out_path, records::to_jsonl(out));
    log << "reduced " << tasks.size() << " tasks, " << pairs << " segment pairs\n";
    return ok;
}

inline int cmd_port(const RunConfig& cfg, const fs::path& reduced_path, const fs::path& out_path, CompletionBackend& backend, std::ostream& log)
{
    cfg.validate();
    std::vector<json> recs = records::read_jsonl(reduced_path, records::reduced_schema);
    std::vector<reduction::ReducedTask> reduced;
    for (const json& j : recs)
        reduced.push_back(records::reduced_from_json(j));
    std::vector<PortOutcome> outcomes = port_all(reduced, backend, cfg.backend);
    std::vector<json> out;
    std::map<PortStatus, std::size_t> counts;
    for (std::size_t i = 0; i < recs.size(); ++i) {
        std::string approach = recs[i].value("reduction", true) ? "pipeline" : "pipeline_no_reduction";
        out.push_back(records::to_json(recs[i]["id"].get<std::string>(), approach, outcomes[i]));
        ++counts[outcomes[i].status];
    }
    records::write_atomic(out_path, records::to_jsonl(out));
    log << "complete " << counts[PortStatus::complete] << ", truncated " << counts[PortStatus::truncated] << ", backend errors "
        << counts[PortStatus::backend_error] << "\n";
    return counts[PortStatus::backend_error] > 0 ? backend_error : ok;
}

struct EvalRequest {
    fs::path tasks;
    std::vector<fs::path> outcomes;
    std::vector<std::string> approaches;
    fs::path report;
    std::size_t fuzz = 0;
};

// Scores the requested approaches. Pipeline approaches take their
// predictions from outcome files, or port inline when a backend is given;
// anything not complete falls back to f_f.
inline int cmd_eval(const RunConfig& cfg, const EvalRequest& req, CompletionBackend* backend, std::ostream& table)
{
    cfg.validate();
    for (const auto& a : req.approaches) {
        if (!known_approaches().count(a))
            throw ConfigError("unknown approach: " + a);
    }
    std::vector<mining::PortingTask> tasks = read_tasks(req.tasks);
    std::vector<evaluation::EvalTask> eval_tasks;
    for (const auto& t : tasks) {
        if (!t.ff_post)
            throw records::DataError("task " + t.id + " has no ground truth f_f_post");
        eval_tasks.push_back(evaluation::EvalTask { t.id, t.fs, t.fs_post, t.ff, *t.ff_post });
    }

    std::map<std::pair<std::string, std::string>, records::OutcomeRecord> outcomes;
    for (const auto& path : req.outcomes) {
        for (const json& j : records::read_jsonl(path, records::outcome_schema)) {
            records::OutcomeRecord o = records::outcome_from_json(j);
            outcomes[{ o.approach, o.id }] = o;
        }
    }

    std::vector<evaluation::ApproachReport> reports;
    for (const std::string& approach : req.approaches) {
        if (approach == "origin") {
            reports.push_back(evaluation::run_origin(eval_tasks));
            continue;
        }
        if (approach == "naive_apply") {
            reports.push_back(evaluation::run_naive_apply(eval_tasks, 3, req.fuzz));
            continue;
        }
        bool reduce = approach == "pipeline";
        std::vector<std::optional<std::string>> predictions(tasks.size());
        std::vector<std::size_t> missing;
        for (std::size_t i = 0; i < tasks.size(); ++i) {
            auto it = outcomes.find({ approach, tasks[i].id });
            if (it != outcomes.end())
                predictions[i] = it->second.recovered;
            else
                missing.push_back(i);
        }
        if (!missing.empty()) {
            if (!backend)
                throw records::DataError("no outcomes for approach '" + approach + "' (task " + tasks[missing.front()].id
                    + ") and no backend to produce them");
            parallel_for(missing.size(), cfg.backend.concurrency, [&](std::size_t k) {
                const auto& t = tasks[missing[k]];
                PortOutcome o = port(t.fs, t.fs_post, t.ff, cfg.mapping, *backend, cfg.backend, {}, reduce);
                predictions[missing[k]] = o.recovered;
            });
        }
        std::vector<evaluation::Row> rows;
        for (std::size_t i = 0; i < tasks.size(); ++i) {
            const auto& t = eval_tasks[i];
            rows.push_back(evaluation::Row { t.id, predictions[i].value_or(t.ff), t.ff, t.ff_post, predictions[i].has_value() });
        }
        reports.push_back(evaluation::compute_metrics(rows, approach));
    }

    if (!req.report.empty())
        records::write_atomic(req.report, records::to_json(reports).dump(2) + "\n");
    table << evaluation::format_table(reports);
    return ok;
}

} // namespace pporter::commands
