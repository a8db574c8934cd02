// pporter: mine, reduce, port and evaluate fork patch ports.

#include <cstdlib>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "pporter/commands.hpp"

namespace {

using namespace pporter;

// Flags that may also come from the config file. CLI values win.
struct Overrides {
    std::string config_path;
    std::optional<std::string> source_repo, fork_repo, source_repo_id, fork_repo_id;
    std::optional<std::string> marker, allowlist, until, test_since, cutoff;
    std::optional<double> thres_self, thres_parent;
    std::optional<std::size_t> min_segment_lines, length_limit, max_new_tokens, concurrency;
    std::optional<std::string> backend_url, tokenize_url, model;
    std::optional<int> retries, timeout_s;
};

void add_common(CLI::App& app, Overrides& o)
{
    app.add_option("--config", o.config_path, "JSON config file")->check(CLI::ExistingFile);
    app.add_option("--length-limit", o.length_limit, "model context length")->check(CLI::IsMember({ 2048, 4096, 8192 }));
    app.add_option("--max-new-tokens", o.max_new_tokens, "fixed generation budget");
    app.add_option("--thres-self", o.thres_self, "segment similarity threshold")->check(CLI::Range(0.0, 1.0));
    app.add_option("--thres-parent", o.thres_parent, "parent similarity threshold")->check(CLI::Range(0.0, 1.0));
    app.add_option("--min-segment-lines", o.min_segment_lines, "smallest removable segment");
    app.add_option("--backend-url", o.backend_url, "completion endpoint");
    app.add_option("--tokenize-url", o.tokenize_url, "token counting endpoint");
    app.add_option("--model", o.model, "model name sent to the backend");
    app.add_option("--concurrency", o.concurrency, "parallel workers")->check(CLI::PositiveNumber);
    app.add_option("--retries", o.retries, "retries on transient backend errors")->check(CLI::NonNegativeNumber);
    app.add_option("--timeout", o.timeout_s, "per-request timeout in seconds")->check(CLI::PositiveNumber);
}

void add_mining(CLI::App& app, Overrides& o)
{
    app.add_option("--source-repo", o.source_repo, "upstream repository path");
    app.add_option("--fork-repo", o.fork_repo, "fork repository path");
    app.add_option("--source-id", o.source_repo_id, "name recorded for the upstream repository");
    app.add_option("--fork-id", o.fork_repo_id, "name recorded for the fork repository");
    app.add_option("--marker", o.marker, "title prefix marking ported patches");
    app.add_option("--allowlist", o.allowlist, "file of '<fork-hash> <source-hash>' pairs");
    app.add_option("--until", o.until, "ignore commits after this date");
    app.add_option("--test-since", o.test_since, "first date of the test period");
    app.add_option("--cutoff", o.cutoff, "finetuning commits strictly before this date");
}

RunConfig resolve(const Overrides& o)
{
    RunConfig cfg;
    if (!o.config_path.empty()) {
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(records::read_file(o.config_path));
        } catch (const nlohmann::json::parse_error& e) {
            throw ConfigError(std::string("config is not valid JSON: ") + e.what());
        }
        apply_config_json(cfg, j);
    }
    auto set = [](const auto& from, auto& into) {
        if (from)
            into = *from;
    };
    set(o.source_repo, cfg.source_repo);
    set(o.fork_repo, cfg.fork_repo);
    set(o.source_repo_id, cfg.source_repo_id);
    set(o.fork_repo_id, cfg.fork_repo_id);
    set(o.marker, cfg.pairing.marker);
    set(o.allowlist, cfg.allowlist_file);
    if (o.until)
        cfg.until = *o.until;
    set(o.test_since, cfg.test_since);
    set(o.cutoff, cfg.cutoff);
    set(o.thres_self, cfg.mapping.thres_self);
    set(o.thres_parent, cfg.mapping.thres_parent);
    set(o.min_segment_lines, cfg.mapping.min_segment_lines);
    set(o.length_limit, cfg.backend.length_limit);
    if (o.max_new_tokens)
        cfg.backend.max_new_tokens = *o.max_new_tokens;
    set(o.concurrency, cfg.backend.concurrency);
    set(o.backend_url, cfg.backend.endpoint);
    set(o.tokenize_url, cfg.backend.tokenize_endpoint);
    set(o.model, cfg.backend.model);
    set(o.retries, cfg.backend.retries);
    set(o.timeout_s, cfg.backend.timeout_s);
    cfg.validate();
    return cfg;
}

std::unique_ptr<CompletionBackend> make_backend(const RunConfig& cfg, const std::string& mock)
{
    if (mock == "echo")
        return std::make_unique<MockBackend>(MockMode::echo);
    if (mock == "replay")
        return std::make_unique<MockBackend>(MockMode::replay);
    try {
        return std::make_unique<HttpBackend>(cfg.backend);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app { "Port patches from an upstream repository to a diverged fork" };
    app.require_subcommand(1);
    Overrides o;

    std::string out_dir = "out";
    auto* mine = app.add_subcommand("mine", "mine porting tasks and finetuning data from two repositories");
    add_common(*mine, o);
    add_mining(*mine, o);
    mine->add_option("-o,--out", out_dir, "output directory");

    std::string ft_out = "finetune.jsonl";
    auto* ft = app.add_subcommand("ft-data", "extract the finetuning dataset only");
    add_common(*ft, o);
    add_mining(*ft, o);
    ft->add_option("-o,--out", ft_out, "output file");

    std::string reduce_in, reduce_out = "reduced.jsonl";
    bool no_reduction = false;
    auto* reduce = app.add_subcommand("reduce", "replace shared unchanged segments with placeholders");
    add_common(*reduce, o);
    reduce->add_option("tasks", reduce_in, "tasks.jsonl")->required()->check(CLI::ExistingFile);
    reduce->add_option("-o,--out", reduce_out, "output file");
    reduce->add_flag("--no-reduction", no_reduction, "copy functions through unchanged");

    std::string port_in, port_out = "outcomes.jsonl", mock;
    auto* port = app.add_subcommand("port", "send reduced tasks to a completion backend");
    add_common(*port, o);
    port->add_option("reduced", port_in, "reduced.jsonl")->required()->check(CLI::ExistingFile);
    port->add_option("-o,--out", port_out, "output file");
    port->add_option("--mock-backend", mock, "offline backend instead of HTTP")->check(CLI::IsMember({ "echo", "replay" }));

    commands::EvalRequest eval_req;
    std::string eval_tasks, eval_report, eval_mock;
    std::vector<std::string> eval_outcomes;
    std::size_t fuzz = 0;
    eval_req.approaches = { "origin", "naive_apply" };
    auto* eval = app.add_subcommand("eval", "score approaches against the fork's own patches");
    add_common(*eval, o);
    eval->add_option("tasks", eval_tasks, "tasks.jsonl")->required()->check(CLI::ExistingFile);
    eval->add_option("--outcomes", eval_outcomes, "outcome files from `port`")->check(CLI::ExistingFile);
    eval->add_option("--approach", eval_req.approaches, "approaches to score")
        ->check(CLI::IsMember({ "origin", "naive_apply", "pipeline", "pipeline_no_reduction" }))
        ->delimiter(',');
    eval->add_option("--report", eval_report, "write the JSON report here");
    eval->add_option("--mock-backend", eval_mock, "port missing pipeline samples offline")->check(CLI::IsMember({ "echo", "replay" }));
    eval->add_option("--fuzz", fuzz, "context lines naive apply may drop");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : commands::usage_error;
    }

    try {
        RunConfig cfg = resolve(o);
        if (*mine)
            return commands::cmd_mine(cfg, out_dir, std::cerr);
        if (*ft)
            return commands::cmd_ft_data(cfg, ft_out, std::cerr);
        if (*reduce)
            return commands::cmd_reduce(cfg, reduce_in, reduce_out, !no_reduction, std::cerr);
        if (*port) {
            auto backend = make_backend(cfg, mock);
            return commands::cmd_port(cfg, port_in, port_out, *backend, std::cerr);
        }
        if (*eval) {
            eval_req.tasks = eval_tasks;
            eval_req.report = eval_report;
            eval_req.fuzz = fuzz;
            for (const auto& p : eval_outcomes)
                eval_req.outcomes.emplace_back(p);
            std::unique_ptr<CompletionBackend> backend;
            if (!eval_mock.empty() || o.backend_url || cfg.backend.endpoint != BackendConfig {}.endpoint)
                backend = make_backend(cfg, eval_mock);
            return commands::cmd_eval(cfg, eval_req, backend.get(), std::cout);
        }
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return commands::usage_error;
    } catch (const BackendError& e) {
        std::cerr << "backend error: " << e.what() << "\n";
        return commands::backend_error;
    } catch (const records::DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return commands::data_error;
    } catch (const git::RepoError& e) {
        std::cerr << "repository error: " << e.what() << "\n";
        return commands::data_error;
    } catch (const syntax::ParseError& e) {
        std::cerr << "parse error: " << e.what() << "\n";
        return commands::data_error;
    } catch (const evaluation::DegenerateSample& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return commands::data_error;
    } catch (const std::filesystem::filesystem_error& e) {
        std::cerr << "i/o error: " << e.what() << "\n";
        return commands::data_error;
    }
    return commands::usage_error;
}
