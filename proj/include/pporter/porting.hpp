#pragma once

// reduce -> render -> budget check -> complete -> extract -> recover

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <functional>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "pporter/backend.hpp"
#include "pporter/diffing.hpp"
#include "pporter/prompt.hpp"
#include "pporter/reduction.hpp"

namespace pporter {

struct LengthEstimate {
    std::size_t tokens = 0;
    // Counted by the backend tokenizer rather than estimated from bytes.
    bool from_tokenizer = false;
};

inline LengthEstimate estimate_length(std::string_view text, CompletionBackend* backend = nullptr)
{
    if (backend) {
        if (auto n = backend->count_tokens(text))
            return LengthEstimate { *n, true };
    }
    return LengthEstimate { (text.size() + 2) / 3, false };
}

inline constexpr std::size_t default_max_new_tokens_cap = 2048;

// Token budget for one request. `max_new_tokens` is zero when the request
// cannot fit.
struct Budget {
    LengthEstimate prompt;
    LengthEstimate expected_output;
    std::size_t max_new_tokens = 0;
    bool fits = false;
};

// Without an explicit max_new_tokens the request fits when the space left
// after the prompt (capped at 2048) can hold a regenerated fork function.
inline Budget plan_budget(LengthEstimate prompt, LengthEstimate expected_output, const BackendConfig& cfg)
{
    Budget b { prompt, expected_output, 0, false };
    if (cfg.max_new_tokens) {
        b.max_new_tokens = *cfg.max_new_tokens;
        b.fits = prompt.tokens + *cfg.max_new_tokens <= cfg.length_limit;
        return b;
    }
    if (prompt.tokens >= cfg.length_limit)
        return b;
    b.max_new_tokens = std::min(default_max_new_tokens_cap, cfg.length_limit - prompt.tokens);
    b.fits = b.max_new_tokens >= expected_output.tokens;
    return b;
}

enum class PortStatus { complete, truncated, backend_error };

inline std::string_view to_string(PortStatus s)
{
    switch (s) {
    case PortStatus::complete:
        return "complete";
    case PortStatus::truncated:
        return "truncated";
    case PortStatus::backend_error:
        return "backend_error";
    }
    return "?";
}

inline PortStatus port_status_from_string(std::string_view s)
{
    if (s == "complete")
        return PortStatus::complete;
    if (s == "truncated")
        return PortStatus::truncated;
    if (s == "backend_error")
        return PortStatus::backend_error;
    throw std::invalid_argument("unknown port status: " + std::string(s));
}

struct PortOutcome {
    std::string raw_completion;
    PortStatus status = PortStatus::backend_error;
    // Present iff status == complete.
    std::optional<std::string> recovered;
    reduction::RecoveryReport recovery_report;
    std::string error;
    int attempts = 0;
    Budget budget;
    std::size_t pairs = 0;
};

struct ExtractedFunction {
    std::string text;
    bool complete = false;
};

namespace detail {

    inline bool braces_closed(std::string_view text)
    {
        long depth = 0;
        bool opened = false;
        for (const syntax::Token& t : syntax::lex(text, false)) {
            if (t.kind != syntax::TokenKind::punctuator)
                continue;
            std::string_view s = text.substr(t.begin, t.end - t.begin);
            if (s == "{")
                ++depth, opened = true;
            else if (s == "}")
                --depth;
            if (depth < 0)
                return false;
        }
        return opened && depth == 0;
    }

} // namespace detail

// Cuts the function out of a raw completion: everything before the end
// sentinel or the next section header, and at the latest the first
// column-zero closing brace that is followed by a blank line.
inline ExtractedFunction extract_function(std::string_view completion, const PromptTemplate& tpl = {})
{
    std::string_view text = completion;
    if (std::size_t s = text.find(tpl.end_sentinel); s != std::string_view::npos)
        text = text.substr(0, s);
    if (std::size_t h = text.find("\n### "); h != std::string_view::npos)
        text = text.substr(0, h + 1);
    if (std::size_t b = text.find("\n}\n"); b != std::string_view::npos) {
        std::size_t after = b + 3;
        std::size_t k = after;
        while (k < text.size() && (text[k] == ' ' || text[k] == '\t'))
            ++k;
        if (k >= text.size() || text[k] == '\n')
            text = text.substr(0, b + 2);
    }
    while (!text.empty() && text.front() == '\n')
        text.remove_prefix(1);
    ExtractedFunction out;
    std::string_view trimmed = text;
    while (!trimmed.empty() && syntax::detail::is_space(trimmed.back()))
        trimmed.remove_suffix(1);
    out.complete = !trimmed.empty() && trimmed.back() == '}' && detail::braces_closed(trimmed);
    if (out.complete) {
        out.text = std::string(trimmed);
    } else {
        // Drop a trailing partial line.
        std::string_view kept = text;
        if (!kept.empty() && kept.back() != '\n') {
            std::size_t nl = kept.rfind('\n');
            kept = nl == std::string_view::npos ? std::string_view {} : kept.substr(0, nl + 1);
        }
        while (!kept.empty() && kept.back() == '\n')
            kept.remove_suffix(1);
        out.text = std::string(kept);
    }
    return out;
}

// Ports one reduced task through the backend. Never throws for backend
// failures; they come back as status backend_error.
inline PortOutcome port_reduced(const reduction::ReducedTask& task, CompletionBackend& backend, const BackendConfig& cfg,
    const PromptTemplate& tpl = {})
{
    PortOutcome outcome;
    outcome.pairs = task.pairs.size();
    std::string prompt = render_port_prompt(task.reduced_fs, task.reduced_fs_post, task.reduced_ff, tpl);
    try {
        outcome.budget = plan_budget(estimate_length(prompt, &backend), estimate_length(task.reduced_ff, &backend), cfg);
    } catch (const BackendError& e) {
        outcome.status = PortStatus::backend_error;
        outcome.error = std::string("token count failed: ") + e.what();
        outcome.attempts = e.attempts();
        return outcome;
    }
    if (!outcome.budget.fits) {
        outcome.status = PortStatus::truncated;
        outcome.error = "prompt exceeds length budget";
        return outcome;
    }

    CompletionRequest request { cfg.model, prompt, outcome.budget.max_new_tokens, cfg.temperature, cfg.stop };
    if (request.stop.empty())
        request.stop = { tpl.end_sentinel };
    CompletionResponse response;
    try {
        response = backend.complete(request);
    } catch (const BackendError& e) {
        outcome.status = PortStatus::backend_error;
        outcome.error = e.what();
        outcome.attempts = e.attempts();
        return outcome;
    }
    outcome.attempts = response.attempts;
    outcome.raw_completion = response.text;

    ExtractedFunction fn = extract_function(response.text, tpl);
    if (!fn.complete) {
        outcome.status = PortStatus::truncated;
        outcome.error = response.length_exhausted ? "completion hit max_tokens" : "completion has no complete function";
        return outcome;
    }
    reduction::Recovery recovery = reduction::recover_output(fn.text, task.pairs);
    outcome.status = PortStatus::complete;
    outcome.recovered = std::move(recovery.text);
    outcome.recovery_report = std::move(recovery.report);
    return outcome;
}

// Full pipeline for one (f_s, f_s', f_f) triple.
inline PortOutcome port(const std::string& fs, const std::string& fs_post, const std::string& ff, const reduction::MappingConfig& mapping,
    CompletionBackend& backend, const BackendConfig& cfg, const PromptTemplate& tpl = {}, bool reduce = true)
{
    reduction::ReducedTask task = reduce ? reduction::reduce_task(fs, fs_post, ff, mapping) : reduction::unreduced_task(fs, fs_post, ff);
    return port_reduced(task, backend, cfg, tpl);
}

// Runs `job(i)` for i in [0, count) on at most `workers` threads.
inline void parallel_for(std::size_t count, std::size_t workers, const std::function<void(std::size_t)>& job)
{
    workers = std::max<std::size_t>(1, std::min(workers, count));
    if (workers <= 1) {
        for (std::size_t i = 0; i < count; ++i)
            job(i);
        return;
    }
    std::atomic<std::size_t> next { 0 };
    std::vector<std::thread> pool;
    std::exception_ptr failure;
    std::mutex failure_mutex;
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < count; i = next++) {
                try {
                    job(i);
                } catch (...) {
                    std::lock_guard lock(failure_mutex);
                    if (!failure)
                        failure = std::current_exception();
                }
            }
        });
    }
    for (auto& t : pool)
        t.join();
    if (failure)
        std::rethrow_exception(failure);
}

// Ports every task with bounded in-flight requests; results keep input order.
inline std::vector<PortOutcome> port_all(const std::vector<reduction::ReducedTask>& tasks, CompletionBackend& backend, const BackendConfig& cfg,
    const PromptTemplate& tpl = {})
{
    std::vector<PortOutcome> out(tasks.size());
    parallel_for(tasks.size(), cfg.concurrency, [&](std::size_t i) { out[i] = port_reduced(tasks[i], backend, cfg, tpl); });
    return out;
}

} // namespace pporter
