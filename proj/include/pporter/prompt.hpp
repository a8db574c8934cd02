#pragma once

// Alpaca-style prompt layouts for the porting task and the commit-message
// finetuning task. Both share the preamble, the section syntax and the end
// sentinel so a model tuned on one follows the other.

#include <optional>
#include <string>
#include <string_view>
#include <utility>

namespace pporter {

struct PromptTemplate {
    std::string preamble = "Below is an instruction that describes a task, paired with an input that provides further context. "
                           "Write a response that appropriately completes the request.";
    std::string instruction = "Extract the change between the two versions of the first function and apply the same change to the "
                              "second function. Keep every placeholder comment of the form /* Placeholder_N */ unchanged. "
                              "Respond with the complete patched second function only.";
    std::string finetune_instruction = "Apply the change described by the commit message to the function below. "
                                       "Respond with the complete patched function only.";

    std::string instruction_header = "### Instruction:";
    std::string source_pre_header = "### Source Function Before:";
    std::string source_post_header = "### Source Function After:";
    std::string fork_pre_header = "### Fork Function Before:";
    std::string response_header = "### Fork Function After:";

    std::string message_header = "### Commit Message:";
    std::string function_pre_header = "### Function Before:";
    std::string function_post_header = "### Function After:";

    std::string end_sentinel = "### End";
};

inline std::string section(std::string_view header, std::string_view body)
{
    std::string out(header);
    out += '\n';
    out += body;
    out += "\n\n";
    return out;
}

// Instruction, then the source pair as the demonstration, then the fork
// function as the query. The response header is left open.
inline std::string render_port_prompt(std::string_view fs, std::string_view fs_post, std::string_view ff, const PromptTemplate& tpl = {})
{
    std::string out = tpl.preamble + "\n\n";
    out += section(tpl.instruction_header, tpl.instruction);
    out += section(tpl.source_pre_header, fs);
    out += section(tpl.source_post_header, fs_post);
    out += section(tpl.fork_pre_header, ff);
    out += tpl.response_header;
    out += '\n';
    return out;
}

struct PortPromptParts {
    std::string fs;
    std::string fs_post;
    std::string ff;
};

// Inverse of render_port_prompt for prompts produced with the same template.
inline std::optional<PortPromptParts> parse_port_prompt(std::string_view prompt, const PromptTemplate& tpl = {})
{
    auto block = [&](std::string_view header, std::string_view next) -> std::optional<std::string> {
        std::string open = std::string(header) + "\n";
        std::size_t a = prompt.find(open);
        if (a == std::string_view::npos)
            return std::nullopt;
        a += open.size();
        std::string close = "\n\n" + std::string(next);
        std::size_t b = prompt.find(close, a);
        if (b == std::string_view::npos)
            return std::nullopt;
        return std::string(prompt.substr(a, b - a));
    };
    auto fs = block(tpl.source_pre_header, tpl.source_post_header);
    auto fs_post = block(tpl.source_post_header, tpl.fork_pre_header);
    auto ff = block(tpl.fork_pre_header, tpl.response_header);
    if (!fs || !fs_post || !ff)
        return std::nullopt;
    return PortPromptParts { std::move(*fs), std::move(*fs_post), std::move(*ff) };
}

struct FinetunePrompt {
    std::string prompt;
    std::string completion;
};

// The training sequence is prompt + completion; loss is taken on the
// completion only.
inline FinetunePrompt render_finetune_prompt(std::string_view f, std::string_view f_post, std::string_view message,
    const PromptTemplate& tpl = {})
{
    FinetunePrompt out;
    out.prompt = tpl.preamble + "\n\n";
    out.prompt += section(tpl.instruction_header, tpl.finetune_instruction);
    out.prompt += section(tpl.message_header, message);
    out.prompt += section(tpl.function_pre_header, f);
    out.prompt += tpl.function_post_header;
    out.prompt += '\n';
    out.completion = std::string(f_post) + "\n" + tpl.end_sentinel;
    return out;
}

} // namespace pporter
