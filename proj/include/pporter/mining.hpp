#pragma once

// Mining ported patches and finetuning commits from a source/fork repo pair.

#include <algorithm>
#include <cstdint>
#include <ctime>
#include <map>
#include <optional>
#include <regex>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "pporter/git.hpp"
#include "pporter/prompt.hpp"
#include "pporter/syntax.hpp"

namespace pporter::mining {

// Seconds since the epoch, UTC.
using Timestamp = std::int64_t;

namespace detail {

    // Days since 1970-01-01 for a proleptic Gregorian date.
    inline std::int64_t days_from_civil(std::int64_t y, unsigned m, unsigned d)
    {
        y -= m <= 2;
        const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
        const unsigned yoe = static_cast<unsigned>(y - era * 400);
        const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
        const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
        return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
    }

} // namespace detail

// Accepts YYYY-MM-DD or YYYY-MM-DDTHH:MM:SSZ. A bare date means midnight UTC.
inline Timestamp parse_utc_date(std::string_view text)
{
    static const std::regex pattern(R"((\d{4})-(\d{2})-(\d{2})(?:[T ](\d{2}):(\d{2}):(\d{2})Z?)?)");
    std::cmatch m;
    if (!std::regex_match(text.begin(), text.end(), m, pattern))
        throw std::invalid_argument("expected YYYY-MM-DD[THH:MM:SSZ], got: " + std::string(text));
    auto num = [&](int i) { return m[i].matched ? std::stoll(m[i].str()) : 0LL; };
    unsigned month = static_cast<unsigned>(num(2));
    unsigned day = static_cast<unsigned>(num(3));
    if (month < 1 || month > 12 || day < 1 || day > 31)
        throw std::invalid_argument("date out of range: " + std::string(text));
    return detail::days_from_civil(num(1), month, day) * 86400 + num(4) * 3600 + num(5) * 60 + num(6);
}

inline std::string format_utc(Timestamp t)
{
    std::time_t tt = static_cast<std::time_t>(t);
    std::tm tm {};
    gmtime_r(&tt, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

struct FunctionLocation {
    std::string name;
    std::size_t begin = 0;
    std::size_t end = 0;
};

// Finds top-level function definitions in a C file. Tolerant of anything
// it does not understand; such regions are simply skipped.
inline std::vector<FunctionLocation> locate_functions(std::string_view text)
{
    using syntax::Token;
    using syntax::TokenKind;
    std::vector<Token> tokens;
    for (const Token& t : syntax::lex(text, false)) {
        if (t.kind != TokenKind::comment)
            tokens.push_back(t);
    }
    auto lexeme = [&](const Token& t) { return text.substr(t.begin, t.end - t.begin); };
    auto matching_brace = [&](std::size_t open) {
        long depth = 0;
        for (std::size_t k = open; k < tokens.size(); ++k) {
            if (tokens[k].directive || tokens[k].kind != TokenKind::punctuator)
                continue;
            std::string_view s = lexeme(tokens[k]);
            if (s == "{")
                ++depth;
            else if (s == "}" && --depth == 0)
                return k;
        }
        return tokens.size();
    };

    std::vector<FunctionLocation> out;
    std::size_t start = 0;
    std::size_t boundary = 0;
    long parens = 0;
    std::size_t i = 0;
    while (i < tokens.size()) {
        const Token& t = tokens[i];
        if (t.directive) {
            ++i;
            start = i;
            boundary = t.end;
            continue;
        }
        std::string_view s = lexeme(t);
        if (s == "(" || s == "[") {
            ++parens;
        } else if (s == ")" || s == "]") {
            parens = std::max(0L, parens - 1);
        } else if (s == ";" && parens == 0) {
            start = i + 1;
            boundary = t.end;
        } else if (s == "{" && parens == 0) {
            std::size_t close = matching_brace(i);
            bool is_function = false;
            std::string name;
            if (start < i && lexeme(tokens[start]) != "typedef") {
                long depth = 0;
                bool assign = false;
                for (std::size_t k = start; k < i; ++k) {
                    std::string_view x = lexeme(tokens[k]);
                    if (x == "(") {
                        if (depth == 0 && name.empty() && k > start && tokens[k - 1].kind == TokenKind::identifier)
                            name = std::string(lexeme(tokens[k - 1]));
                        ++depth;
                    } else if (x == ")") {
                        --depth;
                    } else if (x == "=" && depth == 0) {
                        assign = true;
                    }
                }
                is_function = !name.empty() && !assign;
            }
            if (close >= tokens.size())
                break;
            if (is_function) {
                std::size_t line_start = tokens[start].begin;
                while (line_start > 0 && text[line_start - 1] != '\n')
                    --line_start;
                out.push_back(FunctionLocation { name, std::max(line_start, boundary), tokens[close].end });
                start = close + 1;
                boundary = tokens[close].end;
            }
            i = close + 1;
            continue;
        }
        ++i;
    }
    return out;
}

struct FunctionChange {
    std::string file;
    std::string name;
    // Raw text; empty when the function does not exist on that side.
    std::string pre;
    std::string post;
};

struct MinedCommit {
    std::string repo;
    std::string hash;
    std::string message;
    Timestamp author_time = 0;
    Timestamp commit_time = 0;
    std::vector<std::string> changed_files;
    std::vector<FunctionChange> functions;
    // Some source file changed outside any function body.
    bool non_function_change = false;

    std::string title() const { return message.substr(0, message.find('\n')); }
    bool single_function() const { return functions.size() == 1 && !non_function_change; }
};

namespace detail {

    inline std::string stripped_or_raw(std::string_view text)
    {
        try {
            return syntax::strip_comments_and_blank_lines(text);
        } catch (const syntax::ParseError&) {
            return std::string(text);
        }
    }

    struct FileFunctions {
        std::vector<std::pair<std::string, std::string>> functions; // key, raw text
        std::string skeleton;
    };

    inline FileFunctions split_file(std::string_view text)
    {
        FileFunctions out;
        std::map<std::string, int> seen;
        std::string skeleton;
        std::size_t pos = 0;
        for (const FunctionLocation& loc : locate_functions(text)) {
            int n = seen[loc.name]++;
            std::string key = n == 0 ? loc.name : loc.name + "#" + std::to_string(n);
            out.functions.emplace_back(key, std::string(text.substr(loc.begin, loc.end - loc.begin)));
            skeleton.append(text.substr(pos, loc.begin - pos));
            skeleton += "\n";
            pos = loc.end;
        }
        skeleton.append(text.substr(pos));
        out.skeleton = stripped_or_raw(skeleton);
        return out;
    }

} // namespace detail

// Function-level comparison of two versions of one source file. Returns
// whether anything outside function bodies changed.
inline bool diff_file_functions(const std::string& file, std::string_view pre, std::string_view post, std::vector<FunctionChange>& out)
{
    detail::FileFunctions a = detail::split_file(pre);
    detail::FileFunctions b = detail::split_file(post);
    std::map<std::string, std::string> post_map(b.functions.begin(), b.functions.end());
    std::map<std::string, bool> matched;
    for (const auto& [key, text] : a.functions) {
        auto it = post_map.find(key);
        std::string other = it == post_map.end() ? std::string() : it->second;
        matched[key] = true;
        if (it == post_map.end() || detail::stripped_or_raw(text) != detail::stripped_or_raw(other))
            out.push_back(FunctionChange { file, key.substr(0, key.find('#')), text, other });
    }
    for (const auto& [key, text] : b.functions) {
        if (!matched.count(key))
            out.push_back(FunctionChange { file, key.substr(0, key.find('#')), std::string(), text });
    }
    return a.skeleton != b.skeleton;
}

struct ScanOptions {
    std::string repo_id;
    // Inclusive upper bound on committer time.
    std::optional<Timestamp> until;
};

// Mines one commit: metadata plus function-level changes in source files.
inline MinedCommit mine_commit(const git::Repository& repo, const std::string& hash, const std::string& repo_id = {})
{
    std::string meta = repo.run({ "show", "-s", "--format=%H%x1f%at%x1f%ct%x1f%P%x1f%B", hash });
    std::vector<std::string> fields;
    std::size_t pos = 0;
    for (int k = 0; k < 4; ++k) {
        std::size_t sep = meta.find('\x1f', pos);
        if (sep == std::string::npos)
            throw git::RepoError("unexpected git show output for " + hash);
        fields.push_back(meta.substr(pos, sep - pos));
        pos = sep + 1;
    }
    MinedCommit c;
    c.repo = repo_id.empty() ? repo.path() : repo_id;
    c.hash = fields[0];
    c.author_time = std::stoll(fields[1]);
    c.commit_time = std::stoll(fields[2]);
    c.message = meta.substr(pos);
    while (!c.message.empty() && (c.message.back() == '\n' || c.message.back() == ' '))
        c.message.pop_back();
    std::string parent = fields[3].substr(0, fields[3].find(' '));

    std::vector<std::string> args { "diff-tree", "-r", "--no-commit-id", "--no-renames", "--name-only" };
    if (parent.empty()) {
        args.push_back("--root");
        args.push_back(c.hash);
    } else {
        args.push_back(parent);
        args.push_back(c.hash);
    }
    std::string names = repo.run(args);
    std::size_t start = 0;
    while (start < names.size()) {
        std::size_t nl = names.find('\n', start);
        if (nl == std::string::npos)
            nl = names.size();
        if (nl > start)
            c.changed_files.push_back(names.substr(start, nl - start));
        start = nl + 1;
    }
    for (const std::string& file : c.changed_files) {
        if (!syntax::grammar_for_path(file))
            continue;
        std::string pre, post;
        if (!parent.empty())
            repo.read_blob(parent, file, pre);
        repo.read_blob(c.hash, file, post);
        if (diff_file_functions(file, pre, post, c.functions))
            c.non_function_change = true;
    }
    return c;
}

// Non-merge commits reachable from HEAD, oldest first by committer time.
inline std::vector<MinedCommit> scan_history(const std::string& repo_path, const ScanOptions& options = {})
{
    git::Repository repo(repo_path);
    std::string log = repo.run({ "log", "--no-merges", "--format=%H%x1f%ct", "HEAD" });
    std::vector<std::pair<Timestamp, std::string>> ids;
    std::size_t pos = 0;
    while (pos < log.size()) {
        std::size_t nl = log.find('\n', pos);
        if (nl == std::string::npos)
            nl = log.size();
        std::string line = log.substr(pos, nl - pos);
        pos = nl + 1;
        std::size_t sep = line.find('\x1f');
        if (sep == std::string::npos)
            continue;
        Timestamp t = std::stoll(line.substr(sep + 1));
        if (options.until && t > *options.until)
            continue;
        ids.emplace_back(t, line.substr(0, sep));
    }
    // git log lists newest first; reverse before the stable sort keeps
    // topological order for equal timestamps.
    std::reverse(ids.begin(), ids.end());
    std::stable_sort(ids.begin(), ids.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    std::vector<MinedCommit> out;
    out.reserve(ids.size());
    for (const auto& [t, hash] : ids)
        out.push_back(mine_commit(repo, hash, options.repo_id));
    return out;
}

enum class PairingEvidence { body_link, title_pattern, allowlist };

inline std::string_view to_string(PairingEvidence e)
{
    switch (e) {
    case PairingEvidence::body_link:
        return "body_link";
    case PairingEvidence::title_pattern:
        return "title_pattern";
    case PairingEvidence::allowlist:
        return "allowlist";
    }
    return "?";
}

struct PairingConfig {
    // Fork commit titles starting with this are ports.
    std::string marker = "vim-patch:";
    // First capture group is the source commit hash.
    std::string url_pattern = R"(https?://github\.com/vim/vim/commit/([0-9a-fA-F]{7,40}))";
    // Tag for the patch id following the marker; "{id}" is substituted.
    // Empty disables tag lookup.
    std::string tag_format = "v{id}";
    // Reviewed fork hash -> source hash links; consulted first.
    std::map<std::string, std::string> allowlist;
};

struct PortedPair {
    MinedCommit fork_commit;
    MinedCommit source_commit;
    PairingEvidence evidence = PairingEvidence::body_link;
};

struct PairingResult {
    std::vector<PortedPair> pairs;
    // Marked as ports but without a resolvable source commit.
    std::vector<MinedCommit> unresolved;
    std::size_t marked = 0;
};

inline std::optional<std::string> patch_id_after_marker(std::string_view title, std::string_view marker)
{
    static const std::regex id(R"(^\s*([0-9]+\.[0-9]+\.[0-9]+))");
    std::string rest(title.substr(marker.size()));
    std::smatch m;
    if (std::regex_search(rest, m, id))
        return m[1].str();
    return std::nullopt;
}

// Pairs fork commits carrying the porting marker with their source commit.
inline PairingResult pair_ported_patches(const std::vector<MinedCommit>& fork_commits, const std::string& source_repo_path,
    const PairingConfig& cfg = {}, const std::string& source_repo_id = {})
{
    git::Repository source(source_repo_path);
    const std::regex url(cfg.url_pattern);
    std::map<std::string, MinedCommit> cache;
    PairingResult result;

    for (const MinedCommit& fork : fork_commits) {
        std::string title = fork.title();
        if (title.rfind(cfg.marker, 0) != 0)
            continue;
        ++result.marked;

        std::string hash;
        PairingEvidence evidence = PairingEvidence::body_link;
        if (auto it = cfg.allowlist.find(fork.hash); it != cfg.allowlist.end()) {
            hash = source.resolve_commit(it->second);
            evidence = PairingEvidence::allowlist;
        }
        if (hash.empty()) {
            for (std::sregex_iterator m(fork.message.begin(), fork.message.end(), url), end; m != end && hash.empty(); ++m) {
                hash = source.resolve_commit((*m)[1].str());
                evidence = PairingEvidence::body_link;
            }
        }
        if (hash.empty() && !cfg.tag_format.empty()) {
            if (auto id = patch_id_after_marker(title, cfg.marker)) {
                std::string tag = cfg.tag_format;
                if (auto p = tag.find("{id}"); p != std::string::npos)
                    tag.replace(p, 4, *id);
                hash = source.resolve_commit("refs/tags/" + tag);
                evidence = PairingEvidence::title_pattern;
            }
        }
        if (hash.empty()) {
            result.unresolved.push_back(fork);
            continue;
        }
        auto cached = cache.find(hash);
        if (cached == cache.end())
            cached = cache.emplace(hash, mine_commit(source, hash, source_repo_id)).first;
        result.pairs.push_back(PortedPair { fork, cached->second, evidence });
    }
    return result;
}

struct PortingTask {
    std::string id;
    std::string source_hash;
    std::string fork_hash;
    std::string file;
    std::string function;
    std::string fs;
    std::string fs_post;
    std::string ff;
    std::optional<std::string> ff_post;
    Timestamp fork_time = 0;
};

inline bool same_tokens(std::string_view a, std::string_view b) { return syntax::tokenize(a) == syntax::tokenize(b); }

// A task when both commits change exactly one function (and nothing else in
// source files) and both versions of both functions parse. Pairs whose
// source or fork side is a no-op are dropped.
inline std::optional<PortingTask> extract_task(const PortedPair& pair)
{
    const MinedCommit& s = pair.source_commit;
    const MinedCommit& f = pair.fork_commit;
    if (!s.single_function() || !f.single_function())
        return std::nullopt;
    const FunctionChange& sc = s.functions.front();
    const FunctionChange& fc = f.functions.front();
    if (sc.pre.empty() || sc.post.empty() || fc.pre.empty() || fc.post.empty())
        return std::nullopt;
    PortingTask task;
    try {
        task.fs = syntax::preprocess(sc.pre);
        task.fs_post = syntax::preprocess(sc.post);
        task.ff = syntax::preprocess(fc.pre);
        task.ff_post = syntax::preprocess(fc.post);
    } catch (const syntax::ParseError&) {
        return std::nullopt;
    }
    if (same_tokens(task.fs, task.fs_post) || same_tokens(task.ff, *task.ff_post))
        return std::nullopt;
    task.source_hash = s.hash;
    task.fork_hash = f.hash;
    task.file = fc.file;
    task.function = fc.name;
    task.fork_time = f.commit_time;
    task.id = f.hash.substr(0, 12) + ":" + fc.name;
    return task;
}

// Counts whitespace-separated tokens containing at least one letter.
inline std::size_t count_words(std::string_view text)
{
    std::size_t words = 0;
    bool in_word = false;
    bool has_alpha = false;
    for (char c : text) {
        if (syntax::detail::is_space(c)) {
            if (in_word && has_alpha)
                ++words;
            in_word = has_alpha = false;
            continue;
        }
        in_word = true;
        if ((c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z'))
            has_alpha = true;
    }
    if (in_word && has_alpha)
        ++words;
    return words;
}

// Keeps the natural-language part of a commit message. Returns nullopt
// when fewer than five words remain.
inline std::optional<std::string> clean_message(std::string_view raw)
{
    static const std::regex fenced(R"(```[\s\S]*?```)");
    static const std::regex trailer(
        R"((^|\n)[ \t]*(Signed-off-by|Co-authored-by|Reviewed-by|Acked-by|Tested-by|Reported-by|Suggested-by|Helped-by|Cc|Change-Id)[ \t]*:[^\n]*)",
        std::regex::icase);
    static const std::regex patch_prefix(R"(^\s*(vim-patch|patch)\s*:?\s*[0-9]+(\.[0-9]+)+\s*:?)", std::regex::icase);
    static const std::regex url(R"((https?|ftp)://[^\s)>\]]+|www\.[^\s)>\]]+)");
    static const std::regex hash(R"(\b(?=[0-9a-f]*[0-9])[0-9a-f]{7,40}\b)");
    static const std::regex issue(R"(\b(GH|gh)-[0-9]+\b|#[0-9]+\b)");
    static const std::regex empty_brackets(R"(\(\s*\)|\[\s*\])");
    static const std::regex spaces(R"(\s+)");

    std::string text = syntax::normalize_line_endings(raw);
    text = std::regex_replace(text, fenced, " ");
    text = std::regex_replace(text, trailer, "$1");
    text = std::regex_replace(text, patch_prefix, " ");
    text = std::regex_replace(text, url, " ");
    text = std::regex_replace(text, hash, " ");
    text = std::regex_replace(text, issue, " ");
    text = std::regex_replace(text, empty_brackets, " ");
    text = std::regex_replace(text, spaces, " ");
    auto first = text.find_first_not_of(' ');
    if (first == std::string::npos)
        return std::nullopt;
    text = text.substr(first, text.find_last_not_of(' ') - first + 1);
    if (count_words(text) < 5)
        return std::nullopt;
    return text;
}

struct FinetuneExample {
    std::string f;
    std::string f_post;
    std::string message;
    std::string repo;
    std::string hash;
    Timestamp time = 0;
};

// Single-function commits dated strictly before `cutoff` with a usable
// message.
inline std::vector<FinetuneExample> build_finetune_dataset(const std::vector<MinedCommit>& commits, Timestamp cutoff)
{
    std::vector<FinetuneExample> out;
    for (const MinedCommit& c : commits) {
        if (c.commit_time >= cutoff || !c.single_function())
            continue;
        const FunctionChange& fc = c.functions.front();
        if (fc.pre.empty() || fc.post.empty())
            continue;
        auto message = clean_message(c.message);
        if (!message)
            continue;
        FinetuneExample ex;
        try {
            ex.f = syntax::preprocess(fc.pre);
            ex.f_post = syntax::preprocess(fc.post);
        } catch (const syntax::ParseError&) {
            continue;
        }
        if (same_tokens(ex.f, ex.f_post))
            continue;
        ex.message = std::move(*message);
        ex.repo = c.repo;
        ex.hash = c.hash;
        ex.time = c.commit_time;
        out.push_back(std::move(ex));
    }
    return out;
}

} // namespace pporter::mining
