#pragma once

// Input slimming: compound statements untouched by the source patch are
// matched into the fork function and swapped for indexed placeholder
// comments in all three inputs, then swapped back into the generated output.

#include <algorithm>
#include <cctype>
#include <cstddef>
#include <map>
#include <optional>
#include <regex>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "pporter/diffing.hpp"
#include "pporter/distance.hpp"
#include "pporter/syntax.hpp"

namespace pporter::reduction {

using syntax::Segment;
using syntax::SyntaxTree;

struct MappingConfig {
    double thres_self = 0.5;
    double thres_parent = 0.5;
    std::size_t min_segment_lines = 3;

    void validate() const
    {
        if (!(thres_self >= 0.0 && thres_self <= 1.0))
            throw std::invalid_argument("thres_self must lie in [0, 1]");
        if (!(thres_parent >= 0.0 && thres_parent <= 1.0))
            throw std::invalid_argument("thres_parent must lie in [0, 1]");
        if (min_segment_lines < 1)
            throw std::invalid_argument("min_segment_lines must be at least 1");
    }
};

// Drops whitespace and lowercases ASCII letters.
inline std::string normalize(std::string_view s)
{
    std::string out;
    out.reserve(s.size());
    for (char c : s) {
        if (syntax::detail::is_space(c))
            continue;
        out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    }
    return out;
}

// (maxlen - edit_distance) / maxlen over already-normalized inputs.
inline double normalized_similarity(std::string_view a, std::string_view b)
{
    std::size_t maxlen = std::max(a.size(), b.size());
    if (maxlen == 0)
        return 1.0;
    std::size_t distance = levenshtein_bytes(a, b);
    return static_cast<double>(maxlen - distance) / static_cast<double>(maxlen);
}

// Character-level similarity of two code segments after normalization.
inline double segment_similarity(std::string_view source, std::string_view fork)
{
    return normalized_similarity(normalize(source), normalize(fork));
}

// Similarity of the parent snippets, split around each segment into a
// preceding and a following half and averaged by the target's half lengths.
inline double parent_similarity(std::string_view target_text, const Segment& target, std::string_view candidate_text,
    const Segment& candidate)
{
    auto halves = [](std::string_view text, const Segment& s) {
        std::string before = normalize(text.substr(s.parent_bytes.begin, s.bytes.begin - s.parent_bytes.begin));
        std::string after = normalize(text.substr(s.bytes.end, s.parent_bytes.end - s.bytes.end));
        return std::pair { before, after };
    };
    auto [t_before, t_after] = halves(target_text, target);
    auto [c_before, c_after] = halves(candidate_text, candidate);
    const double w_before = static_cast<double>(t_before.size());
    const double w_after = static_cast<double>(t_after.size());
    if (w_before + w_after == 0.0)
        return 1.0;
    double score = 0.0;
    if (w_before > 0)
        score += w_before * normalized_similarity(t_before, c_before);
    if (w_after > 0)
        score += w_after * normalized_similarity(t_after, c_after);
    return score / (w_before + w_after);
}

// A compound subtree removable from both versions of the source function.
struct RemovableSegment {
    Segment pre;
    Segment post;
};

namespace detail {

    inline std::string_view slice(const SyntaxTree& tree, const Segment& s)
    {
        return std::string_view(tree.text()).substr(s.bytes.begin, s.bytes.size());
    }

    inline bool overlaps_lines(const Segment& s, const std::set<std::size_t>& lines)
    {
        auto it = lines.lower_bound(s.lines.first);
        return it != lines.end() && *it <= s.lines.last;
    }

    inline bool has_taken_ancestor(const std::vector<Segment>& segs, const std::vector<bool>& taken, const Segment& s)
    {
        for (auto e = s.enclosing; e; e = segs[*e].enclosing) {
            if (taken[*e])
                return true;
        }
        return false;
    }

} // namespace detail

// Maximal, mutually exclusive compound subtrees of `pre` that avoid every
// deleted line and reappear verbatim in `post` at the same residual
// position without touching an added line. Pre-order.
inline std::vector<RemovableSegment> extract_removable(const SyntaxTree& pre, const SyntaxTree& post, const diffing::StatementDiff& diff,
    std::size_t min_segment_lines = 3, const syntax::Grammar& grammar = syntax::c_grammar())
{
    std::vector<Segment> pre_segs = syntax::compound_subtrees(pre, grammar);
    std::vector<Segment> post_segs = syntax::compound_subtrees(post, grammar);

    // residual index (0-based) -> post line (1-based)
    std::vector<std::size_t> residual_to_post;
    for (std::size_t line = 1; line <= diff.post.size(); ++line) {
        if (!diff.added_lines.count(line))
            residual_to_post.push_back(line);
    }
    auto residual_of_pre = [&](std::size_t line) {
        auto deleted_before = static_cast<std::size_t>(std::distance(diff.deleted_lines.begin(), diff.deleted_lines.lower_bound(line)));
        return line - 1 - deleted_before;
    };

    std::map<std::pair<std::size_t, std::size_t>, std::vector<std::size_t>> post_by_lines;
    for (std::size_t i = 0; i < post_segs.size(); ++i)
        post_by_lines[{ post_segs[i].lines.first, post_segs[i].lines.last }].push_back(i);

    std::vector<RemovableSegment> out;
    std::vector<bool> taken(pre_segs.size(), false);
    for (std::size_t i = 0; i < pre_segs.size(); ++i) {
        const Segment& s = pre_segs[i];
        if (s.lines.count() < min_segment_lines || detail::overlaps_lines(s, diff.deleted_lines))
            continue;
        if (detail::has_taken_ancestor(pre_segs, taken, s))
            continue;
        std::size_t r_first = residual_of_pre(s.lines.first);
        std::size_t r_last = residual_of_pre(s.lines.last);
        if (r_last >= residual_to_post.size())
            continue;
        std::size_t p_first = residual_to_post[r_first];
        std::size_t p_last = residual_to_post[r_last];
        if (p_last - p_first != s.lines.last - s.lines.first)
            continue;
        auto it = post_by_lines.find({ p_first, p_last });
        if (it == post_by_lines.end())
            continue;
        std::string_view text = detail::slice(pre, s);
        for (std::size_t j : it->second) {
            const Segment& t = post_segs[j];
            if (t.node_kind == s.node_kind && detail::slice(post, t) == text) {
                taken[i] = true;
                out.push_back(RemovableSegment { s, t });
                break;
            }
        }
    }
    return out;
}

struct RemovablePair {
    std::size_t index = 0;
    Segment source_segment;
    Segment source_post_segment;
    Segment fork_segment;
    std::string source_text;
    std::string fork_text;
};

// Matches each removable source segment to at most one fork compound
// subtree. Candidates must pass both similarity thresholds; the highest
// parent similarity wins, ties going to the earliest fork position. Matched
// fork segments never nest or overlap.
inline std::vector<RemovablePair> map_segments(const std::vector<RemovableSegment>& removables, const SyntaxTree& source,
    const SyntaxTree& fork, const MappingConfig& cfg, const syntax::Grammar& grammar = syntax::c_grammar())
{
    cfg.validate();
    std::vector<Segment> candidates;
    for (Segment& s : syntax::compound_subtrees(fork, grammar)) {
        if (s.lines.count() >= cfg.min_segment_lines)
            candidates.push_back(std::move(s));
    }
    std::vector<std::string> normalized;
    normalized.reserve(candidates.size());
    for (const Segment& c : candidates)
        normalized.push_back(normalize(detail::slice(fork, c)));

    std::vector<RemovablePair> pairs;
    std::vector<syntax::Span> matched;
    for (const RemovableSegment& r : removables) {
        std::string target = normalize(detail::slice(source, r.pre));
        std::optional<std::size_t> best;
        double best_parent = -1.0;
        for (std::size_t c = 0; c < candidates.size(); ++c) {
            const Segment& cand = candidates[c];
            bool clash = std::any_of(matched.begin(), matched.end(), [&](const syntax::Span& m) {
                return cand.bytes.begin < m.end && m.begin < cand.bytes.end;
            });
            if (clash)
                continue;
            const std::string& other = normalized[c];
            std::size_t lo = std::min(target.size(), other.size());
            std::size_t hi = std::max(target.size(), other.size());
            // similarity can never exceed lo / hi
            if (hi > 0 && static_cast<double>(lo) / static_cast<double>(hi) < cfg.thres_self)
                continue;
            if (normalized_similarity(target, other) < cfg.thres_self)
                continue;
            double parent = parent_similarity(source.text(), r.pre, fork.text(), cand);
            if (parent < cfg.thres_parent)
                continue;
            if (parent > best_parent) {
                best_parent = parent;
                best = c;
            }
        }
        if (!best)
            continue;
        const Segment& f = candidates[*best];
        matched.push_back(f.bytes);
        pairs.push_back(RemovablePair { pairs.size(), r.pre, r.post, f, std::string(detail::slice(source, r.pre)),
            std::string(detail::slice(fork, f)) });
    }
    return pairs;
}

inline std::string placeholder(std::size_t index) { return "/* Placeholder_" + std::to_string(index) + " */"; }

struct ReducedTask {
    std::string reduced_fs;
    std::string reduced_fs_post;
    std::string reduced_ff;
    std::vector<RemovablePair> pairs;
};

// Replaces each span with the placeholder of the given pair index.
inline std::string replace_spans(std::string_view text, std::vector<std::pair<syntax::Span, std::size_t>> spans)
{
    std::sort(spans.begin(), spans.end(), [](const auto& a, const auto& b) { return a.first.begin < b.first.begin; });
    std::string out;
    std::size_t pos = 0;
    for (const auto& [span, index] : spans) {
        out.append(text.substr(pos, span.begin - pos));
        out += placeholder(index);
        pos = span.end;
    }
    out.append(text.substr(pos));
    return out;
}

inline ReducedTask reduce_parsed(const SyntaxTree& fs, const SyntaxTree& fs_post, const SyntaxTree& ff, const MappingConfig& cfg,
    const syntax::Grammar& grammar = syntax::c_grammar())
{
    cfg.validate();
    diffing::StatementDiff diff = diffing::line_diff(fs.text(), fs_post.text());
    auto removables = extract_removable(fs, fs_post, diff, cfg.min_segment_lines, grammar);
    ReducedTask task;
    task.pairs = map_segments(removables, fs, ff, cfg, grammar);
    std::vector<std::pair<syntax::Span, std::size_t>> s_spans, p_spans, f_spans;
    for (const RemovablePair& p : task.pairs) {
        s_spans.emplace_back(p.source_segment.bytes, p.index);
        p_spans.emplace_back(p.source_post_segment.bytes, p.index);
        f_spans.emplace_back(p.fork_segment.bytes, p.index);
    }
    task.reduced_fs = replace_spans(fs.text(), s_spans);
    task.reduced_fs_post = replace_spans(fs_post.text(), p_spans);
    task.reduced_ff = replace_spans(ff.text(), f_spans);
    return task;
}

// Slims the triple (f_s, f_s', f_f). All three must parse.
inline ReducedTask reduce_task(const std::string& fs, const std::string& fs_post, const std::string& ff, const MappingConfig& cfg = {},
    const syntax::Grammar& grammar = syntax::c_grammar())
{
    return reduce_parsed(syntax::parse(fs), syntax::parse(fs_post), syntax::parse(ff), cfg, grammar);
}

// The identity reduction, used when reduction is disabled.
inline ReducedTask unreduced_task(const std::string& fs, const std::string& fs_post, const std::string& ff)
{
    return ReducedTask { fs, fs_post, ff, {} };
}

struct RecoveryReport {
    std::vector<std::size_t> missing;
    std::vector<std::size_t> duplicated;
    std::vector<std::size_t> out_of_range;
    bool fatal = false;

    bool clean() const { return missing.empty() && duplicated.empty() && out_of_range.empty(); }
};

struct Recovery {
    std::string text;
    RecoveryReport report;
};

// Substitutes every placeholder comment in `generated` with the stored fork
// segment. Placeholders without a stored pair are left in place and make
// the report fatal.
inline Recovery recover_output(std::string_view generated, const std::vector<RemovablePair>& pairs)
{
    static const std::regex pattern(R"(/\*\s*Placeholder_(\d+)\s*\*/)");
    Recovery result;
    std::vector<std::size_t> seen(pairs.size(), 0);
    std::string text(generated);
    std::size_t pos = 0;
    for (std::sregex_iterator it(text.begin(), text.end(), pattern), end; it != end; ++it) {
        const std::smatch& m = *it;
        auto at = static_cast<std::size_t>(m.position(0));
        result.text.append(text, pos, at - pos);
        std::size_t index = std::stoul(m[1].str());
        if (index < pairs.size()) {
            result.text += pairs[index].fork_text;
            if (++seen[index] == 2)
                result.report.duplicated.push_back(index);
        } else {
            result.text += m.str(0);
            if (std::find(result.report.out_of_range.begin(), result.report.out_of_range.end(), index) == result.report.out_of_range.end())
                result.report.out_of_range.push_back(index);
            result.report.fatal = true;
        }
        pos = at + static_cast<std::size_t>(m.length(0));
    }
    result.text.append(text, pos, std::string::npos);
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        if (seen[i] == 0)
            result.report.missing.push_back(i);
    }
    return result;
}

} // namespace pporter::reduction
