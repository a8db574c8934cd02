#pragma once

// Line-level diffs between function versions and the strict apply baseline.

#include <algorithm>
#include <cstddef>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace pporter::diffing {

inline std::vector<std::string> split_lines(std::string_view text)
{
    std::vector<std::string> lines;
    std::size_t start = 0;
    while (true) {
        std::size_t nl = text.find('\n', start);
        if (nl == std::string_view::npos) {
            lines.emplace_back(text.substr(start));
            break;
        }
        lines.emplace_back(text.substr(start, nl - start));
        start = nl + 1;
    }
    return lines;
}

inline std::string join_lines(const std::vector<std::string>& lines)
{
    std::string out;
    for (std::size_t i = 0; i < lines.size(); ++i) {
        if (i)
            out.push_back('\n');
        out += lines[i];
    }
    return out;
}

// One contiguous change region. Indices are 0-based, half-open.
struct Hunk {
    std::size_t pre_begin = 0;
    std::size_t pre_end = 0;
    std::size_t post_begin = 0;
    std::size_t post_end = 0;
    std::vector<std::string> pre_lines;
    std::vector<std::string> post_lines;
};

struct StatementDiff {
    std::vector<std::string> pre;
    std::vector<std::string> post;
    // 1-based line numbers.
    std::set<std::size_t> deleted_lines;
    std::set<std::size_t> added_lines;
    std::vector<Hunk> hunks;

    bool empty() const { return hunks.empty(); }
};

enum class EditOp { keep, remove, insert };

// Shortest edit script between two line sequences (Myers, O((N+M)D)).
inline std::vector<EditOp> shortest_edit_script(const std::vector<std::string>& a, const std::vector<std::string>& b)
{
    const long n = static_cast<long>(a.size());
    const long m = static_cast<long>(b.size());
    const long max = n + m;
    const long offset = max + 1;
    std::vector<long> v(2 * max + 3, 0);
    std::vector<std::vector<long>> trace;

    long found_d = -1;
    for (long d = 0; d <= max; ++d) {
        trace.push_back(v);
        for (long k = -d; k <= d; k += 2) {
            long x;
            if (k == -d || (k != d && v[offset + k - 1] < v[offset + k + 1]))
                x = v[offset + k + 1];
            else
                x = v[offset + k - 1] + 1;
            long y = x - k;
            while (x < n && y < m && a[x] == b[y])
                ++x, ++y;
            v[offset + k] = x;
            if (x >= n && y >= m) {
                found_d = d;
                break;
            }
        }
        if (found_d >= 0)
            break;
    }

    std::vector<EditOp> ops;
    long x = n;
    long y = m;
    for (long d = found_d; d > 0; --d) {
        const std::vector<long>& prev = trace[d];
        long k = x - y;
        long prev_k;
        if (k == -d || (k != d && prev[offset + k - 1] < prev[offset + k + 1]))
            prev_k = k + 1;
        else
            prev_k = k - 1;
        long prev_x = prev[offset + prev_k];
        long prev_y = prev_x - prev_k;
        while (x > prev_x && y > prev_y) {
            ops.push_back(EditOp::keep);
            --x, --y;
        }
        if (x == prev_x)
            ops.push_back(EditOp::insert);
        else
            ops.push_back(EditOp::remove);
        x = prev_x;
        y = prev_y;
    }
    while (x > 0 && y > 0) {
        ops.push_back(EditOp::keep);
        --x, --y;
    }
    std::reverse(ops.begin(), ops.end());
    return ops;
}

inline StatementDiff line_diff_lines(std::vector<std::string> pre, std::vector<std::string> post)
{
    StatementDiff diff;
    std::vector<EditOp> ops = shortest_edit_script(pre, post);
    std::size_t i = 0;
    std::size_t j = 0;
    std::optional<Hunk> open;
    auto flush = [&] {
        if (open) {
            open->pre_end = i;
            open->post_end = j;
            diff.hunks.push_back(std::move(*open));
            open.reset();
        }
    };
    for (EditOp op : ops) {
        if (op == EditOp::keep) {
            flush();
            ++i, ++j;
            continue;
        }
        if (!open)
            open = Hunk { i, i, j, j, {}, {} };
        if (op == EditOp::remove) {
            diff.deleted_lines.insert(i + 1);
            open->pre_lines.push_back(pre[i]);
            ++i;
        } else {
            diff.added_lines.insert(j + 1);
            open->post_lines.push_back(post[j]);
            ++j;
        }
    }
    flush();
    diff.pre = std::move(pre);
    diff.post = std::move(post);
    return diff;
}

// Minimal line-level edit script between two preprocessed function texts.
inline StatementDiff line_diff(std::string_view pre, std::string_view post)
{
    return line_diff_lines(split_lines(pre), split_lines(post));
}

// Change regions grouped with surrounding context, as in a unified diff.
struct ContextHunk {
    std::size_t pre_begin = 0;
    std::size_t pre_end = 0;
    std::size_t post_begin = 0;
    std::size_t post_end = 0;
    // Lines prefixed with ' ', '-' or '+'.
    std::vector<std::pair<char, std::string>> body;
};

inline std::vector<ContextHunk> context_hunks(const StatementDiff& diff, std::size_t context_lines)
{
    std::vector<ContextHunk> out;
    std::size_t h = 0;
    while (h < diff.hunks.size()) {
        std::size_t last = h;
        while (last + 1 < diff.hunks.size() && diff.hunks[last + 1].pre_begin - diff.hunks[last].pre_end <= 2 * context_lines)
            ++last;
        const Hunk& first_hunk = diff.hunks[h];
        const Hunk& last_hunk = diff.hunks[last];
        std::size_t lead = std::min(context_lines, first_hunk.pre_begin);
        std::size_t trail = std::min(context_lines, diff.pre.size() - last_hunk.pre_end);

        ContextHunk ch;
        ch.pre_begin = first_hunk.pre_begin - lead;
        ch.post_begin = first_hunk.post_begin - lead;
        ch.pre_end = last_hunk.pre_end + trail;
        ch.post_end = last_hunk.post_end + trail;
        std::size_t cursor = ch.pre_begin;
        for (std::size_t k = h; k <= last; ++k) {
            const Hunk& hk = diff.hunks[k];
            for (; cursor < hk.pre_begin; ++cursor)
                ch.body.emplace_back(' ', diff.pre[cursor]);
            for (const auto& l : hk.pre_lines)
                ch.body.emplace_back('-', l);
            for (const auto& l : hk.post_lines)
                ch.body.emplace_back('+', l);
            cursor = hk.pre_end;
        }
        for (; cursor < ch.pre_end; ++cursor)
            ch.body.emplace_back(' ', diff.pre[cursor]);
        out.push_back(std::move(ch));
        h = last + 1;
    }
    return out;
}

namespace detail {

    inline std::string range_header(std::size_t begin, std::size_t end)
    {
        std::size_t count = end - begin;
        std::size_t start = count == 0 ? begin : begin + 1;
        if (count == 1)
            return std::to_string(start);
        return std::to_string(start) + "," + std::to_string(count);
    }

} // namespace detail

// Standard unified diff text.
inline std::string render_unified(const StatementDiff& diff, std::string_view from = "a", std::string_view to = "b",
    std::size_t context_lines = 3)
{
    std::ostringstream out;
    if (diff.empty())
        return {};
    out << "--- " << from << "\n+++ " << to << "\n";
    for (const ContextHunk& ch : context_hunks(diff, context_lines)) {
        out << "@@ -" << detail::range_header(ch.pre_begin, ch.pre_end) << " +"
            << detail::range_header(ch.post_begin, ch.post_end) << " @@\n";
        for (const auto& [mark, line] : ch.body)
            out << mark << line << "\n";
    }
    return out.str();
}

struct ConflictReport {
    std::size_t hunk_index = 0;
    // 1-based line in the target where the hunk was expected.
    std::size_t expected_line = 0;
    std::string reason;
};

struct ApplyResult {
    std::optional<std::string> text;
    std::optional<ConflictReport> conflict;

    bool ok() const { return text.has_value(); }
};

namespace detail {

    inline std::string_view rtrim(std::string_view s)
    {
        while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
            s.remove_suffix(1);
        return s;
    }

    inline bool block_matches(const std::vector<std::string>& target, std::size_t at, const std::vector<std::string>& block)
    {
        if (at + block.size() > target.size())
            return false;
        for (std::size_t i = 0; i < block.size(); ++i) {
            if (rtrim(target[at + i]) != rtrim(block[i]))
                return false;
        }
        return true;
    }

    // Nearest position to `expected` at or after `floor` where `block` matches.
    inline std::optional<std::size_t> locate(const std::vector<std::string>& target, std::size_t floor, std::size_t expected,
        const std::vector<std::string>& block)
    {
        if (target.size() < block.size())
            return std::nullopt;
        std::size_t hi = target.size() - block.size();
        if (floor > hi)
            return std::nullopt;
        expected = std::clamp(expected, floor, hi);
        for (std::size_t delta = 0;; ++delta) {
            bool in_range = false;
            if (expected + delta <= hi) {
                in_range = true;
                if (block_matches(target, expected + delta, block))
                    return expected + delta;
            }
            if (delta > 0 && expected >= floor + delta) {
                in_range = true;
                if (block_matches(target, expected - delta, block))
                    return expected - delta;
            }
            if (!in_range)
                return std::nullopt;
        }
    }

} // namespace detail

// Applies the diff to `target` the way a strict patch tool would: every hunk
// needs its full context (trailing whitespace ignored) to match. `fuzz` lets
// up to that many outer context lines be dropped per side.
inline ApplyResult naive_apply(const StatementDiff& diff, std::string_view target, std::size_t context_lines = 3, std::size_t fuzz = 0)
{
    std::vector<std::string> lines = split_lines(target);
    std::vector<std::string> out;
    std::size_t consumed = 0;
    long shift = 0;
    std::vector<ContextHunk> hunks = context_hunks(diff, context_lines);
    for (std::size_t h = 0; h < hunks.size(); ++h) {
        const ContextHunk& ch = hunks[h];
        std::size_t lead = 0;
        while (lead < ch.body.size() && ch.body[lead].first == ' ')
            ++lead;
        std::size_t trail = 0;
        while (trail < ch.body.size() - lead && ch.body[ch.body.size() - 1 - trail].first == ' ')
            ++trail;

        std::optional<std::size_t> found;
        std::size_t used_drop_lead = 0;
        std::size_t used_drop_trail = 0;
        for (std::size_t f = 0; f <= fuzz && !found; ++f) {
            std::size_t drop_lead = std::min(f, lead);
            std::size_t drop_trail = std::min(f, trail);
            std::vector<std::string> old_block;
            for (std::size_t i = drop_lead; i < ch.body.size() - drop_trail; ++i) {
                if (ch.body[i].first != '+')
                    old_block.push_back(ch.body[i].second);
            }
            long expected = static_cast<long>(ch.pre_begin + drop_lead) + shift;
            found = detail::locate(lines, consumed, static_cast<std::size_t>(std::max(0L, expected)), old_block);
            used_drop_lead = drop_lead;
            used_drop_trail = drop_trail;
        }
        if (!found) {
            long expected = static_cast<long>(ch.pre_begin) + shift;
            return ApplyResult { std::nullopt,
                ConflictReport { h, static_cast<std::size_t>(std::max(0L, expected)) + 1, "hunk context does not match target" } };
        }

        std::size_t at = *found;
        out.insert(out.end(), lines.begin() + consumed, lines.begin() + at);
        std::size_t old_count = 0;
        for (std::size_t i = used_drop_lead; i < ch.body.size() - used_drop_trail; ++i) {
            const auto& [mark, text] = ch.body[i];
            if (mark == ' ') {
                out.push_back(lines[at + old_count]);
                ++old_count;
            } else if (mark == '-') {
                ++old_count;
            } else {
                out.push_back(text);
            }
        }
        consumed = at + old_count;
        shift = static_cast<long>(at) - static_cast<long>(ch.pre_begin + used_drop_lead);
    }
    out.insert(out.end(), lines.begin() + consumed, lines.end());
    return ApplyResult { join_lines(out), std::nullopt };
}

} // namespace pporter::diffing
