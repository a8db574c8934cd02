#pragma once

// Accuracy, AED and RED over token sequences, plus the baseline approaches.

#include <cstdio>
#include <iomanip>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "pporter/diffing.hpp"
#include "pporter/distance.hpp"
#include "pporter/syntax.hpp"

namespace pporter::evaluation {

class DegenerateSample : public std::runtime_error {
public:
    DegenerateSample(const std::string& id)
        : std::runtime_error("sample " + id + " has identical pre- and post-patch fork functions")
        , id_(id)
    {
    }

    const std::string& id() const { return id_; }

private:
    std::string id_;
};

// Token-sequence equality, so layout and comments do not matter.
inline bool is_correct(std::string_view prediction, std::string_view truth, const syntax::Grammar& g = syntax::c_grammar())
{
    return syntax::tokenize(prediction, g) == syntax::tokenize(truth, g);
}

inline std::size_t token_edit_distance(std::string_view a, std::string_view b, const syntax::Grammar& g = syntax::c_grammar())
{
    return levenshtein(syntax::tokenize(a, g).tokens, syntax::tokenize(b, g).tokens);
}

struct Row {
    std::string id;
    std::string prediction;
    std::string ff;
    std::string ff_post;
    // The approach produced this prediction itself rather than falling back
    // to f_f.
    bool complete = true;
};

struct SampleScore {
    std::string id;
    bool complete = true;
    bool correct = false;
    std::size_t distance = 0;
    std::size_t denominator = 0;
};

struct ApproachReport {
    std::string approach;
    std::size_t n = 0;
    std::size_t complete_count = 0;
    std::size_t accuracy_count = 0;
    double accuracy_pct = 0.0;
    double aed = 0.0;
    double red = 0.0;
    // Means over completed samples only; nullopt when none completed.
    std::optional<double> aed_complete;
    std::optional<double> red_complete;
    std::vector<SampleScore> samples;
};

// Throws DegenerateSample when f_f and f_f' tokenize identically.
inline ApproachReport compute_metrics(const std::vector<Row>& rows, std::string approach = {})
{
    ApproachReport report;
    report.approach = std::move(approach);
    report.n = rows.size();
    double sum_d = 0.0, sum_r = 0.0, sum_d_c = 0.0, sum_r_c = 0.0;
    for (const Row& row : rows) {
        auto pred = syntax::tokenize(row.prediction).tokens;
        auto before = syntax::tokenize(row.ff).tokens;
        auto truth = syntax::tokenize(row.ff_post).tokens;
        SampleScore s;
        s.id = row.id;
        s.complete = row.complete;
        s.denominator = levenshtein(before, truth);
        if (s.denominator == 0)
            throw DegenerateSample(row.id);
        s.distance = levenshtein(pred, truth);
        // a defaulted sample never counts as an answer
        s.correct = s.complete && pred == truth;
        double ratio = static_cast<double>(s.distance) / static_cast<double>(s.denominator);
        sum_d += static_cast<double>(s.distance);
        sum_r += ratio;
        if (s.complete) {
            ++report.complete_count;
            sum_d_c += static_cast<double>(s.distance);
            sum_r_c += ratio;
        }
        if (s.correct)
            ++report.accuracy_count;
        report.samples.push_back(std::move(s));
    }
    if (report.n > 0) {
        double n = static_cast<double>(report.n);
        report.aed = sum_d / n;
        report.red = sum_r / n;
        report.accuracy_pct = 100.0 * static_cast<double>(report.accuracy_count) / n;
    }
    if (report.complete_count > 0) {
        double c = static_cast<double>(report.complete_count);
        report.aed_complete = sum_d_c / c;
        report.red_complete = sum_r_c / c;
    }
    return report;
}

struct EvalTask {
    std::string id;
    std::string fs;
    std::string fs_post;
    std::string ff;
    std::string ff_post;
};

// Prediction = f_f.
inline ApproachReport run_origin(const std::vector<EvalTask>& tasks)
{
    std::vector<Row> rows;
    for (const EvalTask& t : tasks)
        rows.push_back(Row { t.id, t.ff, t.ff, t.ff_post, true });
    return compute_metrics(rows, "origin");
}

// Strict application of the source diff onto f_f; failures fall back to f_f
// and do not count as complete.
inline ApproachReport run_naive_apply(const std::vector<EvalTask>& tasks, std::size_t context_lines = 3, std::size_t fuzz = 0)
{
    std::vector<Row> rows;
    for (const EvalTask& t : tasks) {
        diffing::ApplyResult r = diffing::naive_apply(diffing::line_diff(t.fs, t.fs_post), t.ff, context_lines, fuzz);
        rows.push_back(Row { t.id, r.ok() ? *r.text : t.ff, t.ff, t.ff_post, r.ok() });
    }
    return compute_metrics(rows, "naive_apply");
}

inline std::string format_table(const std::vector<ApproachReport>& reports)
{
    std::ostringstream out;
    char line[160];
    std::snprintf(line, sizeof line, "%-24s %14s %14s %8s %6s\n", "Approach", "Complete", "Accuracy", "AED", "RED");
    out << line;
    for (const ApproachReport& r : reports) {
        double n = r.n ? static_cast<double>(r.n) : 1.0;
        std::string complete = std::to_string(r.complete_count) + " (" + [&] {
            std::ostringstream s;
            s << std::fixed << std::setprecision(1) << 100.0 * static_cast<double>(r.complete_count) / n << "%";
            return s.str();
        }() + ")";
        std::string accuracy = std::to_string(r.accuracy_count) + " (" + [&] {
            std::ostringstream s;
            s << std::fixed << std::setprecision(1) << r.accuracy_pct << "%";
            return s.str();
        }() + ")";
        std::snprintf(line, sizeof line, "%-24s %14s %14s %8.2f %6.2f\n", r.approach.c_str(), complete.c_str(), accuracy.c_str(), r.aed,
            r.red);
        out << line;
    }
    return out.str();
}

} // namespace pporter::evaluation
