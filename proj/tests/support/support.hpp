#pragma once

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <regex>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "pporter/git.hpp"
#include "pporter/mining.hpp"

namespace support {

namespace fs = std::filesystem;

inline fs::path fixtures_dir() { return fs::path(PPORTER_FIXTURES_DIR); }

inline std::string slurp(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    if (!in)
        throw std::runtime_error("cannot read " + p.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void spit(const fs::path& p, const std::string& content)
{
    fs::create_directories(p.parent_path());
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    out << content;
}

class TempDir {
public:
    TempDir()
    {
        std::string tmpl = (fs::temp_directory_path() / "pporter-test-XXXXXX").string();
        if (!::mkdtemp(tmpl.data()))
            throw std::runtime_error("mkdtemp failed");
        path_ = tmpl;
    }
    ~TempDir()
    {
        std::error_code ec;
        fs::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const fs::path& path() const { return path_; }
    fs::path operator/(const std::string& rel) const { return path_ / rel; }

private:
    fs::path path_;
};

// A scratch git repository with fully pinned identities and dates, so the
// same sequence of calls always produces the same hashes.
class ToyRepo {
public:
    explicit ToyRepo(fs::path path)
        : path_(std::move(path))
    {
        fs::create_directories(path_);
        git({ "init", "-q", "-b", "master" });
        git({ "config", "user.name", "Toy Author" });
        git({ "config", "user.email", "toy@example.invalid" });
        git({ "config", "commit.gpgsign", "false" });
    }

    const fs::path& path() const { return path_; }

    void write(const std::string& rel, const std::string& content) { spit(path_ / rel, content); }

    std::string read(const std::string& rel) const { return slurp(path_ / rel); }

    // `date` is any git date, e.g. "2022-08-01T12:00:00Z".
    std::string commit(const std::string& message, const std::string& date)
    {
        ::setenv("GIT_AUTHOR_DATE", date.c_str(), 1);
        ::setenv("GIT_COMMITTER_DATE", date.c_str(), 1);
        ::setenv("GIT_AUTHOR_NAME", "Toy Author", 1);
        ::setenv("GIT_COMMITTER_NAME", "Toy Author", 1);
        ::setenv("GIT_AUTHOR_EMAIL", "toy@example.invalid", 1);
        ::setenv("GIT_COMMITTER_EMAIL", "toy@example.invalid", 1);
        git({ "add", "-A" });
        git({ "commit", "-q", "--allow-empty", "-m", message });
        ::unsetenv("GIT_AUTHOR_DATE");
        ::unsetenv("GIT_COMMITTER_DATE");
        return head();
    }

    void tag(const std::string& name) { git({ "tag", name }); }

    std::string head() const
    {
        std::string h = git({ "rev-parse", "HEAD" });
        return h.substr(0, h.find('\n'));
    }

    std::string git(std::vector<std::string> args) const
    {
        args.insert(args.begin(), { "git", "-C", path_.string() });
        pporter::git::ProcessResult r = pporter::git::run_process(args);
        if (r.exit_code != 0)
            throw std::runtime_error("git failed: " + r.err);
        return r.out;
    }

private:
    fs::path path_;
};

// ---------------------------------------------------------------------------
// Vim -> Neovim dialect rewrite used to derive fork versions of fixtures.

inline std::size_t indent_width(const std::string& line, std::size_t& content_start)
{
    std::size_t w = 0, i = 0;
    for (; i < line.size() && (line[i] == ' ' || line[i] == '\t'); ++i)
        w = line[i] == '\t' ? (w / 8 + 1) * 8 : w + 1;
    content_start = i;
    return w;
}

inline std::string collapse_blanks(std::string s)
{
    static const std::regex runs(R"([ \t]*\t[ \t]*)");
    return std::regex_replace(s, runs, " ");
}

inline std::string neovim_words(std::string text)
{
    static const std::vector<std::pair<std::regex, std::string>> rules = {
        { std::regex(R"(\bchar_u\b)"), "char" },
        { std::regex(R"(\bvim_free\b)"), "xfree" },
        { std::regex(R"(\balloc\b)"), "xmalloc" },
        { std::regex(R"(\bvim_strsave\b)"), "xstrdup" },
        { std::regex(R"(\bSTRLEN\b)"), "strlen" },
        { std::regex(R"(\bSTRCPY\b)"), "strcpy" },
        { std::regex(R"(\bSTRCMP\b)"), "strcmp" },
        { std::regex(R"(\bTRUE\b)"), "true" },
        { std::regex(R"(\bFALSE\b)"), "false" },
        { std::regex(R"(\bvim_memset\b)"), "memset" },
        { std::regex(R"(\bmch_memmove\b)"), "memmove" },
    };
    for (const auto& [re, to] : rules)
        text = std::regex_replace(text, re, to);
    return text;
}

// Joins the split Vim header onto one line, adds an attribute macro,
// halves indentation and applies the usual identifier renames.
inline std::string to_neovim(const std::string& vim)
{
    std::vector<std::string> lines;
    std::istringstream in(vim);
    for (std::string l; std::getline(in, l);)
        lines.push_back(l);
    std::size_t brace = 0;
    while (brace < lines.size() && lines[brace] != "{")
        ++brace;
    if (brace == lines.size())
        throw std::runtime_error("fixture function needs '{' on its own line");

    std::string header;
    for (std::size_t k = 0; k < brace; ++k) {
        std::size_t cs;
        indent_width(lines[k], cs);
        std::string part = collapse_blanks(lines[k].substr(cs));
        if (!header.empty() && header.back() != '(' && header.back() != '*' && part.front() != ')')
            header += ' ';
        header += part;
    }
    std::string out = header + "\n";
    if (header.find('*') != std::string::npos)
        out += "  FUNC_ATTR_NONNULL_ALL\n";
    for (std::size_t k = brace; k < lines.size(); ++k) {
        std::size_t cs;
        std::size_t w = indent_width(lines[k], cs);
        std::string body = lines[k].substr(cs);
        if (body.empty()) {
            out += "\n";
            continue;
        }
        // Labels stay in column zero.
        out += std::string(w / 2, ' ') + collapse_blanks(body) + "\n";
    }
    out.pop_back();
    return neovim_words(out);
}

// Vim keeps 8-column indentation as tabs.
inline std::string vim_tabs(const std::string& text)
{
    std::string out;
    std::istringstream in(text);
    bool first = true;
    for (std::string l; std::getline(in, l);) {
        if (!first)
            out += '\n';
        first = false;
        std::size_t cs;
        std::size_t w = indent_width(l, cs);
        if (cs == l.size()) {
            continue;
        }
        out += std::string(w / 8, '\t') + std::string(w % 8, ' ') + l.substr(cs);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Mini-corpus fixtures: "-|" lines exist only before the patch, "+|" lines
// only after it. "@fork a => b" rewrites only the fork's copy.

struct CorpusEntry {
    std::string name;
    std::string patch;
    std::string title;
    std::string file;
    std::string vim_pre, vim_post;
    std::string nvim_pre, nvim_post;
};

inline std::string replace_all(std::string s, const std::string& from, const std::string& to)
{
    for (std::size_t p = s.find(from); p != std::string::npos; p = s.find(from, p + to.size()))
        s.replace(p, from.size(), to);
    return s;
}

inline CorpusEntry load_corpus_entry(const fs::path& path)
{
    CorpusEntry e;
    e.name = path.stem().string();
    std::istringstream in(slurp(path));
    std::vector<std::pair<std::string, std::string>> forks;
    std::string pre, post;
    for (std::string line; std::getline(in, line);) {
        if (line.rfind("@patch ", 0) == 0) {
            e.patch = line.substr(7);
        } else if (line.rfind("@title ", 0) == 0) {
            e.title = line.substr(7);
        } else if (line.rfind("@file ", 0) == 0) {
            e.file = line.substr(6);
        } else if (line.rfind("@fork ", 0) == 0) {
            std::string rule = line.substr(6);
            std::size_t arrow = rule.find(" => ");
            forks.emplace_back(rule.substr(0, arrow), rule.substr(arrow + 4));
        } else if (line.rfind("-|", 0) == 0) {
            pre += line.substr(2) + "\n";
        } else if (line.rfind("+|", 0) == 0) {
            post += line.substr(2) + "\n";
        } else {
            pre += line + "\n";
            post += line + "\n";
        }
    }
    pre.pop_back();
    post.pop_back();
    e.vim_pre = pre;
    e.vim_post = post;
    for (const auto& [from, to] : forks) {
        pre = replace_all(pre, from, to);
        post = replace_all(post, from, to);
    }
    e.nvim_pre = to_neovim(pre);
    e.nvim_post = to_neovim(post);
    return e;
}

inline std::vector<CorpusEntry> load_minicorpus()
{
    std::vector<fs::path> files;
    for (const auto& d : fs::directory_iterator(fixtures_dir() / "minicorpus"))
        files.push_back(d.path());
    std::sort(files.begin(), files.end());
    std::vector<CorpusEntry> out;
    for (const auto& f : files)
        out.push_back(load_corpus_entry(f));
    return out;
}

struct CorpusRepos {
    fs::path vim;
    fs::path nvim;
    std::vector<std::string> vim_hashes;
};

inline std::string day(int offset_days, const std::string& base = "2022-08-01")
{
    pporter::mining::Timestamp t = pporter::mining::parse_utc_date(base) + offset_days * 86400LL + 12 * 3600;
    return pporter::mining::format_utc(t);
}

// Builds an upstream and a fork repository: one initial import each, then
// one upstream commit per entry and its marked port in the fork.
inline CorpusRepos build_corpus_repos(const fs::path& root, const std::vector<CorpusEntry>& corpus)
{
    ToyRepo vim(root / "vim");
    ToyRepo nvim(root / "neovim");
    std::map<std::string, std::vector<std::size_t>> by_file;
    for (std::size_t i = 0; i < corpus.size(); ++i)
        by_file[corpus[i].file].push_back(i);

    std::vector<bool> vim_done(corpus.size(), false), nvim_done(corpus.size(), false);
    auto vim_file = [&](const std::string& file) {
        std::string text = "/*\n * " + file.substr(file.rfind('/') + 1) + "\n */\n\n#include \"vim.h\"\n";
        for (std::size_t i : by_file[file])
            text += "\n" + vim_tabs(vim_done[i] ? corpus[i].vim_post : corpus[i].vim_pre) + "\n";
        return text;
    };
    auto nvim_file = [&](const std::string& file) {
        std::string base = file.substr(file.rfind('/') + 1);
        base = base.substr(0, base.size() - 2);
        std::string text = "#include <stdbool.h>\n#include <string.h>\n\n#include \"nvim/" + base + ".h\"\n";
        for (std::size_t i : by_file[file])
            text += "\n" + (nvim_done[i] ? corpus[i].nvim_post : corpus[i].nvim_pre) + "\n";
        return text;
    };
    auto nvim_path = [](const std::string& file) { return "src/nvim/" + file.substr(file.rfind('/') + 1); };

    for (const auto& [file, idx] : by_file) {
        vim.write(file, vim_file(file));
        nvim.write(nvim_path(file), nvim_file(file));
    }
    vim.commit("patch 9.0.0100: import sources for testing", day(-20));
    nvim.commit("build: import sources", day(-19));

    CorpusRepos out { vim.path(), nvim.path(), {} };
    for (std::size_t i = 0; i < corpus.size(); ++i) {
        vim_done[i] = true;
        vim.write(corpus[i].file, vim_file(corpus[i].file));
        std::string hash = vim.commit("patch " + corpus[i].patch + ": " + corpus[i].title + "\n\nProblem:    " + corpus[i].title
                + ".\nSolution:   Check the value before using it.",
            day(static_cast<int>(i)));
        vim.tag("v" + corpus[i].patch);
        out.vim_hashes.push_back(hash);
    }
    for (std::size_t i = 0; i < corpus.size(); ++i) {
        nvim_done[i] = true;
        nvim.write(nvim_path(corpus[i].file), nvim_file(corpus[i].file));
        nvim.commit("vim-patch:" + corpus[i].patch + ": " + corpus[i].title + "\n\nProblem:    " + corpus[i].title
                + ".\n\nhttps://github.com/vim/vim/commit/" + out.vim_hashes[i] + "\n\nCo-authored-by: Toy Author <toy@example.invalid>",
            day(static_cast<int>(i) + 40));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Random C functions built from a small statement grammar.

struct GenStmt {
    enum Kind { simple, if_, if_else, for_, while_, do_, switch_ } kind = simple;
    std::string text;
    std::vector<GenStmt> body;
    std::vector<GenStmt> else_body;
    std::vector<std::pair<int, std::vector<GenStmt>>> cases;
};

struct GenStyle {
    std::string unit = "    ";
    bool brace_own_line = true;
};

class CGenerator {
public:
    explicit CGenerator(std::uint32_t seed)
        : rng_(seed)
    {
    }

    std::mt19937& rng() { return rng_; }

    int pick(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }

    bool chance(double p) { return std::bernoulli_distribution(p)(rng_); }

    std::string ident()
    {
        static const char* names[] = { "len", "count", "idx", "flags", "total", "width", "pos", "limit", "state", "mode" };
        return names[pick(0, 9)];
    }

    std::string simple_text()
    {
        static const char* calls[] = { "update_view", "redraw_line", "check_limits", "emit_char", "flush_buf", "mark_dirty" };
        switch (pick(0, 5)) {
        case 0:
            return ident() + " = " + ident() + " + " + std::to_string(pick(0, 99)) + ";";
        case 1:
            return ident() + " += " + ident() + ";";
        case 2:
            return std::string(calls[pick(0, 5)]) + "(" + ident() + ", " + std::to_string(pick(0, 9)) + ");";
        case 3:
            return ident() + " = " + ident() + " * " + ident() + " - " + std::to_string(pick(1, 9)) + ";";
        case 4:
            return "buf[" + ident() + "] = '" + static_cast<char>('a' + pick(0, 25)) + "';";
        default:
            return ident() + "--;";
        }
    }

    std::string condition() { return ident() + (chance(0.5) ? " > " : " != ") + std::to_string(pick(0, 20)); }

    std::vector<GenStmt> block(int depth, int lo, int hi)
    {
        std::vector<GenStmt> out;
        int n = pick(lo, hi);
        for (int k = 0; k < n; ++k)
            out.push_back(statement(depth));
        return out;
    }

    GenStmt statement(int depth)
    {
        GenStmt s;
        if (depth >= 3 || chance(0.6)) {
            s.text = simple_text();
            return s;
        }
        int kind = pick(1, 6);
        s.kind = static_cast<GenStmt::Kind>(kind);
        switch (s.kind) {
        case GenStmt::if_:
        case GenStmt::if_else:
            s.text = "if (" + condition() + ")";
            s.body = block(depth + 1, 1, 4);
            if (s.kind == GenStmt::if_else)
                s.else_body = block(depth + 1, 1, 3);
            break;
        case GenStmt::for_: {
            std::string v = pick(0, 1) ? "i" : "j";
            s.text = "for (" + v + " = 0; " + v + " < " + ident() + "; " + v + "++)";
            s.body = block(depth + 1, 1, 5);
            break;
        }
        case GenStmt::while_:
            s.text = "while (" + condition() + ")";
            s.body = block(depth + 1, 1, 4);
            break;
        case GenStmt::do_:
            s.text = "while (" + condition() + ");";
            s.body = block(depth + 1, 1, 3);
            break;
        case GenStmt::switch_: {
            s.text = "switch (" + ident() + ")";
            int n = pick(1, 3);
            for (int c = 0; c < n; ++c)
                s.cases.emplace_back(c * 2 + pick(0, 1), block(depth + 1, 1, 3));
            break;
        }
        default:
            break;
        }
        return s;
    }

    std::vector<GenStmt> function_body() { return block(0, 4, 10); }

    GenStmt fresh_simple()
    {
        GenStmt s;
        s.text = simple_text();
        return s;
    }

private:
    std::mt19937 rng_;
};

inline void render_block(const std::vector<GenStmt>& stmts, const GenStyle& st, int depth, std::string& out);

inline void open_brace(const std::string& head, const GenStyle& st, int depth, std::string& out)
{
    std::string pad;
    for (int k = 0; k < depth; ++k)
        pad += st.unit;
    if (st.brace_own_line)
        out += pad + head + "\n" + pad + "{\n";
    else
        out += pad + head + " {\n";
}

inline void render_stmt(const GenStmt& s, const GenStyle& st, int depth, std::string& out)
{
    std::string pad;
    for (int k = 0; k < depth; ++k)
        pad += st.unit;
    switch (s.kind) {
    case GenStmt::simple:
        out += pad + s.text + "\n";
        return;
    case GenStmt::do_:
        open_brace("do", st, depth, out);
        render_block(s.body, st, depth + 1, out);
        out += pad + "} " + s.text + "\n";
        return;
    case GenStmt::switch_:
        open_brace(s.text, st, depth, out);
        for (const auto& [label, body] : s.cases) {
            out += pad + st.unit + "case " + std::to_string(label) + ":\n";
            render_block(body, st, depth + 2, out);
            out += pad + st.unit + st.unit + "break;\n";
        }
        out += pad + "}\n";
        return;
    default:
        open_brace(s.text, st, depth, out);
        render_block(s.body, st, depth + 1, out);
        if (s.kind == GenStmt::if_else) {
            if (st.brace_own_line)
                out += pad + "}\n" + pad + "else\n" + pad + "{\n";
            else
                out += pad + "} else {\n";
            render_block(s.else_body, st, depth + 1, out);
        }
        out += pad + "}\n";
        return;
    }
}

inline void render_block(const std::vector<GenStmt>& stmts, const GenStyle& st, int depth, std::string& out)
{
    for (const auto& s : stmts)
        render_stmt(s, st, depth, out);
}

inline std::string render_function(const std::string& name, const std::vector<GenStmt>& body, const GenStyle& st)
{
    std::string out = "static int " + name + "(int len, int count, char *buf)\n{\n";
    out += st.unit + "int i, j, idx = 0, flags = 0, total = 0;\n";
    out += st.unit + "int width = 0, pos = 0, limit = 0, state = 0, mode = 0;\n";
    render_block(body, st, 1, out);
    out += st.unit + "return total;\n}";
    return out;
}

// Every vector of statements reachable from `body`, for picking edit sites.
inline void collect_blocks(std::vector<GenStmt>& body, std::vector<std::vector<GenStmt>*>& out)
{
    out.push_back(&body);
    for (auto& s : body) {
        if (!s.body.empty())
            collect_blocks(s.body, out);
        if (!s.else_body.empty())
            collect_blocks(s.else_body, out);
        for (auto& c : s.cases)
            collect_blocks(c.second, out);
    }
}

// Applies a few statement-level edits: replace, insert or delete a simple
// statement, or occasionally insert a whole new compound statement.
inline void mutate(CGenerator& g, std::vector<GenStmt>& body, int edits)
{
    for (int e = 0; e < edits; ++e) {
        std::vector<std::vector<GenStmt>*> blocks;
        collect_blocks(body, blocks);
        auto& blk = *blocks[static_cast<std::size_t>(g.pick(0, static_cast<int>(blocks.size()) - 1))];
        int at = g.pick(0, static_cast<int>(blk.size()) - 1);
        int op = g.pick(0, 9);
        if (op < 4 && blk[at].kind == GenStmt::simple) {
            blk[at].text = g.simple_text();
        } else if (op < 7) {
            blk.insert(blk.begin() + at, g.fresh_simple());
        } else if (op < 9 && blk.size() > 1 && blk[at].kind == GenStmt::simple) {
            blk.erase(blk.begin() + at);
        } else {
            blk.insert(blk.begin() + at, g.statement(1));
        }
    }
}

inline std::string rename_identifier(const std::string& text, const std::string& from, const std::string& to)
{
    return std::regex_replace(text, std::regex("\\b" + from + "\\b"), to);
}

struct Triple {
    std::string fs, fs_post, ff;
};

// A source pre/post pair plus a diverged fork version of the pre-patch
// function: different layout, a renamed variable and a few local edits.
inline Triple random_triple(CGenerator& g, int n)
{
    std::vector<GenStmt> body = g.function_body();
    std::vector<GenStmt> post = body;
    mutate(g, post, g.pick(1, 3));
    std::vector<GenStmt> fork = body;
    if (g.chance(0.7))
        mutate(g, fork, g.pick(0, 2));
    GenStyle src { "    ", g.chance(0.5) };
    GenStyle fst { g.chance(0.5) ? "  " : "\t", g.chance(0.5) };
    std::string name = "gen_fn_" + std::to_string(n);
    Triple t;
    t.fs = render_function(name, body, src);
    t.fs_post = render_function(name, post, src);
    t.ff = render_function(name, fork, fst);
    if (g.chance(0.5))
        t.ff = rename_identifier(t.ff, "total", "sum");
    return t;
}

} // namespace support
