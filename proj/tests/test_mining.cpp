#include <gtest/gtest.h>

#include "pporter/mining.hpp"
#include "pporter/records.hpp"
#include "support/support.hpp"

using namespace pporter;
using namespace pporter::mining;

namespace {

const std::string two_functions = "#include \"vim.h\"\n\n"
                                  "static int counter = 0;\n\n"
                                  "/*\n * Add one.\n */\n"
                                  "    int\n"
                                  "bump(int x)\n"
                                  "{\n"
                                  "    return x + 1;\n"
                                  "}\n\n"
                                  "    void\n"
                                  "reset(void)\n"
                                  "{\n"
                                  "    counter = 0;\n"
                                  "}\n";

std::string source_file(int add) { return support::replace_all(two_functions, "x + 1", "x + " + std::to_string(add)); }

struct PairFixture {
    support::TempDir dir;
    support::ToyRepo src { dir.path() / "src" };
    support::ToyRepo fork { dir.path() / "fork" };
    std::string src_hash;

    PairFixture()
    {
        src.write("src/misc.c", two_functions);
        src.commit("initial import", support::day(0));
        src.write("src/misc.c", source_file(2));
        src_hash = src.commit("patch 9.0.0001: bump adds one\n\nProblem: off by one.", support::day(1));
        src.tag("v9.0.0001");
        fork.write("src/nvim/misc.c", two_functions);
        fork.commit("initial import", support::day(0));
    }

    std::string port(const std::string& message, int day)
    {
        fork.write("src/nvim/misc.c", source_file(2 + day));
        return fork.commit(message, support::day(day));
    }
};

} // namespace

TEST(Dates, ParseAndFormat)
{
    EXPECT_EQ(parse_utc_date("1970-01-01"), 0);
    EXPECT_EQ(parse_utc_date("1970-01-02"), 86400);
    EXPECT_EQ(parse_utc_date("2000-03-01T00:00:00Z"), 951868800);
    EXPECT_EQ(parse_utc_date("2022-07-01T12:30:05Z"), parse_utc_date("2022-07-01") + 12 * 3600 + 30 * 60 + 5);
    EXPECT_EQ(format_utc(parse_utc_date("2024-02-29T23:59:59Z")), "2024-02-29T23:59:59Z");
    EXPECT_THROW(parse_utc_date("2022-13-01"), std::invalid_argument);
    EXPECT_THROW(parse_utc_date("yesterday"), std::invalid_argument);
}

TEST(LocateFunctions, FindsDefinitionsOnly)
{
    std::string text = "int proto(int);\n"
                       "static int table[] = { 1, 2, 3 };\n"
                       "struct s { int a; };\n"
                       "int first(void)\n{\n    return 1;\n}\n"
                       "    static char *\n"
                       "second(char *p)\n{\n    if (p) {\n        return p;\n    }\n    return 0;\n}\n";
    auto found = locate_functions(text);
    ASSERT_EQ(found.size(), 2u);
    EXPECT_EQ(found[0].name, "first");
    EXPECT_EQ(found[1].name, "second");
    EXPECT_EQ(text.substr(found[0].begin, found[0].end - found[0].begin), "int first(void)\n{\n    return 1;\n}");
    EXPECT_EQ(text.substr(found[1].begin, 18), "    static char *\n");
    EXPECT_EQ(text[found[1].end - 1], '}');
}

TEST(ScanHistory, ReturnsCommitsInDateOrder)
{
    support::TempDir dir;
    support::ToyRepo repo(dir.path() / "r");
    repo.write("a.c", "int a(void)\n{\n    return 0;\n}\n");
    repo.commit("third by date", support::day(5));
    repo.write("a.c", "int a(void)\n{\n    return 1;\n}\n");
    repo.commit("first by date", support::day(1));
    repo.write("a.c", "int a(void)\n{\n    return 2;\n}\n");
    repo.commit("second by date", support::day(3));
    auto commits = scan_history(repo.path().string(), { "toy", std::nullopt });
    ASSERT_EQ(commits.size(), 3u);
    EXPECT_EQ(commits[0].title(), "first by date");
    EXPECT_EQ(commits[1].title(), "second by date");
    EXPECT_EQ(commits[2].title(), "third by date");
    EXPECT_EQ(commits[0].repo, "toy");
    EXPECT_EQ(commits[0].commit_time, parse_utc_date(support::day(1)));

    auto early = scan_history(repo.path().string(), { "toy", parse_utc_date(support::day(3)) });
    EXPECT_EQ(early.size(), 2u);
}

TEST(MineCommit, SingleFunctionEdit)
{
    support::TempDir dir;
    support::ToyRepo repo(dir.path() / "r");
    repo.write("src/misc.c", two_functions);
    repo.commit("import", support::day(0));
    repo.write("src/misc.c", source_file(5));
    repo.write("README", "docs\n");
    std::string h = repo.commit("change bump", support::day(1));
    MinedCommit c = mine_commit(git::Repository(repo.path().string()), h);
    EXPECT_EQ(c.changed_files, (std::vector<std::string> { "README", "src/misc.c" }));
    ASSERT_EQ(c.functions.size(), 1u);
    EXPECT_EQ(c.functions[0].name, "bump");
    EXPECT_EQ(c.functions[0].file, "src/misc.c");
    EXPECT_NE(c.functions[0].post.find("x + 5"), std::string::npos);
    EXPECT_TRUE(c.single_function());
}

TEST(MineCommit, HeaderOnlyChangeHasNoFunctions)
{
    support::TempDir dir;
    support::ToyRepo repo(dir.path() / "r");
    repo.write("src/misc.h", "int bump(int x);\n");
    repo.commit("import", support::day(0));
    repo.write("src/misc.h", "int bump(int x);\nvoid reset(void);\n");
    std::string h = repo.commit("declare reset", support::day(1));
    MinedCommit c = mine_commit(git::Repository(repo.path().string()), h);
    EXPECT_TRUE(c.functions.empty());
    EXPECT_FALSE(c.non_function_change);
    EXPECT_FALSE(c.single_function());

    repo.write("src/misc.c", two_functions);
    repo.commit("add misc", support::day(2));
    repo.write("src/misc.h", "int bump(int x);\n");
    repo.write("src/misc.c", source_file(4));
    h = repo.commit("header and one function", support::day(3));
    EXPECT_TRUE(mine_commit(git::Repository(repo.path().string()), h).single_function());
}

TEST(MineCommit, CommentOnlyChangeIsIgnored)
{
    support::TempDir dir;
    support::ToyRepo repo(dir.path() / "r");
    repo.write("src/misc.c", two_functions);
    repo.commit("import", support::day(0));
    repo.write("src/misc.c", support::replace_all(two_functions, "Add one.", "Add exactly one."));
    std::string h = repo.commit("comment", support::day(1));
    MinedCommit c = mine_commit(git::Repository(repo.path().string()), h);
    EXPECT_TRUE(c.functions.empty());
    EXPECT_FALSE(c.non_function_change);
}

TEST(MineCommit, GlobalChangeAlongsideFunction)
{
    support::TempDir dir;
    support::ToyRepo repo(dir.path() / "r");
    repo.write("src/misc.c", two_functions);
    repo.commit("import", support::day(0));
    repo.write("src/misc.c", support::replace_all(source_file(3), "counter = 0;\n\n", "counter = 1;\n\n"));
    std::string h = repo.commit("two things", support::day(1));
    MinedCommit c = mine_commit(git::Repository(repo.path().string()), h);
    EXPECT_EQ(c.functions.size(), 1u);
    EXPECT_TRUE(c.non_function_change);
    EXPECT_FALSE(c.single_function());
}

TEST(Pairing, BodyLinkWins)
{
    PairFixture fx;
    fx.port("vim-patch:9.0.0001: bump adds one\n\nProblem: off by one.\n\nhttps://github.com/vim/vim/commit/" + fx.src_hash, 2);
    auto forks = scan_history(fx.fork.path().string());
    auto r = pair_ported_patches(forks, fx.src.path().string());
    EXPECT_EQ(r.marked, 1u);
    ASSERT_EQ(r.pairs.size(), 1u);
    EXPECT_EQ(r.pairs[0].source_commit.hash, fx.src_hash);
    EXPECT_EQ(r.pairs[0].evidence, PairingEvidence::body_link);
}

TEST(Pairing, UnmarkedCommitsAreIgnored)
{
    PairFixture fx;
    fx.port("fix: bump adds one\n\nhttps://github.com/vim/vim/commit/" + fx.src_hash, 2);
    auto r = pair_ported_patches(scan_history(fx.fork.path().string()), fx.src.path().string());
    EXPECT_EQ(r.marked, 0u);
    EXPECT_TRUE(r.pairs.empty());
    EXPECT_TRUE(r.unresolved.empty());
}

TEST(Pairing, TagFallbackAndUnresolved)
{
    PairFixture fx;
    fx.port("vim-patch:9.0.0001: bump adds one", 2);
    fx.port("vim-patch:9.0.0999: no such patch", 3);
    fx.port("vim-patch:8.2.1234: dead link\n\nhttps://github.com/vim/vim/commit/deadbeef12", 4);
    auto r = pair_ported_patches(scan_history(fx.fork.path().string()), fx.src.path().string());
    EXPECT_EQ(r.marked, 3u);
    ASSERT_EQ(r.pairs.size(), 1u);
    EXPECT_EQ(r.pairs[0].evidence, PairingEvidence::title_pattern);
    EXPECT_EQ(r.pairs[0].source_commit.hash, fx.src_hash);
    ASSERT_EQ(r.unresolved.size(), 2u);
    EXPECT_EQ(r.unresolved[0].title(), "vim-patch:9.0.0999: no such patch");

    PairingConfig no_tags;
    no_tags.tag_format.clear();
    EXPECT_TRUE(pair_ported_patches(scan_history(fx.fork.path().string()), fx.src.path().string(), no_tags).pairs.empty());
}

TEST(Pairing, AllowlistTakesPriority)
{
    PairFixture fx;
    std::string root = fx.src.git({ "rev-list", "--max-parents=0", "HEAD" });
    root = root.substr(0, root.find('\n'));
    std::string fh = fx.port("vim-patch:9.0.0001: bump adds one\n\nhttps://github.com/vim/vim/commit/" + fx.src_hash, 2);
    PairingConfig cfg;
    cfg.allowlist[fh] = root;
    auto r = pair_ported_patches(scan_history(fx.fork.path().string()), fx.src.path().string(), cfg);
    ASSERT_EQ(r.pairs.size(), 1u);
    EXPECT_EQ(r.pairs[0].evidence, PairingEvidence::allowlist);
    EXPECT_EQ(r.pairs[0].source_commit.hash, root);
}

TEST(ExtractTask, BuildsTaskFromSingleFunctionPair)
{
    PairFixture fx;
    std::string fh = fx.port("vim-patch:9.0.0001: bump adds one", 2);
    auto r = pair_ported_patches(scan_history(fx.fork.path().string()), fx.src.path().string());
    ASSERT_EQ(r.pairs.size(), 1u);
    auto task = extract_task(r.pairs[0]);
    ASSERT_TRUE(task);
    EXPECT_EQ(task->function, "bump");
    EXPECT_EQ(task->file, "src/nvim/misc.c");
    EXPECT_EQ(task->fork_hash, fh);
    EXPECT_EQ(task->source_hash, fx.src_hash);
    EXPECT_EQ(task->id, fh.substr(0, 12) + ":bump");
    EXPECT_EQ(task->fs, "    int\nbump(int x)\n{\n    return x + 1;\n}");
    EXPECT_EQ(task->fs_post, "    int\nbump(int x)\n{\n    return x + 2;\n}");
    EXPECT_EQ(*task->ff_post, "    int\nbump(int x)\n{\n    return x + 4;\n}");
    EXPECT_EQ(task->fork_time, parse_utc_date(support::day(2)));
}

TEST(ExtractTask, TwoFunctionCommitIsSkipped)
{
    PairFixture fx;
    fx.fork.write("src/nvim/misc.c", support::replace_all(source_file(4), "counter = 0;\n}", "counter = -1;\n}"));
    fx.fork.commit("vim-patch:9.0.0001: bump adds one", support::day(2));
    auto r = pair_ported_patches(scan_history(fx.fork.path().string()), fx.src.path().string());
    ASSERT_EQ(r.pairs.size(), 1u);
    EXPECT_EQ(r.pairs[0].fork_commit.functions.size(), 2u);
    EXPECT_FALSE(extract_task(r.pairs[0]));
}

TEST(ExtractTask, TokenIdenticalChangeIsSkipped)
{
    PairFixture fx;
    fx.fork.write("src/nvim/misc.c", support::replace_all(two_functions, "return x + 1;", "return x+1;"));
    fx.fork.commit("vim-patch:9.0.0001: bump adds one", support::day(2));
    auto r = pair_ported_patches(scan_history(fx.fork.path().string()), fx.src.path().string());
    ASSERT_EQ(r.pairs.size(), 1u);
    EXPECT_EQ(r.pairs[0].fork_commit.functions.size(), 1u);
    EXPECT_FALSE(extract_task(r.pairs[0]));
}

TEST(CleanMessage, StripsNoise)
{
    EXPECT_EQ(clean_message("vim-patch:9.0.0123: crash when closing the last window\n\nProblem: crash.\n\n"
                            "https://github.com/vim/vim/commit/0123abc4\n\nCo-authored-by: A <a@b>"),
        "crash when closing the last window Problem: crash.");
    EXPECT_EQ(clean_message("Fix the cursor position after undo (#12345)"), "Fix the cursor position after undo");
    EXPECT_EQ(clean_message("Revert 1a2b3c4d5e because the cursor jumps around"), "Revert because the cursor jumps around");
    EXPECT_EQ(clean_message("Handle a deadbeef value in the parser"), "Handle a deadbeef value in the parser");
    EXPECT_EQ(clean_message("fix crash when col > line length in qf buffer"), "fix crash when col > line length in qf buffer");
    EXPECT_FALSE(clean_message("update\n\nhash deadbeef123"));
    EXPECT_EQ(clean_message("Sync the runtime files, see https://example.org/notes?id=3 for details"),
        "Sync the runtime files, see for details");
    EXPECT_FALSE(clean_message("fix typo"));
    EXPECT_FALSE(clean_message("```\ncode block only here\n```"));
    EXPECT_FALSE(clean_message("Update 1 2 3 4 5 6"));
}

TEST(CountWords, NeedsALetter)
{
    EXPECT_EQ(count_words("a b c"), 3u);
    EXPECT_EQ(count_words("  x1 42 -- y  "), 2u);
    EXPECT_EQ(count_words(""), 0u);
}

TEST(Finetune, CutoffIsStrictAndRecordHasFourFields)
{
    support::TempDir dir;
    support::ToyRepo repo(dir.path() / "r");
    repo.write("src/misc.c", two_functions);
    repo.commit("import the whole file from upstream", support::day(0));
    repo.write("src/misc.c", source_file(2));
    repo.commit("Make bump add two instead of one", support::day(1));
    repo.write("src/misc.c", source_file(3));
    repo.commit("Make bump add three instead of two", support::day(2));
    auto commits = scan_history(repo.path().string(), { "toy", std::nullopt });
    auto ds = build_finetune_dataset(commits, parse_utc_date(support::day(2)));
    ASSERT_EQ(ds.size(), 1u);
    EXPECT_EQ(ds[0].message, "Make bump add two instead of one");
    EXPECT_EQ(ds[0].hash, commits[1].hash);
    EXPECT_EQ(build_finetune_dataset(commits, parse_utc_date(support::day(2)) + 1).size(), 2u);

    FinetunePrompt fp = render_finetune_prompt(ds[0].f, ds[0].f_post, ds[0].message);
    EXPECT_NE(fp.prompt.find("\n" + ds[0].message + "\n"), std::string::npos);
    EXPECT_EQ(fp.completion.find(fp.prompt), std::string::npos);
    EXPECT_EQ(fp.completion.find("### Commit Message:"), std::string::npos);

    nlohmann::json j = records::to_json(ds[0]);
    std::vector<std::string> keys;
    for (const auto& [k, v] : j.items())
        keys.push_back(k);
    std::sort(keys.begin(), keys.end());
    EXPECT_EQ(keys, (std::vector<std::string> { "completion", "hash", "prompt", "repo" }));
    EXPECT_EQ(j["repo"], "toy");
    EXPECT_EQ(j["prompt"].get<std::string>() + j["completion"].get<std::string>(),
        render_finetune_prompt(ds[0].f, ds[0].f_post, ds[0].message).prompt + render_finetune_prompt(ds[0].f, ds[0].f_post, ds[0].message).completion);
}
