#pragma once

// Minimal git access through the `git` executable (POSIX only).

#include <fcntl.h>
#include <poll.h>
#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>

#include <array>
#include <cerrno>
#include <cstring>
#include <stdexcept>
#include <string>
#include <vector>

extern char** environ;

namespace pporter::git {

class RepoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct ProcessResult {
    int exit_code = -1;
    std::string out;
    std::string err;
};

// Runs argv[0] with stdout/stderr captured. No shell involved.
inline ProcessResult run_process(const std::vector<std::string>& argv, const std::string& stdin_data = {})
{
    int out_pipe[2], err_pipe[2], in_pipe[2];
    if (pipe(out_pipe) != 0 || pipe(err_pipe) != 0 || pipe(in_pipe) != 0)
        throw RepoError(std::string("pipe failed: ") + std::strerror(errno));

    posix_spawn_file_actions_t actions;
    posix_spawn_file_actions_init(&actions);
    posix_spawn_file_actions_adddup2(&actions, in_pipe[0], 0);
    posix_spawn_file_actions_adddup2(&actions, out_pipe[1], 1);
    posix_spawn_file_actions_adddup2(&actions, err_pipe[1], 2);
    for (int fd : { in_pipe[0], in_pipe[1], out_pipe[0], out_pipe[1], err_pipe[0], err_pipe[1] })
        posix_spawn_file_actions_addclose(&actions, fd);

    std::vector<char*> args;
    for (const auto& a : argv)
        args.push_back(const_cast<char*>(a.c_str()));
    args.push_back(nullptr);

    pid_t pid;
    int rc = posix_spawnp(&pid, args[0], &actions, nullptr, args.data(), environ);
    posix_spawn_file_actions_destroy(&actions);
    close(in_pipe[0]);
    close(out_pipe[1]);
    close(err_pipe[1]);
    if (rc != 0) {
        close(in_pipe[1]);
        close(out_pipe[0]);
        close(err_pipe[0]);
        throw RepoError("cannot run " + argv[0] + ": " + std::strerror(rc));
    }
    if (!stdin_data.empty()) {
        std::size_t written = 0;
        while (written < stdin_data.size()) {
            ssize_t w = write(in_pipe[1], stdin_data.data() + written, stdin_data.size() - written);
            if (w <= 0)
                break;
            written += static_cast<std::size_t>(w);
        }
    }
    close(in_pipe[1]);

    ProcessResult result;
    std::array<pollfd, 2> fds { pollfd { out_pipe[0], POLLIN, 0 }, pollfd { err_pipe[0], POLLIN, 0 } };
    std::array<std::string*, 2> sinks { &result.out, &result.err };
    int open_fds = 2;
    char buf[65536];
    while (open_fds > 0) {
        if (poll(fds.data(), fds.size(), -1) < 0) {
            if (errno == EINTR)
                continue;
            break;
        }
        for (std::size_t i = 0; i < fds.size(); ++i) {
            if (fds[i].fd < 0 || !(fds[i].revents & (POLLIN | POLLHUP | POLLERR)))
                continue;
            ssize_t n = read(fds[i].fd, buf, sizeof buf);
            if (n > 0) {
                sinks[i]->append(buf, static_cast<std::size_t>(n));
            } else {
                close(fds[i].fd);
                fds[i].fd = -1;
                --open_fds;
            }
        }
    }
    int status = 0;
    waitpid(pid, &status, 0);
    result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return result;
}

class Repository {
public:
    explicit Repository(std::string path)
        : path_(std::move(path))
    {
        ProcessResult r = run_process({ "git", "-C", path_, "rev-parse", "--git-dir" });
        if (r.exit_code != 0)
            throw RepoError("not a git repository: " + path_ + ": " + r.err);
    }

    const std::string& path() const { return path_; }

    // Runs a git subcommand; throws RepoError on a non-zero exit.
    std::string run(std::vector<std::string> args) const
    {
        ProcessResult r = try_run(std::move(args));
        if (r.exit_code != 0)
            throw RepoError("git failed in " + path_ + ": " + r.err);
        return r.out;
    }

    ProcessResult try_run(std::vector<std::string> args) const
    {
        std::vector<std::string> argv { "git", "-C", path_, "-c", "core.quotePath=false" };
        argv.insert(argv.end(), args.begin(), args.end());
        return run_process(argv);
    }

    // Full hash of a commit-ish, or empty when it does not resolve.
    std::string resolve_commit(const std::string& rev) const
    {
        ProcessResult r = try_run({ "rev-parse", "--verify", "--quiet", rev + "^{commit}" });
        if (r.exit_code != 0)
            return {};
        std::string out = r.out;
        while (!out.empty() && (out.back() == '\n' || out.back() == '\r'))
            out.pop_back();
        return out;
    }

    // False when `file` does not exist at `rev`.
    bool read_blob(const std::string& rev, const std::string& file, std::string& out) const
    {
        ProcessResult r = try_run({ "cat-file", "blob", rev + ":" + file });
        if (r.exit_code != 0)
            return false;
        out = std::move(r.out);
        return true;
    }

private:
    std::string path_;
};

} // namespace pporter::git
