#include "nanprop/subprocess.hpp"

#include <atomic>
#include <cerrno>
#include <csignal>
#include <cstring>
#include <fcntl.h>
#include <poll.h>
#include <sys/wait.h>
#include <thread>
#include <unistd.h>

#include "nanprop/errors.hpp"

namespace nanprop {

namespace {

using Clock = std::chrono::steady_clock;

void ignore_sigpipe() {
    static std::once_flag once;
    std::call_once(once, [] { std::signal(SIGPIPE, SIG_IGN); });
}

void close_fd(int& fd) {
    if (fd >= 0) {
        ::close(fd);
        fd = -1;
    }
}

int poll_budget(Clock::time_point deadline) {
    const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - Clock::now());
    const auto step = std::min(left, SubprocessEvaluator::kPollInterval);
    return static_cast<int>(std::max<std::chrono::milliseconds::rep>(step.count(), 0));
}

std::string describe_status(int status) {
    if (WIFEXITED(status)) return "exit status " + std::to_string(WEXITSTATUS(status));
    if (WIFSIGNALED(status)) return "killed by signal " + std::to_string(WTERMSIG(status));
    return "abnormal termination";
}

}  // namespace

struct SubprocessEvaluator::Child {
    pid_t pid = -1;
    int to_child = -1;
    int from_child = -1;
    std::string buffer;

    Child() = default;
    Child(const Child&) = delete;
    Child& operator=(const Child&) = delete;
    ~Child() { kill_and_reap(); }

    static std::unique_ptr<Child> spawn(const SubprocessInvocation& inv) {
        ignore_sigpipe();
        std::vector<std::string> argv_store;
        argv_store.push_back(inv.command);
        argv_store.insert(argv_store.end(), inv.args.begin(), inv.args.end());
        std::vector<char*> argv;
        for (auto& a : argv_store) argv.push_back(a.data());
        argv.push_back(nullptr);

        int in_pipe[2];
        int out_pipe[2];
        if (::pipe2(in_pipe, O_CLOEXEC) != 0) throw Error("pipe: " + std::string(std::strerror(errno)));
        if (::pipe2(out_pipe, O_CLOEXEC) != 0) {
            ::close(in_pipe[0]);
            ::close(in_pipe[1]);
            throw Error("pipe: " + std::string(std::strerror(errno)));
        }
        const pid_t pid = ::fork();
        if (pid < 0) {
            for (int fd : {in_pipe[0], in_pipe[1], out_pipe[0], out_pipe[1]}) ::close(fd);
            throw Error("fork: " + std::string(std::strerror(errno)));
        }
        if (pid == 0) {
            ::dup2(in_pipe[0], STDIN_FILENO);
            ::dup2(out_pipe[1], STDOUT_FILENO);
            ::execvp(argv[0], argv.data());
            ::_exit(127);
        }
        ::close(in_pipe[0]);
        ::close(out_pipe[1]);
        auto child = std::make_unique<Child>();
        child->pid = pid;
        child->to_child = in_pipe[1];
        child->from_child = out_pipe[0];
        ::fcntl(child->to_child, F_SETFL, O_NONBLOCK);
        ::fcntl(child->from_child, F_SETFL, O_NONBLOCK);
        return child;
    }

    void kill_and_reap() {
        close_fd(to_child);
        close_fd(from_child);
        if (pid > 0) {
            ::kill(pid, SIGKILL);
            int status = 0;
            ::waitpid(pid, &status, 0);
            pid = -1;
        }
    }

    /// Waits for exit until `deadline`; returns the wait status or nullopt.
    std::optional<int> wait_exit(Clock::time_point deadline) {
        while (true) {
            int status = 0;
            const pid_t r = ::waitpid(pid, &status, WNOHANG);
            if (r == pid) {
                pid = -1;
                return status;
            }
            if (r < 0 && errno != EINTR) {
                pid = -1;
                return std::nullopt;
            }
            if (Clock::now() >= deadline) return std::nullopt;
            std::this_thread::sleep_for(std::chrono::milliseconds(1));
        }
    }

    enum class Pump { Complete, Eof, Timeout };

    /// Writes `request` and reads stdout until `complete()` holds, EOF, or
    /// the deadline passes.
    template <typename Complete>
    Pump pump(std::string_view request, bool close_after_write, Clock::time_point deadline,
              Complete complete) {
        std::size_t written = 0;
        if (request.empty() && close_after_write) close_fd(to_child);
        char chunk[65536];
        while (true) {
            if (complete()) return Pump::Complete;
            if (Clock::now() >= deadline) return Pump::Timeout;
            pollfd fds[2];
            nfds_t nfds = 0;
            fds[nfds++] = pollfd{from_child, POLLIN, 0};
            const bool writing = to_child >= 0 && written < request.size();
            if (writing) fds[nfds++] = pollfd{to_child, POLLOUT, 0};
            const int rc = ::poll(fds, nfds, poll_budget(deadline));
            if (rc < 0) {
                if (errno == EINTR) continue;
                return Pump::Eof;
            }
            if (writing && (fds[1].revents & (POLLOUT | POLLERR | POLLHUP))) {
                const ssize_t w = ::write(to_child, request.data() + written, request.size() - written);
                if (w > 0) {
                    written += static_cast<std::size_t>(w);
                } else if (w < 0 && errno != EAGAIN && errno != EINTR) {
                    // Child stopped reading; whatever it writes is still collected.
                    close_fd(to_child);
                }
                if (written == request.size() && close_after_write) close_fd(to_child);
            }
            if (fds[0].revents & (POLLIN | POLLHUP | POLLERR)) {
                const ssize_t r = ::read(from_child, chunk, sizeof chunk);
                if (r > 0) {
                    buffer.append(chunk, static_cast<std::size_t>(r));
                } else if (r == 0) {
                    return complete() ? Pump::Complete : Pump::Eof;
                } else if (errno != EAGAIN && errno != EINTR) {
                    return Pump::Eof;
                }
            }
        }
    }
};

SubprocessEvaluator::SubprocessEvaluator(std::size_t n_inputs, std::size_t n_outputs,
                                         SubprocessInvocation invocation,
                                         std::chrono::milliseconds timeout, std::size_t workers)
    : Evaluator(n_inputs, n_outputs),
      invocation_(std::move(invocation)),
      timeout_(timeout),
      workers_(std::max<std::size_t>(workers, 1)) {}

SubprocessEvaluator::~SubprocessEvaluator() = default;

std::size_t SubprocessEvaluator::parallelism() const {
    return invocation_.mode == ProcessMode::PerCall ? workers_ : 1;
}

EvalResult SubprocessEvaluator::check_outputs(wire::Response response) const {
    if (response.status == wire::Status::DomainError) {
        return EvalFailure{FailureKind::RaisedError, "black box reported a domain error"};
    }
    return std::move(response.values);
}

EvalResult SubprocessEvaluator::run_per_call(std::span<const double> x) const {
    const auto deadline = Clock::now() + timeout_;
    std::unique_ptr<Child> child;
    try {
        child = Child::spawn(invocation_);
    } catch (const Error& e) {
        return EvalFailure{FailureKind::RaisedError, e.what()};
    }
    const std::string request = wire::encode_request(x, invocation_.format);
    // Per-call children answer once and exit, so read to EOF.
    const auto pumped = child->pump(request, true, deadline, [] { return false; });
    if (pumped == Child::Pump::Timeout) {
        child->kill_and_reap();
        return EvalFailure{FailureKind::Timeout, "no response within " + std::to_string(timeout_.count()) + " ms"};
    }
    close_fd(child->from_child);
    const auto status = child->wait_exit(deadline);
    if (!status) {
        child->kill_and_reap();
        return EvalFailure{FailureKind::Timeout, "process did not exit within the time budget"};
    }
    if (!WIFEXITED(*status) || WEXITSTATUS(*status) != 0) {
        return EvalFailure{FailureKind::RaisedError, describe_status(*status)};
    }
    try {
        std::size_t consumed = 0;
        auto response = wire::try_parse_response(child->buffer, invocation_.format, consumed);
        if (!response) return EvalFailure{FailureKind::ProtocolError, "truncated response frame"};
        if (consumed != child->buffer.size()) {
            return EvalFailure{FailureKind::ProtocolError, "trailing bytes after response frame"};
        }
        return check_outputs(std::move(*response));
    } catch (const WireError& e) {
        return EvalFailure{FailureKind::ProtocolError, e.what()};
    }
}

EvalResult SubprocessEvaluator::run_persistent(std::span<const double> x) {
    const auto deadline = Clock::now() + timeout_;
    if (!persistent_) {
        try {
            persistent_ = Child::spawn(invocation_);
        } catch (const Error& e) {
            return EvalFailure{FailureKind::RaisedError, e.what()};
        }
    }
    Child& child = *persistent_;
    const std::string request = wire::encode_request(x, invocation_.format);
    std::optional<wire::Response> response;
    std::string parse_error;
    auto complete = [&] {
        if (child.buffer.empty() || !parse_error.empty()) return !parse_error.empty();
        try {
            std::size_t consumed = 0;
            response = wire::try_parse_response(child.buffer, invocation_.format, consumed);
            if (response) child.buffer.erase(0, consumed);
        } catch (const WireError& e) {
            parse_error = e.what();
        }
        return response.has_value() || !parse_error.empty();
    };
    const auto pumped = child.pump(request, false, deadline, complete);
    if (pumped == Child::Pump::Complete && !parse_error.empty()) {
        persistent_.reset();
        return EvalFailure{FailureKind::ProtocolError, parse_error};
    }
    if (pumped == Child::Pump::Complete) return check_outputs(std::move(*response));
    if (pumped == Child::Pump::Timeout) {
        persistent_.reset();
        return EvalFailure{FailureKind::Timeout, "no response within " + std::to_string(timeout_.count()) + " ms"};
    }
    // EOF before a full frame: the process ended.
    close_fd(child.to_child);
    const auto status = child.wait_exit(deadline);
    EvalResult failure = EvalFailure{FailureKind::ProtocolError, "process closed its output mid-session"};
    if (status && (!WIFEXITED(*status) || WEXITSTATUS(*status) != 0)) {
        failure = EvalFailure{FailureKind::RaisedError, describe_status(*status)};
    }
    persistent_.reset();
    return failure;
}

EvalResult SubprocessEvaluator::do_evaluate(std::span<const double> x) {
    if (invocation_.mode == ProcessMode::Persistent) return run_persistent(x);
    return run_per_call(x);
}

std::vector<EvalResult> SubprocessEvaluator::do_evaluate_batch(const std::vector<std::vector<double>>& xs) {
    if (invocation_.mode == ProcessMode::Persistent || workers_ == 1 || xs.size() < 2) {
        return Evaluator::do_evaluate_batch(xs);
    }
    std::vector<std::optional<EvalResult>> slots(xs.size());
    std::atomic<std::size_t> next{0};
    auto work = [&] {
        for (std::size_t k = next++; k < xs.size(); k = next++) slots[k] = run_per_call(xs[k]);
    };
    std::vector<std::thread> pool;
    const std::size_t n_threads = std::min(workers_, xs.size());
    for (std::size_t t = 0; t < n_threads; ++t) pool.emplace_back(work);
    for (auto& t : pool) t.join();
    std::vector<EvalResult> out;
    out.reserve(xs.size());
    for (auto& s : slots) out.push_back(std::move(*s));
    return out;
}

}  // namespace nanprop
