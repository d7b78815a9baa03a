#pragma once

#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <string>

#include "darap/errors.hpp"

namespace darap {

// Line-oriented child process over stdin/stdout pipes (the transport for the
// newline-delimited JSON guidance protocol).
class LineProcess {
  public:
    explicit LineProcess(const std::string& command) {
        int to_child[2], from_child[2];
        if (::pipe(to_child) != 0 || ::pipe(from_child) != 0)
            throw protocol_error("guidance: cannot create pipes");
        pid_ = ::fork();
        if (pid_ < 0) throw protocol_error("guidance: fork failed");
        if (pid_ == 0) {
            ::dup2(to_child[0], STDIN_FILENO);
            ::dup2(from_child[1], STDOUT_FILENO);
            ::close(to_child[0]);
            ::close(to_child[1]);
            ::close(from_child[0]);
            ::close(from_child[1]);
            ::execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
            _exit(127);
        }
        ::close(to_child[0]);
        ::close(from_child[1]);
        write_fd_ = to_child[1];
        read_fd_ = from_child[0];
        ::signal(SIGPIPE, SIG_IGN);
    }

    LineProcess(const LineProcess&) = delete;
    LineProcess& operator=(const LineProcess&) = delete;

    ~LineProcess() {
        if (write_fd_ >= 0) ::close(write_fd_);
        if (read_fd_ >= 0) ::close(read_fd_);
        if (pid_ > 0) {
            int status = 0;
            if (::waitpid(pid_, &status, WNOHANG) == 0) {
                ::kill(pid_, SIGTERM);
                ::waitpid(pid_, &status, 0);
            }
        }
    }

    void write_line(const std::string& line) {
        std::string payload = line;
        payload.push_back('\n');
        size_t off = 0;
        while (off < payload.size()) {
            const ssize_t n = ::write(write_fd_, payload.data() + off, payload.size() - off);
            if (n <= 0) throw protocol_error("guidance: child closed its input");
            off += static_cast<size_t>(n);
        }
    }

    std::string read_line(double timeout_seconds) {
        for (;;) {
            const auto nl = buffer_.find('\n');
            if (nl != std::string::npos) {
                std::string line = buffer_.substr(0, nl);
                buffer_.erase(0, nl + 1);
                return line;
            }
            struct pollfd pfd {
                read_fd_, POLLIN, 0
            };
            const int pr = ::poll(&pfd, 1, static_cast<int>(timeout_seconds * 1000.0));
            if (pr == 0) throw protocol_error("guidance: timeout waiting for child response");
            if (pr < 0) throw protocol_error("guidance: poll failed");
            char chunk[4096];
            const ssize_t n = ::read(read_fd_, chunk, sizeof(chunk));
            if (n <= 0) throw protocol_error("guidance: child closed its output");
            buffer_.append(chunk, static_cast<size_t>(n));
        }
    }

  private:
    pid_t pid_ = -1;
    int write_fd_ = -1;
    int read_fd_ = -1;
    std::string buffer_;
};

}  // namespace darap
