#include "taxoeval/backend.hpp"

#ifdef TAXOEVAL_LOCAL_BACKEND

#include <cerrno>
#include <csignal>
#include <cstring>

#include <fcntl.h>
#include <sys/wait.h>
#include <unistd.h>

#include "taxoeval/error.hpp"

namespace taxoeval {

LocalBackend::LocalBackend(std::string command, std::string model_id, std::string mask_token)
    : descriptor_{BackendKind::local, std::move(model_id), std::move(mask_token)} {
    if (command.empty()) throw ConfigError("local backend needs a command");
    if (descriptor_.mask_token.empty()) throw ConfigError("empty mask token");
    std::signal(SIGPIPE, SIG_IGN);
    int in_pipe[2];
    int out_pipe[2];
    if (pipe(in_pipe) != 0) throw TransportError(std::string("pipe: ") + std::strerror(errno), false);
    if (pipe(out_pipe) != 0) {
        close(in_pipe[0]);
        close(in_pipe[1]);
        throw TransportError(std::string("pipe: ") + std::strerror(errno), false);
    }
    pid_ = fork();
    if (pid_ < 0) throw TransportError(std::string("fork: ") + std::strerror(errno), false);
    if (pid_ == 0) {
        dup2(in_pipe[0], STDIN_FILENO);
        dup2(out_pipe[1], STDOUT_FILENO);
        close(in_pipe[0]);
        close(in_pipe[1]);
        close(out_pipe[0]);
        close(out_pipe[1]);
        execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
        _exit(127);
    }
    close(in_pipe[0]);
    close(out_pipe[1]);
    to_child_ = in_pipe[1];
    from_child_ = out_pipe[0];
    fcntl(to_child_, F_SETFD, FD_CLOEXEC);
    fcntl(from_child_, F_SETFD, FD_CLOEXEC);
}

LocalBackend::~LocalBackend() {
    if (to_child_ >= 0) close(to_child_);
    if (from_child_ >= 0) close(from_child_);
    if (pid_ > 0) {
        int status = 0;
        waitpid(pid_, &status, 0);
    }
}

std::vector<Prediction> LocalBackend::fetch(const std::string& prompt, std::size_t top_k) {
    std::lock_guard lock(mutex_);
    if (to_child_ < 0) throw TransportError("local backend process is gone", false);
    std::string line = encode_request(descriptor_.model_id, prompt, top_k);
    line.push_back('\n');
    std::size_t written = 0;
    while (written < line.size()) {
        auto n = write(to_child_, line.data() + written, line.size() - written);
        if (n < 0) {
            if (errno == EINTR) continue;
            throw TransportError(std::string("write to local backend: ") + std::strerror(errno), false);
        }
        written += static_cast<std::size_t>(n);
    }
    while (true) {
        if (auto nl = buffer_.find('\n'); nl != std::string::npos) {
            std::string response = buffer_.substr(0, nl);
            buffer_.erase(0, nl + 1);
            return decode_predictions(response);
        }
        char chunk[4096];
        auto n = read(from_child_, chunk, sizeof chunk);
        if (n < 0) {
            if (errno == EINTR) continue;
            throw TransportError(std::string("read from local backend: ") + std::strerror(errno), false);
        }
        if (n == 0) throw TransportError("local backend closed its output", false);
        buffer_.append(chunk, static_cast<std::size_t>(n));
    }
}

}  // namespace taxoeval

#endif
