#include <algorithm>
#include <bit>
#include <cerrno>
#include <chrono>
#include <cstdint>
#include <cstring>
#include <limits>
#include <string>
#include <vector>

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include "idbp/denoisers.hpp"

namespace idbp {

namespace {

static_assert(std::numeric_limits<float>::is_iec559, "float32 payloads require IEEE-754 floats");

void put_f32_le(std::vector<unsigned char>& out, float v) {
  auto bits = std::bit_cast<std::uint32_t>(v);
  for (int b = 0; b < 4; ++b) {
    out.push_back(static_cast<unsigned char>(bits & 0xFFU));
    bits >>= 8;
  }
}

float get_f32_le(const unsigned char* p) {
  std::uint32_t bits = 0;
  for (int b = 3; b >= 0; --b) bits = (bits << 8) | p[b];
  return std::bit_cast<float>(bits);
}

class Fd {
 public:
  explicit Fd(int fd = -1) : fd_(fd) {}
  Fd(const Fd&) = delete;
  Fd& operator=(const Fd&) = delete;
  ~Fd() { reset(); }
  int get() const { return fd_; }
  void reset() {
    if (fd_ >= 0) ::close(fd_);
    fd_ = -1;
  }

 private:
  int fd_;
};

std::string errno_text(const char* what) {
  return std::string(what) + ": " + std::strerror(errno);
}

// Blocks SIGPIPE on the calling thread while alive so a child that exits
// early surfaces as EPIPE instead of killing the process. Any SIGPIPE raised
// in the meantime is consumed before the mask is restored.
class ScopedSigpipeBlock {
 public:
  ScopedSigpipeBlock() {
    sigemptyset(&pipe_set_);
    sigaddset(&pipe_set_, SIGPIPE);
    pthread_sigmask(SIG_BLOCK, &pipe_set_, &previous_);
  }
  ~ScopedSigpipeBlock() {
    const timespec zero{0, 0};
    while (sigtimedwait(&pipe_set_, nullptr, &zero) > 0) {
    }
    pthread_sigmask(SIG_SETMASK, &previous_, nullptr);
  }

 private:
  sigset_t pipe_set_{};
  sigset_t previous_{};
};

}  // namespace

ImageGrid external_denoise(const std::string& command, const ImageGrid& z, double sigma,
                           std::chrono::milliseconds timeout) {
  if (command.empty()) throw BridgeError("external denoiser: empty command");

  std::vector<unsigned char> request;
  const std::string header = bridge_header(z.height(), z.width(), sigma);
  request.reserve(header.size() + 4 * z.size());
  request.insert(request.end(), header.begin(), header.end());
  for (double v : z.pixels()) put_f32_le(request, static_cast<float>(v));
  const std::size_t expected = 4 * z.size();

  int in_pipe[2];
  int out_pipe[2];
  if (::pipe2(in_pipe, O_CLOEXEC) != 0) throw BridgeError(errno_text("external denoiser: pipe"));
  Fd child_stdin_r(in_pipe[0]), child_stdin_w(in_pipe[1]);
  if (::pipe2(out_pipe, O_CLOEXEC) != 0) throw BridgeError(errno_text("external denoiser: pipe"));
  Fd child_stdout_r(out_pipe[0]), child_stdout_w(out_pipe[1]);

  ScopedSigpipeBlock sigpipe_guard;
  const pid_t pid = ::fork();
  if (pid < 0) throw BridgeError(errno_text("external denoiser: fork"));
  if (pid > 0) ::setpgid(pid, pid);
  if (pid == 0) {
    ::setpgid(0, 0);
    ::dup2(child_stdin_r.get(), STDIN_FILENO);
    ::dup2(child_stdout_w.get(), STDOUT_FILENO);
    sigset_t none;
    sigemptyset(&none);
    pthread_sigmask(SIG_SETMASK, &none, nullptr);
    ::execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
    ::_exit(127);
  }
  child_stdin_r.reset();
  child_stdout_w.reset();
  ::fcntl(child_stdin_w.get(), F_SETFL, O_NONBLOCK);

  std::vector<unsigned char> response;
  response.reserve(expected);
  std::size_t written = 0;
  bool stdout_open = true;
  bool timed_out = false;
  bool write_failed = false;
  const auto deadline = std::chrono::steady_clock::now() + timeout;
  unsigned char buf[65536];

  while (stdout_open) {
    const auto now = std::chrono::steady_clock::now();
    if (now >= deadline) {
      timed_out = true;
      break;
    }
    const auto remaining =
        std::chrono::duration_cast<std::chrono::milliseconds>(deadline - now).count();
    pollfd fds[2];
    nfds_t nfds = 0;
    fds[nfds++] = {child_stdout_r.get(), POLLIN, 0};
    const bool writing = child_stdin_w.get() >= 0;
    if (writing) fds[nfds++] = {child_stdin_w.get(), POLLOUT, 0};
    const int rc = ::poll(fds, nfds, static_cast<int>(std::min<long long>(remaining, 1000)));
    if (rc < 0) {
      if (errno == EINTR) continue;
      break;
    }
    if (writing && (fds[1].revents & (POLLOUT | POLLERR | POLLHUP))) {
      const ssize_t n = ::write(child_stdin_w.get(), request.data() + written,
                                request.size() - written);
      if (n > 0) {
        written += static_cast<std::size_t>(n);
      } else if (n < 0 && errno != EAGAIN && errno != EINTR) {
        write_failed = true;
        child_stdin_w.reset();
      }
      if (written == request.size()) child_stdin_w.reset();
    }
    if (fds[0].revents & (POLLIN | POLLHUP | POLLERR)) {
      const ssize_t n = ::read(child_stdout_r.get(), buf, sizeof buf);
      if (n > 0) {
        response.insert(response.end(), buf, buf + n);
      } else if (n == 0 || (errno != EAGAIN && errno != EINTR)) {
        stdout_open = false;
      }
    }
  }
  child_stdin_w.reset();
  child_stdout_r.reset();

  if (timed_out) ::kill(-pid, SIGKILL);  // the whole pipeline, not just the shell
  int status = 0;
  while (::waitpid(pid, &status, 0) < 0 && errno == EINTR) {
  }

  auto status_text = [status] {
    if (WIFEXITED(status)) return "exit status " + std::to_string(WEXITSTATUS(status));
    if (WIFSIGNALED(status)) return "killed by signal " + std::to_string(WTERMSIG(status));
    return std::string("unknown status");
  };

  if (timed_out) {
    throw BridgeError("external denoiser '" + command + "' timed out after " +
                      std::to_string(timeout.count()) + " ms");
  }
  if (WIFEXITED(status) && WEXITSTATUS(status) == 127 && response.empty()) {
    throw BridgeError("external denoiser '" + command + "' could not be started (" +
                      status_text() + ")");
  }
  if (response.size() != expected) {
    throw BridgeError("external denoiser protocol error: expected " + std::to_string(expected) +
                      " bytes, received " + std::to_string(response.size()) + " (" +
                      status_text() + (write_failed ? ", input not fully consumed" : "") + ")");
  }
  if (!WIFEXITED(status) || WEXITSTATUS(status) != 0) {
    throw BridgeError("external denoiser '" + command + "' failed (" + status_text() + ")");
  }

  ImageGrid out(z.height(), z.width());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = static_cast<double>(get_f32_le(response.data() + 4 * i));
  }
  if (!out.all_finite()) throw BridgeError("external denoiser returned non-finite samples");
  return out;
}

}  // namespace idbp
