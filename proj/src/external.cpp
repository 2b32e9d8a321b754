// Copyright 2026  The afp Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

// Subprocess side of the external-denoiser protocol.

#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <csignal>
#include <cstdlib>
#include <cstring>
#include <thread>

#include "afp/denoise.hpp"
#include "afp/error.hpp"

extern char** environ;

namespace afp {

namespace {

using Kind = ExternalDenoiserError::Kind;

class TempDir {
 public:
  TempDir() {
    std::string tmpl = (std::filesystem::temp_directory_path() / "afp-denoise-XXXXXX").string();
    if (::mkdtemp(tmpl.data()) == nullptr) {
      throw ExternalDenoiserError(Kind::kLaunch, std::string("cannot create temp dir: ") + std::strerror(errno));
    }
    path_ = tmpl;
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

std::string describe_status(int status) {
  if (WIFEXITED(status)) return "exit status " + std::to_string(WEXITSTATUS(status));
  if (WIFSIGNALED(status)) return "killed by signal " + std::to_string(WTERMSIG(status));
  return "status " + std::to_string(status);
}

}  // namespace

Spectrogram run_external(const Spectrogram& linear, std::span<const std::string> command,
                         std::chrono::milliseconds timeout) {
  if (command.empty()) throw ExternalDenoiserError(Kind::kLaunch, "external denoiser command is empty");
  TempDir dir;
  const auto in_path = dir.path() / "input.spec1";
  const auto out_path = dir.path() / "output.spec1";
  write_spec1(in_path, linear);

  std::vector<std::string> args(command.begin(), command.end());
  args.push_back(in_path.string());
  args.push_back(out_path.string());
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  argv.push_back(nullptr);

  posix_spawn_file_actions_t actions;
  posix_spawn_file_actions_init(&actions);
  posix_spawn_file_actions_adddup2(&actions, STDERR_FILENO, STDOUT_FILENO);
  pid_t pid = 0;
  const int rc = ::posix_spawnp(&pid, argv[0], &actions, nullptr, argv.data(), environ);
  posix_spawn_file_actions_destroy(&actions);
  if (rc != 0) {
    throw ExternalDenoiserError(Kind::kLaunch, "cannot launch '" + args[0] + "': " + std::strerror(rc));
  }

  const auto deadline = std::chrono::steady_clock::now() + timeout;
  int status = 0;
  for (;;) {
    const pid_t r = ::waitpid(pid, &status, WNOHANG);
    if (r == pid) break;
    if (r < 0 && errno != EINTR) {
      throw ExternalDenoiserError(Kind::kLaunch, std::string("waitpid failed: ") + std::strerror(errno));
    }
    if (std::chrono::steady_clock::now() >= deadline) {
      ::kill(pid, SIGKILL);
      ::waitpid(pid, &status, 0);
      throw ExternalDenoiserError(Kind::kTimeout, "'" + args[0] + "' timed out after " +
                                                      std::to_string(timeout.count()) + " ms");
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(2));
  }
  if (!WIFEXITED(status) || WEXITSTATUS(status) != 0) {
    throw ExternalDenoiserError(Kind::kExitStatus, "'" + args[0] + "' failed with " + describe_status(status));
  }

  Spectrogram out;
  try {
    out = read_spec1(out_path);
  } catch (const IoError& e) {
    throw ExternalDenoiserError(Kind::kMalformedOutput, std::string("malformed denoiser output: ") + e.what());
  }
  if (!out.same_shape(linear)) {
    throw ExternalDenoiserError(
        Kind::kShapeMismatch, "denoiser output is " + std::to_string(out.n_bins()) + "x" +
                                  std::to_string(out.n_frames()) + ", expected " + std::to_string(linear.n_bins()) +
                                  "x" + std::to_string(linear.n_frames()));
  }
  if (!out.values.allFinite() || (out.values.size() > 0 && out.values.minCoeff() < 0.0f)) {
    throw ExternalDenoiserError(Kind::kMalformedOutput, "denoiser output holds negative or non-finite magnitudes");
  }
  out.bin_hz = linear.bin_hz;
  out.hop_seconds = linear.hop_seconds;
  return out;
}

}  // namespace afp
