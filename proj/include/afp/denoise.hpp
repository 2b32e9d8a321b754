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

#ifndef AFP_DENOISE_HPP_
#define AFP_DENOISE_HPP_

#include <chrono>
#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "afp/fingerprint.hpp"
#include "afp/types.hpp"

namespace afp {

struct SpectralSubParams {
  double alpha = 2.0;  // over-subtraction, >= 1
  double beta = 0.01;  // spectral floor, in (0, 1)
};

struct DenoiserKind {
  enum class Type { kNone, kSpectralSub, kExternal };

  Type type = Type::kNone;
  SpectralSubParams spectral_sub;
  std::vector<std::string> command;
  std::chrono::milliseconds timeout{30000};

  static DenoiserKind none() { return {}; }
  static DenoiserKind spectral(SpectralSubParams p = {});
  static DenoiserKind external(std::vector<std::string> command);

  /// "none", "spectral-sub" or "external:<command line>"; the command line is
  /// split on whitespace with single and double quotes grouping.
  static DenoiserKind parse(const std::string& text);

  std::string describe() const;
  void validate() const;
};

std::vector<std::string> split_command_line(const std::string& line);

/// Per-bin linear magnitude floor.
struct NoiseEstimate {
  Eigen::VectorXf floor;
};

/// Per-bin percentile (linear interpolation between order statistics) across
/// frames. Needs at least 10 frames.
NoiseEstimate estimate_noise(const Spectrogram& linear, double percentile = 0.10);

/// out = max(s - alpha * n, beta * s), computed per bin and frame.
Spectrogram spectral_subtract(const Spectrogram& linear, const NoiseEstimate& noise, double alpha = 2.0,
                              double beta = 0.01);

/// "SPEC1" container: magic, u32 n_bins, u32 n_frames, then f32 magnitudes
/// bin by bin (row-major over a bins x frames matrix), all little-endian.
std::vector<std::byte> encode_spec1(const Spectrogram& s);
/// `hop_seconds` and `bin_hz` are not stored; they come back as zero.
Spectrogram decode_spec1(std::span<const std::byte> bytes);
void write_spec1(const std::filesystem::path& path, const Spectrogram& s);
Spectrogram read_spec1(const std::filesystem::path& path);

/// Writes `s` to a temporary SPEC1 file, runs `command... <in> <out>` and
/// reads the result. The child's stdout is redirected to stderr.
Spectrogram run_external(const Spectrogram& linear, std::span<const std::string> command,
                         std::chrono::milliseconds timeout = std::chrono::milliseconds(30000));

/// Applies the denoiser to a linear spectrogram; kNone returns the input.
Spectrogram denoise(const Spectrogram& linear, const DenoiserKind& kind);

/// Linear spectrogram -> denoiser -> peaks -> landmarks -> match.
MatchResult denoised_match(const FingerprintIndex& index, const Spectrogram& linear, const DenoiserKind& kind,
                           const QueryParams& params = {});

enum class MixPath { kNone, kRaw, kDenoised };

std::string to_string(MixPath p);

struct MixResult {
  MatchResult result;
  MatchResult raw;
  std::optional<MatchResult> denoised;
  MixPath chosen = MixPath::kNone;
  bool denoiser_failed = false;
  std::string warning;
};

/// Keeps the matched candidate with more aligned hashes; equal scores pick
/// the raw path.
MixResult combine_paths(const MatchResult& raw, const MatchResult& denoised);

/// Dual query over the raw and the denoised representation. A failing external
/// denoiser leaves the raw result with `denoiser_failed` set.
MixResult mix_query(const FingerprintIndex& index, const Waveform& query, const DenoiserKind& kind,
                    const QueryParams& params = {});

}  // namespace afp

#endif  // AFP_DENOISE_HPP_
