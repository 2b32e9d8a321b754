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

#include "afp/denoise.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "afp/dsp.hpp"
#include "afp/error.hpp"
#include "afp/io_util.hpp"

namespace afp {

namespace {

constexpr char kSpecMagic[5] = {'S', 'P', 'E', 'C', '1'};

void check_spectral_params(double alpha, double beta) {
  if (!(alpha >= 1.0) || !std::isfinite(alpha)) throw InvalidArgument("spectral subtraction alpha must be >= 1");
  if (!(beta > 0.0 && beta < 1.0)) throw InvalidArgument("spectral subtraction beta must lie in (0, 1)");
}

}  // namespace

DenoiserKind DenoiserKind::spectral(SpectralSubParams p) {
  DenoiserKind k;
  k.type = Type::kSpectralSub;
  k.spectral_sub = p;
  return k;
}

DenoiserKind DenoiserKind::external(std::vector<std::string> command) {
  DenoiserKind k;
  k.type = Type::kExternal;
  k.command = std::move(command);
  return k;
}

std::vector<std::string> split_command_line(const std::string& line) {
  std::vector<std::string> words;
  std::string cur;
  bool in_word = false;
  char quote = 0;
  for (char c : line) {
    if (quote) {
      if (c == quote) {
        quote = 0;
      } else {
        cur.push_back(c);
      }
    } else if (c == '"' || c == '\'') {
      quote = c;
      in_word = true;
    } else if (c == ' ' || c == '\t' || c == '\n') {
      if (in_word) {
        words.push_back(std::move(cur));
        cur.clear();
        in_word = false;
      }
    } else {
      cur.push_back(c);
      in_word = true;
    }
  }
  if (quote) throw InvalidArgument("unterminated quote in command line");
  if (in_word) words.push_back(std::move(cur));
  return words;
}

DenoiserKind DenoiserKind::parse(const std::string& text) {
  if (text.empty() || text == "none") return none();
  if (text == "spectral-sub" || text == "spectral_sub") return spectral();
  constexpr std::string_view prefix = "external:";
  if (text.starts_with(prefix)) {
    auto cmd = split_command_line(text.substr(prefix.size()));
    if (cmd.empty()) throw InvalidArgument("external denoiser needs a command");
    return external(std::move(cmd));
  }
  throw InvalidArgument("unknown denoiser '" + text + "' (expected none, spectral-sub or external:<cmd>)");
}

std::string DenoiserKind::describe() const {
  switch (type) {
    case Type::kNone: return "none";
    case Type::kSpectralSub: return "spectral-sub";
    case Type::kExternal: {
      std::string s = "external:";
      for (std::size_t i = 0; i < command.size(); ++i) s += (i ? " " : "") + command[i];
      return s;
    }
  }
  return "unknown";
}

void DenoiserKind::validate() const {
  if (type == Type::kSpectralSub) check_spectral_params(spectral_sub.alpha, spectral_sub.beta);
  if (type == Type::kExternal && command.empty()) throw InvalidArgument("external denoiser needs a command");
}

NoiseEstimate estimate_noise(const Spectrogram& linear, double percentile) {
  if (linear.scale != Scale::kLinear) throw InvalidArgument("estimate_noise expects a linear spectrogram");
  if (linear.n_frames() < 10) throw InvalidArgument("estimate_noise needs at least 10 frames");
  if (!(percentile >= 0.0 && percentile <= 1.0)) throw InvalidArgument("percentile must lie in [0, 1]");
  const Eigen::Index n = linear.n_frames();
  NoiseEstimate est{Eigen::VectorXf(linear.n_bins())};
  std::vector<float> row(static_cast<std::size_t>(n));
  const double pos = percentile * static_cast<double>(n - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min<std::size_t>(lo + 1, row.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  for (Eigen::Index f = 0; f < linear.n_bins(); ++f) {
    for (Eigen::Index t = 0; t < n; ++t) row[t] = linear.values(f, t);
    std::sort(row.begin(), row.end());
    est.floor[f] = static_cast<float>(row[lo] + frac * (static_cast<double>(row[hi]) - row[lo]));
  }
  return est;
}

Spectrogram spectral_subtract(const Spectrogram& linear, const NoiseEstimate& noise, double alpha, double beta) {
  if (linear.scale != Scale::kLinear) throw InvalidArgument("spectral_subtract expects a linear spectrogram");
  if (noise.floor.size() != linear.n_bins()) {
    throw InvalidArgument("noise estimate has " + std::to_string(noise.floor.size()) + " bins, spectrogram has " +
                          std::to_string(linear.n_bins()));
  }
  check_spectral_params(alpha, beta);
  const auto a = static_cast<float>(alpha);
  const auto b = static_cast<float>(beta);
  Spectrogram out = linear;
  for (Eigen::Index t = 0; t < linear.n_frames(); ++t) {
    for (Eigen::Index f = 0; f < linear.n_bins(); ++f) {
      const float s = linear.values(f, t);
      out.values(f, t) = std::max(s - a * noise.floor[f], b * s);
    }
  }
  return out;
}

std::vector<std::byte> encode_spec1(const Spectrogram& s) {
  ByteWriter out;
  out.reserve(13 + static_cast<std::size_t>(s.values.size()) * 4);
  out.bytes(kSpecMagic, sizeof(kSpecMagic));
  out.u32(static_cast<std::uint32_t>(s.n_bins()));
  out.u32(static_cast<std::uint32_t>(s.n_frames()));
  for (Eigen::Index f = 0; f < s.n_bins(); ++f) {
    for (Eigen::Index t = 0; t < s.n_frames(); ++t) out.f32(s.values(f, t));
  }
  return std::move(out).take();
}

Spectrogram decode_spec1(std::span<const std::byte> bytes) {
  ByteReader in(bytes);
  if (in.remaining() < sizeof(kSpecMagic) || in.str(sizeof(kSpecMagic)) != std::string(kSpecMagic, 5)) {
    throw IoError("bad SPEC1 magic");
  }
  const std::uint32_t n_bins = in.u32();
  const std::uint32_t n_frames = in.u32();
  const std::uint64_t expected = static_cast<std::uint64_t>(n_bins) * n_frames * 4;
  if (in.remaining() != expected) {
    throw IoError("SPEC1 payload holds " + std::to_string(in.remaining()) + " bytes, header implies " +
                  std::to_string(expected));
  }
  Spectrogram s;
  s.scale = Scale::kLinear;
  s.values.resize(n_bins, n_frames);
  for (std::uint32_t f = 0; f < n_bins; ++f) {
    for (std::uint32_t t = 0; t < n_frames; ++t) s.values(f, t) = in.f32();
  }
  return s;
}

void write_spec1(const std::filesystem::path& path, const Spectrogram& s) { write_file(path, encode_spec1(s)); }

Spectrogram read_spec1(const std::filesystem::path& path) {
  try {
    return decode_spec1(read_file(path));
  } catch (const IoError& e) {
    throw IoError(path.string() + ": " + e.what());
  }
}

Spectrogram denoise(const Spectrogram& linear, const DenoiserKind& kind) {
  kind.validate();
  switch (kind.type) {
    case DenoiserKind::Type::kNone: return linear;
    case DenoiserKind::Type::kSpectralSub:
      return spectral_subtract(linear, estimate_noise(linear), kind.spectral_sub.alpha, kind.spectral_sub.beta);
    case DenoiserKind::Type::kExternal: return run_external(linear, kind.command, kind.timeout);
  }
  throw InvalidArgument("unknown denoiser");
}

MatchResult denoised_match(const FingerprintIndex& index, const Spectrogram& linear, const DenoiserKind& kind,
                           const QueryParams& params) {
  const Spectrogram clean = denoise(linear, kind);
  const auto lms = spectrogram_landmarks(clean, params.fingerprint_params(index));
  return match_landmarks(index, lms, params.match);
}

std::string to_string(MixPath p) {
  switch (p) {
    case MixPath::kNone: return "none";
    case MixPath::kRaw: return "raw";
    case MixPath::kDenoised: return "denoised";
  }
  return "unknown";
}

MixResult combine_paths(const MatchResult& raw, const MatchResult& denoised) {
  MixResult m;
  m.raw = raw;
  m.denoised = denoised;
  if (denoised.matched() && (!raw.matched() || denoised.score > raw.score)) {
    m.result = denoised;
    m.chosen = MixPath::kDenoised;
  } else {
    m.result = raw;
    m.chosen = raw.matched() ? MixPath::kRaw : MixPath::kNone;
  }
  return m;
}

MixResult mix_query(const FingerprintIndex& index, const Waveform& query, const DenoiserKind& kind,
                    const QueryParams& params) {
  if (kind.type == DenoiserKind::Type::kNone) throw InvalidArgument("mix query needs a denoiser");
  kind.validate();
  const Spectrogram spec = analysis_spectrogram(query, index.stft_config());
  const FingerprintParams fp = params.fingerprint_params(index);
  const MatchResult raw = match_landmarks(index, spectrogram_landmarks(spec, fp), params.match);
  try {
    return combine_paths(raw, denoised_match(index, spec, kind, params));
  } catch (const ExternalDenoiserError& e) {
    MixResult m;
    m.raw = raw;
    m.result = raw;
    m.chosen = raw.matched() ? MixPath::kRaw : MixPath::kNone;
    m.denoiser_failed = true;
    m.warning = std::string("external denoiser failed, using raw path only: ") + e.what();
    return m;
  }
}

}  // namespace afp
