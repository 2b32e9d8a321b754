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

#ifndef AFP_TESTS_SUPPORT_HPP_
#define AFP_TESTS_SUPPORT_HPP_

#include <bit>
#include <cmath>
#include <cstring>
#include <cstdint>
#include <filesystem>
#include <numbers>
#include <string>
#include <vector>

#include <unistd.h>

#include <Eigen/Core>

#include "afp/fingerprint.hpp"
#include "afp/rng.hpp"
#include "afp/types.hpp"

namespace afp::test {

inline Waveform sine(double hz, double seconds, int rate, double amp = 1.0) {
  const auto n = static_cast<Eigen::Index>(std::llround(seconds * rate));
  Waveform w{Eigen::VectorXf(n), rate};
  for (Eigen::Index i = 0; i < n; ++i) {
    w.samples[i] = static_cast<float>(amp * std::sin(2.0 * std::numbers::pi * hz * static_cast<double>(i) / rate));
  }
  return w;
}

inline Waveform white(std::uint64_t seed, Eigen::Index n, int rate, double amp = 0.5) {
  Rng rng(seed);
  Waveform w{Eigen::VectorXf(n), rate};
  for (Eigen::Index i = 0; i < n; ++i) w.samples[i] = static_cast<float>(amp * (2.0 * rng.unit() - 1.0));
  return w;
}

inline Spectrogram random_spectrogram(Rng& rng, Eigen::Index bins, Eigen::Index frames, Scale scale = Scale::kLinear) {
  Spectrogram s;
  s.values.resize(bins, frames);
  for (Eigen::Index i = 0; i < s.values.size(); ++i) s.values.data()[i] = static_cast<float>(rng.unit() * 10.0);
  s.scale = scale;
  return s;
}

/// Finite, non-negative float drawn over the whole bit range, including zero,
/// subnormals and very large values.
inline float random_magnitude(Rng& rng) {
  switch (rng.below(8)) {
    case 0: return 0.0f;
    case 1: return std::bit_cast<float>(static_cast<std::uint32_t>(1 + rng.below(0x007FFFFF)));
    case 2: return std::bit_cast<float>(static_cast<std::uint32_t>(rng.below(0x7F800000)));
    default: return static_cast<float>(rng.unit() * 100.0);
  }
}

inline Spectrogram random_spec1(Rng& rng) {
  Spectrogram s;
  s.values.resize(static_cast<Eigen::Index>(rng.below(300)), static_cast<Eigen::Index>(rng.below(60)));
  for (Eigen::Index i = 0; i < s.values.size(); ++i) s.values.data()[i] = random_magnitude(rng);
  return s;
}

/// Bitwise equality of two float matrices.
inline bool same_bits(const Eigen::MatrixXf& a, const Eigen::MatrixXf& b) {
  return a.rows() == b.rows() && a.cols() == b.cols() &&
         std::memcmp(a.data(), b.data(), static_cast<std::size_t>(a.size()) * sizeof(float)) == 0;
}

inline FingerprintIndex random_index(Rng& rng) {
  StftConfig cfg;
  cfg.frame_size = 1 << (6 + rng.below(7));
  cfg.hop_size = 1 + static_cast<int>(rng.below(cfg.frame_size));
  cfg.target_rate = 1 + static_cast<int>(rng.below(96000));
  const auto profile = static_cast<PeakProfile>(rng.below(2));
  std::vector<TrackInfo> tracks;
  std::vector<std::uint32_t> ids;
  const auto n_tracks = rng.below(12);
  for (std::uint64_t i = 0; i < n_tracks; ++i) {
    const auto id = static_cast<std::uint32_t>(i * 1000 + rng.below(1000));
    std::string name;
    const auto len = rng.below(20);
    for (std::uint64_t c = 0; c < len; ++c) name.push_back(static_cast<char>(rng.below(256)));
    tracks.push_back({id, name, static_cast<std::uint32_t>(rng.next())});
    ids.push_back(id);
  }
  std::vector<HashEntry> entries;
  if (!ids.empty()) {
    const auto n_entries = rng.below(2000);
    for (std::uint64_t i = 0; i < n_entries; ++i) {
      entries.push_back({static_cast<std::uint32_t>(rng.next()), ids[rng.below(ids.size())],
                         static_cast<std::uint32_t>(rng.next())});
    }
  }
  return FingerprintIndex(cfg, profile, std::move(tracks), std::move(entries));
}

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir() {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("afp-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

}  // namespace afp::test

#endif  // AFP_TESTS_SUPPORT_HPP_
