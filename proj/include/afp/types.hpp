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

#ifndef AFP_TYPES_HPP_
#define AFP_TYPES_HPP_

#include <cstdint>

#include <Eigen/Core>

namespace afp {

/// Mono sample sequence at a fixed sample rate.
template <typename Scalar>
struct BasicWaveform {
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  Vector samples;
  int sample_rate = 0;

  BasicWaveform() = default;
  BasicWaveform(Vector s, int rate) : samples(std::move(s)), sample_rate(rate) {}

  Eigen::Index size() const { return samples.size(); }
  bool empty() const { return samples.size() == 0; }
  double duration_seconds() const {
    return sample_rate > 0 ? static_cast<double>(samples.size()) / sample_rate : 0.0;
  }
  bool operator==(const BasicWaveform& o) const {
    return sample_rate == o.sample_rate && samples.size() == o.samples.size() &&
           samples == o.samples;
  }
};

using Waveform = BasicWaveform<float>;

enum class Scale : std::uint8_t { kLinear = 0, kDb = 1 };

enum class WindowKind : std::uint8_t { kHann = 0 };

struct StftConfig {
  int frame_size = 512;
  int hop_size = 256;
  WindowKind window = WindowKind::kHann;
  int target_rate = 11025;

  int n_bins() const { return frame_size / 2 + 1; }
  /// Throws InvalidArgument unless 0 < hop <= frame, frame is a power of two
  /// and the target rate is positive.
  void validate() const;

  bool operator==(const StftConfig&) const = default;
};

/// Magnitude matrix laid out bins x frames.
template <typename Scalar>
struct BasicSpectrogram {
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

  Matrix values;
  Scale scale = Scale::kLinear;
  double bin_hz = 0.0;
  double hop_seconds = 0.0;

  Eigen::Index n_bins() const { return values.rows(); }
  Eigen::Index n_frames() const { return values.cols(); }
  bool same_shape(const BasicSpectrogram& o) const {
    return n_bins() == o.n_bins() && n_frames() == o.n_frames();
  }
};

using Spectrogram = BasicSpectrogram<float>;

}  // namespace afp

#endif  // AFP_TYPES_HPP_
