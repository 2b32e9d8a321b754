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

#ifndef AFP_DSP_HPP_
#define AFP_DSP_HPP_

#include <cmath>
#include <cstdint>

#include <Eigen/Core>

#include "afp/error.hpp"
#include "afp/types.hpp"

namespace afp {

/// Throws InvalidArgument on a non-positive rate or non-finite samples.
void validate(const Waveform& w);

/// Averages the rows (channels) of a channels x samples matrix.
Waveform downmix(const Eigen::MatrixXf& channels, int sample_rate);

/// Windowed-sinc polyphase resampler. The kernel spans 64 taps at the lower of
/// the two rates and cuts off below the lower Nyquist frequency. Output length
/// is round(len * target / input).
Waveform resample(const Waveform& w, int target_rate);

/// Periodic Hann window of length n.
Eigen::VectorXf hann_window(int n);

/// floor((len - frame) / hop) + 1, or 0 when len < frame.
std::int64_t stft_frame_count(std::int64_t len, int frame_size, int hop_size);

/// Linear-magnitude STFT of w at its own sample rate (no resampling).
Spectrogram stft(const Waveform& w, const StftConfig& cfg);

inline constexpr float kDefaultFloorDb = -80.0f;
inline constexpr float kDbEpsilon = 1e-10f;

Spectrogram to_db(const Spectrogram& s, float floor_db = kDefaultFloorDb);

/// Single-pole filters from the bilinear transform with prewarped cutoff, so
/// the gain at fc is exactly -3 dB.
Waveform first_order_highpass(const Waveform& w, double fc);
Waveform first_order_lowpass(const Waveform& w, double fc);

enum class LevelMode { kRaw, kMatchPeak };

/// Linear convolution truncated to len(w). With kMatchPeak the result is
/// rescaled so max|out| == max|w|.
Waveform convolve(const Waveform& w, const Waveform& ir, LevelMode level = LevelMode::kMatchPeak);

template <typename Derived>
double rms(const Eigen::MatrixBase<Derived>& x) {
  if (x.size() == 0) throw InvalidArgument("rms of an empty signal");
  return std::sqrt(x.template cast<double>().squaredNorm() / static_cast<double>(x.size()));
}

inline double rms(const Waveform& w) { return rms(w.samples); }

template <typename Derived>
double peak_abs(const Eigen::MatrixBase<Derived>& x) {
  return x.size() == 0 ? 0.0 : static_cast<double>(x.cwiseAbs().maxCoeff());
}

}  // namespace afp

#endif  // AFP_DSP_HPP_
