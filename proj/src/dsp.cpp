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

#include "afp/dsp.hpp"

#include <algorithm>
#include <complex>
#include <numbers>
#include <numeric>
#include <vector>

#include <unsupported/Eigen/FFT>

namespace afp {

namespace {

constexpr int kKernelTapsAtLowRate = 64;
constexpr double kKaiserBeta = 8.6;
constexpr double kRolloff = 0.93;
constexpr std::int64_t kMaxTabledPhases = 4096;

double sinc(double x) {
  if (std::abs(x) < 1e-12) return 1.0;
  const double px = std::numbers::pi * x;
  return std::sin(px) / px;
}

double kaiser(double x) {
  // x in [-1, 1]
  if (std::abs(x) >= 1.0) return 0.0;
  return std::cyl_bessel_i(0.0, kKaiserBeta * std::sqrt(1.0 - x * x)) /
         std::cyl_bessel_i(0.0, kKaiserBeta);
}

// Interpolation kernel for one fractional phase, normalised to unit DC gain.
void fill_phase(std::vector<double>& taps, int half_taps, double frac, double cutoff,
                double half_width) {
  double sum = 0.0;
  for (int j = 0; j < 2 * half_taps; ++j) {
    const double x = static_cast<double>(j - half_taps + 1) - frac;
    const double v = cutoff * sinc(cutoff * x) * kaiser(x / half_width);
    taps[j] = v;
    sum += v;
  }
  if (sum != 0.0) {
    for (double& t : taps) t /= sum;
  }
}

struct Biquad1 {
  double b0, b1, a1;
};

Waveform run_first_order(const Waveform& w, const Biquad1& c) {
  Waveform out(Waveform::Vector(w.size()), w.sample_rate);
  double x1 = 0.0, y1 = 0.0;
  for (Eigen::Index n = 0; n < w.size(); ++n) {
    const double x = w.samples[n];
    const double y = c.b0 * x + c.b1 * x1 - c.a1 * y1;
    out.samples[n] = static_cast<float>(y);
    x1 = x;
    y1 = y;
  }
  return out;
}

double prewarped(const Waveform& w, double fc) {
  validate(w);
  if (!(fc > 0.0) || !(fc < w.sample_rate / 2.0)) {
    throw InvalidArgument("filter cutoff " + std::to_string(fc) +
                          " Hz outside (0, sample_rate/2)");
  }
  return std::tan(std::numbers::pi * fc / w.sample_rate);
}

}  // namespace

void StftConfig::validate() const {
  if (frame_size <= 0 || (frame_size & (frame_size - 1)) != 0) {
    throw InvalidArgument("frame_size must be a positive power of two");
  }
  if (hop_size <= 0 || hop_size > frame_size) {
    throw InvalidArgument("hop_size must satisfy 0 < hop_size <= frame_size");
  }
  if (target_rate <= 0) throw InvalidArgument("target_rate must be positive");
}

void validate(const Waveform& w) {
  if (w.sample_rate <= 0) throw InvalidArgument("sample_rate must be positive");
  if (!w.samples.allFinite()) throw InvalidArgument("waveform contains non-finite samples");
}

Waveform downmix(const Eigen::MatrixXf& channels, int sample_rate) {
  if (channels.rows() == 0) throw InvalidArgument("downmix of zero channels");
  Waveform::Vector mono = channels.colwise().mean().transpose();
  return Waveform(std::move(mono), sample_rate);
}

Waveform resample(const Waveform& w, int target_rate) {
  if (target_rate <= 0) throw InvalidArgument("resample target rate must be positive");
  validate(w);
  if (target_rate == w.sample_rate) return w;

  const std::int64_t g = std::gcd(w.sample_rate, target_rate);
  const std::int64_t up = target_rate / g;
  const std::int64_t down = w.sample_rate / g;
  const double ratio = std::min(1.0, static_cast<double>(up) / static_cast<double>(down));
  const double cutoff = kRolloff * ratio;
  const double half_width = (kKernelTapsAtLowRate / 2) / ratio;
  const int half_taps = static_cast<int>(std::ceil(half_width));
  const int n_taps = 2 * half_taps;

  const std::int64_t in_len = w.size();
  const auto out_len = static_cast<std::int64_t>(
      std::llround(static_cast<double>(in_len) * static_cast<double>(up) / static_cast<double>(down)));

  const bool tabled = up <= kMaxTabledPhases;
  std::vector<std::vector<double>> table;
  if (tabled) {
    table.assign(static_cast<std::size_t>(up), std::vector<double>(n_taps));
    for (std::int64_t p = 0; p < up; ++p) {
      fill_phase(table[p], half_taps, static_cast<double>(p) / static_cast<double>(up), cutoff,
                 half_width);
    }
  }

  Waveform out(Waveform::Vector(out_len), target_rate);
  std::vector<double> scratch(n_taps);
  for (std::int64_t n = 0; n < out_len; ++n) {
    const std::int64_t pos = n * down;
    const std::int64_t base = pos / up;
    const std::int64_t phase = pos % up;
    const std::vector<double>* taps = nullptr;
    if (tabled) {
      taps = &table[phase];
    } else {
      fill_phase(scratch, half_taps, static_cast<double>(phase) / static_cast<double>(up), cutoff,
                 half_width);
      taps = &scratch;
    }
    const std::int64_t first = base - half_taps + 1;
    const int j0 = static_cast<int>(std::max<std::int64_t>(0, -first));
    const int j1 = static_cast<int>(std::min<std::int64_t>(n_taps, in_len - first));
    double acc = 0.0;
    for (int j = j0; j < j1; ++j) acc += (*taps)[j] * w.samples[first + j];
    out.samples[n] = static_cast<float>(acc);
  }
  return out;
}

Eigen::VectorXf hann_window(int n) {
  Eigen::VectorXf win(n);
  for (int i = 0; i < n; ++i) {
    win[i] = static_cast<float>(0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * i / n));
  }
  return win;
}

std::int64_t stft_frame_count(std::int64_t len, int frame_size, int hop_size) {
  if (len < frame_size) return 0;
  return (len - frame_size) / hop_size + 1;
}

Spectrogram stft(const Waveform& w, const StftConfig& cfg) {
  cfg.validate();
  validate(w);
  if (w.size() < cfg.frame_size) {
    throw InvalidArgument("input of " + std::to_string(w.size()) +
                          " samples is shorter than one frame (" +
                          std::to_string(cfg.frame_size) + ")");
  }
  const std::int64_t n_frames = stft_frame_count(w.size(), cfg.frame_size, cfg.hop_size);
  const int n_bins = cfg.n_bins();
  const Eigen::VectorXf win = hann_window(cfg.frame_size);

  Spectrogram s;
  s.values.resize(n_bins, n_frames);
  s.scale = Scale::kLinear;
  s.bin_hz = static_cast<double>(w.sample_rate) / cfg.frame_size;
  s.hop_seconds = static_cast<double>(cfg.hop_size) / w.sample_rate;

  Eigen::FFT<float> fft;
  fft.SetFlag(Eigen::FFT<float>::HalfSpectrum);
  std::vector<float> frame(cfg.frame_size);
  std::vector<std::complex<float>> spectrum;
  for (std::int64_t t = 0; t < n_frames; ++t) {
    const auto seg = w.samples.segment(t * cfg.hop_size, cfg.frame_size);
    for (int i = 0; i < cfg.frame_size; ++i) frame[i] = seg[i] * win[i];
    fft.fwd(spectrum, frame);
    for (int k = 0; k < n_bins; ++k) s.values(k, t) = std::abs(spectrum[k]);
  }
  return s;
}

Spectrogram to_db(const Spectrogram& s, float floor_db) {
  if (s.scale != Scale::kLinear) throw InvalidArgument("to_db expects a linear spectrogram");
  Spectrogram out = s;
  out.scale = Scale::kDb;
  out.values = s.values.unaryExpr([floor_db](float m) {
    return std::max(20.0f * std::log10(m + kDbEpsilon), floor_db);
  });
  return out;
}

Waveform first_order_highpass(const Waveform& w, double fc) {
  const double k = prewarped(w, fc);
  const double b0 = 1.0 / (1.0 + k);
  return run_first_order(w, {b0, -b0, (k - 1.0) / (k + 1.0)});
}

Waveform first_order_lowpass(const Waveform& w, double fc) {
  const double k = prewarped(w, fc);
  const double b0 = k / (1.0 + k);
  return run_first_order(w, {b0, b0, (k - 1.0) / (k + 1.0)});
}

Waveform convolve(const Waveform& w, const Waveform& ir, LevelMode level) {
  validate(w);
  if (ir.empty()) throw InvalidArgument("empty impulse response");
  if (!ir.samples.allFinite()) throw InvalidArgument("impulse response contains non-finite samples");
  if (ir.samples.cwiseAbs().maxCoeff() == 0.0f) {
    throw InvalidArgument("impulse response is all zeros");
  }
  if (ir.sample_rate != w.sample_rate) {
    throw InvalidArgument("impulse response rate " + std::to_string(ir.sample_rate) +
                          " differs from signal rate " + std::to_string(w.sample_rate));
  }
  const Eigen::Index n = w.size();
  const Eigen::Index m = std::min(ir.size(), std::max<Eigen::Index>(n, 1));
  Waveform out(Waveform::Vector::Zero(n), w.sample_rate);
  if (n == 0) return out;

  if (static_cast<double>(n) * static_cast<double>(m) <= 4.0e6) {
    for (Eigen::Index i = 0; i < n; ++i) {
      double acc = 0.0;
      const Eigen::Index kmax = std::min(m - 1, i);
      for (Eigen::Index k = 0; k <= kmax; ++k) acc += static_cast<double>(ir.samples[k]) * w.samples[i - k];
      out.samples[i] = static_cast<float>(acc);
    }
  } else {
    std::size_t nfft = 1;
    while (nfft < static_cast<std::size_t>(n + m - 1)) nfft <<= 1;
    std::vector<double> a(nfft, 0.0), b(nfft, 0.0);
    for (Eigen::Index i = 0; i < n; ++i) a[i] = w.samples[i];
    for (Eigen::Index i = 0; i < m; ++i) b[i] = ir.samples[i];
    Eigen::FFT<double> fft;
    fft.SetFlag(Eigen::FFT<double>::HalfSpectrum);
    std::vector<std::complex<double>> fa, fb;
    fft.fwd(fa, a);
    fft.fwd(fb, b);
    for (std::size_t k = 0; k < fa.size(); ++k) fa[k] *= fb[k];
    std::vector<double> y;
    fft.inv(y, fa, nfft);
    for (Eigen::Index i = 0; i < n; ++i) out.samples[i] = static_cast<float>(y[i]);
  }

  if (level == LevelMode::kMatchPeak) {
    const double in_peak = peak_abs(w.samples);
    const double out_peak = peak_abs(out.samples);
    if (out_peak > 0.0 && in_peak > 0.0) {
      out.samples = (out.samples.cast<double>() * (in_peak / out_peak)).cast<float>();
    }
  }
  return out;
}

}  // namespace afp
