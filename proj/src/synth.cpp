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

#include "afp/synth.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <vector>

#include <json.hpp>

#include "afp/augment.hpp"
#include "afp/dsp.hpp"
#include "afp/io_util.hpp"
#include "afp/rng.hpp"
#include "afp/wav.hpp"

namespace afp::synth {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double midi_hz(double note) { return 440.0 * std::pow(2.0, (note - 69.0) / 12.0); }

double gauss(Rng& rng) {
  // Box-Muller on the generator's own uniforms.
  const double u1 = std::max(rng.unit(), 1e-300);
  const double u2 = rng.unit();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(kTwoPi * u2);
}

// Additive tone with exponential decay, written into buf.
void add_note(std::vector<double>& buf, int rate, double start_s, double dur_s, double hz, double amp,
              std::span<const double> harmonics, double decay_s) {
  const auto begin = static_cast<std::int64_t>(start_s * rate);
  const auto len = static_cast<std::int64_t>(dur_s * rate);
  const double attack = 0.008 * rate;
  const double release = 0.02 * rate;
  for (std::size_t h = 0; h < harmonics.size(); ++h) {
    const double f = hz * static_cast<double>(h + 1);
    if (f >= 0.45 * rate) break;
    const double w = kTwoPi * f / rate;
    // Recursive oscillator: s[n] = 2 cos(w) s[n-1] - s[n-2].
    const double c = 2.0 * std::cos(w);
    double s1 = std::sin(-w), s2 = std::sin(-2.0 * w);
    for (std::int64_t n = 0; n < len && begin + n < static_cast<std::int64_t>(buf.size()); ++n) {
      const double s0 = c * s1 - s2;
      s2 = s1;
      s1 = s0;
      double env = std::exp(-static_cast<double>(n) / (decay_s * rate));
      if (n < attack) env *= n / attack;
      if (len - n < release) env *= (len - n) / release;
      buf[begin + n] += amp * harmonics[h] * env * s0;
    }
  }
}

void add_kick(std::vector<double>& buf, int rate, double start_s, double amp) {
  const auto begin = static_cast<std::int64_t>(start_s * rate);
  const auto len = static_cast<std::int64_t>(0.25 * rate);
  double phase = 0.0;
  for (std::int64_t n = 0; n < len && begin + n < static_cast<std::int64_t>(buf.size()); ++n) {
    const double t = static_cast<double>(n) / rate;
    const double f = 45.0 + 90.0 * std::exp(-t / 0.04);
    phase += kTwoPi * f / rate;
    buf[begin + n] += amp * std::exp(-t / 0.12) * std::sin(phase);
  }
}

void add_hat(std::vector<double>& buf, int rate, double start_s, double amp, double decay_s, Rng& rng) {
  const auto begin = static_cast<std::int64_t>(start_s * rate);
  const auto len = static_cast<std::int64_t>(6.0 * decay_s * rate);
  double prev = 0.0;
  for (std::int64_t n = 0; n < len && begin + n < static_cast<std::int64_t>(buf.size()); ++n) {
    const double x = gauss(rng);
    const double t = static_cast<double>(n) / rate;
    buf[begin + n] += amp * std::exp(-t / decay_s) * (x - prev);
    prev = x;
  }
}

Waveform finish(std::vector<double>& buf, int rate, double peak) {
  double m = 0.0;
  for (double v : buf) m = std::max(m, std::abs(v));
  Waveform w(Waveform::Vector(static_cast<Eigen::Index>(buf.size())), rate);
  const double g = m > 0.0 ? peak / m : 0.0;
  for (std::size_t i = 0; i < buf.size(); ++i) w.samples[static_cast<Eigen::Index>(i)] = static_cast<float>(buf[i] * g);
  return w;
}

// Two-pole resonator used to colour noise.
struct Resonator {
  double b0, a1, a2, y1 = 0.0, y2 = 0.0;
  Resonator(double hz, double bw_hz, int rate) {
    const double r = std::exp(-std::numbers::pi * bw_hz / rate);
    a1 = -2.0 * r * std::cos(kTwoPi * hz / rate);
    a2 = r * r;
    b0 = 1.0 - r;
  }
  double operator()(double x) {
    const double y = b0 * x - a1 * y1 - a2 * y2;
    y2 = y1;
    y1 = y;
    return y;
  }
};

}  // namespace

Waveform track(std::uint64_t seed, double seconds, int rate) {
  Rng rng(seed);
  const auto n = static_cast<std::size_t>(seconds * rate);
  std::vector<double> buf(n, 0.0);

  const double bpm = rng.uniform(80.0, 160.0);
  const double beat = 60.0 / bpm;
  const int root = 45 + static_cast<int>(rng.below(12));
  static constexpr std::array<int, 7> kMajor = {0, 2, 4, 5, 7, 9, 11};
  static constexpr std::array<int, 7> kMinor = {0, 2, 3, 5, 7, 8, 10};
  const auto& scale = rng.bernoulli(0.5) ? kMajor : kMinor;
  auto degree_note = [&](int degree) {
    const int octave = degree >= 0 ? degree / 7 : (degree - 6) / 7;
    const int idx = degree - octave * 7;
    return root + 12 * octave + scale[static_cast<std::size_t>(idx)];
  };

  std::array<double, 6> lead{};
  for (double& h : lead) h = rng.uniform(0.1, 1.0);
  lead[0] = 1.0;
  const std::array<double, 3> bass_h = {1.0, 0.5, 0.25};
  const std::array<double, 3> pad_h = {1.0, 0.35, 0.15};
  const double lead_decay = rng.uniform(0.15, 0.6);

  // Chord progression over bars.
  std::vector<int> progression(4);
  for (int& c : progression) c = static_cast<int>(rng.below(7));

  double t = 0.0;
  int bar = 0;
  while (t < seconds) {
    const int chord = progression[static_cast<std::size_t>(bar % 4)];
    for (int k = 0; k < 3; ++k) {
      add_note(buf, rate, t, 4 * beat, midi_hz(degree_note(chord + 2 * k) + 12), 0.12, pad_h, 2.0);
    }
    add_note(buf, rate, t, 2 * beat, midi_hz(degree_note(chord) - 12), 0.35, bass_h, 0.5);
    add_note(buf, rate, t + 2 * beat, 2 * beat, midi_hz(degree_note(chord + 4) - 12), 0.3, bass_h, 0.5);
    // Melody: random rhythm of half and whole beats.
    double mt = 0.0;
    while (mt < 4 * beat - 1e-9) {
      const double dur = rng.bernoulli(0.6) ? 0.5 * beat : beat;
      if (!rng.bernoulli(0.15)) {
        const int deg = chord + static_cast<int>(rng.below(9)) + 5;
        add_note(buf, rate, t + mt, dur, midi_hz(degree_note(deg)), rng.uniform(0.2, 0.35), lead, lead_decay);
      }
      mt += dur;
    }
    for (int b = 0; b < 4; ++b) {
      if (b % 2 == 0) add_kick(buf, rate, t + b * beat, 0.5);
      add_hat(buf, rate, t + (b + 0.5) * beat, 0.05, 0.03, rng);
      if (b % 2 == 1) add_hat(buf, rate, t + b * beat, 0.12, 0.08, rng);
    }
    t += 4 * beat;
    ++bar;
  }
  return finish(buf, rate, 0.8);
}

Waveform scene_noise(std::uint64_t seed, std::size_t scene, double seconds, int rate) {
  Rng rng(Rng::derive(seed, scene));
  const auto n = static_cast<std::size_t>(seconds * rate);
  std::vector<double> buf(n, 0.0);
  switch (scene % 5) {
    case 0: {  // babble: formant-coloured noise with syllabic modulation
      for (int talker = 0; talker < 6; ++talker) {
        Resonator f1(rng.uniform(300.0, 800.0), 120.0, rate), f2(rng.uniform(900.0, 2500.0), 200.0, rate);
        const double rate_hz = rng.uniform(3.0, 6.0), ph = rng.uniform(0.0, kTwoPi);
        for (std::size_t i = 0; i < n; ++i) {
          const double x = gauss(rng);
          const double am = std::max(0.0, std::sin(kTwoPi * rate_hz * i / rate + ph));
          buf[i] += am * (f1(x) + 0.6 * f2(x));
        }
      }
      break;
    }
    case 1: {  // traffic: leaky-integrated noise with passing vehicles
      double y = 0.0;
      const double pass_at = rng.uniform(0.2, 0.8) * seconds;
      for (std::size_t i = 0; i < n; ++i) {
        y = 0.995 * y + 0.05 * gauss(rng);
        const double tt = static_cast<double>(i) / rate;
        const double swell = 1.0 + 2.0 * std::exp(-std::pow((tt - pass_at) / 0.8, 2.0));
        buf[i] = y * swell + 0.05 * gauss(rng);
      }
      break;
    }
    case 2: {  // indoor hum: mains harmonics, pink-ish noise and beeps
      const double mains = rng.bernoulli(0.5) ? 50.0 : 60.0;
      double p = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        p = 0.98 * p + 0.2 * gauss(rng);
        double v = p;
        for (int h = 1; h <= 3; ++h) v += 0.2 / h * std::sin(kTwoPi * mains * h * i / rate);
        buf[i] = v;
      }
      const double beep_hz = rng.uniform(800.0, 3000.0);
      for (double bt = rng.uniform(0.0, 1.0); bt < seconds; bt += rng.uniform(0.7, 2.0)) {
        const std::array<double, 1> h1 = {1.0};
        add_note(buf, rate, bt, 0.15, beep_hz, 0.6, h1, 1.0);
      }
      break;
    }
    case 3: {  // outdoor: wind-like noise and bird chirps
      Resonator wind(rng.uniform(200.0, 600.0), 400.0, rate);
      for (std::size_t i = 0; i < n; ++i) {
        const double gust = 0.6 + 0.4 * std::sin(kTwoPi * 0.3 * i / rate);
        buf[i] = gust * wind(gauss(rng)) * 4.0 + 0.02 * gauss(rng);
      }
      for (double ct = rng.uniform(0.0, 0.5); ct < seconds; ct += rng.uniform(0.3, 1.2)) {
        const double f0 = rng.uniform(2000.0, 4500.0);
        const auto begin = static_cast<std::size_t>(ct * rate);
        const auto len = static_cast<std::size_t>(0.08 * rate);
        double phase = 0.0;
        for (std::size_t k = 0; k < len && begin + k < n; ++k) {
          phase += kTwoPi * (f0 + 1500.0 * static_cast<double>(k) / len) / rate;
          buf[begin + k] += 0.5 * std::sin(std::numbers::pi * k / len) * std::sin(phase);
        }
      }
      break;
    }
    default: {  // transit: rumble with periodic rail clacks
      Resonator rumble(rng.uniform(60.0, 140.0), 60.0, rate);
      for (std::size_t i = 0; i < n; ++i) buf[i] = rumble(gauss(rng)) * 8.0 + 0.1 * gauss(rng);
      const double period = rng.uniform(0.4, 1.0);
      for (double ct = 0.0; ct < seconds; ct += period) add_hat(buf, rate, ct, 1.5, 0.02, rng);
      break;
    }
  }
  return finish(buf, rate, 0.5);
}

Waveform impulse_response(std::uint64_t seed, int rate) {
  Rng rng(seed);
  const double rt60 = rng.uniform(0.2, 0.9);
  const auto n = static_cast<std::size_t>(1.1 * rt60 * rate);
  std::vector<double> h(n, 0.0);
  h[0] = 1.0;
  const int reflections = 6 + static_cast<int>(rng.below(5));
  for (int r = 0; r < reflections; ++r) {
    const auto at = static_cast<std::size_t>(rng.uniform(0.003, 0.04) * rate);
    if (at < n) h[at] += (rng.bernoulli(0.5) ? 1.0 : -1.0) * rng.uniform(0.2, 0.6);
  }
  double lp = 0.0;
  const auto tail_start = static_cast<std::size_t>(0.005 * rate);
  for (std::size_t i = tail_start; i < n; ++i) {
    const double t = static_cast<double>(i) / rate;
    lp = 0.7 * lp + 0.3 * gauss(rng);
    h[i] += 0.25 * lp * std::exp(-6.9 * t / rt60);
  }
  return finish(h, rate, 1.0);
}

CorpusPaths write_corpus(const std::filesystem::path& dir, const CorpusSpec& spec) {
  namespace fs = std::filesystem;
  std::error_code ec;
  for (const char* sub : {"tracks", "noise", "ir"}) {
    fs::create_directories(dir / sub, ec);
    if (ec) throw IoError((dir / sub).string() + ": " + ec.message());
  }

  auto index_j = nlohmann::ordered_json::array();
  auto query_j = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < spec.n_tracks; ++i) {
    char name[32];
    std::snprintf(name, sizeof(name), "track%04zu", i);
    const std::string rel = std::string("tracks/") + name + ".wav";
    write_wav(dir / rel, track(track_seed(spec, i), spec.track_seconds), WavEncoding::kPcm16);
    index_j.push_back({{"path", rel}, {"track_id", i}, {"name", name}});
    query_j.push_back({{"path", rel}, {"track_id", i}});
  }

  std::vector<BankEntry> noise;
  const auto classes = scene_classes();
  for (std::size_t c = 0; c < classes.size(); ++c) {
    for (std::size_t k = 0; k < spec.noises_per_scene; ++k) {
      const std::string rel = "noise/" + std::string(classes[c]) + "_" + std::to_string(k) + ".wav";
      write_wav(dir / rel, scene_noise(Rng::derive(spec.seed, 1000 + k), c, spec.noise_seconds), WavEncoding::kPcm16);
      noise.push_back({rel, std::string(classes[c]), Split::kTest, std::nullopt});
    }
  }
  std::vector<BankEntry> irs;
  for (std::size_t k = 0; k < spec.n_impulse_responses; ++k) {
    const std::string rel = "ir/ir" + std::to_string(k) + ".wav";
    write_wav(dir / rel, impulse_response(Rng::derive(spec.seed, 5000 + k)), WavEncoding::kFloat32);
    irs.push_back({rel, "room", Split::kUnspecified, std::nullopt});
  }

  CorpusPaths paths{dir / "index.json", dir / "queries.json", dir / "noise.json", dir / "ir.json"};
  write_text_file(paths.index_manifest, index_j.dump(2) + "\n");
  write_text_file(paths.query_manifest, query_j.dump(2) + "\n");
  write_text_file(paths.noise_manifest, bank_manifest_json(noise).dump(2) + "\n");
  write_text_file(paths.ir_manifest, bank_manifest_json(irs).dump(2) + "\n");
  return paths;
}

}  // namespace afp::synth
