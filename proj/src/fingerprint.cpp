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

#include "afp/fingerprint.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <utility>

#include "afp/dsp.hpp"
#include "afp/error.hpp"
#include "afp/parallel.hpp"

namespace afp {

std::string to_string(PeakProfile p) {
  switch (p) {
    case PeakProfile::kMaxFilter: return "maxfilter";
    case PeakProfile::kEnvelope: return "envelope";
  }
  return "unknown";
}

PeakProfile parse_profile(const std::string& name) {
  if (name == "maxfilter") return PeakProfile::kMaxFilter;
  if (name == "envelope") return PeakProfile::kEnvelope;
  throw InvalidArgument("unknown peak profile '" + name + "' (expected maxfilter or envelope)");
}

namespace {

using Matrix = Spectrogram::Matrix;

// Sliding maximum along rows (dim 0) or columns (dim 1) with half-width r.
Matrix sliding_max(const Matrix& in, int r, int dim) {
  Matrix out(in.rows(), in.cols());
  const Eigen::Index n_rows = in.rows(), n_cols = in.cols();
  for (Eigen::Index c = 0; c < n_cols; ++c) {
    for (Eigen::Index i = 0; i < n_rows; ++i) {
      float m = -std::numeric_limits<float>::infinity();
      if (dim == 0) {
        const Eigen::Index lo = std::max<Eigen::Index>(0, i - r), hi = std::min<Eigen::Index>(n_rows - 1, i + r);
        for (Eigen::Index k = lo; k <= hi; ++k) m = std::max(m, in(k, c));
      } else {
        const Eigen::Index lo = std::max<Eigen::Index>(0, c - r), hi = std::min<Eigen::Index>(n_cols - 1, c + r);
        for (Eigen::Index k = lo; k <= hi; ++k) m = std::max(m, in(i, k));
      }
      out(i, c) = m;
    }
  }
  return out;
}

std::vector<Peak> maxfilter_peaks(const Spectrogram& s, const PeakParams& p) {
  const Matrix& v = s.values;
  const int r = p.neighborhood;
  const Matrix local = sliding_max(sliding_max(v, r, 0), r, 1);
  const Eigen::Index n_bins = v.rows(), n_frames = v.cols();

  std::vector<Peak> peaks;
  for (Eigen::Index t = 0; t < n_frames; ++t) {
    for (Eigen::Index f = 0; f < n_bins; ++f) {
      const float x = v(f, t);
      if (!(x > p.threshold_db) || x != local(f, t)) continue;
      // Equal values earlier in (frame, bin) order win the tie.
      bool beaten = false;
      const Eigen::Index t0 = std::max<Eigen::Index>(0, t - r);
      const Eigen::Index f0 = std::max<Eigen::Index>(0, f - r);
      const Eigen::Index f1 = std::min<Eigen::Index>(n_bins - 1, f + r);
      for (Eigen::Index tt = t0; tt <= t && !beaten; ++tt) {
        const Eigen::Index f_end = tt < t ? f1 : f - 1;
        for (Eigen::Index ff = f0; ff <= f_end; ++ff) {
          if (v(ff, tt) == x) {
            beaten = true;
            break;
          }
        }
      }
      if (!beaten) peaks.push_back({static_cast<std::int32_t>(t), static_cast<std::int32_t>(f), x});
    }
  }
  return peaks;
}

class Envelope {
 public:
  Envelope(Eigen::Index n_bins, double sigma)
      : level_(Eigen::VectorXd::Zero(n_bins)),
        reach_(static_cast<int>(std::ceil(4.0 * sigma))),
        spread_(2 * static_cast<int>(std::ceil(4.0 * sigma)) + 1) {
    for (int k = -reach_; k <= reach_; ++k) {
      spread_[k + reach_] = std::exp(-0.5 * (k / sigma) * (k / sigma));
    }
  }

  double at(Eigen::Index f) const { return level_[f]; }
  void decay(double factor) { level_ *= factor; }
  void raise(Eigen::Index f, double height) {
    const Eigen::Index lo = std::max<Eigen::Index>(0, f - reach_);
    const Eigen::Index hi = std::min<Eigen::Index>(level_.size() - 1, f + reach_);
    for (Eigen::Index k = lo; k <= hi; ++k) {
      level_[k] = std::max(level_[k], height * spread_[k - f + reach_]);
    }
  }

 private:
  Eigen::VectorXd level_;
  int reach_;
  std::vector<double> spread_;
};

std::vector<Peak> envelope_peaks(const Spectrogram& s, const PeakParams& p) {
  const Matrix& v = s.values;
  const Eigen::Index n_bins = v.rows(), n_frames = v.cols();
  if (n_bins == 0 || n_frames == 0) return {};
  const double mean = v.cast<double>().mean();
  auto height = [&](Eigen::Index f, Eigen::Index t) { return std::max(0.0, static_cast<double>(v(f, t)) - mean); };

  // Forward sweep: candidate local maxima per frame, loudest first.
  std::vector<std::vector<Eigen::Index>> kept(static_cast<std::size_t>(n_frames));
  Envelope env(n_bins, p.envelope_sigma_bins);
  std::vector<std::pair<double, Eigen::Index>> cand;
  for (Eigen::Index t = 0; t < n_frames; ++t) {
    env.decay(p.envelope_decay);
    cand.clear();
    for (Eigen::Index f = 0; f < n_bins; ++f) {
      const float x = v(f, t);
      if (!(x > p.threshold_db)) continue;
      if (f > 0 && !(x > v(f - 1, t))) continue;
      if (f + 1 < n_bins && !(x >= v(f + 1, t))) continue;
      const double h = height(f, t);
      if (h > env.at(f)) cand.emplace_back(h, f);
    }
    std::stable_sort(cand.begin(), cand.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
    auto& col = kept[static_cast<std::size_t>(t)];
    for (const auto& [h, f] : cand) {
      if (static_cast<int>(col.size()) >= p.max_peaks_per_frame) break;
      if (!(h > env.at(f))) continue;
      col.push_back(f);
      env.raise(f, h);
    }
  }

  // Backward sweep drops peaks that later, louder peaks would have masked.
  Envelope back(n_bins, p.envelope_sigma_bins);
  std::vector<Peak> peaks;
  for (Eigen::Index t = n_frames - 1; t >= 0; --t) {
    back.decay(p.envelope_decay);
    auto& col = kept[static_cast<std::size_t>(t)];
    std::stable_sort(col.begin(), col.end(), [&](Eigen::Index a, Eigen::Index b) { return height(a, t) > height(b, t); });
    for (Eigen::Index f : col) {
      const double h = height(f, t);
      if (h >= back.at(f)) {
        peaks.push_back({static_cast<std::int32_t>(t), static_cast<std::int32_t>(f), v(f, t)});
        back.raise(f, h);
      }
    }
  }
  std::sort(peaks.begin(), peaks.end(), [](const Peak& a, const Peak& b) {
    return std::tie(a.t_frame, a.f_bin) < std::tie(b.t_frame, b.f_bin);
  });
  return peaks;
}

}  // namespace

std::vector<Peak> extract_peaks(const Spectrogram& db, PeakProfile profile, const PeakParams& params) {
  if (db.scale != Scale::kDb) throw InvalidArgument("extract_peaks expects a dB spectrogram");
  if (params.neighborhood < 0) throw InvalidArgument("neighborhood must be non-negative");
  switch (profile) {
    case PeakProfile::kMaxFilter: return maxfilter_peaks(db, params);
    case PeakProfile::kEnvelope: return envelope_peaks(db, params);
  }
  throw InvalidArgument("unknown peak profile");
}

std::vector<Landmark> pair_landmarks(std::span<const Peak> peaks, const LandmarkParams& params) {
  if (params.fanout < 0) throw InvalidArgument("fanout must be non-negative");
  if (params.max_delta_t < 1 || params.max_delta_t > kMaxDeltaT || params.max_delta_f < 0 ||
      params.max_delta_f > kMaxDeltaF) {
    throw InvalidArgument("target zone exceeds the hash layout");
  }
  std::vector<Landmark> out;
  for (std::size_t i = 0; i < peaks.size(); ++i) {
    const Peak& a = peaks[i];
    int made = 0;
    for (std::size_t j = i + 1; j < peaks.size() && made < params.fanout; ++j) {
      const Peak& b = peaks[j];
      const int dt = b.t_frame - a.t_frame;
      if (dt == 0) continue;
      if (dt > params.max_delta_t) break;
      const int df = b.f_bin - a.f_bin;
      if (std::abs(df) > params.max_delta_f) continue;
      out.push_back({a.f_bin, df, dt, a.t_frame});
      ++made;
    }
  }
  return out;
}

std::uint32_t pack_hash(const Landmark& lm) {
  if (lm.f1 < 0 || lm.f1 > kMaxAnchorBin) throw InvalidArgument("anchor bin out of range");
  if (std::abs(lm.delta_f) > kMaxDeltaF) throw InvalidArgument("delta_f out of range");
  if (lm.delta_t < 1 || lm.delta_t > kMaxDeltaT) throw InvalidArgument("delta_t out of range");
  const auto f1 = static_cast<std::uint32_t>(lm.f1);
  const auto df = static_cast<std::uint32_t>(lm.delta_f + 256);
  const auto dt = static_cast<std::uint32_t>(lm.delta_t);
  return (f1 & 0x1FFu) << 23 | (df & 0x1FFu) << 14 | (dt & 0x3FFFu);
}

HashFields unpack_hash(std::uint32_t h) {
  return {static_cast<std::int32_t>(h >> 23), static_cast<std::int32_t>((h >> 14) & 0x1FFu) - 256,
          static_cast<std::int32_t>(h & 0x3FFFu)};
}

Spectrogram analysis_spectrogram(const Waveform& w, const StftConfig& cfg) {
  cfg.validate();
  return stft(resample(w, cfg.target_rate), cfg);
}

std::vector<Peak> spectrogram_peaks(const Spectrogram& linear, const FingerprintParams& params) {
  return extract_peaks(to_db(linear, params.floor_db), params.profile, params.peaks);
}

std::vector<Landmark> spectrogram_landmarks(const Spectrogram& linear, const FingerprintParams& params) {
  const auto peaks = spectrogram_peaks(linear, params);
  return pair_landmarks(peaks, params.landmarks);
}

std::vector<Landmark> fingerprint(const Waveform& w, const FingerprintParams& params) {
  return spectrogram_landmarks(analysis_spectrogram(w, params.stft), params);
}

FingerprintIndex::FingerprintIndex(StftConfig stft, PeakProfile profile, std::vector<TrackInfo> tracks,
                                   std::vector<HashEntry> entries)
    : stft_(stft), profile_(profile), tracks_(std::move(tracks)), entries_(std::move(entries)) {
  stft_.validate();
  std::sort(tracks_.begin(), tracks_.end(), [](const TrackInfo& a, const TrackInfo& b) { return a.id < b.id; });
  for (std::size_t i = 1; i < tracks_.size(); ++i) {
    if (tracks_[i].id == tracks_[i - 1].id) {
      throw InvalidArgument("duplicate track id " + std::to_string(tracks_[i].id));
    }
  }
  std::sort(entries_.begin(), entries_.end());
  std::uint32_t last = UINT32_MAX;
  for (const HashEntry& e : entries_) {
    if (e.track_id != last && find_track(e.track_id) == nullptr) {
      throw InvalidArgument("entry references unknown track " + std::to_string(e.track_id));
    }
    last = e.track_id;
  }
}

const TrackInfo* FingerprintIndex::find_track(std::uint32_t id) const {
  auto it = std::lower_bound(tracks_.begin(), tracks_.end(), id,
                             [](const TrackInfo& t, std::uint32_t v) { return t.id < v; });
  return it != tracks_.end() && it->id == id ? &*it : nullptr;
}

std::span<const HashEntry> FingerprintIndex::lookup(std::uint32_t hash) const {
  auto lo = std::lower_bound(entries_.begin(), entries_.end(), hash,
                             [](const HashEntry& e, std::uint32_t h) { return e.hash < h; });
  auto hi = std::upper_bound(lo, entries_.end(), hash,
                             [](std::uint32_t h, const HashEntry& e) { return h < e.hash; });
  return {lo, hi};
}

FingerprintIndex build_index(std::span<const TrackSource> tracks, const FingerprintParams& params, int threads) {
  params.stft.validate();
  std::set<std::uint32_t> seen;
  for (const TrackSource& t : tracks) {
    if (!seen.insert(t.id).second) throw InvalidArgument("duplicate track id " + std::to_string(t.id));
  }

  std::vector<TrackInfo> infos(tracks.size());
  std::vector<std::vector<HashEntry>> per_track(tracks.size());
  parallel_for(tracks.size(), threads, [&](std::size_t i) {
    const TrackSource& src = tracks[i];
    const Waveform audio = resample(src.load(), params.stft.target_rate);
    infos[i] = {src.id, src.name,
                static_cast<std::uint32_t>(stft_frame_count(audio.size(), params.stft.frame_size, params.stft.hop_size))};
    if (audio.size() < params.stft.frame_size) return;
    const auto lms = spectrogram_landmarks(stft(audio, params.stft), params);
    auto& out = per_track[i];
    out.reserve(lms.size());
    for (const Landmark& lm : lms) {
      out.push_back({pack_hash(lm), src.id, static_cast<std::uint32_t>(lm.t_anchor)});
    }
  });

  std::size_t total = 0;
  for (const auto& v : per_track) total += v.size();
  std::vector<HashEntry> entries;
  entries.reserve(total);
  for (auto& v : per_track) entries.insert(entries.end(), v.begin(), v.end());
  return FingerprintIndex(params.stft, params.profile, std::move(infos), std::move(entries));
}

MatchResult match_landmarks(const FingerprintIndex& index, std::span<const Landmark> query,
                            const MatchParams& params) {
  if (params.offset_tolerance < 0) throw InvalidArgument("offset_tolerance must be non-negative");
  std::vector<std::pair<std::uint32_t, std::int64_t>> hits;
  for (const Landmark& lm : query) {
    for (const HashEntry& e : index.lookup(pack_hash(lm))) {
      hits.emplace_back(e.track_id, static_cast<std::int64_t>(e.t_anchor) - lm.t_anchor);
    }
  }
  std::sort(hits.begin(), hits.end());

  const std::int64_t tol = params.offset_tolerance;
  MatchResult best;
  std::optional<std::uint32_t> best_track;
  std::vector<std::int64_t> deltas;
  std::vector<std::uint32_t> prefix;
  for (std::size_t i = 0; i < hits.size();) {
    const std::uint32_t track = hits[i].first;
    deltas.clear();
    prefix.assign(1, 0);
    std::size_t j = i;
    for (; j < hits.size() && hits[j].first == track; ++j) {
      if (deltas.empty() || deltas.back() != hits[j].second) {
        deltas.push_back(hits[j].second);
        prefix.push_back(prefix.back());
      }
      ++prefix.back();
    }
    i = j;

    // Window sum of counts over [c - tol, c + tol].
    auto window = [&](std::int64_t c) {
      const auto lo = std::lower_bound(deltas.begin(), deltas.end(), c - tol) - deltas.begin();
      const auto hi = std::upper_bound(deltas.begin(), deltas.end(), c + tol) - deltas.begin();
      return prefix[hi] - prefix[lo];
    };
    std::uint32_t track_score = 0;
    std::int64_t track_offset = 0;
    for (std::int64_t c : deltas) {
      const std::uint32_t s = window(c);
      if (s > track_score) {
        track_score = s;
        track_offset = c;
      }
    }

    if (!best_track || track_score > best.score) {
      best.runner_up_score = best_track ? std::max(best.runner_up_score, best.score) : 0;
      best.score = track_score;
      best.offset_frames = static_cast<std::int32_t>(track_offset);
      best_track = track;
    } else {
      best.runner_up_score = std::max(best.runner_up_score, track_score);
    }
  }

  if (best_track && best.score >= params.min_score) best.track_id = best_track;
  return best;
}

FingerprintParams QueryParams::fingerprint_params(const FingerprintIndex& index) const {
  FingerprintParams p;
  p.stft = index.stft_config();
  p.profile = index.profile();
  p.peaks = peaks;
  p.landmarks = landmarks;
  p.floor_db = floor_db;
  return p;
}

MatchResult match_query(const FingerprintIndex& index, const Waveform& query, const QueryParams& params) {
  const auto lms = fingerprint(query, params.fingerprint_params(index));
  return match_landmarks(index, lms, params.match);
}

}  // namespace afp
