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

#ifndef AFP_FINGERPRINT_HPP_
#define AFP_FINGERPRINT_HPP_

#include <compare>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "afp/types.hpp"

namespace afp {

struct Peak {
  std::int32_t t_frame = 0;
  std::int32_t f_bin = 0;
  float mag_db = 0.0f;

  bool operator==(const Peak&) const = default;
};

/// Two peak-picking families: a neighbourhood max filter and a decaying
/// per-bin masking envelope.
enum class PeakProfile : std::uint8_t { kMaxFilter = 0, kEnvelope = 1 };

std::string to_string(PeakProfile p);
PeakProfile parse_profile(const std::string& name);

struct PeakParams {
  /// Half-size of the max-filter neighbourhood in frames and bins.
  int neighborhood = 15;
  float threshold_db = -60.0f;
  float envelope_decay = 0.998f;
  double envelope_sigma_bins = 8.0;
  int max_peaks_per_frame = 5;
};

/// Peaks of a dB spectrogram, sorted by (t_frame, f_bin).
///
/// kMaxFilter keeps cells above `threshold_db` that are maximal over the
/// (2n+1) x (2n+1) neighbourhood. Equal values inside one neighbourhood are
/// resolved in favour of the earlier frame, then the lower bin.
///
/// kEnvelope sweeps forward through frames keeping spectral local maxima that
/// exceed a per-bin envelope; each kept peak lifts the envelope by a Gaussian
/// of its height and the envelope decays geometrically per frame. A backward
/// sweep with the same envelope drops peaks masked by later, louder ones.
/// Heights are measured above the spectrogram mean.
std::vector<Peak> extract_peaks(const Spectrogram& db, PeakProfile profile, const PeakParams& params = {});

struct Landmark {
  std::int32_t f1 = 0;
  std::int32_t delta_f = 0;
  std::int32_t delta_t = 0;
  std::int32_t t_anchor = 0;

  bool operator==(const Landmark&) const = default;
};

inline constexpr int kMaxDeltaT = 63;
inline constexpr int kMaxDeltaF = 127;
inline constexpr int kMaxAnchorBin = 511;

struct LandmarkParams {
  int fanout = 5;
  int max_delta_t = kMaxDeltaT;
  int max_delta_f = kMaxDeltaF;
};

/// Pairs each anchor with up to `fanout` later peaks in the target zone,
/// nearest in time first (lower bin first within a frame).
std::vector<Landmark> pair_landmarks(std::span<const Peak> peaks, const LandmarkParams& params = {});

struct HashFields {
  std::int32_t f1 = 0;
  std::int32_t delta_f = 0;
  std::int32_t delta_t = 0;

  bool operator==(const HashFields&) const = default;
};

/// f1 in bits 31..23, delta_f + 256 in bits 22..14, delta_t in bits 13..0.
std::uint32_t pack_hash(const Landmark& lm);
HashFields unpack_hash(std::uint32_t h);

struct HashEntry {
  std::uint32_t hash = 0;
  std::uint32_t track_id = 0;
  std::uint32_t t_anchor = 0;

  auto operator<=>(const HashEntry&) const = default;
};

struct TrackInfo {
  std::uint32_t id = 0;
  std::string name;
  std::uint32_t n_frames = 0;

  bool operator==(const TrackInfo&) const = default;
};

struct FingerprintParams {
  StftConfig stft;
  PeakProfile profile = PeakProfile::kMaxFilter;
  PeakParams peaks;
  LandmarkParams landmarks;
  float floor_db = -80.0f;
};

/// Mono waveform resampled to the target rate and transformed to a linear
/// magnitude spectrogram.
Spectrogram analysis_spectrogram(const Waveform& w, const StftConfig& cfg);

/// dB conversion, peak picking and pairing of a linear spectrogram.
std::vector<Peak> spectrogram_peaks(const Spectrogram& linear, const FingerprintParams& params);
std::vector<Landmark> spectrogram_landmarks(const Spectrogram& linear, const FingerprintParams& params);
std::vector<Landmark> fingerprint(const Waveform& w, const FingerprintParams& params);

/// Immutable hash store: one flat array sorted by (hash, track_id, t_anchor).
class FingerprintIndex {
 public:
  FingerprintIndex() = default;
  /// Sorts `entries`. Throws InvalidArgument on duplicate track ids or
  /// entries naming unknown tracks.
  FingerprintIndex(StftConfig stft, PeakProfile profile, std::vector<TrackInfo> tracks,
                   std::vector<HashEntry> entries);

  const StftConfig& stft_config() const { return stft_; }
  PeakProfile profile() const { return profile_; }
  std::span<const TrackInfo> tracks() const { return tracks_; }
  std::span<const HashEntry> entries() const { return entries_; }
  const TrackInfo* find_track(std::uint32_t id) const;

  /// All entries with the given hash.
  std::span<const HashEntry> lookup(std::uint32_t hash) const;

  bool operator==(const FingerprintIndex&) const = default;

 private:
  StftConfig stft_;
  PeakProfile profile_ = PeakProfile::kMaxFilter;
  std::vector<TrackInfo> tracks_;
  std::vector<HashEntry> entries_;
};

struct TrackSource {
  std::uint32_t id = 0;
  std::string name;
  std::function<Waveform()> load;
};

FingerprintIndex build_index(std::span<const TrackSource> tracks, const FingerprintParams& params,
                             int threads = 1);

struct MatchParams {
  std::uint32_t min_score = 4;
  /// Histogram bins within this many frames of an occupied offset count together.
  int offset_tolerance = 1;
};

struct MatchResult {
  std::optional<std::uint32_t> track_id;
  std::uint32_t score = 0;
  std::int32_t offset_frames = 0;
  std::uint32_t runner_up_score = 0;

  bool matched() const { return track_id.has_value(); }
  bool operator==(const MatchResult&) const = default;
};

/// Offset-histogram voting over hash hits. Below min_score the result has no
/// track but still reports the best score. Ties go to the smallest track id
/// and, within a track, the smallest offset.
MatchResult match_landmarks(const FingerprintIndex& index, std::span<const Landmark> query,
                            const MatchParams& params = {});

/// Parameters for the query side; the STFT configuration and peak profile
/// always come from the index.
struct QueryParams {
  PeakParams peaks;
  LandmarkParams landmarks;
  MatchParams match;
  float floor_db = -80.0f;

  FingerprintParams fingerprint_params(const FingerprintIndex& index) const;
};

MatchResult match_query(const FingerprintIndex& index, const Waveform& query, const QueryParams& params = {});

/// Binary "AFPI" format, see README for the layout.
std::vector<std::byte> serialize_index(const FingerprintIndex& index);
FingerprintIndex deserialize_index(std::span<const std::byte> bytes);
void save_index(const FingerprintIndex& index, const std::filesystem::path& path);
FingerprintIndex load_index(const std::filesystem::path& path);

}  // namespace afp

#endif  // AFP_FINGERPRINT_HPP_
