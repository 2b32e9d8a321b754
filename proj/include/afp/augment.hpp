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

#ifndef AFP_AUGMENT_HPP_
#define AFP_AUGMENT_HPP_

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "afp/types.hpp"

namespace afp {

struct Range {
  double min = 0.0;
  double max = 0.0;

  bool contains(double v) const { return v >= min && v <= max; }
  bool operator==(const Range&) const = default;
};

/// Stochastic degradation recipe. Layers always run in the order
/// speaker -> room -> background noise -> recording device, and inside the
/// device layer gain -> clipping -> low-pass -> high-pass.
struct AugmentConfig {
  Range snr_db{-10.0, 10.0};
  Range gain_db{-5.0, 5.0};
  double gain_probability = 0.3;
  Range clip_fraction{0.0, 0.01};
  Range mic_lowpass_hz{3500.0, 7000.0};
  Range mic_highpass_hz{30.0, 150.0};
  Range speaker_highpass_hz{20.0, 150.0};
  int working_rate = 44100;
  double headroom_peak = 0.999;

  void validate() const;
  bool operator==(const AugmentConfig&) const = default;
};

nlohmann::ordered_json to_json(const AugmentConfig& cfg);
AugmentConfig augment_config_from_json(const nlohmann::json& j);

enum class Split : std::uint8_t { kUnspecified, kTrain, kVal, kTest };

std::string to_string(Split s);
Split parse_split(const std::string& s);

/// The twenty acoustic scene classes accepted as background-noise labels.
std::span<const std::string_view> scene_classes();
/// Canonical scene name ("Café" -> "cafe", "City center" -> "city_center"),
/// or nullopt when the label is not one of the scene classes.
std::optional<std::string> canonical_scene(std::string_view label);

struct BankEntry {
  std::filesystem::path path;
  std::string label;
  Split split = Split::kUnspecified;
  /// Preloaded audio; when absent the file at `path` is read on first use.
  std::optional<Waveform> audio;
};

enum class BankKind { kNoise, kImpulseResponse };

/// A list of noise or impulse-response recordings. Loaded audio is cached per
/// target rate; copies share the cache and concurrent loads are safe.
class AudioBank {
 public:
  AudioBank();
  explicit AudioBank(std::vector<BankEntry> entries);

  /// JSON list of {path, class, split}; relative paths resolve against the
  /// manifest's directory. Noise banks require scene-class labels.
  static AudioBank from_manifest(const std::filesystem::path& manifest, BankKind kind);

  AudioBank filter(Split split) const;

  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  const BankEntry& entry(std::size_t i) const { return entries_.at(i); }
  std::span<const BankEntry> entries() const { return entries_; }

  /// Mono audio of entry i resampled to `rate`. Throws IoError naming the
  /// file when it cannot be read.
  std::shared_ptr<const Waveform> load(std::size_t i, int rate) const;

 private:
  struct Cache;
  std::vector<BankEntry> entries_;
  std::shared_ptr<Cache> cache_;
};

/// Balanced subset: `per_class` entries drawn per label, each class split
/// into train/val by `val_fraction`. Classes with fewer entries contribute
/// all of them.
std::vector<BankEntry> balanced_bank(std::span<const BankEntry> entries, std::size_t per_class,
                                     double val_fraction, std::uint64_t seed);

nlohmann::ordered_json bank_manifest_json(std::span<const BankEntry> entries);

/// The parameters drawn for one augmentation. Together with the inputs it
/// fully determines the output.
struct AugmentRecord {
  std::uint64_t seed = 0;
  std::size_t noise_id = 0;
  std::size_t ir_id = 0;
  double snr_db = 0.0;
  std::optional<double> gain_db;
  double clip_fraction = 0.0;
  double lp_hz = 0.0;
  double hp_hz = 0.0;
  double speaker_hp_hz = 0.0;
  std::int64_t noise_offset = 0;
  /// Applied after the full chain when the peak exceeded the headroom.
  double rescale = 1.0;

  bool operator==(const AugmentRecord&) const = default;
};

nlohmann::ordered_json to_json(const AugmentRecord& r);
AugmentRecord augment_record_from_json(const nlohmann::json& j);

/// clean + a * noise with a = (rms(clean) / rms(noise)) * 10^(-snr/20).
Waveform mix_at_snr(const Waveform& clean, const Waveform& noise, double snr_db);
double snr_noise_scale(const Waveform& clean, const Waveform& noise, double snr_db);

/// Clamps the `fraction` of samples with the largest magnitude to the
/// magnitude threshold at quantile 1 - fraction.
Waveform clip_fraction(const Waveform& w, double fraction);

Waveform apply_gain(const Waveform& w, double gain_db);

/// `noise` looped from `offset` to exactly `length` samples.
Waveform loop_crop(const Waveform& noise, std::int64_t offset, std::int64_t length);

struct AugmentResult {
  Waveform audio;
  AugmentRecord record;
};

/// Intermediate signals exposed for verification.
struct AugmentTrace {
  Waveform pre_mix;       // after speaker and room layers
  Waveform scaled_noise;  // the noise exactly as added
};

AugmentRecord draw_record(const Waveform& clean, const AugmentConfig& cfg, const AudioBank& noise_bank,
                          const AudioBank& ir_bank, std::uint64_t seed);

/// Applies the four layers with the parameters in `record`.
AugmentResult replay(const Waveform& clean, const AugmentRecord& record, const AugmentConfig& cfg,
                     const AudioBank& noise_bank, const AudioBank& ir_bank,
                     AugmentTrace* trace = nullptr);

AugmentResult augment_one(const Waveform& clean, const AugmentConfig& cfg, const AudioBank& noise_bank,
                          const AudioBank& ir_bank, std::uint64_t seed);

struct AugmentSource {
  std::string stem;
  std::filesystem::path path;
  std::optional<Waveform> audio;
};

struct AugmentOutput {
  std::filesystem::path wav;
  std::filesystem::path record;
  AugmentRecord value;
};

/// Writes <stem>.aug<k>.wav and <stem>.aug<k>.json for k in [0, copies).
/// Item seeds derive from (master_seed, source index, k) so results do not
/// depend on `threads`.
std::vector<AugmentOutput> augment_batch(std::span<const AugmentSource> sources, int copies,
                                         const AugmentConfig& cfg, const AudioBank& noise_bank,
                                         const AudioBank& ir_bank, std::uint64_t master_seed,
                                         const std::filesystem::path& out_dir, int threads);

}  // namespace afp

#endif  // AFP_AUGMENT_HPP_
