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

#include "afp/augment.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <map>
#include <mutex>

#include "afp/dsp.hpp"
#include "afp/error.hpp"
#include "afp/io_util.hpp"
#include "afp/parallel.hpp"
#include "afp/rng.hpp"
#include "afp/wav.hpp"

namespace afp {

namespace {

constexpr std::array<std::string_view, 20> kSceneClasses = {
    "airport", "city_center", "mall",          "residential_area", "beach",
    "forest",  "metro",       "street_pedestrian", "bus",          "grocery_store",
    "office",  "street_traffic", "cafe",       "home",             "park",
    "train",   "car",         "library",       "public_square",    "tram"};

void check_range(const Range& r, const char* name) {
  if (!std::isfinite(r.min) || !std::isfinite(r.max) || r.min > r.max) {
    throw InvalidArgument(std::string(name) + " range must be finite with min <= max");
  }
}

nlohmann::ordered_json range_json(const Range& r) { return nlohmann::ordered_json::array({r.min, r.max}); }

Range range_from(const nlohmann::json& j, const char* key, Range fallback) {
  if (!j.contains(key)) return fallback;
  const auto& v = j.at(key);
  if (!v.is_array() || v.size() != 2) throw InvalidArgument(std::string(key) + " must be [min, max]");
  return {v[0].get<double>(), v[1].get<double>()};
}

}  // namespace

void AugmentConfig::validate() const {
  check_range(snr_db, "snr_db");
  check_range(gain_db, "gain_db");
  check_range(clip_fraction, "clip_fraction");
  check_range(mic_lowpass_hz, "mic_lowpass_hz");
  check_range(mic_highpass_hz, "mic_highpass_hz");
  check_range(speaker_highpass_hz, "speaker_highpass_hz");
  if (!(gain_probability >= 0.0 && gain_probability <= 1.0)) {
    throw InvalidArgument("gain_probability must lie in [0, 1]");
  }
  if (clip_fraction.min < 0.0 || clip_fraction.max > 1.0) {
    throw InvalidArgument("clip_fraction must lie in [0, 1]");
  }
  if (working_rate <= 0) throw InvalidArgument("working_rate must be positive");
  const double nyquist = working_rate / 2.0;
  for (const Range* r : {&mic_lowpass_hz, &mic_highpass_hz, &speaker_highpass_hz}) {
    if (r->min <= 0.0 || r->max >= nyquist) {
      throw InvalidArgument("filter cutoff ranges must lie inside (0, working_rate/2)");
    }
  }
  if (!(headroom_peak > 0.0 && headroom_peak <= 1.0)) {
    throw InvalidArgument("headroom_peak must lie in (0, 1]");
  }
}

nlohmann::ordered_json to_json(const AugmentConfig& cfg) {
  nlohmann::ordered_json j;
  j["snr_db_range"] = range_json(cfg.snr_db);
  j["gain_db_range"] = range_json(cfg.gain_db);
  j["gain_probability"] = cfg.gain_probability;
  j["clip_fraction_range"] = range_json(cfg.clip_fraction);
  j["mic_lowpass_hz_range"] = range_json(cfg.mic_lowpass_hz);
  j["mic_highpass_hz_range"] = range_json(cfg.mic_highpass_hz);
  j["speaker_highpass_hz_range"] = range_json(cfg.speaker_highpass_hz);
  j["working_rate"] = cfg.working_rate;
  j["headroom_peak"] = cfg.headroom_peak;
  return j;
}

AugmentConfig augment_config_from_json(const nlohmann::json& j) {
  AugmentConfig cfg;
  cfg.snr_db = range_from(j, "snr_db_range", cfg.snr_db);
  cfg.gain_db = range_from(j, "gain_db_range", cfg.gain_db);
  cfg.gain_probability = j.value("gain_probability", cfg.gain_probability);
  cfg.clip_fraction = range_from(j, "clip_fraction_range", cfg.clip_fraction);
  cfg.mic_lowpass_hz = range_from(j, "mic_lowpass_hz_range", cfg.mic_lowpass_hz);
  cfg.mic_highpass_hz = range_from(j, "mic_highpass_hz_range", cfg.mic_highpass_hz);
  cfg.speaker_highpass_hz = range_from(j, "speaker_highpass_hz_range", cfg.speaker_highpass_hz);
  cfg.working_rate = j.value("working_rate", cfg.working_rate);
  cfg.headroom_peak = j.value("headroom_peak", cfg.headroom_peak);
  cfg.validate();
  return cfg;
}

std::string to_string(Split s) {
  switch (s) {
    case Split::kTrain: return "train";
    case Split::kVal: return "val";
    case Split::kTest: return "test";
    case Split::kUnspecified: break;
  }
  return "";
}

Split parse_split(const std::string& s) {
  if (s.empty()) return Split::kUnspecified;
  if (s == "train") return Split::kTrain;
  if (s == "val" || s == "validation") return Split::kVal;
  if (s == "test") return Split::kTest;
  throw InvalidArgument("unknown split '" + s + "'");
}

std::span<const std::string_view> scene_classes() { return kSceneClasses; }

std::optional<std::string> canonical_scene(std::string_view label) {
  std::string out;
  for (std::size_t i = 0; i < label.size(); ++i) {
    const auto c = static_cast<unsigned char>(label[i]);
    // UTF-8 e-acute
    if (c == 0xC3 && i + 1 < label.size() &&
        (static_cast<unsigned char>(label[i + 1]) == 0xA9 ||
         static_cast<unsigned char>(label[i + 1]) == 0x89)) {
      out.push_back('e');
      ++i;
    } else if (c == ' ' || c == '-') {
      out.push_back('_');
    } else {
      out.push_back(static_cast<char>(std::tolower(c)));
    }
  }
  if (std::find(kSceneClasses.begin(), kSceneClasses.end(), out) == kSceneClasses.end()) {
    return std::nullopt;
  }
  return out;
}

struct AudioBank::Cache {
  std::mutex mu;
  std::map<std::pair<std::size_t, int>, std::shared_ptr<const Waveform>> loaded;
};

AudioBank::AudioBank() : cache_(std::make_shared<Cache>()) {}

AudioBank::AudioBank(std::vector<BankEntry> entries)
    : entries_(std::move(entries)), cache_(std::make_shared<Cache>()) {}

AudioBank AudioBank::from_manifest(const std::filesystem::path& manifest, BankKind kind) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_text_file(manifest));
  } catch (const nlohmann::json::exception& e) {
    throw IoError(manifest.string() + ": invalid JSON manifest: " + e.what());
  }
  if (!j.is_array()) throw IoError(manifest.string() + ": bank manifest must be a JSON list");
  std::vector<BankEntry> entries;
  const auto base = manifest.parent_path();
  for (const auto& item : j) {
    if (!item.is_object() || !item.contains("path")) {
      throw IoError(manifest.string() + ": every bank entry needs a path");
    }
    BankEntry e;
    e.path = item.at("path").get<std::string>();
    if (e.path.is_relative()) e.path = base / e.path;
    e.label = item.value("class", std::string());
    e.split = parse_split(item.value("split", std::string()));
    if (kind == BankKind::kNoise && !e.label.empty()) {
      auto canon = canonical_scene(e.label);
      if (!canon) {
        throw InvalidArgument(manifest.string() + ": '" + e.label + "' is not an acoustic scene class");
      }
      e.label = *canon;
    }
    entries.push_back(std::move(e));
  }
  return AudioBank(std::move(entries));
}

AudioBank AudioBank::filter(Split split) const {
  std::vector<BankEntry> kept;
  for (const auto& e : entries_) {
    if (e.split == split) kept.push_back(e);
  }
  return AudioBank(std::move(kept));
}

std::shared_ptr<const Waveform> AudioBank::load(std::size_t i, int rate) const {
  const BankEntry& e = entries_.at(i);
  const auto key = std::make_pair(i, rate);
  {
    std::lock_guard lock(cache_->mu);
    if (auto it = cache_->loaded.find(key); it != cache_->loaded.end()) return it->second;
  }
  Waveform raw = e.audio ? *e.audio : read_wav(e.path);
  if (raw.empty()) throw IoError(e.path.string() + ": bank entry contains no samples");
  auto w = std::make_shared<const Waveform>(resample(raw, rate));
  std::lock_guard lock(cache_->mu);
  return cache_->loaded.emplace(key, std::move(w)).first->second;
}

std::vector<BankEntry> balanced_bank(std::span<const BankEntry> entries, std::size_t per_class,
                                     double val_fraction, std::uint64_t seed) {
  if (!(val_fraction >= 0.0 && val_fraction <= 1.0)) {
    throw InvalidArgument("val_fraction must lie in [0, 1]");
  }
  std::map<std::string, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < entries.size(); ++i) by_class[entries[i].label].push_back(i);

  std::vector<BankEntry> out;
  std::uint64_t stream = 0;
  for (auto& [label, idx] : by_class) {
    Rng rng(Rng::derive(seed, stream++));
    for (std::size_t i = idx.size(); i > 1; --i) std::swap(idx[i - 1], idx[rng.below(i)]);
    const std::size_t take = std::min(per_class, idx.size());
    const auto n_val = static_cast<std::size_t>(std::llround(val_fraction * static_cast<double>(take)));
    for (std::size_t k = 0; k < take; ++k) {
      BankEntry e = entries[idx[k]];
      e.split = k < take - n_val ? Split::kTrain : Split::kVal;
      out.push_back(std::move(e));
    }
  }
  return out;
}

nlohmann::ordered_json bank_manifest_json(std::span<const BankEntry> entries) {
  auto j = nlohmann::ordered_json::array();
  for (const auto& e : entries) {
    nlohmann::ordered_json item;
    item["path"] = e.path.string();
    item["class"] = e.label;
    item["split"] = to_string(e.split);
    j.push_back(std::move(item));
  }
  return j;
}

nlohmann::ordered_json to_json(const AugmentRecord& r) {
  nlohmann::ordered_json j;
  j["seed"] = r.seed;
  j["noise_id"] = r.noise_id;
  j["ir_id"] = r.ir_id;
  j["snr_db"] = r.snr_db;
  j["gain_db"] = r.gain_db ? nlohmann::ordered_json(*r.gain_db) : nlohmann::ordered_json(nullptr);
  j["clip_fraction"] = r.clip_fraction;
  j["lp_hz"] = r.lp_hz;
  j["hp_hz"] = r.hp_hz;
  j["speaker_hp_hz"] = r.speaker_hp_hz;
  j["noise_offset"] = r.noise_offset;
  j["rescale"] = r.rescale;
  return j;
}

AugmentRecord augment_record_from_json(const nlohmann::json& j) {
  AugmentRecord r;
  r.seed = j.at("seed").get<std::uint64_t>();
  r.noise_id = j.at("noise_id").get<std::size_t>();
  r.ir_id = j.at("ir_id").get<std::size_t>();
  r.snr_db = j.at("snr_db").get<double>();
  if (j.contains("gain_db") && !j.at("gain_db").is_null()) r.gain_db = j.at("gain_db").get<double>();
  r.clip_fraction = j.at("clip_fraction").get<double>();
  r.lp_hz = j.at("lp_hz").get<double>();
  r.hp_hz = j.at("hp_hz").get<double>();
  r.speaker_hp_hz = j.at("speaker_hp_hz").get<double>();
  r.noise_offset = j.at("noise_offset").get<std::int64_t>();
  r.rescale = j.value("rescale", 1.0);
  return r;
}

double snr_noise_scale(const Waveform& clean, const Waveform& noise, double snr_db) {
  if (!std::isfinite(snr_db)) throw InvalidArgument("snr_db must be finite");
  if (clean.sample_rate != noise.sample_rate) {
    throw InvalidArgument("clean and noise sample rates differ");
  }
  const double rc = rms(clean);
  const double rn = rms(noise);
  if (rc == 0.0) throw InvalidArgument("clean signal is silent");
  if (rn == 0.0) throw InvalidArgument("noise signal is silent");
  return (rc / rn) * std::pow(10.0, -snr_db / 20.0);
}

Waveform mix_at_snr(const Waveform& clean, const Waveform& noise, double snr_db) {
  if (clean.size() != noise.size()) throw InvalidArgument("clean and noise lengths differ");
  const double a = snr_noise_scale(clean, noise, snr_db);
  Waveform out = clean;
  out.samples = (clean.samples.cast<double>() + a * noise.samples.cast<double>()).cast<float>();
  return out;
}

Waveform clip_fraction(const Waveform& w, double fraction) {
  if (!(fraction >= 0.0 && fraction <= 1.0)) throw InvalidArgument("clip fraction must lie in [0, 1]");
  const auto n = static_cast<std::int64_t>(w.size());
  const auto k = static_cast<std::int64_t>(std::floor(fraction * static_cast<double>(n)));
  if (n == 0 || k == 0) return w;
  std::vector<float> mags(w.samples.data(), w.samples.data() + n);
  for (float& m : mags) m = std::abs(m);
  const auto nth = mags.begin() + std::max<std::int64_t>(n - 1 - k, 0);
  std::nth_element(mags.begin(), nth, mags.end());
  const float t = *nth;
  Waveform out = w;
  for (auto& x : out.samples) {
    if (std::abs(x) > t) x = std::copysign(t, x);
  }
  return out;
}

Waveform apply_gain(const Waveform& w, double gain_db) {
  if (!std::isfinite(gain_db)) throw InvalidArgument("gain must be finite");
  Waveform out = w;
  out.samples = (w.samples.cast<double>() * std::pow(10.0, gain_db / 20.0)).cast<float>();
  return out;
}

Waveform loop_crop(const Waveform& noise, std::int64_t offset, std::int64_t length) {
  if (noise.empty()) throw InvalidArgument("cannot crop an empty noise signal");
  const std::int64_t n = noise.size();
  Waveform out(Waveform::Vector(length), noise.sample_rate);
  std::int64_t src = ((offset % n) + n) % n;
  for (std::int64_t i = 0; i < length; ++i) {
    out.samples[i] = noise.samples[src];
    if (++src == n) src = 0;
  }
  return out;
}

namespace {

void check_inputs(const Waveform& clean, const AugmentConfig& cfg, const AudioBank& noise_bank,
                  const AudioBank& ir_bank) {
  cfg.validate();
  validate(clean);
  if (clean.sample_rate != cfg.working_rate) {
    throw InvalidArgument("clean audio must be at " + std::to_string(cfg.working_rate) + " Hz, got " +
                          std::to_string(clean.sample_rate));
  }
  if (clean.empty()) throw InvalidArgument("clean audio is empty");
  if (noise_bank.empty()) throw InvalidArgument("noise bank is empty");
  if (ir_bank.empty()) throw InvalidArgument("impulse-response bank is empty");
}

}  // namespace

AugmentRecord draw_record(const Waveform& clean, const AugmentConfig& cfg, const AudioBank& noise_bank,
                          const AudioBank& ir_bank, std::uint64_t seed) {
  check_inputs(clean, cfg, noise_bank, ir_bank);
  Rng rng(seed);
  AugmentRecord r;
  r.seed = seed;
  r.speaker_hp_hz = rng.uniform(cfg.speaker_highpass_hz.min, cfg.speaker_highpass_hz.max);
  r.ir_id = rng.below(ir_bank.size());
  r.noise_id = rng.below(noise_bank.size());
  r.snr_db = rng.uniform(cfg.snr_db.min, cfg.snr_db.max);
  const auto noise = noise_bank.load(r.noise_id, cfg.working_rate);
  r.noise_offset = static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(noise->size())));
  const bool apply = rng.bernoulli(cfg.gain_probability);
  const double gain = rng.uniform(cfg.gain_db.min, cfg.gain_db.max);
  if (apply) r.gain_db = gain;
  r.clip_fraction = rng.uniform(cfg.clip_fraction.min, cfg.clip_fraction.max);
  r.lp_hz = rng.uniform(cfg.mic_lowpass_hz.min, cfg.mic_lowpass_hz.max);
  r.hp_hz = rng.uniform(cfg.mic_highpass_hz.min, cfg.mic_highpass_hz.max);
  return r;
}

AugmentResult replay(const Waveform& clean, const AugmentRecord& record, const AugmentConfig& cfg,
                     const AudioBank& noise_bank, const AudioBank& ir_bank, AugmentTrace* trace) {
  check_inputs(clean, cfg, noise_bank, ir_bank);
  const int rate = cfg.working_rate;

  // loudspeaker
  Waveform x = first_order_highpass(clean, record.speaker_hp_hz);

  // room
  x = convolve(x, *ir_bank.load(record.ir_id, rate));

  // background noise, added after the room response
  const Waveform noise = loop_crop(*noise_bank.load(record.noise_id, rate), record.noise_offset, x.size());
  const double a = snr_noise_scale(x, noise, record.snr_db);
  Waveform scaled = noise;
  scaled.samples = (noise.samples.cast<double>() * a).cast<float>();
  if (trace) {
    trace->pre_mix = x;
    trace->scaled_noise = scaled;
  }
  x.samples += scaled.samples;

  // recording device
  if (record.gain_db) x = apply_gain(x, *record.gain_db);
  x = clip_fraction(x, record.clip_fraction);
  x = first_order_lowpass(x, record.lp_hz);
  x = first_order_highpass(x, record.hp_hz);

  AugmentResult out{std::move(x), record};
  out.record.rescale = 1.0;
  const double peak = peak_abs(out.audio.samples);
  if (peak > 1.0) {
    out.record.rescale = cfg.headroom_peak / peak;
    out.audio.samples = (out.audio.samples.cast<double>() * out.record.rescale).cast<float>();
  }
  return out;
}

AugmentResult augment_one(const Waveform& clean, const AugmentConfig& cfg, const AudioBank& noise_bank,
                          const AudioBank& ir_bank, std::uint64_t seed) {
  const AugmentRecord r = draw_record(clean, cfg, noise_bank, ir_bank, seed);
  return replay(clean, r, cfg, noise_bank, ir_bank);
}

std::vector<AugmentOutput> augment_batch(std::span<const AugmentSource> sources, int copies,
                                         const AugmentConfig& cfg, const AudioBank& noise_bank,
                                         const AudioBank& ir_bank, std::uint64_t master_seed,
                                         const std::filesystem::path& out_dir, int threads) {
  if (copies <= 0) throw InvalidArgument("copies must be positive");
  cfg.validate();
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw IoError(out_dir.string() + ": cannot create output directory: " + ec.message());

  const std::size_t per = static_cast<std::size_t>(copies);
  std::vector<AugmentOutput> outputs(sources.size() * per);
  parallel_for(sources.size(), threads, [&](std::size_t s) {
    const AugmentSource& src = sources[s];
    const Waveform clean = resample(src.audio ? *src.audio : read_wav(src.path), cfg.working_rate);
    for (std::size_t k = 0; k < per; ++k) {
      const std::uint64_t seed = Rng::derive(Rng::derive(master_seed, s), k);
      AugmentResult res = augment_one(clean, cfg, noise_bank, ir_bank, seed);
      const std::string base = src.stem + ".aug" + std::to_string(k);
      AugmentOutput& o = outputs[s * per + k];
      o.wav = out_dir / (base + ".wav");
      o.record = out_dir / (base + ".json");
      write_wav(o.wav, res.audio, WavEncoding::kFloat32);
      nlohmann::ordered_json j = to_json(res.record);
      j["source"] = src.path.empty() ? src.stem : src.path.string();
      write_text_file(o.record, j.dump(2) + "\n");
      o.value = std::move(res.record);
    }
  });
  return outputs;
}

}  // namespace afp
