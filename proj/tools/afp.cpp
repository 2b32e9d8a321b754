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

// afp: index building, augmentation batches, single queries and benchmark
// runs. JSON goes to stdout, logs to stderr.
//
// Exit codes: 0 ok, 1 usage, 2 I/O, 3 corrupt index, 4 external denoiser.

#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "afp/augment.hpp"
#include "afp/denoise.hpp"
#include "afp/error.hpp"
#include "afp/eval.hpp"
#include "afp/fingerprint.hpp"
#include "afp/io_util.hpp"
#include "afp/parallel.hpp"
#include "afp/wav.hpp"
#include "json_config.hpp"

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

enum Exit { kOk = 0, kUsage = 1, kIo = 2, kCorrupt = 3, kDenoiser = 4 };

struct Common {
  int threads = 0;
  std::uint64_t seed = 0;
};

struct FingerprintFlags {
  int neighborhood = 15;
  float threshold_db = -60.0f;
  float envelope_decay = 0.998f;
  double envelope_sigma = 8.0;
  int max_peaks_per_frame = 5;
  int fanout = 5;
  int max_delta_t = afp::kMaxDeltaT;
  int max_delta_f = afp::kMaxDeltaF;
  unsigned min_score = 4;
  int offset_tolerance = 1;
  float floor_db = -80.0f;

  void add_to(CLI::App* app, bool with_match) {
    app->add_option("--neighborhood", neighborhood, "max-filter half size (frames and bins)")->capture_default_str();
    app->add_option("--threshold-db", threshold_db, "absolute peak threshold in dB")->capture_default_str();
    app->add_option("--envelope-decay", envelope_decay, "envelope decay per frame")->capture_default_str();
    app->add_option("--envelope-sigma", envelope_sigma, "envelope spread in bins")->capture_default_str();
    app->add_option("--max-peaks-per-frame", max_peaks_per_frame, "envelope profile cap")->capture_default_str();
    app->add_option("--fanout", fanout, "landmarks per anchor")->capture_default_str();
    app->add_option("--max-delta-t", max_delta_t, "target zone width in frames")->capture_default_str();
    app->add_option("--max-delta-f", max_delta_f, "target zone half height in bins")->capture_default_str();
    app->add_option("--floor-db", floor_db, "dB floor")->capture_default_str();
    if (with_match) {
      app->add_option("--min-score", min_score, "aligned hashes needed for a match")->capture_default_str();
      app->add_option("--offset-tolerance", offset_tolerance, "offset histogram tolerance in frames")
          ->capture_default_str();
    }
  }

  afp::QueryParams query() const {
    afp::QueryParams q;
    q.peaks = {neighborhood, threshold_db, envelope_decay, envelope_sigma, max_peaks_per_frame};
    q.landmarks = {fanout, max_delta_t, max_delta_f};
    q.match = {min_score, offset_tolerance};
    q.floor_db = floor_db;
    return q;
  }
};

struct DenoiserFlags {
  std::string denoiser = "none";
  double alpha = 2.0;
  double beta = 0.01;
  long timeout_ms = 30000;

  void add_to(CLI::App* app, const std::string& fallback) {
    denoiser = fallback;
    app->add_option("--denoiser", denoiser, "none | spectral-sub | external:\"<command>\"")->capture_default_str();
    app->add_option("--alpha", alpha, "spectral subtraction over-subtraction factor")->capture_default_str();
    app->add_option("--beta", beta, "spectral subtraction floor")->capture_default_str();
    app->add_option("--timeout-ms", timeout_ms, "external denoiser timeout")->capture_default_str();
  }

  afp::DenoiserKind kind() const {
    afp::DenoiserKind k = afp::DenoiserKind::parse(denoiser);
    k.spectral_sub = {alpha, beta};
    k.timeout = std::chrono::milliseconds(timeout_ms);
    k.validate();
    return k;
  }
};

struct AugmentFlags {
  std::vector<double> snr_db{-10.0, 10.0};
  std::vector<double> gain_db{-5.0, 5.0};
  double gain_probability = 0.3;
  std::vector<double> clip_fraction{0.0, 0.01};
  std::vector<double> mic_lowpass_hz{3500.0, 7000.0};
  std::vector<double> mic_highpass_hz{30.0, 150.0};
  std::vector<double> speaker_highpass_hz{20.0, 150.0};
  std::string noise_bank;
  std::string ir_bank;
  std::string noise_split = "all";

  void add_to(CLI::App* app, bool required) {
    auto range = [&](const char* name, std::vector<double>& v, const char* help) {
      app->add_option(name, v, help)->expected(2)->delimiter(',')->capture_default_str();
    };
    range("--snr-db-range", snr_db, "background noise SNR range (dB)");
    range("--gain-db-range", gain_db, "device gain range (dB)");
    app->add_option("--gain-probability", gain_probability, "probability of the gain layer")->capture_default_str();
    range("--clip-fraction-range", clip_fraction, "fraction of clipped samples");
    range("--mic-lowpass-hz-range", mic_lowpass_hz, "device low-pass cutoff range");
    range("--mic-highpass-hz-range", mic_highpass_hz, "device high-pass cutoff range");
    range("--speaker-highpass-hz-range", speaker_highpass_hz, "loudspeaker high-pass cutoff range");
    auto* nb = app->add_option("--noise-bank", noise_bank, "noise bank manifest (JSON)");
    auto* ib = app->add_option("--ir-bank", ir_bank, "impulse-response bank manifest (JSON)");
    if (required) {
      nb->required();
      ib->required();
    }
    app->add_option("--noise-split", noise_split, "train | val | test | all")->capture_default_str();
  }

  afp::AugmentConfig config() const {
    afp::AugmentConfig c;
    c.snr_db = {snr_db[0], snr_db[1]};
    c.gain_db = {gain_db[0], gain_db[1]};
    c.gain_probability = gain_probability;
    c.clip_fraction = {clip_fraction[0], clip_fraction[1]};
    c.mic_lowpass_hz = {mic_lowpass_hz[0], mic_lowpass_hz[1]};
    c.mic_highpass_hz = {mic_highpass_hz[0], mic_highpass_hz[1]};
    c.speaker_highpass_hz = {speaker_highpass_hz[0], speaker_highpass_hz[1]};
    c.validate();
    return c;
  }

  std::pair<afp::AudioBank, afp::AudioBank> banks() const {
    afp::AudioBank noise = afp::AudioBank::from_manifest(noise_bank, afp::BankKind::kNoise);
    if (noise_split != "all") noise = noise.filter(afp::parse_split(noise_split));
    return {noise, afp::AudioBank::from_manifest(ir_bank, afp::BankKind::kImpulseResponse)};
  }
};

void emit(const ordered_json& j) { std::cout << j.dump(2) << "\n"; }

fs::path resolve(const fs::path& base, const std::string& p) {
  fs::path path = p;
  return path.is_relative() ? base / path : path;
}

ordered_json stft_json(const afp::StftConfig& c) {
  return {{"frame_size", c.frame_size}, {"hop_size", c.hop_size}, {"window", "hann"}, {"target_rate", c.target_rate}};
}

// ---------------------------------------------------------------- index build

struct IndexBuildCmd {
  std::string manifest, out, profile = "maxfilter";
  afp::StftConfig stft;
  FingerprintFlags fp;

  void setup(CLI::App* index) {
    auto* app = index->add_subcommand("build", "fingerprint a track manifest into an index file");
    app->add_option("--manifest", manifest, "JSON list of {path, track_id, name}")->required();
    app->add_option("--out", out, "index file to write")->required();
    app->add_option("--profile", profile, "maxfilter | envelope")->capture_default_str();
    app->add_option("--frame-size", stft.frame_size)->capture_default_str();
    app->add_option("--hop-size", stft.hop_size)->capture_default_str();
    app->add_option("--target-rate", stft.target_rate)->capture_default_str();
    fp.add_to(app, false);
    app->callback([this] { selected = true; });
  }

  int run(const Common& c) const {
    const fs::path m = manifest;
    const nlohmann::json j = nlohmann::json::parse(afp::read_text_file(m), nullptr, false);
    if (j.is_discarded() || !j.is_array()) throw afp::IoError(manifest + ": track manifest must be a JSON list");
    std::vector<afp::TrackSource> tracks;
    std::vector<std::string> missing;
    for (const auto& item : j) {
      if (!item.is_object() || !item.contains("path") || !item.contains("track_id")) {
        throw afp::IoError(manifest + ": every track needs path and track_id");
      }
      const fs::path p = resolve(m.parent_path(), item.at("path").get<std::string>());
      if (!fs::is_regular_file(p)) missing.push_back(p.string());
      afp::TrackSource t;
      t.id = item.at("track_id").get<std::uint32_t>();
      t.name = item.value("name", p.stem().string());
      t.load = [p] { return afp::read_wav(p); };
      tracks.push_back(std::move(t));
    }
    if (!missing.empty()) {
      std::string msg = "missing track audio:";
      for (const auto& s : missing) msg += " " + s;
      throw afp::IoError(msg);
    }
    afp::FingerprintParams params = fp.query().fingerprint_params(afp::FingerprintIndex());
    params.stft = stft;
    params.profile = afp::parse_profile(profile);
    const afp::FingerprintIndex index = afp::build_index(tracks, params, afp::resolve_threads(c.threads));
    afp::save_index(index, out);
    std::cerr << "afp: indexed " << index.tracks().size() << " tracks, " << index.entries().size() << " hashes\n";
    emit({{"index", out},
          {"profile", afp::to_string(index.profile())},
          {"stft", stft_json(index.stft_config())},
          {"n_tracks", index.tracks().size()},
          {"n_entries", index.entries().size()}});
    return kOk;
  }

  bool selected = false;
};

// -------------------------------------------------------------- index inspect

struct IndexInspectCmd {
  std::string index;
  bool list_tracks = false;
  bool selected = false;

  void setup(CLI::App* parent) {
    auto* app = parent->add_subcommand("inspect", "summarise an index file");
    app->add_option("--index", index, "index file")->required();
    app->add_flag("--tracks", list_tracks, "list the track table");
    app->callback([this] { selected = true; });
  }

  int run(const Common&) const {
    const afp::FingerprintIndex idx = afp::load_index(index);
    ordered_json j{{"index", index},
                   {"profile", afp::to_string(idx.profile())},
                   {"stft", stft_json(idx.stft_config())},
                   {"n_tracks", idx.tracks().size()},
                   {"n_entries", idx.entries().size()}};
    if (list_tracks) {
      auto t = ordered_json::array();
      for (const auto& tr : idx.tracks()) t.push_back({{"track_id", tr.id}, {"name", tr.name}, {"n_frames", tr.n_frames}});
      j["tracks"] = t;
    }
    emit(j);
    return kOk;
  }
};

// -------------------------------------------------------------------- augment

struct AugmentCmd {
  std::vector<std::string> inputs;
  std::string manifest, out_dir;
  int copies = 1;
  AugmentFlags aug;
  bool selected = false;

  void setup(CLI::App& root) {
    auto* app = root.add_subcommand("augment", "degrade clean audio with the four-layer pipeline");
    app->add_option("--input", inputs, "clean WAV file (repeatable)");
    app->add_option("--manifest", manifest, "JSON list of {path, ...} clean sources");
    app->add_option("--out-dir", out_dir, "output directory")->required();
    app->add_option("--copies", copies, "augmented copies per source")->capture_default_str();
    aug.add_to(app, true);
    app->callback([this] { selected = true; });
  }

  int run(const Common& c) const {
    std::vector<afp::AugmentSource> sources;
    for (const auto& in : inputs) sources.push_back({fs::path(in).stem().string(), in, std::nullopt});
    if (!manifest.empty()) {
      const fs::path m = manifest;
      const nlohmann::json j = nlohmann::json::parse(afp::read_text_file(m), nullptr, false);
      if (j.is_discarded() || !j.is_array()) throw afp::IoError(manifest + ": source manifest must be a JSON list");
      for (const auto& item : j) {
        const fs::path p = resolve(m.parent_path(), item.at("path").get<std::string>());
        sources.push_back({p.stem().string(), p, std::nullopt});
      }
    }
    if (sources.empty()) throw CLI::ValidationError("augment", "needs --input or --manifest");
    std::vector<std::string> missing;
    for (const auto& s : sources) {
      if (!fs::is_regular_file(s.path)) missing.push_back(s.path.string());
    }
    if (!missing.empty()) {
      std::string msg = "missing source audio:";
      for (const auto& s : missing) msg += " " + s;
      throw afp::IoError(msg);
    }
    const auto [noise, irs] = aug.banks();
    const auto outputs =
        afp::augment_batch(sources, copies, aug.config(), noise, irs, c.seed, out_dir, afp::resolve_threads(c.threads));
    auto list = ordered_json::array();
    for (const auto& o : outputs) {
      ordered_json e{{"wav", o.wav.string()}, {"record", o.record.string()}};
      e["augment"] = afp::to_json(o.value);
      list.push_back(std::move(e));
    }
    emit({{"seed", c.seed}, {"config", afp::to_json(aug.config())}, {"outputs", list}});
    return kOk;
  }
};

// ---------------------------------------------------------------------- query

struct QueryCmd {
  std::string index, audio;
  bool mix = false;
  FingerprintFlags fp;
  DenoiserFlags den;
  bool selected = false;

  void setup(CLI::App& root) {
    auto* app = root.add_subcommand("query", "identify one audio excerpt");
    app->add_option("--index", index, "index file")->required();
    app->add_option("--audio", audio, "query WAV file")->required();
    app->add_flag("--mix", mix, "dual query over the raw and the denoised path");
    fp.add_to(app, true);
    den.add_to(app, "none");
    app->callback([this] { selected = true; });
  }

  int run(const Common&) const {
    const afp::FingerprintIndex idx = afp::load_index(index);
    const afp::Waveform q = afp::read_wav(audio);
    const afp::DenoiserKind kind = den.kind();
    const afp::QueryParams params = fp.query();
    ordered_json j;
    if (mix) {
      if (kind.type == afp::DenoiserKind::Type::kNone) {
        throw CLI::ValidationError("--mix", "needs a --denoiser other than none");
      }
      const afp::MixResult m = afp::mix_query(idx, q, kind, params);
      if (m.denoiser_failed) std::cerr << "afp: warning: " << m.warning << "\n";
      j = afp::to_json(m);
      j["mode"] = "mix";
    } else if (kind.type == afp::DenoiserKind::Type::kNone) {
      j = afp::to_json(afp::match_query(idx, q, params));
      j["mode"] = "raw";
    } else {
      const afp::Spectrogram s = afp::analysis_spectrogram(q, idx.stft_config());
      j = afp::to_json(afp::denoised_match(idx, s, kind, params));
      j["mode"] = "denoised";
    }
    const auto tid = j["track_id"];
    if (!tid.is_null()) {
      if (const afp::TrackInfo* t = idx.find_track(tid.get<std::uint32_t>())) j["track_name"] = t->name;
    }
    j["denoiser"] = kind.describe();
    emit(j);
    return kOk;
  }
};

// ---------------------------------------------------------------------- bench

struct BenchCmd {
  std::string index, queries, out, csv;
  std::vector<double> lengths{3.0, 5.0, 10.0};
  std::vector<std::string> conditions{"clean", "noisy", "denoised", "mix"};
  int peak_tol_t = 0, peak_tol_f = 0;
  bool per_query = false;
  FingerprintFlags fp;
  DenoiserFlags den;
  AugmentFlags aug;
  bool selected = false;

  void setup(CLI::App& root) {
    auto* app = root.add_subcommand("bench", "identification and peak-preservation benchmark");
    app->add_option("--index", index, "index file")->required();
    app->add_option("--queries", queries, "JSON list of {path, track_id}")->required();
    app->add_option("--lengths", lengths, "snippet lengths in seconds")->delimiter(',')->capture_default_str();
    app->add_option("--conditions", conditions, "clean,noisy,denoised,mix")->delimiter(',')->capture_default_str();
    app->add_option("--out", out, "also write the report JSON here");
    app->add_option("--csv", csv, "write the id-rate grid as CSV here");
    app->add_option("--peak-tol-t", peak_tol_t, "peak match tolerance in frames")->capture_default_str();
    app->add_option("--peak-tol-f", peak_tol_f, "peak match tolerance in bins")->capture_default_str();
    app->add_flag("--per-query", per_query, "include per-query outcomes in the report");
    fp.add_to(app, true);
    den.add_to(app, "spectral-sub");
    aug.add_to(app, false);
    app->callback([this] { selected = true; });
  }

  int run(const Common& c) const {
    const afp::FingerprintIndex idx = afp::load_index(index);
    afp::BenchConfig cfg;
    cfg.lengths_s = lengths;
    cfg.conditions.clear();
    std::set<afp::Condition> seen;
    for (const auto& s : conditions) {
      const afp::Condition cond = afp::parse_condition(s);
      if (seen.insert(cond).second) cfg.conditions.push_back(cond);
    }
    cfg.seed = c.seed;
    cfg.query = fp.query();
    cfg.peak_tol_t = peak_tol_t;
    cfg.peak_tol_f = peak_tol_f;
    cfg.threads = afp::resolve_threads(c.threads);
    afp::AudioBank noise, irs;
    if (cfg.needs_noisy()) {
      if (aug.noise_bank.empty() || aug.ir_bank.empty()) {
        throw CLI::ValidationError("bench", "noisy conditions need --noise-bank and --ir-bank");
      }
      cfg.augment = aug.config();
      std::tie(noise, irs) = aug.banks();
    }
    if (cfg.needs_denoised()) cfg.denoiser = den.kind();
    const auto qs = afp::load_query_manifest(queries);
    const afp::EvalReport report = afp::run_benchmark(idx, qs, cfg, noise, irs);
    const ordered_json j = afp::to_json(report, per_query);
    if (!out.empty()) afp::write_text_file(out, j.dump(2) + "\n");
    if (!csv.empty()) afp::write_text_file(csv, afp::to_csv(report));
    emit(j);
    return kOk;
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"afp: noise-robust peak-based audio fingerprinting"};
  app.require_subcommand(1);
  app.config_formatter(std::make_shared<afp::tools::JsonConfig>());
  app.set_config("--config", "", "JSON file with flag values; command-line flags take precedence");
  app.allow_config_extras(false);

  Common common;
  app.add_option("--threads", common.threads, "worker threads (default AFP_THREADS or all cores)");
  app.add_option("--seed", common.seed, "seed for every stochastic step")->capture_default_str();

  auto* index = app.add_subcommand("index", "build or inspect a fingerprint index");
  index->require_subcommand(1);
  IndexBuildCmd build;
  IndexInspectCmd inspect;
  build.setup(index);
  inspect.setup(index);
  AugmentCmd augment;
  augment.setup(app);
  QueryCmd query;
  query.setup(app);
  BenchCmd bench;
  bench.setup(app);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  std::cerr << "afp: seed=" << common.seed << " threads=" << afp::resolve_threads(common.threads) << "\n";
  try {
    if (build.selected) return build.run(common);
    if (inspect.selected) return inspect.run(common);
    if (augment.selected) return augment.run(common);
    if (query.selected) return query.run(common);
    if (bench.selected) return bench.run(common);
    return kUsage;
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  } catch (const afp::CorruptIndex& e) {
    std::cerr << "afp: corrupt index: " << e.what() << "\n";
    return kCorrupt;
  } catch (const afp::ExternalDenoiserError& e) {
    std::cerr << "afp: external denoiser failed: " << e.what() << "\n";
    return kDenoiser;
  } catch (const afp::IoError& e) {
    std::cerr << "afp: I/O error: " << e.what() << "\n";
    return kIo;
  } catch (const afp::InvalidArgument& e) {
    std::cerr << "afp: invalid argument: " << e.what() << "\n";
    return kUsage;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "afp: malformed JSON input: " << e.what() << "\n";
    return kIo;
  }
}
