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

#include "afp/eval.hpp"

#include <algorithm>
#include <cstdio>
#include <map>
#include <sstream>

#include "afp/dsp.hpp"
#include "afp/io_util.hpp"
#include "afp/parallel.hpp"
#include "afp/rng.hpp"
#include "afp/wav.hpp"

namespace afp {

namespace {

void check_pair(const Spectrogram& a, const Spectrogram& b) {
  if (!a.same_shape(b)) throw InvalidArgument("spectrogram shape mismatch");
  if (a.scale != b.scale) throw InvalidArgument("spectrogram scale mismatch");
}

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

struct MetricAccumulator {
  std::size_t count = 0;
  double l1 = 0.0, psnr = 0.0, precision = 0.0, recall = 0.0, f1 = 0.0;
  std::size_t finite_psnr = 0, infinite_psnr = 0;

  void add(double l1_v, double psnr_v, const PeakMatchReport& prf) {
    ++count;
    l1 += l1_v;
    if (std::isinf(psnr_v)) {
      ++infinite_psnr;
    } else {
      psnr += psnr_v;
      ++finite_psnr;
    }
    precision += prf.precision;
    recall += prf.recall;
    f1 += prf.f1;
  }

  SpectrogramMetrics summary() const {
    SpectrogramMetrics m;
    m.count = count;
    m.infinite_psnr = infinite_psnr;
    if (count > 0) {
      const auto n = static_cast<double>(count);
      m.mean_l1 = l1 / n;
      m.mean_precision = precision / n;
      m.mean_recall = recall / n;
      m.mean_f1 = f1 / n;
    }
    if (finite_psnr > 0) m.mean_psnr = psnr / static_cast<double>(finite_psnr);
    return m;
  }
};

struct SnippetMetrics {
  double l1 = 0.0;
  double psnr = 0.0;
  PeakMatchReport prf;
};

// Compares in linear magnitude with both spectrograms divided by the clean
// maximum, so the reference peaks at 1.
SnippetMetrics compare(const Spectrogram& clean, const std::vector<Peak>& clean_peaks, const Spectrogram& test,
                       const FingerprintParams& fp, const BenchConfig& cfg) {
  const float peak = clean.values.maxCoeff();
  const float scale = peak > 0.0f ? 1.0f / peak : 1.0f;
  SnippetMetrics m;
  m.l1 = l1_distance(clean.values * scale, test.values * scale);
  m.psnr = psnr(clean.values * scale, test.values * scale);
  m.prf = peak_prf(clean_peaks, spectrogram_peaks(test, fp), cfg.peak_tol_t, cfg.peak_tol_f);
  return m;
}

struct SnippetResult {
  bool skipped = true;
  QueryRecord record;
  std::optional<SnippetMetrics> noisy;
  std::optional<SnippetMetrics> denoised;
  bool denoiser_failed = false;
};

nlohmann::ordered_json metrics_json(const SpectrogramMetrics& m) {
  nlohmann::ordered_json j;
  j["count"] = m.count;
  j["mean_l1"] = m.mean_l1;
  j["mean_psnr_db"] = m.mean_psnr;
  j["infinite_psnr"] = m.infinite_psnr;
  j["mean_precision"] = m.mean_precision;
  j["mean_recall"] = m.mean_recall;
  j["mean_f1"] = m.mean_f1;
  return j;
}

nlohmann::ordered_json config_json(const BenchConfig& cfg, const StftConfig& stft, PeakProfile profile) {
  nlohmann::ordered_json j;
  j["lengths_s"] = cfg.lengths_s;
  auto conds = nlohmann::ordered_json::array();
  for (Condition c : cfg.conditions) conds.push_back(to_string(c));
  j["conditions"] = conds;
  j["profile"] = to_string(profile);
  j["stft"] = {{"frame_size", stft.frame_size}, {"hop_size", stft.hop_size}, {"window", "hann"},
               {"target_rate", stft.target_rate}};
  if (cfg.needs_noisy()) j["augment"] = to_json(cfg.augment);
  if (cfg.needs_denoised()) {
    j["denoiser"] = cfg.denoiser.describe();
    if (cfg.denoiser.type == DenoiserKind::Type::kSpectralSub) {
      j["spectral_sub"] = {{"alpha", cfg.denoiser.spectral_sub.alpha}, {"beta", cfg.denoiser.spectral_sub.beta}};
    }
  }
  const QueryParams& q = cfg.query;
  j["peaks"] = {{"neighborhood", q.peaks.neighborhood},
                {"threshold_db", q.peaks.threshold_db},
                {"envelope_decay", q.peaks.envelope_decay},
                {"envelope_sigma_bins", q.peaks.envelope_sigma_bins},
                {"max_peaks_per_frame", q.peaks.max_peaks_per_frame}};
  j["landmarks"] = {{"fanout", q.landmarks.fanout},
                    {"max_delta_t", q.landmarks.max_delta_t},
                    {"max_delta_f", q.landmarks.max_delta_f}};
  j["match"] = {{"min_score", q.match.min_score}, {"offset_tolerance", q.match.offset_tolerance}};
  j["floor_db"] = q.floor_db;
  j["peak_tolerance"] = {{"frames", cfg.peak_tol_t}, {"bins", cfg.peak_tol_f}};
  return j;
}

}  // namespace

double l1_distance(const Spectrogram& a, const Spectrogram& b) {
  check_pair(a, b);
  return l1_distance(a.values, b.values);
}

double psnr(const Spectrogram& ref, const Spectrogram& test) {
  check_pair(ref, test);
  return psnr(ref.values, test.values);
}

PeakMatchReport peak_prf(std::span<const Peak> ref, std::span<const Peak> test, int tol_t, int tol_f) {
  if (tol_t < 0 || tol_f < 0) throw InvalidArgument("peak tolerances must be non-negative");
  PeakMatchReport r;
  r.n_ref = ref.size();
  r.n_test = test.size();
  if (ref.empty() && test.empty()) {
    r.precision = r.recall = r.f1 = 1.0;
    return r;
  }
  std::vector<Peak> sorted(ref.begin(), ref.end());
  std::sort(sorted.begin(), sorted.end(),
            [](const Peak& a, const Peak& b) { return std::tie(a.t_frame, a.f_bin) < std::tie(b.t_frame, b.f_bin); });
  std::vector<bool> used(sorted.size(), false);
  for (const Peak& p : test) {
    auto it = std::lower_bound(sorted.begin(), sorted.end(), p.t_frame - tol_t,
                               [](const Peak& a, int t) { return a.t_frame < t; });
    std::size_t best = sorted.size();
    int best_d = 0;
    for (; it != sorted.end() && it->t_frame <= p.t_frame + tol_t; ++it) {
      const auto k = static_cast<std::size_t>(it - sorted.begin());
      if (used[k] || std::abs(it->f_bin - p.f_bin) > tol_f) continue;
      const int d = std::abs(it->t_frame - p.t_frame) + std::abs(it->f_bin - p.f_bin);
      if (best == sorted.size() || d < best_d) {
        best = k;
        best_d = d;
      }
    }
    if (best != sorted.size()) {
      used[best] = true;
      ++r.n_matched;
    }
  }
  const auto m = static_cast<double>(r.n_matched);
  r.precision = r.n_test ? m / static_cast<double>(r.n_test) : 0.0;
  r.recall = r.n_ref ? m / static_cast<double>(r.n_ref) : 0.0;
  r.f1 = r.precision + r.recall > 0.0 ? 2.0 * r.precision * r.recall / (r.precision + r.recall) : 0.0;
  return r;
}

double identification_rate(std::span<const Outcome> outcomes) {
  if (outcomes.empty()) throw InvalidArgument("identification_rate of an empty outcome list");
  const auto hits = std::count(outcomes.begin(), outcomes.end(), Outcome::kHit);
  return static_cast<double>(hits) / static_cast<double>(outcomes.size()) * 100.0;
}

std::string to_string(Condition c) {
  switch (c) {
    case Condition::kClean: return "clean";
    case Condition::kNoisy: return "noisy";
    case Condition::kDenoised: return "denoised";
    case Condition::kMix: return "mix";
  }
  return "unknown";
}

Condition parse_condition(const std::string& s) {
  if (s == "clean") return Condition::kClean;
  if (s == "noisy") return Condition::kNoisy;
  if (s == "denoised") return Condition::kDenoised;
  if (s == "mix") return Condition::kMix;
  throw InvalidArgument("unknown condition '" + s + "' (expected clean, noisy, denoised or mix)");
}

bool BenchConfig::has(Condition c) const {
  return std::find(conditions.begin(), conditions.end(), c) != conditions.end();
}

double ConditionStats::id_rate() const {
  return n_queries ? static_cast<double>(hits) / static_cast<double>(n_queries) * 100.0 : 0.0;
}

const ConditionStats* LengthReport::find(Condition c) const {
  for (const auto& s : conditions) {
    if (s.condition == c) return &s;
  }
  return nullptr;
}

const LengthReport* EvalReport::find(double seconds) const {
  for (const auto& l : lengths) {
    if (l.seconds == seconds) return &l;
  }
  return nullptr;
}

std::vector<BenchQuery> load_query_manifest(const std::filesystem::path& manifest) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_text_file(manifest));
  } catch (const nlohmann::json::exception& e) {
    throw IoError(manifest.string() + ": invalid JSON manifest: " + e.what());
  }
  if (!j.is_array()) throw IoError(manifest.string() + ": query manifest must be a JSON list");
  std::vector<BenchQuery> out;
  std::vector<std::string> missing;
  for (const auto& item : j) {
    if (!item.is_object() || !item.contains("path") || !item.contains("track_id")) {
      throw IoError(manifest.string() + ": every query needs path and track_id");
    }
    std::filesystem::path p = item.at("path").get<std::string>();
    if (p.is_relative()) p = manifest.parent_path() / p;
    if (!std::filesystem::is_regular_file(p)) missing.push_back(p.string());
    BenchQuery q;
    q.track_id = item.at("track_id").get<std::uint32_t>();
    q.name = p.stem().string();
    q.load = [p] { return read_wav(p); };
    out.push_back(std::move(q));
  }
  if (!missing.empty()) {
    std::string msg = "missing query audio (" + std::to_string(missing.size()) + " files):";
    for (const auto& m : missing) msg += " " + m;
    throw IoError(msg);
  }
  return out;
}

EvalReport run_benchmark(const FingerprintIndex& index, std::span<const BenchQuery> queries,
                         const BenchConfig& config, const AudioBank& noise_bank, const AudioBank& ir_bank) {
  if (config.lengths_s.empty()) throw InvalidArgument("benchmark needs at least one snippet length");
  if (config.conditions.empty()) throw InvalidArgument("benchmark needs at least one condition");
  for (double s : config.lengths_s) {
    if (!(s > 0.0)) throw InvalidArgument("snippet lengths must be positive");
  }
  if (config.needs_noisy()) config.augment.validate();
  if (config.needs_denoised()) {
    if (config.denoiser.type == DenoiserKind::Type::kNone) {
      throw InvalidArgument("denoised and mix conditions need a denoiser");
    }
    config.denoiser.validate();
  }

  const FingerprintParams fp = config.query.fingerprint_params(index);
  const int rate = config.augment.working_rate;
  const std::size_t n_len = config.lengths_s.size();
  std::vector<SnippetResult> results(queries.size() * n_len);

  parallel_for(queries.size(), resolve_threads(config.threads), [&](std::size_t qi) {
    const BenchQuery& q = queries[qi];
    const Waveform track = resample(q.load(), rate);
    for (std::size_t li = 0; li < n_len; ++li) {
      SnippetResult& res = results[qi * n_len + li];
      const double seconds = config.lengths_s[li];
      const auto len = static_cast<std::int64_t>(std::llround(seconds * rate));
      if (track.size() < len) continue;
      res.skipped = false;
      Rng rng(Rng::derive(Rng::derive(config.seed, qi), li));
      const auto offset = static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(track.size() - len + 1)));
      const Waveform snippet(track.samples.segment(offset, len), rate);
      QueryRecord& rec = res.record;
      rec.track_id = q.track_id;
      rec.seconds = seconds;
      rec.offset_samples = offset;

      const Spectrogram clean_spec = analysis_spectrogram(snippet, index.stft_config());
      if (config.has(Condition::kClean)) {
        rec.clean = match_landmarks(index, spectrogram_landmarks(clean_spec, fp), config.query.match);
      }
      if (!config.needs_noisy()) continue;

      AugmentResult noisy = augment_one(snippet, config.augment, noise_bank, ir_bank, rng.next());
      rec.augment = noisy.record;
      const Spectrogram noisy_spec = analysis_spectrogram(noisy.audio, index.stft_config());
      const MatchResult raw = match_landmarks(index, spectrogram_landmarks(noisy_spec, fp), config.query.match);
      if (config.has(Condition::kNoisy)) rec.noisy = raw;

      const std::vector<Peak> clean_peaks = spectrogram_peaks(clean_spec, fp);
      res.noisy = compare(clean_spec, clean_peaks, noisy_spec, fp, config);
      if (!config.needs_denoised()) continue;

      MatchResult den;
      try {
        const Spectrogram den_spec = denoise(noisy_spec, config.denoiser);
        den = match_landmarks(index, spectrogram_landmarks(den_spec, fp), config.query.match);
        res.denoised = compare(clean_spec, clean_peaks, den_spec, fp, config);
      } catch (const ExternalDenoiserError&) {
        res.denoiser_failed = true;
      }
      if (config.has(Condition::kDenoised)) rec.denoised = den;
      if (config.has(Condition::kMix)) {
        if (res.denoiser_failed) {
          MixResult m;
          m.raw = m.result = raw;
          m.chosen = raw.matched() ? MixPath::kRaw : MixPath::kNone;
          m.denoiser_failed = true;
          rec.mix = m;
        } else {
          rec.mix = combine_paths(raw, den);
        }
      }
    }
  });

  EvalReport report;
  report.seed = config.seed;
  report.profile = index.profile();
  report.n_tracks = queries.size();
  report.config = config;
  report.stft = index.stft_config();
  report.config_digest = hex64(fnv1a(config_json(config, index.stft_config(), index.profile()).dump()));

  for (std::size_t li = 0; li < n_len; ++li) {
    LengthReport lr;
    lr.seconds = config.lengths_s[li];
    std::map<Condition, ConditionStats> stats;
    for (Condition c : config.conditions) stats[c].condition = c;
    MetricAccumulator noisy_acc, den_acc;
    auto tally = [&](Condition c, const std::optional<MatchResult>& m, std::uint32_t truth) {
      if (!m) return;
      ConditionStats& s = stats[c];
      ++s.n_queries;
      if (!m->matched()) ++s.no_match;
      if (m->track_id == truth) ++s.hits;
    };
    for (std::size_t qi = 0; qi < queries.size(); ++qi) {
      const SnippetResult& res = results[qi * n_len + li];
      if (res.skipped) {
        ++lr.skipped;
        continue;
      }
      ++lr.n_queries;
      const QueryRecord& rec = res.record;
      tally(Condition::kClean, rec.clean, rec.track_id);
      tally(Condition::kNoisy, rec.noisy, rec.track_id);
      tally(Condition::kDenoised, rec.denoised, rec.track_id);
      if (rec.mix) tally(Condition::kMix, rec.mix->result, rec.track_id);
      if (res.noisy) noisy_acc.add(res.noisy->l1, res.noisy->psnr, res.noisy->prf);
      if (res.denoised) den_acc.add(res.denoised->l1, res.denoised->psnr, res.denoised->prf);
      if (res.denoiser_failed) ++lr.denoiser_failures;
      report.queries.push_back(rec);
    }
    for (Condition c : config.conditions) lr.conditions.push_back(stats[c]);
    if (config.needs_noisy()) lr.noisy = noisy_acc.summary();
    if (config.needs_denoised()) lr.denoised = den_acc.summary();
    report.lengths.push_back(std::move(lr));
  }
  return report;
}

nlohmann::ordered_json to_json(const MatchResult& m) {
  nlohmann::ordered_json j;
  j["matched"] = m.matched();
  j["track_id"] = m.track_id ? nlohmann::ordered_json(*m.track_id) : nlohmann::ordered_json(nullptr);
  j["score"] = m.score;
  j["offset_frames"] = m.offset_frames;
  j["runner_up_score"] = m.runner_up_score;
  return j;
}

nlohmann::ordered_json to_json(const MixResult& m) {
  nlohmann::ordered_json j = to_json(m.result);
  j["chosen_path"] = to_string(m.chosen);
  j["raw"] = to_json(m.raw);
  j["denoised"] = m.denoised ? to_json(*m.denoised) : nlohmann::ordered_json(nullptr);
  j["denoiser_failed"] = m.denoiser_failed;
  if (!m.warning.empty()) j["warning"] = m.warning;
  return j;
}

nlohmann::ordered_json to_json(const EvalReport& report, bool include_queries) {
  nlohmann::ordered_json j;
  j["seed"] = report.seed;
  j["config_digest"] = report.config_digest;
  j["n_tracks"] = report.n_tracks;
  j["config"] = config_json(report.config, report.stft, report.profile);
  j["metric_scale"] = "linear magnitude normalised by the clean snippet maximum";
  auto results = nlohmann::ordered_json::array();
  for (const LengthReport& lr : report.lengths) {
    nlohmann::ordered_json r;
    r["length_s"] = lr.seconds;
    r["n_queries"] = lr.n_queries;
    r["skipped"] = lr.skipped;
    nlohmann::ordered_json conds;
    for (const ConditionStats& s : lr.conditions) {
      conds[to_string(s.condition)] = {{"n_queries", s.n_queries}, {"hits", s.hits},
                                       {"misses", s.misses()},     {"no_match", s.no_match},
                                       {"id_rate", s.id_rate()}};
    }
    r["conditions"] = conds;
    if (lr.noisy || lr.denoised) {
      nlohmann::ordered_json m;
      if (lr.noisy) m["noisy_vs_clean"] = metrics_json(*lr.noisy);
      if (lr.denoised) m["denoised_vs_clean"] = metrics_json(*lr.denoised);
      r["spectrogram_metrics"] = m;
    }
    if (lr.denoised) r["denoiser_failures"] = lr.denoiser_failures;
    results.push_back(std::move(r));
  }
  j["results"] = results;
  if (include_queries) {
    auto qs = nlohmann::ordered_json::array();
    for (const QueryRecord& q : report.queries) {
      nlohmann::ordered_json e;
      e["track_id"] = q.track_id;
      e["length_s"] = q.seconds;
      e["offset_samples"] = q.offset_samples;
      if (q.clean) e["clean"] = to_json(*q.clean);
      if (q.noisy) e["noisy"] = to_json(*q.noisy);
      if (q.denoised) e["denoised"] = to_json(*q.denoised);
      if (q.mix) e["mix"] = to_json(*q.mix);
      if (q.augment) e["augment"] = to_json(*q.augment);
      qs.push_back(std::move(e));
    }
    j["queries"] = qs;
  }
  return j;
}

std::string to_csv(const EvalReport& report) {
  std::ostringstream out;
  out << "length_s,condition,n_queries,hits,misses,no_match,id_rate\n";
  for (const LengthReport& lr : report.lengths) {
    for (const ConditionStats& s : lr.conditions) {
      char rate[32];
      std::snprintf(rate, sizeof(rate), "%.4f", s.id_rate());
      out << lr.seconds << ',' << to_string(s.condition) << ',' << s.n_queries << ',' << s.hits << ','
          << s.misses() << ',' << s.no_match << ',' << rate << '\n';
    }
  }
  return out.str();
}

}  // namespace afp
