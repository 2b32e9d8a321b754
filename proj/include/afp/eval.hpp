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

#ifndef AFP_EVAL_HPP_
#define AFP_EVAL_HPP_

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "afp/augment.hpp"
#include "afp/denoise.hpp"
#include "afp/error.hpp"
#include "afp/fingerprint.hpp"

namespace afp {

/// Mean absolute elementwise difference.
template <typename A, typename B>
double l1_distance(const Eigen::MatrixBase<A>& a, const Eigen::MatrixBase<B>& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) throw InvalidArgument("l1_distance shape mismatch");
  if (a.size() == 0) throw InvalidArgument("l1_distance of empty matrices");
  return (a.template cast<double>() - b.template cast<double>()).cwiseAbs().sum() / static_cast<double>(a.size());
}

/// 10 log10(max(ref)^2 / mse); +inf when the inputs are identical.
template <typename A, typename B>
double psnr(const Eigen::MatrixBase<A>& ref, const Eigen::MatrixBase<B>& test) {
  if (ref.rows() != test.rows() || ref.cols() != test.cols()) throw InvalidArgument("psnr shape mismatch");
  if (ref.size() == 0) throw InvalidArgument("psnr of empty matrices");
  const double peak = static_cast<double>(ref.maxCoeff());
  if (!(peak > 0.0)) throw InvalidArgument("psnr undefined for a reference with non-positive maximum");
  const double mse =
      (ref.template cast<double>() - test.template cast<double>()).squaredNorm() / static_cast<double>(ref.size());
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(peak * peak / mse);
}

double l1_distance(const Spectrogram& a, const Spectrogram& b);
double psnr(const Spectrogram& ref, const Spectrogram& test);

struct PeakMatchReport {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t n_ref = 0;
  std::size_t n_test = 0;
  std::size_t n_matched = 0;
};

/// Greedy one-to-one matching: test peaks in order claim the nearest
/// unmatched reference peak within (+-tol_t, +-tol_f).
PeakMatchReport peak_prf(std::span<const Peak> ref, std::span<const Peak> test, int tol_t = 0, int tol_f = 0);

enum class Outcome : std::uint8_t { kMiss = 0, kHit = 1 };

/// Top-1 hit percentage.
double identification_rate(std::span<const Outcome> outcomes);

enum class Condition : std::uint8_t { kClean, kNoisy, kDenoised, kMix };

std::string to_string(Condition c);
Condition parse_condition(const std::string& s);

struct BenchQuery {
  std::uint32_t track_id = 0;
  std::string name;
  std::function<Waveform()> load;
};

/// JSON list of {path, track_id}. Every path is checked before returning;
/// missing files are reported together in one IoError.
std::vector<BenchQuery> load_query_manifest(const std::filesystem::path& manifest);

struct BenchConfig {
  std::vector<double> lengths_s{3.0, 5.0, 10.0};
  std::vector<Condition> conditions{Condition::kClean, Condition::kNoisy, Condition::kDenoised, Condition::kMix};
  std::uint64_t seed = 0;
  AugmentConfig augment;
  DenoiserKind denoiser = DenoiserKind::spectral();
  QueryParams query;
  int peak_tol_t = 0;
  int peak_tol_f = 0;
  int threads = 1;

  bool has(Condition c) const;
  bool needs_noisy() const { return has(Condition::kNoisy) || has(Condition::kDenoised) || has(Condition::kMix); }
  bool needs_denoised() const { return has(Condition::kDenoised) || has(Condition::kMix); }
};

struct ConditionStats {
  Condition condition = Condition::kClean;
  std::size_t n_queries = 0;
  std::size_t hits = 0;
  std::size_t no_match = 0;

  std::size_t misses() const { return n_queries - hits; }
  double id_rate() const;
};

struct SpectrogramMetrics {
  std::size_t count = 0;
  double mean_l1 = 0.0;
  double mean_psnr = 0.0;
  std::size_t infinite_psnr = 0;
  double mean_precision = 0.0;
  double mean_recall = 0.0;
  double mean_f1 = 0.0;
};

struct LengthReport {
  double seconds = 0.0;
  std::size_t n_queries = 0;
  std::size_t skipped = 0;
  std::vector<ConditionStats> conditions;
  std::optional<SpectrogramMetrics> noisy;
  std::optional<SpectrogramMetrics> denoised;
  std::size_t denoiser_failures = 0;

  const ConditionStats* find(Condition c) const;
};

/// Outcome of one snippet under each condition that ran.
struct QueryRecord {
  std::uint32_t track_id = 0;
  double seconds = 0.0;
  std::int64_t offset_samples = 0;
  std::optional<MatchResult> clean;
  std::optional<MatchResult> noisy;
  std::optional<MatchResult> denoised;
  std::optional<MixResult> mix;
  std::optional<AugmentRecord> augment;
};

struct EvalReport {
  std::uint64_t seed = 0;
  std::string config_digest;
  PeakProfile profile = PeakProfile::kMaxFilter;
  std::size_t n_tracks = 0;
  BenchConfig config;
  StftConfig stft;
  std::vector<LengthReport> lengths;
  std::vector<QueryRecord> queries;

  const LengthReport* find(double seconds) const;
};

/// One snippet per (track, length) at a seeded offset, degraded with the
/// augmentation pipeline and identified under every configured condition.
/// The report does not depend on `config.threads`.
EvalReport run_benchmark(const FingerprintIndex& index, std::span<const BenchQuery> queries,
                         const BenchConfig& config, const AudioBank& noise_bank, const AudioBank& ir_bank);

nlohmann::ordered_json to_json(const EvalReport& report, bool include_queries = false);
/// length_s,condition,n_queries,hits,misses,no_match,id_rate
std::string to_csv(const EvalReport& report);

nlohmann::ordered_json to_json(const MatchResult& m);
nlohmann::ordered_json to_json(const MixResult& m);

}  // namespace afp

#endif  // AFP_EVAL_HPP_
