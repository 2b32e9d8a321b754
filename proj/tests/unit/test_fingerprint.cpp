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

#include <algorithm>
#include <map>
#include <set>

#include <gtest/gtest.h>

#include "afp/dsp.hpp"
#include "afp/fingerprint.hpp"
#include "afp/synth.hpp"
#include "oracle.hpp"
#include "support.hpp"

namespace afp {
namespace {

Spectrogram db_spec(Eigen::MatrixXf values) {
  Spectrogram s;
  s.values = std::move(values);
  s.scale = Scale::kDb;
  return s;
}

constexpr PeakProfile kProfiles[] = {PeakProfile::kMaxFilter, PeakProfile::kEnvelope};

TEST(ExtractPeaks, FloorOnlyHasNoPeaks) {
  for (PeakProfile p : kProfiles) {
    EXPECT_TRUE(extract_peaks(db_spec(Eigen::MatrixXf::Constant(64, 64, -80.0f)), p).empty()) << to_string(p);
  }
}

TEST(ExtractPeaks, IsolatedCellIsTheOnlyPeak) {
  for (PeakProfile p : kProfiles) {
    Eigen::MatrixXf v = Eigen::MatrixXf::Constant(64, 64, -80.0f);
    v(20, 33) = 0.0f;
    const auto peaks = extract_peaks(db_spec(v), p);
    ASSERT_EQ(peaks.size(), 1u) << to_string(p);
    EXPECT_EQ(peaks[0], (Peak{33, 20, 0.0f}));
  }
}

TEST(ExtractPeaks, EqualMaximaKeepTheLowerBin) {
  Eigen::MatrixXf v = Eigen::MatrixXf::Constant(64, 64, -80.0f);
  v(10, 30) = -5.0f;
  v(15, 30) = -5.0f;
  const auto peaks = extract_peaks(db_spec(v), PeakProfile::kMaxFilter);
  ASSERT_EQ(peaks.size(), 1u);
  EXPECT_EQ(peaks[0].f_bin, 10);
  EXPECT_EQ(peaks[0].t_frame, 30);
}

TEST(ExtractPeaks, MaxFilterMatchesExhaustiveNeighbourhoodCheck) {
  Rng rng(21);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 1 + static_cast<int>(rng.below(6));
    Eigen::MatrixXf v(64, 64);
    // Coarse quantisation makes ties common.
    for (Eigen::Index i = 0; i < v.size(); ++i) v.data()[i] = -static_cast<float>(rng.below(trial % 2 ? 8 : 70));
    PeakParams params;
    params.neighborhood = n;
    params.threshold_db = -60.0f;
    const auto peaks = extract_peaks(db_spec(v), PeakProfile::kMaxFilter, params);
    std::vector<Peak> expected;
    for (Eigen::Index t = 0; t < 64; ++t) {
      for (Eigen::Index f = 0; f < 64; ++f) {
        if (test::is_maxfilter_peak(v, f, t, n, params.threshold_db)) {
          expected.push_back({static_cast<std::int32_t>(t), static_cast<std::int32_t>(f), v(f, t)});
        }
      }
    }
    EXPECT_EQ(peaks, expected) << "trial " << trial;
  }
}

TEST(ExtractPeaks, MaxFilterInvariantToConstantOffset) {
  Rng rng(5);
  Spectrogram s = test::random_spectrogram(rng, 129, 80, Scale::kDb);
  s.values = (s.values.array() * 8.0f - 70.0f).matrix();
  const auto base = extract_peaks(s, PeakProfile::kMaxFilter);
  for (float offset : {-12.5f, 3.0f, 20.0f}) {
    Spectrogram shifted = s;
    shifted.values.array() += offset;
    PeakParams p;
    p.threshold_db += offset;
    const auto moved = extract_peaks(shifted, PeakProfile::kMaxFilter, p);
    ASSERT_EQ(moved.size(), base.size());
    for (std::size_t i = 0; i < base.size(); ++i) {
      EXPECT_EQ(moved[i].t_frame, base[i].t_frame);
      EXPECT_EQ(moved[i].f_bin, base[i].f_bin);
    }
  }
}

TEST(ExtractPeaks, EnvelopePeaksAreSortedCappedLocalMaxima) {
  const Waveform w = synth::track(4, 4.0);
  const Spectrogram db = to_db(analysis_spectrogram(w, StftConfig{}));
  PeakParams params;
  const auto peaks = extract_peaks(db, PeakProfile::kEnvelope, params);
  ASSERT_FALSE(peaks.empty());
  std::map<int, int> per_frame;
  for (std::size_t i = 0; i < peaks.size(); ++i) {
    const Peak& p = peaks[i];
    if (i > 0) {
      EXPECT_TRUE(peaks[i - 1].t_frame < p.t_frame || (peaks[i - 1].t_frame == p.t_frame && peaks[i - 1].f_bin < p.f_bin));
    }
    ++per_frame[p.t_frame];
    const float v = db.values(p.f_bin, p.t_frame);
    EXPECT_EQ(p.mag_db, v);
    if (p.f_bin > 0) EXPECT_GT(v, db.values(p.f_bin - 1, p.t_frame));
    if (p.f_bin + 1 < db.n_bins()) EXPECT_GE(v, db.values(p.f_bin + 1, p.t_frame));
  }
  for (auto [t, c] : per_frame) EXPECT_LE(c, params.max_peaks_per_frame);
}

TEST(ExtractPeaks, EnvelopeBackwardPassDropsMaskedPeaks) {
  // A quiet tone just before a much louder one in the next frame is masked.
  Eigen::MatrixXf v = Eigen::MatrixXf::Constant(64, 40, -80.0f);
  v(20, 10) = -30.0f;
  v(21, 11) = 0.0f;
  const auto peaks = extract_peaks(db_spec(v), PeakProfile::kEnvelope);
  ASSERT_EQ(peaks.size(), 1u);
  EXPECT_EQ(peaks[0].t_frame, 11);
}

TEST(ExtractPeaks, RejectsLinearInput) {
  Spectrogram s;
  s.values = Eigen::MatrixXf::Ones(8, 8);
  for (PeakProfile p : kProfiles) EXPECT_THROW(extract_peaks(s, p), InvalidArgument);
}

TEST(PeakProfile, NamesRoundtrip) {
  for (PeakProfile p : kProfiles) EXPECT_EQ(parse_profile(to_string(p)), p);
  EXPECT_THROW(parse_profile("dejavu"), InvalidArgument);
}

TEST(PairLandmarks, SmallExamples) {
  const std::vector<Peak> one{{0, 5, 0.0f}};
  EXPECT_TRUE(pair_landmarks(one).empty());
  const std::vector<Peak> two{{0, 5, 0.0f}, {10, 8, 0.0f}};
  const auto lms = pair_landmarks(two);
  ASSERT_EQ(lms.size(), 1u);
  EXPECT_EQ(lms[0], (Landmark{5, 3, 10, 0}));
  const std::vector<Peak> same_frame{{4, 5, 0.0f}, {4, 9, 0.0f}};
  EXPECT_TRUE(pair_landmarks(same_frame).empty());
  const std::vector<Peak> too_far{{0, 5, 0.0f}, {64, 5, 0.0f}, {70, 200, 0.0f}};
  EXPECT_TRUE(pair_landmarks(too_far).empty());
}

TEST(PairLandmarks, FanoutCapsAnchor) {
  std::vector<Peak> peaks;
  for (int i = 0; i < 10; ++i) peaks.push_back({i + 1, 10 + i, 0.0f});
  const auto lms = pair_landmarks(peaks);
  const auto from_first = std::count_if(lms.begin(), lms.end(), [](const Landmark& l) { return l.t_anchor == 1; });
  EXPECT_EQ(from_first, 5);
  EXPECT_EQ(lms, test::enumerate_landmarks(peaks));
}

TEST(PairLandmarks, MatchesExhaustiveEnumeration) {
  Rng rng(3);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<Peak> peaks;
    const int n = static_cast<int>(rng.below(80));
    std::set<std::pair<int, int>> used;
    while (static_cast<int>(peaks.size()) < n) {
      const int t = static_cast<int>(rng.below(200)), f = static_cast<int>(rng.below(257));
      if (used.insert({t, f}).second) peaks.push_back({t, f, 0.0f});
    }
    std::sort(peaks.begin(), peaks.end(), [](const Peak& a, const Peak& b) {
      return a.t_frame < b.t_frame || (a.t_frame == b.t_frame && a.f_bin < b.f_bin);
    });
    LandmarkParams p;
    p.fanout = 1 + static_cast<int>(rng.below(8));
    EXPECT_EQ(pair_landmarks(peaks, p), test::enumerate_landmarks(peaks, p));
    for (const Landmark& l : pair_landmarks(peaks, p)) {
      EXPECT_GT(l.delta_t, 0);
      EXPECT_LE(l.delta_t, kMaxDeltaT);
      EXPECT_LE(std::abs(l.delta_f), kMaxDeltaF);
    }
  }
}

TEST(PairLandmarks, RejectsZoneOutsideHashLayout) {
  LandmarkParams p;
  p.max_delta_t = 64;
  EXPECT_THROW(pair_landmarks({}, p), InvalidArgument);
  p = {};
  p.max_delta_f = 128;
  EXPECT_THROW(pair_landmarks({}, p), InvalidArgument);
}

TEST(PackHash, HandEvaluatedValue) { EXPECT_EQ(pack_hash({0, 0, 1, 0}), 0x00400001u); }

TEST(PackHash, BoundaryCrossProductRoundtrips) {
  std::set<std::uint32_t> seen;
  for (int f1 : {0, 1, 510, 511}) {
    for (int df : {-127, -1, 0, 1, 127}) {
      for (int dt : {1, 2, 62, 63}) {
        const std::uint32_t h = pack_hash({f1, df, dt, 0});
        EXPECT_EQ(unpack_hash(h), (HashFields{f1, df, dt}));
        EXPECT_EQ(h, static_cast<std::uint32_t>(f1) << 23 | static_cast<std::uint32_t>(df + 256) << 14 |
                         static_cast<std::uint32_t>(dt));
        seen.insert(h);
      }
    }
  }
  EXPECT_EQ(seen.size(), 4u * 5 * 4);
}

TEST(PackHash, RejectsOutOfRangeFields) {
  EXPECT_THROW(pack_hash({0, 0, 0, 0}), InvalidArgument);
  EXPECT_THROW(pack_hash({0, 0, 64, 0}), InvalidArgument);
  EXPECT_THROW(pack_hash({512, 0, 1, 0}), InvalidArgument);
  EXPECT_THROW(pack_hash({-1, 0, 1, 0}), InvalidArgument);
  EXPECT_THROW(pack_hash({0, 128, 1, 0}), InvalidArgument);
  EXPECT_THROW(pack_hash({0, -128, 1, 0}), InvalidArgument);
}

std::vector<TrackSource> synth_tracks(int n, double seconds, std::uint64_t seed = 100) {
  std::vector<TrackSource> out;
  for (int i = 0; i < n; ++i) {
    out.push_back({static_cast<std::uint32_t>(i), "t" + std::to_string(i),
                   [=] { return synth::track(seed + i, seconds); }});
  }
  return out;
}

class SmallCorpus : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    tracks_ = new std::vector<TrackSource>(synth_tracks(8, 8.0));
    index_ = new FingerprintIndex(build_index(*tracks_, FingerprintParams{}, 2));
  }
  static void TearDownTestSuite() {
    delete index_;
    delete tracks_;
  }
  static std::vector<TrackSource>* tracks_;
  static FingerprintIndex* index_;
};
std::vector<TrackSource>* SmallCorpus::tracks_ = nullptr;
FingerprintIndex* SmallCorpus::index_ = nullptr;

TEST_F(SmallCorpus, EntriesSortedAndCountMatchesLandmarks) {
  const auto entries = index_->entries();
  EXPECT_TRUE(std::is_sorted(entries.begin(), entries.end()));
  std::size_t total = 0;
  for (const auto& t : *tracks_) total += fingerprint(t.load(), FingerprintParams{}).size();
  EXPECT_EQ(entries.size(), total);
  ASSERT_EQ(index_->tracks().size(), 8u);
  EXPECT_EQ(index_->find_track(3)->name, "t3");
  EXPECT_EQ(index_->find_track(99), nullptr);
}

TEST_F(SmallCorpus, LookupReturnsExactlyTheMatchingEntries) {
  const auto entries = index_->entries();
  for (std::size_t i = 0; i < entries.size(); i += 97) {
    const auto hits = index_->lookup(entries[i].hash);
    const auto expected = std::count_if(entries.begin(), entries.end(),
                                        [&](const HashEntry& e) { return e.hash == entries[i].hash; });
    EXPECT_EQ(static_cast<std::ptrdiff_t>(hits.size()), expected);
    for (const auto& e : hits) EXPECT_EQ(e.hash, entries[i].hash);
  }
  EXPECT_TRUE(index_->lookup(0xFFFFFFFFu).empty());
}

TEST_F(SmallCorpus, BuildIsDeterministicAcrossThreadCounts) {
  const FingerprintIndex one = build_index(*tracks_, FingerprintParams{}, 1);
  EXPECT_EQ(one, *index_);
  EXPECT_EQ(serialize_index(one), serialize_index(build_index(*tracks_, FingerprintParams{}, 4)));
}

TEST_F(SmallCorpus, FullTrackFindsItselfAtOffsetZero) {
  for (const auto& t : *tracks_) {
    const MatchResult r = match_query(*index_, t.load());
    ASSERT_TRUE(r.matched());
    EXPECT_EQ(*r.track_id, t.id);
    EXPECT_LE(std::abs(r.offset_frames), 1);
    EXPECT_GE(r.score, r.runner_up_score);
  }
}

TEST_F(SmallCorpus, ExcerptFindsItsStartFrame) {
  const Waveform full = (*tracks_)[5].load();
  const int frame_samples = 256 * 44100 / 11025;
  for (int start_frame : {10, 57, 120}) {
    Waveform q{full.samples.segment(start_frame * frame_samples, 3 * 44100), 44100};
    const MatchResult r = match_query(*index_, q);
    ASSERT_TRUE(r.matched()) << start_frame;
    EXPECT_EQ(*r.track_id, 5u);
    EXPECT_NEAR(r.offset_frames, start_frame, 1);
  }
}

TEST_F(SmallCorpus, WhiteNoiseQueriesRarelyMatch) {
  int no_match = 0;
  for (std::uint64_t s = 0; s < 20; ++s) no_match += !match_query(*index_, test::white(1000 + s, 5 * 44100, 44100)).matched();
  EXPECT_GE(no_match, 18);
}

TEST_F(SmallCorpus, IndexedMatchEqualsLinearScan) {
  Rng rng(17);
  for (int q = 0; q < 40; ++q) {
    const auto& t = (*tracks_)[rng.below(tracks_->size())];
    const Waveform full = t.load();
    const auto len = static_cast<Eigen::Index>(rng.uniform(1.0, 4.0) * 44100);
    const auto off = static_cast<Eigen::Index>(rng.below(full.size() - len));
    Waveform snippet{full.samples.segment(off, len), 44100};
    snippet.samples += test::white(rng.next(), len, 44100, rng.uniform(0.0, 0.8)).samples;
    const auto lms = fingerprint(snippet, FingerprintParams{});
    MatchParams mp;
    mp.offset_tolerance = static_cast<int>(rng.below(3));
    EXPECT_EQ(match_landmarks(*index_, lms, mp), test::linear_scan_match(*index_, lms, mp)) << q;
  }
}

TEST_F(SmallCorpus, ShortQueryIsRejected) {
  EXPECT_THROW(match_query(*index_, Waveform{Eigen::VectorXf::Zero(1000), 44100}), InvalidArgument);
}

TEST(MatchLandmarks, TiesGoToSmallestTrackThenSmallestOffset) {
  const Landmark a{10, 5, 3, 0}, b{20, -5, 7, 0};
  std::vector<HashEntry> entries;
  // Track 7 and track 2 both align four hashes; track 2 wins.
  for (std::uint32_t k = 0; k < 4; ++k) {
    entries.push_back({pack_hash(a), 7, 100 + k * 10});
    entries.push_back({pack_hash(a), 2, 50 + k * 10});
  }
  FingerprintIndex idx(StftConfig{}, PeakProfile::kMaxFilter, {{7, "x", 0}, {2, "y", 0}}, entries);
  std::vector<Landmark> q;
  for (int k = 0; k < 4; ++k) q.push_back({a.f1, a.delta_f, a.delta_t, k * 10});
  MatchResult r = match_landmarks(idx, q);
  ASSERT_TRUE(r.matched());
  EXPECT_EQ(*r.track_id, 2u);
  EXPECT_EQ(r.score, 4u);
  EXPECT_EQ(r.runner_up_score, 4u);
  EXPECT_EQ(r, test::linear_scan_match(idx, q));
  // Within one track, equal windows resolve to the smaller offset.
  FingerprintIndex one(StftConfig{}, PeakProfile::kMaxFilter, {{1, "z", 0}},
                       {{pack_hash(b), 1, 40}, {pack_hash(b), 1, 80}});
  MatchParams strict;
  strict.min_score = 1;
  strict.offset_tolerance = 0;
  r = match_landmarks(one, std::vector<Landmark>{b}, strict);
  EXPECT_EQ(r.offset_frames, 40);
  EXPECT_EQ(r.score, 1u);
}

TEST(MatchLandmarks, WindowIsCentredOnAnOccupiedBin) {
  const Landmark a{10, 5, 3, 0};
  std::vector<HashEntry> entries;
  for (std::uint32_t k = 0; k < 6; ++k) entries.push_back({pack_hash(a), 1, 30 + k * 10});
  FingerprintIndex idx(StftConfig{}, PeakProfile::kMaxFilter, {{1, "x", 0}}, entries);
  std::vector<Landmark> q;
  for (int k = 0; k < 6; ++k) q.push_back({a.f1, a.delta_f, a.delta_t, 30 + k * 10});
  MatchParams mp;
  mp.min_score = 1;
  const MatchResult r = match_landmarks(idx, q, mp);
  EXPECT_EQ(r.offset_frames, 0);
  EXPECT_EQ(r, test::linear_scan_match(idx, q, mp));
}

TEST(MatchLandmarks, BelowMinScoreReportsScoreWithoutTrack) {
  const Landmark a{10, 5, 3, 0};
  FingerprintIndex idx(StftConfig{}, PeakProfile::kMaxFilter, {{1, "x", 0}}, {{pack_hash(a), 1, 5}});
  const MatchResult r = match_landmarks(idx, std::vector<Landmark>{a});
  EXPECT_FALSE(r.matched());
  EXPECT_EQ(r.score, 1u);
  EXPECT_FALSE(match_landmarks(idx, {}).matched());
}

TEST(BuildIndex, EmptyAndDegenerateInputs) {
  const FingerprintIndex empty = build_index({}, FingerprintParams{});
  EXPECT_TRUE(empty.tracks().empty());
  EXPECT_TRUE(empty.entries().empty());
  EXPECT_EQ(deserialize_index(serialize_index(empty)), empty);

  std::vector<TrackSource> dup{{1, "a", [] { return test::white(1, 44100, 44100); }},
                               {1, "b", [] { return test::white(2, 44100, 44100); }}};
  EXPECT_THROW(build_index(dup, FingerprintParams{}), InvalidArgument);

  std::vector<TrackSource> tiny{{4, "tiny", [] { return test::white(1, 100, 44100); }}};
  const FingerprintIndex t = build_index(tiny, FingerprintParams{});
  ASSERT_EQ(t.tracks().size(), 1u);
  EXPECT_EQ(t.tracks()[0].n_frames, 0u);
  EXPECT_TRUE(t.entries().empty());
}

TEST(BuildIndex, PureToneTrackHoldsItsLandmarks) {
  std::vector<TrackSource> tone{{0, "tone", [] {
                                   Waveform w = test::sine(440.0, 3.0, 44100, 0.3);
                                   w.samples += test::sine(1250.0, 3.0, 44100, 0.2).samples;
                                   return w;
                                 }}};
  const FingerprintIndex idx = build_index(tone, FingerprintParams{});
  EXPECT_EQ(idx.entries().size(), fingerprint(tone[0].load(), FingerprintParams{}).size());
}

TEST(FingerprintIndexCtor, RejectsInconsistentTables) {
  EXPECT_THROW(FingerprintIndex(StftConfig{}, PeakProfile::kMaxFilter, {{1, "a", 0}, {1, "b", 0}}, {}),
               InvalidArgument);
  EXPECT_THROW(FingerprintIndex(StftConfig{}, PeakProfile::kMaxFilter, {{1, "a", 0}}, {{5, 2, 0}}),
               InvalidArgument);
}

}  // namespace
}  // namespace afp
