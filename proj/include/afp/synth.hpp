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

// Procedural desk corpus: music-like tracks, background scenes and room
// impulse responses generated from seeds. Used by the test suites and the
// afp-make-corpus tool when real recordings are not at hand.

#ifndef AFP_SYNTH_HPP_
#define AFP_SYNTH_HPP_

#include <cstdint>
#include <filesystem>
#include <string>

#include "afp/types.hpp"

namespace afp::synth {

/// Melody, bass, chord pad and drums at a random tempo and key.
Waveform track(std::uint64_t seed, double seconds, int rate = 44100);

/// Background scene noise; `scene` selects one of the twenty scene classes
/// and thereby the texture family (babble, traffic, hum, nature, transit).
Waveform scene_noise(std::uint64_t seed, std::size_t scene, double seconds, int rate = 22050);

/// Direct path, early reflections and an exponentially decaying tail.
Waveform impulse_response(std::uint64_t seed, int rate = 32000);

struct CorpusSpec {
  std::size_t n_tracks = 100;
  double track_seconds = 12.0;
  std::size_t noises_per_scene = 1;
  double noise_seconds = 5.0;
  std::size_t n_impulse_responses = 12;
  std::uint64_t seed = 7;
};

struct CorpusPaths {
  std::filesystem::path index_manifest;  // [{path, track_id, name}]
  std::filesystem::path query_manifest;  // [{path, track_id}]
  std::filesystem::path noise_manifest;  // [{path, class, split}]
  std::filesystem::path ir_manifest;     // [{path, class, split}]
};

/// Writes WAV files and the four manifests under `dir`.
CorpusPaths write_corpus(const std::filesystem::path& dir, const CorpusSpec& spec);

inline std::uint64_t track_seed(const CorpusSpec& spec, std::size_t i) { return spec.seed * 1000003ull + i; }

}  // namespace afp::synth

#endif  // AFP_SYNTH_HPP_
