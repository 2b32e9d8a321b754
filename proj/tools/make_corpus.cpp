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

// Writes a procedural desk corpus (tracks, scene noises, impulse responses)
// with manifests ready for `afp index build`, `afp augment` and `afp bench`.

#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "afp/error.hpp"
#include "afp/synth.hpp"

int main(int argc, char** argv) {
  CLI::App app{"afp-make-corpus: generate a synthetic desk corpus"};
  std::string dir;
  afp::synth::CorpusSpec spec;
  app.add_option("--out-dir", dir, "output directory")->required();
  app.add_option("--tracks", spec.n_tracks, "number of tracks")->capture_default_str();
  app.add_option("--track-seconds", spec.track_seconds, "track duration")->capture_default_str();
  app.add_option("--noises-per-scene", spec.noises_per_scene, "noise clips per scene class")->capture_default_str();
  app.add_option("--impulse-responses", spec.n_impulse_responses, "number of room responses")->capture_default_str();
  app.add_option("--seed", spec.seed, "corpus seed")->capture_default_str();
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }
  std::cerr << "afp-make-corpus: seed=" << spec.seed << "\n";
  try {
    const auto p = afp::synth::write_corpus(dir, spec);
    std::cout << nlohmann::ordered_json{{"index_manifest", p.index_manifest.string()},
                                        {"query_manifest", p.query_manifest.string()},
                                        {"noise_manifest", p.noise_manifest.string()},
                                        {"ir_manifest", p.ir_manifest.string()}}
                     .dump(2)
              << "\n";
  } catch (const afp::IoError& e) {
    std::cerr << "afp-make-corpus: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
