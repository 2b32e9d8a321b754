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

#ifndef AFP_WAV_HPP_
#define AFP_WAV_HPP_

#include <cstddef>
#include <filesystem>
#include <span>
#include <vector>

#include "afp/types.hpp"

namespace afp {

enum class WavEncoding { kPcm16, kFloat32 };

/// Decodes little-endian RIFF/WAVE holding 16-bit PCM or 32-bit float samples.
/// Multichannel audio is averaged down to mono. Anything else is rejected with
/// IoError.
Waveform decode_wav(std::span<const std::byte> bytes);
Waveform read_wav(const std::filesystem::path& path);

std::vector<std::byte> encode_wav(const Waveform& w, WavEncoding encoding = WavEncoding::kFloat32);
void write_wav(const std::filesystem::path& path, const Waveform& w,
               WavEncoding encoding = WavEncoding::kFloat32);

}  // namespace afp

#endif  // AFP_WAV_HPP_
