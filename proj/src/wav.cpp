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

#include "afp/wav.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>

#include "afp/dsp.hpp"
#include "afp/error.hpp"
#include "afp/io_util.hpp"

namespace afp {

namespace {

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatFloat = 3;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

bool tag_is(std::span<const std::byte> b, std::size_t at, const char* tag) {
  return at + 4 <= b.size() && std::memcmp(b.data() + at, tag, 4) == 0;
}

}  // namespace

Waveform decode_wav(std::span<const std::byte> bytes) {
  ByteReader in(bytes);
  if (!tag_is(bytes, 0, "RIFF") || !tag_is(bytes, 8, "WAVE")) {
    throw IoError("not a RIFF/WAVE stream");
  }
  in.seek(12);

  std::uint16_t format = 0, channels = 0, bits = 0;
  std::uint32_t rate = 0;
  bool have_fmt = false;
  std::span<const std::byte> data;
  bool have_data = false;

  while (in.remaining() >= 8) {
    const std::size_t tag_at = in.position();
    in.skip(4);
    const std::uint32_t chunk_len = in.u32();
    const std::size_t body = in.position();
    if (tag_is(bytes, tag_at, "fmt ")) {
      if (chunk_len < 16 || in.remaining() < 16) throw IoError("truncated fmt chunk");
      format = in.u16();
      channels = in.u16();
      rate = in.u32();
      in.skip(6);  // byte rate, block align
      bits = in.u16();
      if (format == kFormatExtensible) {
        if (chunk_len < 40 || in.remaining() < 24) throw IoError("truncated WAVE_FORMAT_EXTENSIBLE chunk");
        in.skip(8);  // cbSize, valid bits, channel mask
        format = in.u16();
      }
      have_fmt = true;
    } else if (tag_is(bytes, tag_at, "data")) {
      const std::size_t len = std::min<std::size_t>(chunk_len, in.remaining());
      data = bytes.subspan(body, len);
      have_data = true;
    }
    const std::size_t next = body + chunk_len + (chunk_len & 1u);
    if (next > bytes.size()) break;
    in.seek(next);
  }

  if (!have_fmt) throw IoError("WAV stream has no fmt chunk");
  if (!have_data) throw IoError("WAV stream has no data chunk");
  if (channels == 0) throw IoError("WAV stream declares zero channels");
  if (rate == 0) throw IoError("WAV stream declares a zero sample rate");
  const bool pcm16 = format == kFormatPcm && bits == 16;
  const bool f32 = format == kFormatFloat && bits == 32;
  if (!pcm16 && !f32) {
    throw IoError("unsupported WAV encoding (format " + std::to_string(format) + ", " +
                  std::to_string(bits) + " bits); only 16-bit PCM and 32-bit float are accepted");
  }

  const std::size_t frame_bytes = static_cast<std::size_t>(channels) * (bits / 8);
  const auto n = static_cast<Eigen::Index>(data.size() / frame_bytes);
  Eigen::MatrixXf pcm(channels, n);
  ByteReader d(data);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (std::uint16_t c = 0; c < channels; ++c) {
      pcm(c, i) = pcm16 ? static_cast<float>(static_cast<std::int16_t>(d.u16())) / 32768.0f
                        : std::bit_cast<float>(d.u32());
    }
  }
  Waveform w = downmix(pcm, static_cast<int>(rate));
  if (!w.samples.allFinite()) throw IoError("WAV stream contains non-finite samples");
  return w;
}

Waveform read_wav(const std::filesystem::path& path) {
  try {
    const std::vector<std::byte> bytes = read_file(path);
    return decode_wav(bytes);
  } catch (const IoError& e) {
    const std::string msg = e.what();
    if (msg.find(path.string()) != std::string::npos) throw;
    throw IoError(path.string() + ": " + msg);
  }
}

std::vector<std::byte> encode_wav(const Waveform& w, WavEncoding encoding) {
  validate(w);
  const bool pcm16 = encoding == WavEncoding::kPcm16;
  const std::uint16_t bits = pcm16 ? 16 : 32;
  const auto data_len = static_cast<std::uint32_t>(w.size() * (bits / 8));
  ByteWriter out;
  out.tag("RIFF");
  out.u32(36 + data_len);
  out.tag("WAVE");
  out.tag("fmt ");
  out.u32(16);
  out.u16(pcm16 ? kFormatPcm : kFormatFloat);
  out.u16(1);
  out.u32(static_cast<std::uint32_t>(w.sample_rate));
  out.u32(static_cast<std::uint32_t>(w.sample_rate) * (bits / 8));
  out.u16(bits / 8);
  out.u16(bits);
  out.tag("data");
  out.u32(data_len);
  for (Eigen::Index i = 0; i < w.size(); ++i) {
    if (pcm16) {
      const float clamped = std::clamp(w.samples[i], -1.0f, 32767.0f / 32768.0f);
      out.u16(static_cast<std::uint16_t>(static_cast<std::int16_t>(std::lrint(clamped * 32768.0f))));
    } else {
      out.u32(std::bit_cast<std::uint32_t>(w.samples[i]));
    }
  }
  return std::move(out).take();
}

void write_wav(const std::filesystem::path& path, const Waveform& w, WavEncoding encoding) {
  write_file(path, encode_wav(w, encoding));
}

}  // namespace afp
