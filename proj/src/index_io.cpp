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

#include "afp/error.hpp"
#include "afp/fingerprint.hpp"
#include "afp/io_util.hpp"

namespace afp {

namespace {

constexpr char kMagic[4] = {'A', 'F', 'P', 'I'};
constexpr std::uint32_t kVersion = 1;
constexpr std::size_t kEntryBytes = 12;
constexpr std::size_t kMinTrackBytes = 12;

}  // namespace

std::vector<std::byte> serialize_index(const FingerprintIndex& index) {
  ByteWriter out;
  out.reserve(64 + index.entries().size() * kEntryBytes);
  out.bytes(kMagic, sizeof(kMagic));
  out.u32(kVersion);
  const StftConfig& cfg = index.stft_config();
  out.u32(static_cast<std::uint32_t>(cfg.frame_size));
  out.u32(static_cast<std::uint32_t>(cfg.hop_size));
  out.u8(static_cast<std::uint8_t>(cfg.window));
  out.u32(static_cast<std::uint32_t>(cfg.target_rate));
  out.u8(static_cast<std::uint8_t>(index.profile()));
  out.u32(static_cast<std::uint32_t>(index.tracks().size()));
  for (const TrackInfo& t : index.tracks()) {
    out.u32(t.id);
    out.u32(t.n_frames);
    out.u32(static_cast<std::uint32_t>(t.name.size()));
    out.tag(t.name);
  }
  out.u64(index.entries().size());
  for (const HashEntry& e : index.entries()) {
    out.u32(e.hash);
    out.u32(e.track_id);
    out.u32(e.t_anchor);
  }
  return std::move(out).take();
}

FingerprintIndex deserialize_index(std::span<const std::byte> bytes) {
  ByteReader in(bytes);
  try {
    if (in.remaining() < sizeof(kMagic) || in.str(sizeof(kMagic)) != std::string(kMagic, sizeof(kMagic))) {
      throw CorruptIndex("bad magic, not an AFPI index", 0);
    }
    const std::size_t version_at = in.position();
    if (const std::uint32_t v = in.u32(); v != kVersion) {
      throw CorruptIndex("unsupported index version " + std::to_string(v), version_at);
    }
    const std::size_t cfg_at = in.position();
    StftConfig cfg;
    cfg.frame_size = static_cast<int>(in.u32());
    cfg.hop_size = static_cast<int>(in.u32());
    const std::uint8_t window = in.u8();
    cfg.target_rate = static_cast<int>(in.u32());
    if (window != static_cast<std::uint8_t>(WindowKind::kHann)) {
      throw CorruptIndex("unknown window id " + std::to_string(window), cfg_at + 8);
    }
    try {
      cfg.validate();
    } catch (const InvalidArgument& e) {
      throw CorruptIndex(std::string("invalid STFT configuration: ") + e.what(), cfg_at);
    }
    const std::size_t profile_at = in.position();
    const std::uint8_t profile = in.u8();
    if (profile > static_cast<std::uint8_t>(PeakProfile::kEnvelope)) {
      throw CorruptIndex("unknown peak profile id " + std::to_string(profile), profile_at);
    }

    const std::size_t tracks_at = in.position();
    const std::uint32_t n_tracks = in.u32();
    if (static_cast<std::uint64_t>(n_tracks) * kMinTrackBytes > in.remaining()) {
      throw CorruptIndex("track table larger than file", tracks_at);
    }
    std::vector<TrackInfo> tracks(n_tracks);
    for (TrackInfo& t : tracks) {
      t.id = in.u32();
      t.n_frames = in.u32();
      t.name = in.str(in.u32());
    }

    const std::uint64_t n_entries = in.u64();
    const std::size_t entries_at = in.position();
    const std::size_t complete = in.remaining() / kEntryBytes;
    if (n_entries > complete) {
      throw CorruptIndex("truncated entries section: header declares " + std::to_string(n_entries) +
                             " entries, file holds " + std::to_string(complete),
                         entries_at + complete * kEntryBytes);
    }
    if (in.remaining() != n_entries * kEntryBytes) {
      throw CorruptIndex("trailing bytes after entries section", entries_at + n_entries * kEntryBytes);
    }
    std::vector<HashEntry> entries(n_entries);
    for (HashEntry& e : entries) {
      e.hash = in.u32();
      e.track_id = in.u32();
      e.t_anchor = in.u32();
    }
    for (std::size_t i = 1; i < entries.size(); ++i) {
      if (entries[i] < entries[i - 1]) {
        throw CorruptIndex("entries are not sorted", entries_at + i * kEntryBytes);
      }
    }
    try {
      return FingerprintIndex(cfg, static_cast<PeakProfile>(profile), std::move(tracks), std::move(entries));
    } catch (const InvalidArgument& e) {
      throw CorruptIndex(e.what(), tracks_at);
    }
  } catch (const TruncatedRead& e) {
    throw CorruptIndex("truncated index file", e.offset());
  }
}

void save_index(const FingerprintIndex& index, const std::filesystem::path& path) {
  write_file(path, serialize_index(index));
}

FingerprintIndex load_index(const std::filesystem::path& path) {
  const auto bytes = read_file(path);
  try {
    return deserialize_index(bytes);
  } catch (const CorruptIndex& e) {
    throw CorruptIndex(path.string() + ": " + e.reason(), e.byte_offset());
  }
}

}  // namespace afp
