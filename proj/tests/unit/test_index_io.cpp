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

#include <cstring>

#include <gtest/gtest.h>

#include "afp/fingerprint.hpp"
#include "afp/io_util.hpp"
#include "support.hpp"

namespace afp {
namespace {

FingerprintIndex sample_index() {
  return FingerprintIndex(StftConfig{}, PeakProfile::kEnvelope, {{3, "three", 40}, {1, "one", 20}},
                          {{0x10, 1, 5}, {0x05, 3, 9}, {0x10, 1, 2}});
}

std::size_t offset_of_entries(const FingerprintIndex& idx) {
  std::size_t n = 4 + 4 + 4 + 4 + 1 + 4 + 1 + 4;
  for (const auto& t : idx.tracks()) n += 12 + t.name.size();
  return n + 8;
}

CorruptIndex expect_corrupt(std::span<const std::byte> bytes) {
  try {
    deserialize_index(bytes);
  } catch (const CorruptIndex& e) {
    return e;
  }
  ADD_FAILURE() << "expected CorruptIndex";
  return CorruptIndex("none", 0);
}

TEST(IndexFormat, ByteLayout) {
  const auto idx = sample_index();
  const auto bytes = serialize_index(idx);
  ByteReader r(bytes);
  EXPECT_EQ(r.str(4), "AFPI");
  EXPECT_EQ(r.u32(), 1u);
  EXPECT_EQ(r.u32(), 512u);
  EXPECT_EQ(r.u32(), 256u);
  EXPECT_EQ(r.u8(), 0u);
  EXPECT_EQ(r.u32(), 11025u);
  EXPECT_EQ(r.u8(), 1u);
  EXPECT_EQ(r.u32(), 2u);
  EXPECT_EQ(r.u32(), 1u);
  EXPECT_EQ(r.u32(), 20u);
  EXPECT_EQ(r.str(r.u32()), "one");
  EXPECT_EQ(r.u32(), 3u);
  EXPECT_EQ(r.u32(), 40u);
  EXPECT_EQ(r.str(r.u32()), "three");
  EXPECT_EQ(r.position() + 8, offset_of_entries(idx));
  EXPECT_EQ(r.u64(), 3u);
  EXPECT_EQ(r.u32(), 0x05u);
  EXPECT_EQ(r.u32(), 3u);
  EXPECT_EQ(r.u32(), 9u);
  EXPECT_EQ(r.u32(), 0x10u);
  EXPECT_EQ(r.u32(), 1u);
  EXPECT_EQ(r.u32(), 2u);
  r.skip(12);
  EXPECT_EQ(r.remaining(), 0u);
}

TEST(IndexFormat, RoundtripRandomInstances) {
  Rng rng(99);
  for (int i = 0; i < 200; ++i) {
    const FingerprintIndex idx = test::random_index(rng);
    const auto bytes = serialize_index(idx);
    const FingerprintIndex back = deserialize_index(bytes);
    ASSERT_EQ(back, idx);
    ASSERT_EQ(serialize_index(back), bytes);
  }
}

TEST(IndexFormat, FileRoundtrip) {
  test::TempDir dir;
  const auto idx = sample_index();
  save_index(idx, dir / "db.afpi");
  EXPECT_EQ(load_index(dir / "db.afpi"), idx);
  EXPECT_THROW(save_index(idx, dir / "missing/db.afpi"), IoError);
  EXPECT_THROW(load_index(dir / "absent.afpi"), IoError);
}

TEST(IndexFaults, WrongMagic) {
  auto bytes = serialize_index(sample_index());
  std::memcpy(bytes.data(), "AFPJ", 4);
  const CorruptIndex e = expect_corrupt(bytes);
  EXPECT_EQ(e.byte_offset(), 0u);
  EXPECT_EQ(expect_corrupt({}).byte_offset(), 0u);
}

TEST(IndexFaults, UnsupportedVersion) {
  auto bytes = serialize_index(sample_index());
  bytes[4] = std::byte{2};
  EXPECT_EQ(expect_corrupt(bytes).byte_offset(), 4u);
}

TEST(IndexFaults, UnknownWindowProfileOrInvalidStft) {
  auto bytes = serialize_index(sample_index());
  bytes[16] = std::byte{9};
  EXPECT_EQ(expect_corrupt(bytes).byte_offset(), 16u);
  bytes = serialize_index(sample_index());
  bytes[21] = std::byte{2};
  EXPECT_EQ(expect_corrupt(bytes).byte_offset(), 21u);
  bytes = serialize_index(sample_index());
  bytes[8] = std::byte{3};  // frame size 515
  expect_corrupt(bytes);
}

TEST(IndexFaults, TruncatedEntriesNameTheOffset) {
  const auto idx = sample_index();
  const auto bytes = serialize_index(idx);
  const std::size_t entries_at = offset_of_entries(idx);
  // Cutting inside the second entry leaves one complete entry.
  for (std::size_t cut : {entries_at + 12 + 1, entries_at + 12 + 11, entries_at + 24}) {
    const CorruptIndex e = expect_corrupt(std::span(bytes).first(cut));
    EXPECT_EQ(e.byte_offset(), entries_at + 12 * ((cut - entries_at) / 12)) << cut;
    EXPECT_NE(std::string(e.what()).find("byte offset " + std::to_string(e.byte_offset())), std::string::npos);
  }
}

TEST(IndexFaults, EveryTruncationIsDetected) {
  const auto bytes = serialize_index(sample_index());
  for (std::size_t cut = 0; cut < bytes.size(); ++cut) {
    const CorruptIndex e = expect_corrupt(std::span(bytes).first(cut));
    EXPECT_LE(e.byte_offset(), cut);
  }
}

TEST(IndexFaults, TrailingBytesAndUnsortedEntries) {
  const auto idx = sample_index();
  auto bytes = serialize_index(idx);
  bytes.push_back(std::byte{0});
  EXPECT_EQ(expect_corrupt(bytes).byte_offset(), bytes.size() - 1);
  bytes = serialize_index(idx);
  const std::size_t e0 = offset_of_entries(idx);
  std::swap_ranges(bytes.begin() + e0, bytes.begin() + e0 + 12, bytes.begin() + e0 + 24);
  EXPECT_EQ(expect_corrupt(bytes).byte_offset(), e0 + 12);
}

TEST(IndexFaults, HugeTrackCountIsRejectedBeforeAllocating) {
  auto bytes = serialize_index(sample_index());
  const std::uint32_t n = 0xFFFFFFF0u;
  std::memcpy(bytes.data() + 22, &n, 4);
  EXPECT_EQ(expect_corrupt(bytes).byte_offset(), 22u);
}

TEST(IndexFaults, UnknownTrackReference) {
  const auto idx = sample_index();
  auto bytes = serialize_index(idx);
  const std::uint32_t ghost = 77;
  std::memcpy(bytes.data() + offset_of_entries(idx) + 4, &ghost, 4);
  expect_corrupt(bytes);
}

TEST(IndexFaults, LoadPrefixesThePath) {
  test::TempDir dir;
  auto bytes = serialize_index(sample_index());
  bytes.resize(bytes.size() - 5);
  write_file(dir / "cut.afpi", bytes);
  try {
    load_index(dir / "cut.afpi");
    FAIL() << "expected CorruptIndex";
  } catch (const CorruptIndex& e) {
    const std::string what = e.what();
    EXPECT_NE(what.find("cut.afpi"), std::string::npos);
    EXPECT_EQ(what.find("byte offset"), what.rfind("byte offset"));
  }
}

}  // namespace
}  // namespace afp
