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

#ifndef AFP_ERROR_HPP_
#define AFP_ERROR_HPP_

#include <cstdint>
#include <stdexcept>
#include <string>

namespace afp {

class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Unreadable, unwritable or missing files. The message names the path.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class CorruptIndex : public std::runtime_error {
 public:
  CorruptIndex(const std::string& what, std::uint64_t byte_offset)
      : std::runtime_error(what + " (at byte offset " +
                           std::to_string(byte_offset) + ")"),
        reason_(what),
        byte_offset_(byte_offset) {}

  const std::string& reason() const noexcept { return reason_; }
  std::uint64_t byte_offset() const noexcept { return byte_offset_; }

 private:
  std::string reason_;
  std::uint64_t byte_offset_;
};

class ExternalDenoiserError : public std::runtime_error {
 public:
  enum class Kind { kLaunch, kExitStatus, kTimeout, kMalformedOutput, kShapeMismatch };

  ExternalDenoiserError(Kind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

}  // namespace afp

#endif  // AFP_ERROR_HPP_
