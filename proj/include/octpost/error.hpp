#pragma once

#include <stdexcept>
#include <string>

namespace octpost {

// Stable error codes; exact code identity is part of the API contract and
// is asserted in tests.
enum class Err {
  NoFrames,
  DimensionMismatch,
  DecodeError,
  IoError,
  FrameOrder,
  GroupMismatch,
  SpecInvalid,
  ConstantInput,
  AllGaps,
  ImageTooSmall,
  MixedDescriptorKinds,
  InsufficientMatches,
  Degenerate,
  NoSlab,
  BadParams,
  Malformed,
  NoMatchingFrames,
  RegionOutOfBounds,
  NoRegions,
  NoBoundaries,
  NoOverlapColumns,
  UnknownLayer,
  FilledMask,
  ConfigInvalid,
};

const char* err_name(Err code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(Err code, const std::string& message)
      : std::runtime_error(std::string(err_name(code)) + ": " + message),
        code_(code) {}

  Err code() const noexcept { return code_; }

 private:
  Err code_;
};

[[noreturn]] inline void fail(Err code, const std::string& message) {
  throw Error(code, message);
}

inline void require(bool ok, Err code, const std::string& message) {
  if (!ok) fail(code, message);
}

}  // namespace octpost
