#include "octpost/error.hpp"

namespace octpost {

const char* err_name(Err code) noexcept {
  switch (code) {
    case Err::NoFrames: return "NoFrames";
    case Err::DimensionMismatch: return "DimensionMismatch";
    case Err::DecodeError: return "DecodeError";
    case Err::IoError: return "IoError";
    case Err::FrameOrder: return "FrameOrder";
    case Err::GroupMismatch: return "GroupMismatch";
    case Err::SpecInvalid: return "SpecInvalid";
    case Err::ConstantInput: return "ConstantInput";
    case Err::AllGaps: return "AllGaps";
    case Err::ImageTooSmall: return "ImageTooSmall";
    case Err::MixedDescriptorKinds: return "MixedDescriptorKinds";
    case Err::InsufficientMatches: return "InsufficientMatches";
    case Err::Degenerate: return "Degenerate";
    case Err::NoSlab: return "NoSlab";
    case Err::BadParams: return "BadParams";
    case Err::Malformed: return "Malformed";
    case Err::NoMatchingFrames: return "NoMatchingFrames";
    case Err::RegionOutOfBounds: return "RegionOutOfBounds";
    case Err::NoRegions: return "NoRegions";
    case Err::NoBoundaries: return "NoBoundaries";
    case Err::NoOverlapColumns: return "NoOverlapColumns";
    case Err::UnknownLayer: return "UnknownLayer";
    case Err::FilledMask: return "FilledMask";
    case Err::ConfigInvalid: return "ConfigInvalid";
  }
  return "UnknownError";
}

}  // namespace octpost
