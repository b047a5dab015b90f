// SPDX-License-Identifier: Apache-2.0
#include "faders/error.hpp"

namespace faders {

std::string_view error_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidPitch: return "InvalidPitch";
    case ErrorCode::TokenOverflow: return "TokenOverflow";
    case ErrorCode::EmptySegment: return "EmptySegment";
    case ErrorCode::ShapeError: return "ShapeError";
    case ErrorCode::IndexError: return "IndexError";
    case ErrorCode::UnsupportedInMode: return "UnsupportedInMode";
    case ErrorCode::BatchTooSmall: return "BatchTooSmall";
    case ErrorCode::EmptyCorpus: return "EmptyCorpus";
    case ErrorCode::InvalidLabel: return "InvalidLabel";
    case ErrorCode::MalformedMidi: return "MalformedMidi";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::InvalidSweep: return "InvalidSweep";
    case ErrorCode::InsufficientSamples: return "InsufficientSamples";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

}  // namespace faders
