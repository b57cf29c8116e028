// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace songseg {

enum class Errc {
  // annotation parsing / schema
  malformed_line,
  non_monotonic_times,
  missing_end,
  unmapped_label,
  // frame grids / targets
  non_positive_duration,
  missing_valid_ranges,
  // feature files / fusion
  bad_magic,
  truncated_file,
  dimension_overflow,
  mismatched_dims,
  nothing_to_fuse,
  // model
  input_too_short,
  unknown_source,
  // losses
  length_mismatch,
  bad_class_index,
  too_short,
  // training
  empty_corpus,
  non_finite_loss,
  // cli / io
  missing_pair,
  config_error,
  io_failure,
};

inline const char* errc_name(Errc c) {
  switch (c) {
    case Errc::malformed_line:        return "MalformedLine";
    case Errc::non_monotonic_times:   return "NonMonotonicTimes";
    case Errc::missing_end:           return "MissingEnd";
    case Errc::unmapped_label:        return "UnmappedLabel";
    case Errc::non_positive_duration: return "NonPositiveDuration";
    case Errc::missing_valid_ranges:  return "MissingValidRanges";
    case Errc::bad_magic:             return "BadMagic";
    case Errc::truncated_file:        return "TruncatedFile";
    case Errc::dimension_overflow:    return "DimensionOverflow";
    case Errc::mismatched_dims:       return "MismatchedDims";
    case Errc::nothing_to_fuse:       return "NothingToFuse";
    case Errc::input_too_short:       return "InputTooShort";
    case Errc::unknown_source:        return "UnknownSource";
    case Errc::length_mismatch:       return "LengthMismatch";
    case Errc::bad_class_index:       return "BadClassIndex";
    case Errc::too_short:             return "TooShort";
    case Errc::empty_corpus:          return "EmptyCorpus";
    case Errc::non_finite_loss:       return "NonFiniteLoss";
    case Errc::missing_pair:          return "MissingPair";
    case Errc::config_error:          return "ConfigError";
    case Errc::io_failure:            return "IOFailure";
  }
  return "UnknownError";
}

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

[[noreturn]] inline void fail(Errc code, const std::string& msg) { throw Error(code, msg); }

}  // namespace songseg
