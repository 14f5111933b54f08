#pragma once

#include <stdexcept>
#include <string>

namespace attnet {

// Every failure surfaced by the library carries one of these codes so
// callers (and tests) can branch on the condition instead of parsing text.
enum class Err {
  // dataset parsing
  WrongMagic,
  TruncatedFile,
  ZeroCount,
  LabelOutOfRange,
  NotMultipleOfRecordSize,
  WrongInputShape,
  CountMismatch,
  SubsetTooLarge,
  // network math
  ShapeMismatch,
  NonFiniteActivation,
  DegenerateProbability,
  // training
  AsymmetricArch,
  StageDiverged,
  // serialization
  IoError,
  BadMagic,
  VersionUnsupported,
  ChecksumMismatch,
  // detection
  ZeroVariance,
  LengthMismatch,
  NonSquare,
  ConvergenceFailure,
  NotAFixedPoint,
  // harness
  SingleClassTruth,
  EmptyDataset,
  ConfigError,
  UsageError,
};

const char* err_name(Err code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(Err code, const std::string& msg)
      : std::runtime_error(std::string(err_name(code)) + ": " + msg), code_(code) {}

  Err code() const noexcept { return code_; }

 private:
  Err code_;
};

[[noreturn]] inline void raise(Err code, const std::string& msg) { throw Error(code, msg); }

inline void require(bool cond, Err code, const std::string& msg) {
  if (!cond) raise(code, msg);
}

}  // namespace attnet
