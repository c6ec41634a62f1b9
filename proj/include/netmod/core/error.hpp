#pragma once

#include <stdexcept>
#include <string>

namespace netmod {

enum class Errc {
  // sample construction and lookup
  PathDisconnected,
  QueuePortMismatch,
  UnknownReference,
  InvalidTopology,
  // simulation
  ZeroTraffic,
  NumericOverflow,
  AllQueuesEmpty,
  // queuing theory
  InvalidRate,
  // differentiable core
  ShapeMismatch,
  NotScalarLoss,
  // model / training
  ZeroLabel,
  UnlabeledSample,
  DivergenceDetected,
  SchemaMismatch,
  // dataset generation
  InfeasibleSpec,
  BadFractions,
  // evaluation
  LengthMismatch,
  ZeroTruth,
  MissingArtifact,
  // io
  ParseError,
};

const char* errc_name(Errc c);

// Single exception type; the code discriminates for callers that care
// (the CLI maps MissingArtifact to exit 3, everything else to exit 2).
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}

  Errc code() const { return code_; }

 private:
  Errc code_;
};

[[noreturn]] inline void fail(Errc code, const std::string& what) { throw Error(code, what); }

}  // namespace netmod
