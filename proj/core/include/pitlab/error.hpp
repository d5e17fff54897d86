// Copyright (c) 2026, pitlab authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace pitlab {

/// Broad failure classes. The CLI maps them onto its exit codes.
enum class ErrorKind {
  usage,      // bad arguments, unknown names, invalid configuration
  data,       // malformed or inconsistent input files
  numerical,  // NaN/Inf, shape mismatch, degenerate losses
  state,      // API misuse (e.g. backward twice on one tape)
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) {
  throw Error(kind, what);
}

}  // namespace pitlab
