// Copyright 2026 The mmadapt Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace mma {

/// Broad failure categories. The CLI maps these onto its exit codes and the
/// sample reader uses the three file kinds to tell corruptions apart.
enum class ErrorKind {
  dimension,
  config,
  contract,
  numeric,
  io,
  bad_magic,
  version_mismatch,
  truncated,
};

std::string_view to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message);

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] void fail(ErrorKind kind, const std::string& message);

inline void require(bool condition, ErrorKind kind, const std::string& message) {
  if (!condition) fail(kind, message);
}

}  // namespace mma
