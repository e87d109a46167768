// Copyright 2026 The mmadapt Authors
// SPDX-License-Identifier: Apache-2.0

#include "mmadapt/error.hpp"

namespace mma {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::dimension: return "dimension error";
    case ErrorKind::config: return "configuration error";
    case ErrorKind::contract: return "contract error";
    case ErrorKind::numeric: return "numeric error";
    case ErrorKind::io: return "io error";
    case ErrorKind::bad_magic: return "bad magic";
    case ErrorKind::version_mismatch: return "version mismatch";
    case ErrorKind::truncated: return "truncated payload";
  }
  return "error";
}

Error::Error(ErrorKind kind, const std::string& message)
    : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

void fail(ErrorKind kind, const std::string& message) { throw Error(kind, message); }

}  // namespace mma
