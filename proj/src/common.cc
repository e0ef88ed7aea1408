// Copyright 2026 The diarkit Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "diarkit/common.h"

#include <cmath>
#include <cstdio>
#include <cstdlib>

namespace diarkit {

namespace {
bool g_verbose = false;
}

Millis seconds_to_millis(double seconds) {
  if (!std::isfinite(seconds)) throw DataError("non-finite time value");
  return static_cast<Millis>(std::llround(seconds * 1000.0));
}

std::string format_millis(Millis ms) {
  const bool negative = ms < 0;
  const std::uint64_t mag = negative ? static_cast<std::uint64_t>(-ms) : static_cast<std::uint64_t>(ms);
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%s%llu.%03llu", negative ? "-" : "",
                static_cast<unsigned long long>(mag / 1000),
                static_cast<unsigned long long>(mag % 1000));
  return buf;
}

ParseError::ParseError(std::size_t line, const std::string &what)
    : DataError("line " + std::to_string(line) + ": " + what), line_(line) {}

void log_warning(const std::string &message) {
  std::fprintf(stderr, "WARNING: %s\n", message.c_str());
}

void log_info(const std::string &message) {
  if (g_verbose) std::fprintf(stderr, "%s\n", message.c_str());
}

void set_verbose(bool verbose) { g_verbose = verbose; }

}  // namespace diarkit
