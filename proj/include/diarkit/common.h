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

#ifndef DIARKIT_COMMON_H_
#define DIARKIT_COMMON_H_

#include <cstdint>
#include <stdexcept>
#include <string>

namespace diarkit {

// Integer milliseconds. All timeline arithmetic happens in this unit.
using Millis = std::int64_t;

Millis seconds_to_millis(double seconds);
inline double millis_to_seconds(Millis ms) { return static_cast<double>(ms) / 1000.0; }

// Renders a millisecond count as "<s>.<mmm>" without going through floating point.
std::string format_millis(Millis ms);

// Invalid parameters or configuration. The CLI maps this to exit code 2.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed, inconsistent or out-of-domain data. The CLI maps this to exit code 3.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Input text that cannot be parsed; carries the 1-based line number.
class ParseError : public DataError {
 public:
  ParseError(std::size_t line, const std::string &what);
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

void log_warning(const std::string &message);
void log_info(const std::string &message);

// Sets the verbosity of log_info (warnings are always printed).
void set_verbose(bool verbose);

}  // namespace diarkit

#endif  // DIARKIT_COMMON_H_
