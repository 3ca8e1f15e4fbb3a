// Copyright 2026 The trajreward Authors
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

#ifndef TRAJREWARD__RESPONSE_FORMAT_HPP_
#define TRAJREWARD__RESPONSE_FORMAT_HPP_

#include "trajreward/geometry.hpp"
#include "trajreward/metrics.hpp"

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace trajreward
{

enum class TaskKind { affordance, trajectory };

std::string_view to_string(TaskKind kind);
std::optional<TaskKind> parse_task_kind(std::string_view text);

/// Predicted boxes; an empty list is the "no object" answer.
struct AffordancePayload
{
  std::vector<Box<double>> boxes;

  bool operator==(const AffordancePayload &) const = default;
};

/// At least two waypoints.
struct TrajectoryPayload
{
  Trajectory<double> waypoints;

  bool operator==(const TrajectoryPayload &) const = default;
};

using Payload = std::variant<AffordancePayload, TrajectoryPayload>;

TaskKind kind_of(const Payload & payload);

struct ParsedResponse
{
  std::string think;  // exact text between the think tags
  Payload payload;
  bool flagged = false;  // some coordinate was clamped or a box had swapped corners
};

enum class FormatErrorCode {
  missing_think,
  missing_output,
  order_violation,
  trailing_garbage,
  payload_syntax,
};

std::string_view to_string(FormatErrorCode code);

struct FormatError
{
  FormatErrorCode code;
  std::size_t offset;  // byte offset of the first failure in the raw text
  std::string message;
};

/// Either a parsed response or the first format violation.
class ParseResult
{
public:
  ParseResult(ParsedResponse value) : value_(std::move(value)) {}  // NOLINT
  ParseResult(FormatError error) : value_(std::move(error)) {}      // NOLINT

  bool ok() const { return std::holds_alternative<ParsedResponse>(value_); }
  explicit operator bool() const { return ok(); }

  const ParsedResponse & value() const { return std::get<ParsedResponse>(value_); }
  ParsedResponse & value() { return std::get<ParsedResponse>(value_); }
  const FormatError & error() const { return std::get<FormatError>(value_); }

private:
  std::variant<ParsedResponse, FormatError> value_;
};

/// Strict parse of `<think>...</think><output>...</output>`.
///
/// Leading and trailing whitespace and whitespace between the two blocks are
/// allowed; anything else outside the blocks is an error. Tags are
/// case-sensitive. The output block must hold a bracketed list in the
/// payload grammar of `kind`:
///   affordance  `[]` or `[[x1,y1,x2,y2],...]`
///   trajectory  `[[x,y],[x,y],...]` with at least two waypoints
/// Numbers are `[+-]?digits(.digits)?`; whitespace between tokens is allowed.
/// Coordinates are clamped into [0, 1000) and boxes have their corners
/// ordered, both of which set `flagged`.
ParseResult parse_response(std::string_view raw, TaskKind kind);

/// Parses only the bracketed payload. `base_offset` is added to error offsets.
std::variant<Payload, FormatError> parse_payload(
  std::string_view text, TaskKind kind, std::size_t base_offset = 0, bool * flagged = nullptr);

/// 1 if `raw` parses for `kind`, else 0. Never throws.
double format_reward(std::string_view raw, TaskKind kind) noexcept;

/// Canonical payload text: no whitespace, integral values without a decimal
/// point, otherwise the shortest decimal that reads back to the same double.
std::string serialize_payload(const Payload & payload);

/// Canonical form of one coordinate.
std::string format_number(double value);

/// `<think>think</think><output>payload</output>`.
std::string wrap_response(std::string_view think, const Payload & payload);

}  // namespace trajreward

#endif  // TRAJREWARD__RESPONSE_FORMAT_HPP_
