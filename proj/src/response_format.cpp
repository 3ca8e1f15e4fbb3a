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

#include "trajreward/response_format.hpp"

#include <charconv>
#include <string>
#include <system_error>
#include <utility>

namespace trajreward
{

namespace
{

constexpr std::string_view kThinkOpen = "<think>";
constexpr std::string_view kThinkClose = "</think>";
constexpr std::string_view kOutputOpen = "<output>";
constexpr std::string_view kOutputClose = "</output>";

bool is_space(char c)
{
  return c == ' ' || c == '\t' || c == '\n' || c == '\r';
}

std::size_t skip_space(std::string_view text, std::size_t pos)
{
  while (pos < text.size() && is_space(text[pos])) {
    ++pos;
  }
  return pos;
}

bool is_digit(char c)
{
  return c >= '0' && c <= '9';
}

/// Recursive-descent reader over the bracketed payload grammar.
class PayloadReader
{
public:
  PayloadReader(std::string_view text, std::size_t base_offset)
  : text_(text), base_(base_offset)
  {
  }

  bool expect(char c)
  {
    pos_ = skip_space(text_, pos_);
    if (pos_ < text_.size() && text_[pos_] == c) {
      ++pos_;
      return true;
    }
    fail(std::string("expected '") + c + "'");
    return false;
  }

  bool peek(char c)
  {
    pos_ = skip_space(text_, pos_);
    return pos_ < text_.size() && text_[pos_] == c;
  }

  bool number(double & out)
  {
    pos_ = skip_space(text_, pos_);
    const std::size_t start = pos_;
    std::size_t p = pos_;
    bool negative = false;
    if (p < text_.size() && (text_[p] == '+' || text_[p] == '-')) {
      negative = text_[p] == '-';
      ++p;
    }
    const std::size_t digits_begin = p;
    while (p < text_.size() && is_digit(text_[p])) {
      ++p;
    }
    if (p == digits_begin) {
      pos_ = start;
      fail("expected a number");
      return false;
    }
    if (p < text_.size() && text_[p] == '.') {
      const std::size_t frac_begin = ++p;
      while (p < text_.size() && is_digit(text_[p])) {
        ++p;
      }
      if (p == frac_begin) {
        pos_ = p;
        fail("expected digits after '.'");
        return false;
      }
    }
    double value = 0.0;
    const char * first = text_.data() + digits_begin;
    const char * last = text_.data() + p;
    const auto [ptr, ec] = std::from_chars(first, last, value, std::chars_format::fixed);
    if (ec != std::errc() || ptr != last) {
      pos_ = start;
      fail("number out of range");
      return false;
    }
    out = negative ? -value : value;
    pos_ = p;
    return true;
  }

  bool at_end()
  {
    pos_ = skip_space(text_, pos_);
    if (pos_ != text_.size()) {
      fail("unexpected text after payload");
      return false;
    }
    return true;
  }

  const FormatError & error() const { return error_; }

private:
  void fail(std::string message)
  {
    error_ = {FormatErrorCode::payload_syntax, base_ + pos_, std::move(message)};
  }

  std::string_view text_;
  std::size_t base_;
  std::size_t pos_ = 0;
  FormatError error_{FormatErrorCode::payload_syntax, 0, {}};
};

/// Reads `[v0,v1,...]` with exactly `count` numbers.
bool read_tuple(PayloadReader & in, double * values, int count)
{
  if (!in.expect('[')) {
    return false;
  }
  for (int i = 0; i < count; ++i) {
    if (i > 0 && !in.expect(',')) {
      return false;
    }
    if (!in.number(values[i])) {
      return false;
    }
  }
  return in.expect(']');
}

/// Reads `[item, item, ...]`, calling `item` for each element.
template <typename ItemFn>
bool read_list(PayloadReader & in, ItemFn && item)
{
  if (!in.expect('[')) {
    return false;
  }
  if (in.peek(']')) {
    return in.expect(']');
  }
  do {
    if (!item()) {
      return false;
    }
  } while (in.peek(',') && in.expect(','));
  return in.expect(']');
}

}  // namespace

std::string_view to_string(TaskKind kind)
{
  return kind == TaskKind::affordance ? "affordance" : "trajectory";
}

std::optional<TaskKind> parse_task_kind(std::string_view text)
{
  if (text == "affordance") {
    return TaskKind::affordance;
  }
  if (text == "trajectory") {
    return TaskKind::trajectory;
  }
  return std::nullopt;
}

TaskKind kind_of(const Payload & payload)
{
  return std::holds_alternative<AffordancePayload>(payload) ? TaskKind::affordance
                                                            : TaskKind::trajectory;
}

std::string_view to_string(FormatErrorCode code)
{
  switch (code) {
    case FormatErrorCode::missing_think:
      return "MissingThink";
    case FormatErrorCode::missing_output:
      return "MissingOutput";
    case FormatErrorCode::order_violation:
      return "OrderViolation";
    case FormatErrorCode::trailing_garbage:
      return "TrailingGarbage";
    case FormatErrorCode::payload_syntax:
      return "PayloadSyntax";
  }
  return "Unknown";
}

std::variant<Payload, FormatError> parse_payload(
  std::string_view text, TaskKind kind, std::size_t base_offset, bool * flagged)
{
  PayloadReader in(text, base_offset);
  bool any_flag = false;

  if (kind == TaskKind::affordance) {
    AffordancePayload payload;
    const bool ok = read_list(in, [&] {
      double v[4];
      if (!read_tuple(in, v, 4)) {
        return false;
      }
      const auto normalized = normalize_box(Box<double>{v[0], v[1], v[2], v[3]});
      any_flag |= normalized.flagged;
      payload.boxes.push_back(normalized.box);
      return true;
    });
    if (!ok || !in.at_end()) {
      return in.error();
    }
    if (flagged) {
      *flagged = any_flag;
    }
    return Payload{std::move(payload)};
  }

  std::vector<std::pair<double, double>> points;
  const bool ok = read_list(in, [&] {
    double v[2];
    if (!read_tuple(in, v, 2)) {
      return false;
    }
    points.emplace_back(v[0], v[1]);
    return true;
  });
  if (!ok || !in.at_end()) {
    return in.error();
  }
  if (points.size() < 2) {
    return FormatError{
      FormatErrorCode::payload_syntax, base_offset,
      "a trajectory needs at least two waypoints"};
  }
  PointMatrix<double> pts(static_cast<Eigen::Index>(points.size()), 2);
  for (std::size_t i = 0; i < points.size(); ++i) {
    pts(static_cast<Eigen::Index>(i), 0) = points[i].first;
    pts(static_cast<Eigen::Index>(i), 1) = points[i].second;
  }
  auto traj = Trajectory<double>::clamped_to_frame(std::move(pts));
  if (flagged) {
    *flagged = traj.clamped();
  }
  return Payload{TrajectoryPayload{std::move(traj)}};
}

ParseResult parse_response(std::string_view raw, TaskKind kind)
{
  std::size_t pos = skip_space(raw, 0);

  if (!raw.substr(pos).starts_with(kThinkOpen)) {
    if (raw.substr(pos).starts_with(kOutputOpen) &&
      raw.find(kThinkOpen, pos) != std::string_view::npos)
    {
      return FormatError{
        FormatErrorCode::order_violation, pos, "<output> block precedes the <think> block"};
    }
    return FormatError{FormatErrorCode::missing_think, pos, "expected <think>"};
  }
  const std::size_t think_begin = pos + kThinkOpen.size();
  const std::size_t think_end = raw.find(kThinkClose, think_begin);
  if (think_end == std::string_view::npos) {
    return FormatError{FormatErrorCode::missing_think, pos, "unterminated <think> block"};
  }
  std::string think(raw.substr(think_begin, think_end - think_begin));

  pos = skip_space(raw, think_end + kThinkClose.size());
  if (!raw.substr(pos).starts_with(kOutputOpen)) {
    return FormatError{FormatErrorCode::missing_output, pos, "expected <output>"};
  }
  const std::size_t output_begin = pos + kOutputOpen.size();
  const std::size_t output_end = raw.find(kOutputClose, output_begin);
  if (output_end == std::string_view::npos) {
    return FormatError{FormatErrorCode::missing_output, pos, "unterminated <output> block"};
  }

  bool flagged = false;
  auto payload = parse_payload(
    raw.substr(output_begin, output_end - output_begin), kind, output_begin, &flagged);
  if (auto * error = std::get_if<FormatError>(&payload)) {
    return std::move(*error);
  }

  const std::size_t tail = skip_space(raw, output_end + kOutputClose.size());
  if (tail != raw.size()) {
    return FormatError{
      FormatErrorCode::trailing_garbage, tail, "unexpected text after </output>"};
  }
  return ParsedResponse{std::move(think), std::get<Payload>(std::move(payload)), flagged};
}

double format_reward(std::string_view raw, TaskKind kind) noexcept
{
  try {
    return parse_response(raw, kind).ok() ? 1.0 : 0.0;
  } catch (...) {
    return 0.0;
  }
}

std::string format_number(double value)
{
  value += 0.0;  // no "-0"
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value, std::chars_format::fixed);
  if (ec != std::errc()) {
    throw std::invalid_argument("coordinate cannot be formatted");
  }
  return std::string(buf, ptr);
}

std::string serialize_payload(const Payload & payload)
{
  std::string out = "[";
  if (const auto * aff = std::get_if<AffordancePayload>(&payload)) {
    for (std::size_t i = 0; i < aff->boxes.size(); ++i) {
      const auto & b = aff->boxes[i];
      if (i > 0) {
        out += ',';
      }
      out += '[' + format_number(b.x1) + ',' + format_number(b.y1) + ',' + format_number(b.x2) +
        ',' + format_number(b.y2) + ']';
    }
  } else {
    const auto & traj = std::get<TrajectoryPayload>(payload).waypoints;
    for (Eigen::Index i = 0; i < traj.size(); ++i) {
      if (i > 0) {
        out += ',';
      }
      out += '[' + format_number(traj.points()(i, 0)) + ',' + format_number(traj.points()(i, 1)) +
        ']';
    }
  }
  out += ']';
  return out;
}

std::string wrap_response(std::string_view think, const Payload & payload)
{
  std::string out;
  out.reserve(think.size() + 64);
  out += kThinkOpen;
  out += think;
  out += kThinkClose;
  out += kOutputOpen;
  out += serialize_payload(payload);
  out += kOutputClose;
  return out;
}

}  // namespace trajreward
