#pragma once

// Text form of entity records and the parser for raw generations.
//
// Grammar (canonical on emit, whitespace-tolerant on parse):
//
//   record     = span " | " type " | " ( boxliteral / "None" )
//   boxliteral = "[" number ", " number ", " number ", " number "]"
//   number     = [ "-" ] 1*DIGIT [ "." 1*DIGIT ]      ; emit: integers only
//
// A generation is free-form reasoning followed by records, one per line.
// The record block is the maximal run of trailing lines that contain a '|'
// (blank lines inside it are ignored). Each line in the block either parses
// into a record or yields a diagnostic; nothing is dropped silently.
// Fields are split at the last two '|' characters, so spans may contain
// pipes while types may not.

#include <charconv>
#include <cmath>
#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "gmner/error.hpp"
#include "gmner/geometry.hpp"
#include "gmner/records.hpp"

namespace gmner {

inline constexpr std::string_view kFieldSep = " | ";
inline constexpr std::string_view kNoBox = "None";

enum class CoordFrame {
  absolute,        // pixels in the (W, H) frame of the example
  normalized_1000  // 0..1000 on both axes, rescaled with the example's dims
};

// Round half away from zero.
inline long long round_coord(double v) { return std::llround(v); }

inline Box round_box(const Box& b) {
  return {static_cast<double>(round_coord(b.x1)), static_cast<double>(round_coord(b.y1)),
          static_cast<double>(round_coord(b.x2)), static_cast<double>(round_coord(b.y2))};
}

inline std::string serialize_record(const EntityRecord& r) {
  const std::string span = normalize_span(r.span);
  const std::string_view etype = trim(r.etype);
  if (span.empty()) throw SerializationError("record has an empty span");
  // Parsing splits from the right and would cope, but the emitted line
  // should read unambiguously.
  if (span.find(kFieldSep) != std::string::npos) {
    throw SerializationError("span '" + span + "' contains the field separator \" | \"");
  }
  if (etype.empty()) throw SerializationError("record '" + span + "' has an empty type");
  if (etype.find('|') != std::string_view::npos ||
      etype.find('\n') != std::string_view::npos) {
    throw SerializationError("type '" + std::string(etype) +
                             "' must not contain '|' or line breaks");
  }

  std::string out = span;
  out += kFieldSep;
  out += etype;
  out += kFieldSep;
  if (!r.box) {
    out += kNoBox;
    return out;
  }
  require_valid(*r.box);
  const Box q = round_box(*r.box);
  if (!q.valid()) {
    throw SerializationError("box " + to_string(*r.box) + " of '" + span +
                             "' collapses when rounded to integers");
  }
  out += '[' + std::to_string(round_coord(q.x1)) + ", " + std::to_string(round_coord(q.y1)) +
         ", " + std::to_string(round_coord(q.x2)) + ", " + std::to_string(round_coord(q.y2)) +
         ']';
  return out;
}

inline std::string serialize_records(const std::vector<EntityRecord>& records) {
  std::string out;
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (i) out += '\n';
    out += serialize_record(records[i]);
  }
  return out;
}

struct Generation {
  std::string id;
  std::string raw_text;
};

struct MalformedLine {
  std::size_t line_no = 0;  // 1-based within the raw text
  std::string text;
  std::string reason;

  friend bool operator==(const MalformedLine&, const MalformedLine&) = default;
};

struct ParsedPrediction {
  std::string id;
  std::string reasoning;
  std::vector<EntityRecord> records;
  std::vector<MalformedLine> malformed_lines;
  std::vector<std::string> warnings;
  std::size_t candidate_lines = 0;  // lines in the trailing record block
};

struct ParseOptions {
  CoordFrame frame = CoordFrame::absolute;
  std::optional<ImageDims> dims;              // required for normalized_1000
  const std::set<std::string>* vocabulary = nullptr;  // unknown types -> warning
};

namespace detail {

inline bool parse_number(std::string_view s, double& out) {
  s = trim(s);
  if (s.empty()) return false;
  std::size_t i = 0;
  if (s[0] == '-') ++i;
  std::size_t digits = 0;
  while (i < s.size() && s[i] >= '0' && s[i] <= '9') ++i, ++digits;
  if (digits == 0) return false;
  if (i < s.size() && s[i] == '.') {
    ++i;
    std::size_t frac = 0;
    while (i < s.size() && s[i] >= '0' && s[i] <= '9') ++i, ++frac;
    if (frac == 0) return false;
  }
  if (i != s.size()) return false;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), out);
  return res.ec == std::errc{} && res.ptr == s.data() + s.size() && std::isfinite(out);
}

// Parses "[a, b, c, d]" with free whitespace. Returns a reason on failure.
inline std::variant<Box, std::string> parse_box_literal(std::string_view s) {
  s = trim(s);
  if (s.size() < 2 || s.front() != '[' || s.back() != ']') {
    return std::string("box field is neither None nor a [x1, y1, x2, y2] literal");
  }
  s = s.substr(1, s.size() - 2);
  double v[4];
  for (int k = 0; k < 4; ++k) {
    const auto comma = s.find(',');
    const bool last = k == 3;
    if (last != (comma == std::string_view::npos)) {
      return std::string("box literal must have exactly 4 coordinates");
    }
    const std::string_view tok = last ? s : s.substr(0, comma);
    if (!parse_number(tok, v[k])) {
      return "bad coordinate '" + std::string(trim(tok)) + "'";
    }
    if (!last) s.remove_prefix(comma + 1);
  }
  return Box{v[0], v[1], v[2], v[3]};
}

}  // namespace detail

// Parses one record line. Returns the record or the reason it is malformed.
inline std::variant<EntityRecord, std::string> parse_record_line(std::string_view line,
                                                                 const ParseOptions& opts = {}) {
  const auto last = line.rfind('|');
  if (last == std::string_view::npos || last == 0) {
    return std::string("expected 'span | type | box'");
  }
  const auto mid = line.rfind('|', last - 1);
  if (mid == std::string_view::npos) return std::string("expected 'span | type | box'");

  EntityRecord rec;
  rec.span = normalize_span(line.substr(0, mid));
  rec.etype = std::string(trim(line.substr(mid + 1, last - mid - 1)));
  const std::string_view box_field = trim(line.substr(last + 1));
  if (rec.span.empty()) return std::string("empty span");
  if (rec.etype.empty()) return std::string("empty type");

  if (box_field == kNoBox) return rec;

  auto parsed = detail::parse_box_literal(box_field);
  if (auto* why = std::get_if<std::string>(&parsed)) return std::move(*why);
  Box b = std::get<Box>(parsed);
  if (opts.frame == CoordFrame::normalized_1000) {
    if (!opts.dims) throw ConfigError("normalized-1000 coordinates need image dims");
    const double sx = opts.dims->width / 1000.0;
    const double sy = opts.dims->height / 1000.0;
    b = {b.x1 * sx, b.y1 * sy, b.x2 * sx, b.y2 * sy};
  }
  if (!b.valid()) return "degenerate box " + to_string(b);
  rec.box = b;
  return rec;
}

inline bool is_candidate_line(std::string_view line) {
  return line.find('|') != std::string_view::npos;
}

inline std::vector<std::string_view> split_lines(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (true) {
    const auto nl = text.find('\n', start);
    std::string_view line = text.substr(start, nl == std::string_view::npos
                                                   ? std::string_view::npos
                                                   : nl - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    lines.push_back(line);
    if (nl == std::string_view::npos) break;
    start = nl + 1;
  }
  return lines;
}

// Total: never throws on any input text (configuration errors aside).
inline ParsedPrediction parse_generation(const Generation& g, const ParseOptions& opts = {}) {
  ParsedPrediction out;
  out.id = g.id;
  const auto lines = split_lines(g.raw_text);

  // Walk back over the trailing block.
  std::size_t block_start = lines.size();
  for (std::size_t i = lines.size(); i-- > 0;) {
    if (trim(lines[i]).empty()) continue;
    if (!is_candidate_line(lines[i])) break;
    block_start = i;
  }

  std::string reasoning;
  for (std::size_t i = 0; i < block_start; ++i) {
    if (i) reasoning += '\n';
    reasoning += lines[i];
  }
  out.reasoning = std::string(trim(reasoning));

  for (std::size_t i = block_start; i < lines.size(); ++i) {
    if (trim(lines[i]).empty()) continue;
    ++out.candidate_lines;
    auto parsed = parse_record_line(lines[i], opts);
    if (auto* why = std::get_if<std::string>(&parsed)) {
      out.malformed_lines.push_back({i + 1, std::string(lines[i]), std::move(*why)});
      continue;
    }
    auto& rec = std::get<EntityRecord>(parsed);
    if (opts.vocabulary && !opts.vocabulary->contains(rec.etype)) {
      out.warnings.push_back("line " + std::to_string(i + 1) + ": unknown type '" +
                             rec.etype + "'");
    }
    out.records.push_back(std::move(rec));
  }
  return out;
}

// True when the line parses as a record.
inline bool is_record_line(std::string_view line) {
  return std::holds_alternative<EntityRecord>(parse_record_line(line));
}

}  // namespace gmner
