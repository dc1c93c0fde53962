#pragma once

// Entity records and dataset examples shared by every module.

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "gmner/geometry.hpp"

namespace gmner {

// One (span, type, box) triple. An absent box marks an entity with no
// visual region.
struct EntityRecord {
  std::string span;
  std::string etype;
  std::optional<Box> box;

  friend bool operator==(const EntityRecord&, const EntityRecord&) = default;
};

struct Example {
  std::string id;
  std::string text;
  std::string image_ref;
  ImageDims dims;
  std::vector<EntityRecord> gold;
  std::optional<std::string> reasoning;

  friend bool operator==(const Example&, const Example&) = default;
};

inline bool is_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' ||
         c == '\v';
}

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
  return s;
}

// Trim and collapse internal whitespace runs to a single space.
// Case is preserved.
inline std::string normalize_span(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  bool pending_space = false;
  for (char c : trim(s)) {
    if (is_space(c)) {
      pending_space = true;
      continue;
    }
    if (pending_space) out.push_back(' ');
    pending_space = false;
    out.push_back(c);
  }
  return out;
}

}  // namespace gmner
