#pragma once

// Line-oriented JSON files: datasets, generations, reasoning traces.
//
// Dataset line:
//   {"id":..,"text":..,"image_path":..,"image_width":W,"image_height":H,
//    "entities":[{"span":..,"type":..,"box":[x1,y1,x2,y2] | null}, ...],
//    "reasoning":..}                                 (reasoning optional)
// Generations line:  {"id":..,"output":..}
// Trace line:        {"id":..,"reasoning":..}

#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "gmner/error.hpp"
#include "gmner/records.hpp"
#include "gmner/schema.hpp"

namespace gmner {

using ojson = nlohmann::ordered_json;

namespace detail {

inline std::ifstream open_input(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open '" + path + "' for reading");
  return in;
}

inline std::ofstream open_output(const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InputError("cannot open '" + path + "' for writing");
  return out;
}

// Calls fn(json, line_no) for each non-blank line; wraps every failure with
// the file position.
template <typename Fn>
void for_each_json_line(std::istream& in, const std::string& where, Fn&& fn) {
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const std::string pos = where + ":" + std::to_string(line_no) + ": ";
    ojson j;
    try {
      j = ojson::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw InputError(pos + "invalid JSON: " + e.what());
    }
    if (!j.is_object()) throw InputError(pos + "expected a JSON object");
    try {
      fn(j, line_no);
    } catch (const nlohmann::json::exception& e) {
      throw InputError(pos + e.what());
    } catch (const InputError& e) {
      throw InputError(pos + e.what());
    }
  }
}

inline const ojson& field(const ojson& j, const char* name) {
  auto it = j.find(name);
  if (it == j.end()) throw InputError(std::string("missing field '") + name + "'");
  return *it;
}

inline std::string string_field(const ojson& j, const char* name) {
  const auto& v = field(j, name);
  if (!v.is_string()) throw InputError(std::string("field '") + name + "' must be a string");
  return v.get<std::string>();
}

inline std::string dump_line(const ojson& j) {
  try {
    return j.dump();
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("cannot encode record: ") + e.what());
  }
}

}  // namespace detail

inline Example example_from_json(const ojson& j) {
  Example ex;
  ex.id = detail::string_field(j, "id");
  if (ex.id.empty()) throw InputError("field 'id' must be non-empty");
  const auto fail = [&](const std::string& what) {
    throw InputError("example '" + ex.id + "': " + what);
  };
  ex.text = detail::string_field(j, "text");
  ex.image_ref = detail::string_field(j, "image_path");
  for (const char* key : {"image_width", "image_height"}) {
    const auto& v = detail::field(j, key);
    if (!v.is_number_integer() || v.get<long long>() < 1 || v.get<long long>() > 1'000'000'000) {
      fail(std::string("field '") + key + "' must be a positive integer");
    }
  }
  ex.dims = {j["image_width"].get<int>(), j["image_height"].get<int>()};

  const auto& ents = detail::field(j, "entities");
  if (!ents.is_array()) fail("field 'entities' must be an array");
  for (std::size_t i = 0; i < ents.size(); ++i) {
    const auto& e = ents[i];
    const std::string at = "entities[" + std::to_string(i) + "]";
    if (!e.is_object()) fail(at + " must be an object");
    EntityRecord rec;
    try {
      rec.span = detail::string_field(e, "span");
      rec.etype = detail::string_field(e, "type");
    } catch (const InputError& err) {
      fail(at + ": " + err.what());
    }
    if (normalize_span(rec.span).empty()) fail(at + ".span is empty");
    if (trim(rec.etype).empty()) fail(at + ".type is empty");
    const auto& b = detail::field(e, "box");
    if (!b.is_null()) {
      if (!b.is_array() || b.size() != 4 ||
          !std::all_of(b.begin(), b.end(), [](const ojson& v) { return v.is_number(); })) {
        fail(at + ".box must be null or [x1, y1, x2, y2]");
      }
      const Box box{b[0].get<double>(), b[1].get<double>(), b[2].get<double>(),
                    b[3].get<double>()};
      if (!box.valid()) fail(at + ".box " + to_string(box) + " is degenerate");
      if (!inside(box, ex.dims)) {
        fail(at + ".box " + to_string(box) + " exceeds image bounds " +
             std::to_string(ex.dims.width) + "x" + std::to_string(ex.dims.height));
      }
      rec.box = box;
    }
    ex.gold.push_back(std::move(rec));
  }

  if (auto it = j.find("reasoning"); it != j.end() && !it->is_null()) {
    if (!it->is_string()) fail("field 'reasoning' must be a string");
    ex.reasoning = it->get<std::string>();
  }
  return ex;
}

inline ojson to_json(const std::optional<Box>& b) {
  if (!b) return nullptr;
  return ojson::array({b->x1, b->y1, b->x2, b->y2});
}

inline ojson to_json(const EntityRecord& r) {
  ojson e;
  e["span"] = r.span;
  e["type"] = r.etype;
  e["box"] = to_json(r.box);
  return e;
}

inline ojson to_json(const Example& ex) {
  ojson j;
  j["id"] = ex.id;
  j["text"] = ex.text;
  j["image_path"] = ex.image_ref;
  j["image_width"] = ex.dims.width;
  j["image_height"] = ex.dims.height;
  j["entities"] = ojson::array();
  for (const auto& r : ex.gold) j["entities"].push_back(to_json(r));
  if (ex.reasoning) j["reasoning"] = *ex.reasoning;
  return j;
}

inline std::vector<Example> read_dataset(std::istream& in, const std::string& where) {
  std::vector<Example> out;
  std::set<std::string> seen;
  detail::for_each_json_line(in, where, [&](const ojson& j, std::size_t) {
    Example ex = example_from_json(j);
    if (!seen.insert(ex.id).second) throw InputError("duplicate id '" + ex.id + "'");
    out.push_back(std::move(ex));
  });
  return out;
}

inline std::vector<Example> load_dataset(const std::string& path) {
  auto in = detail::open_input(path);
  return read_dataset(in, path);
}

inline void write_dataset(const std::vector<Example>& examples, std::ostream& out) {
  for (const auto& ex : examples) out << detail::dump_line(to_json(ex)) << '\n';
}

inline void write_dataset(const std::vector<Example>& examples, const std::string& path) {
  auto out = detail::open_output(path);
  write_dataset(examples, out);
  if (!out) throw InputError("failed writing '" + path + "'");
}

inline std::vector<Generation> load_generations(const std::string& path) {
  auto in = detail::open_input(path);
  std::vector<Generation> out;
  detail::for_each_json_line(in, path, [&](const ojson& j, std::size_t) {
    out.push_back({detail::string_field(j, "id"), detail::string_field(j, "output")});
  });
  return out;
}

inline void write_generations(const std::vector<Generation>& gens, const std::string& path) {
  auto out = detail::open_output(path);
  for (const auto& g : gens) {
    ojson j;
    j["id"] = g.id;
    j["output"] = g.raw_text;
    out << detail::dump_line(j) << '\n';
  }
}

// id -> reasoning text. Duplicate ids are rejected.
inline std::map<std::string, std::string> load_traces(const std::string& path) {
  auto in = detail::open_input(path);
  std::map<std::string, std::string> out;
  detail::for_each_json_line(in, path, [&](const ojson& j, std::size_t) {
    auto id = detail::string_field(j, "id");
    if (!out.emplace(id, detail::string_field(j, "reasoning")).second) {
      throw InputError("duplicate trace id '" + id + "'");
    }
  });
  return out;
}

// One type label per line; blank lines and '#' comments ignored.
inline std::set<std::string> load_vocabulary(const std::string& path) {
  auto in = detail::open_input(path);
  std::set<std::string> out;
  std::string line;
  while (std::getline(in, line)) {
    const auto t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    out.emplace(t);
  }
  return out;
}

}  // namespace gmner
