#pragma once

// Builds instruction-tuning examples: instruction + (image, sentence) as
// input, reasoning followed by perturbed entity records as target.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "gmner/dataset.hpp"
#include "gmner/error.hpp"
#include "gmner/grbp.hpp"
#include "gmner/records.hpp"
#include "gmner/schema.hpp"
#include "gmner/version.hpp"

namespace gmner {

inline constexpr std::string_view kTextPlaceholder = "{text}";

struct InstructionTemplate {
  std::string name;
  std::string body;  // contains kTextPlaceholder exactly once

  std::string render(std::string_view sentence) const {
    std::string out = body;
    out.replace(out.find(kTextPlaceholder), kTextPlaceholder.size(), sentence);
    return out;
  }
};

inline void validate(const InstructionTemplate& t) {
  std::size_t count = 0;
  for (auto pos = t.body.find(kTextPlaceholder); pos != std::string::npos;
       pos = t.body.find(kTextPlaceholder, pos + 1)) {
    ++count;
  }
  if (count != 1) {
    throw ConfigError("template '" + t.name + "' must contain exactly one " +
                      std::string(kTextPlaceholder) + " placeholder, found " +
                      std::to_string(count));
  }
}

inline InstructionTemplate default_template() {
  return {"default",
          "You are given an image and a sentence from a social media post. "
          "Identify every named entity in the sentence, assign its semantic type, "
          "and locate the image region it refers to.\n"
          "First reason step by step about the visual cues and background knowledge "
          "that help decide each entity and whether it is visible in the image.\n"
          "Then output one line per entity using the format:\n"
          "entity span | entity type | [x1, y1, x2, y2]\n"
          "where (x1, y1) is the top-left and (x2, y2) the bottom-right corner in pixels. "
          "Write None instead of the box when the entity has no region in the image.\n"
          "Sentence: {text}"};
}

// The template name is the file stem; the whole file is the body.
inline InstructionTemplate load_template(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open template '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  InstructionTemplate t{std::filesystem::path(path).stem().string(), ss.str()};
  validate(t);
  return t;
}

// Keyed lookup of teacher-written reasoning. Never invents text.
class ReasoningProvider {
 public:
  ReasoningProvider() = default;
  explicit ReasoningProvider(std::map<std::string, std::string> traces)
      : traces_(std::move(traces)) {}

  static ReasoningProvider from_file(const std::string& path) {
    return ReasoningProvider(load_traces(path));
  }

  static ReasoningProvider from_dataset(const std::vector<Example>& examples) {
    std::map<std::string, std::string> traces;
    for (const auto& ex : examples) {
      if (ex.reasoning) traces.emplace(ex.id, *ex.reasoning);
    }
    return ReasoningProvider(std::move(traces));
  }

  std::optional<std::string> lookup(const std::string& id) const {
    auto it = traces_.find(id);
    if (it == traces_.end()) return std::nullopt;
    return it->second;
  }

  std::size_t size() const { return traces_.size(); }

 private:
  std::map<std::string, std::string> traces_;
};

struct TrainingExample {
  std::string id;
  std::string instruction;
  std::string image_ref;
  std::string input_text;
  std::string target;

  friend bool operator==(const TrainingExample&, const TrainingExample&) = default;
};

struct SkippedExample {
  std::string id;
  std::string reason;
};

struct BuildCounts {
  std::size_t examples_in = 0;
  std::size_t examples_out = 0;
  std::size_t records = 0;
  std::size_t boxes = 0;
  std::size_t fallbacks = 0;
  std::size_t small_boxes = 0;
  std::size_t rounding_fallbacks = 0;
};

struct BuildResult {
  std::vector<TrainingExample> examples;
  std::vector<SkippedExample> skipped;
  BuildCounts counts;
};

// Why a reasoning trace cannot precede the record block, if it cannot.
// Traces are rejected, not escaped: a record-shaped line would be read back
// as a prediction, and a trailing line with '|' would merge into the block.
inline std::optional<std::string> reasoning_problem(std::string_view reasoning) {
  const auto lines = split_lines(reasoning);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (is_record_line(lines[i])) {
      return "reasoning line " + std::to_string(i + 1) + " matches the record grammar";
    }
  }
  for (std::size_t i = lines.size(); i-- > 0;) {
    if (trim(lines[i]).empty()) continue;
    if (is_candidate_line(lines[i])) {
      return "last reasoning line contains '|' and would be read as a record";
    }
    break;
  }
  return std::nullopt;
}

// reasoning == nullptr selects the no-reasoning mode: targets hold only the
// record block.
inline BuildResult build_training_set(const std::vector<Example>& dataset,
                                      const InstructionTemplate& tmpl,
                                      const ReasoningProvider* reasoning,
                                      const GrbpConfig& cfg, std::uint64_t base_seed,
                                      int workers = 1) {
  validate(tmpl);
  const auto perturbed = perturb_dataset_detailed(dataset, cfg, base_seed, workers);

  BuildResult out;
  out.counts.examples_in = dataset.size();
  out.counts.boxes = perturbed.stats.boxes;
  out.counts.fallbacks = perturbed.stats.fallbacks;
  out.counts.small_boxes = perturbed.stats.small_boxes;

  for (std::size_t i = 0; i < dataset.size(); ++i) {
    const Example& gold = dataset[i];
    std::string prefix;
    if (reasoning) {
      auto r = reasoning->lookup(gold.id);
      if (!r) {
        out.skipped.push_back({gold.id, "no reasoning trace"});
        continue;
      }
      if (auto why = reasoning_problem(*r)) {
        out.skipped.push_back({gold.id, *why});
        continue;
      }
      prefix = std::string(trim(*r));
    }

    // Integer rounding on output can push a guarded box below tau; such boxes
    // fall back to the gold box.
    std::vector<EntityRecord> records = perturbed.examples[i].gold;
    std::size_t rounding_fallbacks = 0;
    for (std::size_t r = 0; r < records.size(); ++r) {
      auto& box = records[r].box;
      if (!box) continue;
      const Box& orig = *gold.gold[r].box;
      const Box q = round_box(*box);
      if (q != round_box(orig) && (!q.valid() || iou(q, orig) < cfg.tau)) {
        box = orig;
        ++rounding_fallbacks;
      }
    }

    std::string block;
    try {
      block = serialize_records(records);
    } catch (const SerializationError& e) {
      out.skipped.push_back({gold.id, e.what()});
      continue;
    }

    TrainingExample te;
    te.id = gold.id;
    te.instruction = tmpl.render(gold.text);
    te.image_ref = gold.image_ref;
    te.input_text = gold.text;
    te.target = prefix;
    if (!prefix.empty() && !block.empty()) te.target += '\n';
    te.target += block;
    out.examples.push_back(std::move(te));
    out.counts.records += records.size();
    out.counts.rounding_fallbacks += rounding_fallbacks;
  }
  out.counts.examples_out = out.examples.size();
  return out;
}

inline ojson to_json(const TrainingExample& t) {
  ojson j;
  j["id"] = t.id;
  j["instruction"] = t.instruction;
  j["image_path"] = t.image_ref;
  j["input_text"] = t.input_text;
  j["target"] = t.target;
  return j;
}

inline ojson to_json(const GrbpConfig& c) {
  ojson j;
  j["beta"] = c.beta;
  j["gamma"] = c.gamma;
  j["tau"] = c.tau;
  j["max_tries"] = c.max_tries;
  j["min_size"] = c.min_size;
  j["s_min"] = c.s_min;
  j["s_max"] = c.s_max;
  return j;
}

inline GrbpConfig grbp_config_from_json(const ojson& j) {
  GrbpConfig c;
  c.beta = j.at("beta").get<double>();
  c.gamma = j.at("gamma").get<double>();
  c.tau = j.at("tau").get<double>();
  c.max_tries = j.at("max_tries").get<int>();
  c.min_size = j.at("min_size").get<double>();
  c.s_min = j.at("s_min").get<double>();
  c.s_max = j.at("s_max").get<double>();
  validate(c);
  return c;
}

inline void write_training_set(const std::vector<TrainingExample>& examples,
                               const std::string& path) {
  auto out = detail::open_output(path);
  for (const auto& t : examples) out << detail::dump_line(to_json(t)) << '\n';
  if (!out) throw InputError("failed writing '" + path + "'");
}

inline std::vector<TrainingExample> load_training_set(const std::string& path) {
  auto in = detail::open_input(path);
  std::vector<TrainingExample> out;
  detail::for_each_json_line(in, path, [&](const ojson& j, std::size_t) {
    out.push_back({detail::string_field(j, "id"), detail::string_field(j, "instruction"),
                   detail::string_field(j, "image_path"), detail::string_field(j, "input_text"),
                   detail::string_field(j, "target")});
  });
  return out;
}

inline ojson build_manifest(const BuildResult& r, const InstructionTemplate& tmpl,
                            bool with_reasoning, const GrbpConfig& cfg,
                            std::uint64_t base_seed) {
  ojson m;
  m["tool"] = "gmner-toolkit";
  m["version"] = std::string(kVersion);
  m["command"] = "build-train";
  m["template"] = tmpl.name;
  m["mode"] = with_reasoning ? "cot" : "no-cot";
  m["grbp"] = to_json(cfg);
  m["base_seed"] = base_seed;
  const auto& c = r.counts;
  m["counts"] = {{"examples_in", c.examples_in},   {"examples_out", c.examples_out},
                 {"skipped", r.skipped.size()},    {"records", c.records},
                 {"boxes", c.boxes},               {"fallbacks", c.fallbacks},
                 {"small_boxes", c.small_boxes},   {"rounding_fallbacks", c.rounding_fallbacks}};
  m["skipped"] = ojson::array();
  for (const auto& s : r.skipped) m["skipped"].push_back({{"id", s.id}, {"reason", s.reason}});
  return m;
}

struct GuardViolation {
  std::string id;
  std::size_t record = 0;
  std::string reason;
};

struct ValidationReport {
  std::size_t examples = 0;
  std::size_t records = 0;
  std::size_t malformed_lines = 0;
  std::vector<std::pair<std::string, MalformedLine>> malformed;
  std::vector<GuardViolation> violations;
  std::size_t unmatched_ids = 0;  // training ids absent from the gold file
  bool guard_checked = false;
};

// Re-parses every target. With gold examples, also checks that each record
// keeps its span and type and that its box equals the rounded gold box or
// has IoU >= tau with the gold box.
inline ValidationReport validate_training_set(const std::vector<TrainingExample>& examples,
                                              const std::vector<Example>* gold = nullptr,
                                              double tau = 0.0) {
  ValidationReport rep;
  std::map<std::string, const Example*> by_id;
  if (gold) {
    rep.guard_checked = true;
    for (const auto& ex : *gold) by_id.emplace(ex.id, &ex);
  }
  for (const auto& t : examples) {
    ++rep.examples;
    const auto parsed = parse_generation({t.id, t.target});
    rep.records += parsed.records.size();
    rep.malformed_lines += parsed.malformed_lines.size();
    for (const auto& m : parsed.malformed_lines) rep.malformed.emplace_back(t.id, m);
    if (!gold) continue;

    auto it = by_id.find(t.id);
    if (it == by_id.end()) {
      ++rep.unmatched_ids;
      continue;
    }
    const auto& g = it->second->gold;
    if (g.size() != parsed.records.size()) {
      rep.violations.push_back({t.id, 0,
                                "expected " + std::to_string(g.size()) + " records, parsed " +
                                    std::to_string(parsed.records.size())});
      continue;
    }
    for (std::size_t r = 0; r < g.size(); ++r) {
      const auto& p = parsed.records[r];
      if (p.span != normalize_span(g[r].span) || p.etype != trim(g[r].etype)) {
        rep.violations.push_back({t.id, r, "span or type differs from gold"});
      } else if (p.box.has_value() != g[r].box.has_value()) {
        rep.violations.push_back({t.id, r, "box presence differs from gold"});
      } else if (p.box && *p.box != round_box(*g[r].box) && iou(*p.box, *g[r].box) < tau) {
        rep.violations.push_back({t.id, r,
                                  "IoU " + std::to_string(iou(*p.box, *g[r].box)) +
                                      " with gold is below tau"});
      }
    }
  }
  return rep;
}

}  // namespace gmner
