#pragma once

// Command-line front end. main() is a thin wrapper around run_cli so tests
// can drive every subcommand in-process.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "gmner/gmner.hpp"

namespace gmner::cli {

enum ExitCode : int {
  kOk = 0,
  kConfigError = 2,
  kInputError = 3,
  kInternalError = 4,
};

struct GlobalOptions {
  std::optional<std::uint64_t> seed;
  int workers = 1;
  std::string config_path;
};

// Optional per-flag GRBP overrides layered on top of the config file.
struct GrbpOverrides {
  std::optional<double> beta, gamma, tau, min_size, s_min, s_max;
  std::optional<int> max_tries;

  void add_to(CLI::App* app) {
    app->add_option("--beta", beta, "center jitter std-dev (fraction of box size)");
    app->add_option("--gamma", gamma, "scale jitter std-dev");
    app->add_option("--tau", tau, "IoU acceptance threshold");
    app->add_option("--max-tries", max_tries, "resampling attempts before fallback");
    app->add_option("--min-size", min_size, "boxes thinner than this are left unchanged (px)");
    app->add_option("--s-min", s_min, "lower scale bound");
    app->add_option("--s-max", s_max, "upper scale bound");
  }

  GrbpConfig apply(GrbpConfig c) const {
    if (beta) c.beta = *beta;
    if (gamma) c.gamma = *gamma;
    if (tau) c.tau = *tau;
    if (max_tries) c.max_tries = *max_tries;
    if (min_size) c.min_size = *min_size;
    if (s_min) c.s_min = *s_min;
    if (s_max) c.s_max = *s_max;
    validate(c);
    return c;
  }
};

namespace detail {

inline FileConfig file_config(const GlobalOptions& g) {
  return g.config_path.empty() ? FileConfig{} : load_config(g.config_path);
}

inline std::uint64_t resolve_seed(const GlobalOptions& g, const FileConfig& fc) {
  if (g.seed) return *g.seed;
  return fc.seed.value_or(0);
}

inline void write_json_file(const nlohmann::ordered_json& j, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InputError("cannot open '" + path + "' for writing");
  out << j.dump(2) << '\n';
  if (!out) throw InputError("failed writing '" + path + "'");
}

inline std::string manifest_path(const std::string& out, const std::string& explicit_path) {
  return explicit_path.empty() ? out + ".manifest.json" : explicit_path;
}

inline CoordFrame parse_frame(const std::string& s) {
  if (s == "absolute") return CoordFrame::absolute;
  if (s == "normalized-1000") return CoordFrame::normalized_1000;
  throw ConfigError("unknown coordinate frame '" + s + "'");
}

inline nlohmann::ordered_json base_manifest(const std::string& command) {
  nlohmann::ordered_json m;
  m["tool"] = "gmner-toolkit";
  m["version"] = std::string(kVersion);
  m["command"] = command;
  return m;
}

inline std::vector<ParsedPrediction> parse_all(const std::vector<Generation>& gens,
                                               const std::map<std::string, ImageDims>& dims,
                                               CoordFrame frame,
                                               const std::set<std::string>* vocab) {
  std::vector<ParsedPrediction> out;
  out.reserve(gens.size());
  for (const auto& g : gens) {
    ParseOptions opts;
    opts.frame = frame;
    opts.vocabulary = vocab;
    if (auto it = dims.find(g.id); it != dims.end()) opts.dims = it->second;
    if (frame == CoordFrame::normalized_1000 && !opts.dims) {
      // Unknown id: nothing to rescale against; it is ignored by scoring.
      ParsedPrediction p;
      p.id = g.id;
      out.push_back(std::move(p));
      continue;
    }
    out.push_back(parse_generation(g, opts));
  }
  return out;
}

}  // namespace detail

// ---------------------------------------------------------------- score

struct ScoreOptions {
  std::string gold_path;
  std::string generations_path;
  std::string thresholds;  // empty: config file or defaults
  std::string frame = "absolute";
  std::string vocab_path;
  std::string out_path;
  std::string table_path;
};

inline int cmd_score(const ScoreOptions& o, const GlobalOptions& g, std::ostream& out,
                     std::ostream& err) {
  const FileConfig fc = detail::file_config(g);
  const auto thresholds = o.thresholds.empty() ? fc.thresholds : parse_threshold_list(o.thresholds);
  const CoordFrame frame = detail::parse_frame(o.frame);
  std::optional<std::set<std::string>> vocab;
  if (!o.vocab_path.empty()) vocab = load_vocabulary(o.vocab_path);

  const auto gold = load_dataset(o.gold_path);
  const auto gens = load_generations(o.generations_path);
  std::map<std::string, ImageDims> dims;
  for (const auto& ex : gold) dims.emplace(ex.id, ex.dims);
  const auto parsed = detail::parse_all(gens, dims, frame, vocab ? &*vocab : nullptr);

  std::vector<std::pair<std::string, std::vector<EntityRecord>>> preds;
  std::size_t malformed = 0, warnings = 0, raw_records = 0;
  for (const auto& p : parsed) {
    preds.emplace_back(p.id, p.records);
    malformed += p.malformed_lines.size();
    warnings += p.warnings.size();
  }
  const Reconciled rec = reconcile(gold, preds);
  for (const auto& ex : rec.corpus) raw_records += ex.pred.size();
  const ScoreReport report = score(rec.corpus, thresholds);

  auto j = to_json(report);
  j["inputs"] = {{"n_examples", gold.size()},
                 {"n_generations", gens.size()},
                 {"missing_predictions", rec.missing_predictions},
                 {"unknown_ids", rec.unknown_ids.size()},
                 {"malformed_lines", malformed},
                 {"unknown_type_warnings", warnings},
                 {"duplicate_predictions_collapsed", raw_records - report.gmner.n_pred}};
  if (!o.out_path.empty()) detail::write_json_file(j, o.out_path);

  std::ostringstream table;
  print_table(table, report);
  table << "inputs: " << gold.size() << " examples, " << gens.size() << " generations, "
        << rec.missing_predictions << " missing, " << rec.unknown_ids.size()
        << " unknown ids (ignored), " << malformed << " malformed lines\n";
  out << table.str();
  if (!o.table_path.empty()) {
    std::ofstream t(o.table_path, std::ios::binary | std::ios::trunc);
    if (!t) throw InputError("cannot open '" + o.table_path + "' for writing");
    t << table.str();
  }
  for (const auto& id : rec.unknown_ids) err << "warning: prediction for unknown id '" << id << "' ignored\n";
  if (vocab) {
    for (const auto& p : parsed) {
      for (const auto& w : p.warnings) err << "warning: " << p.id << ": " << w << '\n';
    }
  }
  return kOk;
}

// ---------------------------------------------------------------- perturb

struct PerturbOptions {
  std::string dataset_path;
  std::string out_path;
  std::string manifest_path;
  GrbpOverrides overrides;
};

inline int cmd_perturb(const PerturbOptions& o, const GlobalOptions& g, std::ostream& out,
                       std::ostream&) {
  const FileConfig fc = detail::file_config(g);
  const GrbpConfig cfg = o.overrides.apply(fc.grbp);
  const std::uint64_t seed = detail::resolve_seed(g, fc);
  const auto data = load_dataset(o.dataset_path);
  const auto res = perturb_dataset_detailed(data, cfg, seed, g.workers);
  write_dataset(res.examples, o.out_path);

  auto m = detail::base_manifest("perturb");
  m["input"] = o.dataset_path;
  m["grbp"] = to_json(cfg);
  m["base_seed"] = seed;
  m["counts"] = {{"examples", data.size()},
                 {"boxes", res.stats.boxes},
                 {"fallbacks", res.stats.fallbacks},
                 {"small_boxes", res.stats.small_boxes}};
  detail::write_json_file(m, detail::manifest_path(o.out_path, o.manifest_path));
  out << "perturbed " << res.stats.boxes << " boxes in " << data.size() << " examples ("
      << res.stats.fallbacks << " fallbacks, " << res.stats.small_boxes << " below min size)\n";
  return kOk;
}

// ---------------------------------------------------------------- build-train

struct BuildOptions {
  std::string dataset_path;
  std::string traces_path;
  std::string template_path;
  std::string out_path;
  std::string manifest_path;
  bool no_cot = false;
  GrbpOverrides overrides;
};

inline int cmd_build_train(const BuildOptions& o, const GlobalOptions& g, std::ostream& out,
                           std::ostream& err) {
  if (o.no_cot && !o.traces_path.empty()) {
    throw ConfigError("--no-cot conflicts with --traces");
  }
  const FileConfig fc = detail::file_config(g);
  const GrbpConfig cfg = o.overrides.apply(fc.grbp);
  const std::uint64_t seed = detail::resolve_seed(g, fc);
  const auto tmpl = o.template_path.empty() ? default_template() : load_template(o.template_path);
  const auto data = load_dataset(o.dataset_path);

  std::optional<ReasoningProvider> provider;
  if (!o.no_cot) {
    provider = o.traces_path.empty() ? ReasoningProvider::from_dataset(data)
                                     : ReasoningProvider::from_file(o.traces_path);
  }
  const auto res = build_training_set(data, tmpl, provider ? &*provider : nullptr, cfg, seed,
                                      g.workers);
  write_training_set(res.examples, o.out_path);
  auto m = build_manifest(res, tmpl, !o.no_cot, cfg, seed);
  detail::write_json_file(m, detail::manifest_path(o.out_path, o.manifest_path));

  out << "built " << res.examples.size() << " training examples from " << data.size()
      << " (" << res.skipped.size() << " skipped)\n";
  for (const auto& s : res.skipped) err << "skipped " << s.id << ": " << s.reason << '\n';
  return kOk;
}

// ---------------------------------------------------------------- validate-train

struct ValidateOptions {
  std::string train_path;
  std::string gold_path;
  std::string manifest_path;
  std::optional<double> tau;
  std::string out_path;
};

inline int cmd_validate_train(const ValidateOptions& o, const GlobalOptions&, std::ostream& out,
                              std::ostream&) {
  const auto train = load_training_set(o.train_path);
  double tau = 0.0;
  if (o.tau) {
    tau = *o.tau;
  } else if (!o.manifest_path.empty()) {
    std::ifstream in(o.manifest_path);
    if (!in) throw InputError("cannot open manifest '" + o.manifest_path + "'");
    try {
      tau = grbp_config_from_json(nlohmann::ordered_json::parse(in).at("grbp")).tau;
    } catch (const nlohmann::json::exception& e) {
      throw InputError("manifest '" + o.manifest_path + "': " + e.what());
    }
  } else if (!o.gold_path.empty()) {
    throw ConfigError("guard check needs --tau or --manifest");
  }
  if (!(tau >= 0.0 && tau <= 1.0)) throw ConfigError("tau must lie in [0, 1]");

  std::optional<std::vector<Example>> gold;
  if (!o.gold_path.empty()) gold = load_dataset(o.gold_path);
  const auto rep = validate_training_set(train, gold ? &*gold : nullptr, tau);

  nlohmann::ordered_json j;
  j["examples"] = rep.examples;
  j["records"] = rep.records;
  j["malformed_lines"] = rep.malformed_lines;
  j["guard_checked"] = rep.guard_checked;
  j["tau"] = tau;
  j["guard_violations"] = rep.violations.size();
  j["unmatched_ids"] = rep.unmatched_ids;
  j["malformed"] = nlohmann::ordered_json::array();
  for (const auto& [id, m] : rep.malformed) {
    j["malformed"].push_back({{"id", id}, {"line", m.line_no}, {"text", m.text}, {"reason", m.reason}});
  }
  j["violations"] = nlohmann::ordered_json::array();
  for (const auto& v : rep.violations) {
    j["violations"].push_back({{"id", v.id}, {"record", v.record}, {"reason", v.reason}});
  }
  if (!o.out_path.empty()) detail::write_json_file(j, o.out_path);
  out << rep.examples << " examples, " << rep.records << " records, " << rep.malformed_lines
      << " malformed lines";
  if (rep.guard_checked) out << ", " << rep.violations.size() << " guard violations (tau=" << tau << ")";
  out << '\n';
  return kOk;
}

// ---------------------------------------------------------------- sweep

struct SweepOptions {
  std::string betas = "0,0.01,0.03,0.05,0.1";
  std::string gammas;  // empty: gamma = beta for each cell
  std::string dataset_path;
  std::string image = "640x480";
  std::string box_frac = "0.05,0.6";
  std::size_t n_samples = 100000;
  std::string out_path;
  std::string manifest_path;
  GrbpOverrides overrides;
};

namespace detail {

inline std::vector<double> parse_reals(const std::string& raw, const char* what) {
  std::vector<double> out;
  std::string item;
  std::istringstream is(raw);
  while (std::getline(is, item, ',')) {
    if (trim(item).empty()) continue;
    out.push_back(::gmner::detail::parse_value<double>(what, item));
  }
  if (out.empty()) throw ConfigError(std::string(what) + ": empty list");
  return out;
}

inline ImageDims parse_dims(const std::string& raw) {
  const auto x = raw.find('x');
  if (x == std::string::npos) throw ConfigError("--image must look like WIDTHxHEIGHT");
  ImageDims d{::gmner::detail::parse_value<int>("image width", raw.substr(0, x)),
              ::gmner::detail::parse_value<int>("image height", raw.substr(x + 1))};
  if (!d.valid()) throw ConfigError("--image dims must be positive");
  return d;
}

}  // namespace detail

inline int cmd_sweep(const SweepOptions& o, const GlobalOptions& g, std::ostream& out,
                     std::ostream&) {
  const FileConfig fc = detail::file_config(g);
  const std::uint64_t seed = detail::resolve_seed(g, fc);
  const auto betas = detail::parse_reals(o.betas, "betas");
  std::vector<GrbpConfig> grid;
  if (o.gammas.empty()) {
    for (double b : betas) {
      GrbpConfig c = o.overrides.apply(fc.grbp);
      c.beta = c.gamma = b;
      grid.push_back(c);
    }
  } else {
    for (double b : betas) {
      for (double gm : detail::parse_reals(o.gammas, "gammas")) {
        GrbpConfig c = o.overrides.apply(fc.grbp);
        c.beta = b;
        c.gamma = gm;
        grid.push_back(c);
      }
    }
  }

  BoxSampler sampler;
  nlohmann::ordered_json sampler_json;
  if (!o.dataset_path.empty()) {
    BoxPool pool;
    for (const auto& ex : load_dataset(o.dataset_path)) {
      for (const auto& r : ex.gold) {
        if (r.box) pool.boxes.emplace_back(*r.box, ex.dims);
      }
    }
    if (pool.boxes.empty()) throw InputError("dataset '" + o.dataset_path + "' has no boxes");
    sampler_json = {{"kind", "dataset"}, {"path", o.dataset_path}, {"boxes", pool.boxes.size()}};
    sampler = std::move(pool);
  } else {
    SyntheticBoxes s;
    s.dims = detail::parse_dims(o.image);
    const auto frac = detail::parse_reals(o.box_frac, "box-frac");
    if (frac.size() != 2) throw ConfigError("--box-frac needs two values: lo,hi");
    s.min_frac = frac[0];
    s.max_frac = frac[1];
    s.min_side = grid.empty() ? 4.0 : grid.front().min_size;
    sampler_json = {{"kind", "synthetic"},
                    {"image_width", s.dims.width},
                    {"image_height", s.dims.height},
                    {"min_frac", s.min_frac},
                    {"max_frac", s.max_frac},
                    {"min_side", s.min_side}};
    sampler = s;
  }

  const auto rows = characterize(grid, sampler, o.n_samples, seed, g.workers);
  std::ofstream csv(o.out_path, std::ios::binary | std::ios::trunc);
  if (!csv) throw InputError("cannot open '" + o.out_path + "' for writing");
  write_sweep_csv(csv, rows);
  csv.close();

  auto m = detail::base_manifest("sweep");
  m["grid"] = nlohmann::ordered_json::array();
  for (const auto& c : grid) m["grid"].push_back(to_json(c));
  m["sampler"] = sampler_json;
  m["n_samples"] = o.n_samples;
  m["seed"] = seed;
  detail::write_json_file(m, detail::manifest_path(o.out_path, o.manifest_path));
  write_sweep_csv(out, rows);
  return kOk;
}

// ---------------------------------------------------------------- parse

struct ParseCmdOptions {
  std::string generations_path;
  std::string gold_path;  // for image dims in the normalized frame
  std::string frame = "absolute";
  std::string out_path;
};

inline int cmd_parse(const ParseCmdOptions& o, const GlobalOptions&, std::ostream& out,
                     std::ostream&) {
  const CoordFrame frame = detail::parse_frame(o.frame);
  if (frame == CoordFrame::normalized_1000 && o.gold_path.empty()) {
    throw ConfigError("--frame normalized-1000 needs --gold for image dims");
  }
  std::map<std::string, ImageDims> dims;
  if (!o.gold_path.empty()) {
    for (const auto& ex : load_dataset(o.gold_path)) dims.emplace(ex.id, ex.dims);
  }
  const auto gens = load_generations(o.generations_path);
  const auto parsed = detail::parse_all(gens, dims, frame, nullptr);

  std::ofstream file;
  if (!o.out_path.empty()) {
    file.open(o.out_path, std::ios::binary | std::ios::trunc);
    if (!file) throw InputError("cannot open '" + o.out_path + "' for writing");
  }
  std::size_t records = 0, malformed = 0, candidates = 0;
  for (const auto& p : parsed) {
    records += p.records.size();
    malformed += p.malformed_lines.size();
    candidates += p.candidate_lines;
    if (!file.is_open()) continue;
    nlohmann::ordered_json j;
    j["id"] = p.id;
    j["reasoning"] = p.reasoning;
    j["records"] = nlohmann::ordered_json::array();
    for (const auto& r : p.records) j["records"].push_back(to_json(r));
    j["malformed"] = nlohmann::ordered_json::array();
    for (const auto& m : p.malformed_lines) {
      j["malformed"].push_back({{"line", m.line_no}, {"text", m.text}, {"reason", m.reason}});
    }
    file << ::gmner::detail::dump_line(j) << '\n';
  }
  out << gens.size() << " generations, " << candidates << " record lines, " << records
      << " records, " << malformed << " malformed\n";
  return kOk;
}

// ---------------------------------------------------------------- entry

inline int run_cli(int argc, const char* const* argv, std::ostream& out = std::cout,
                   std::ostream& err = std::cerr) {
  CLI::App app{"Grounded multimodal NER toolkit: scoring, box perturbation, training data"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);
  app.fallthrough();

  GlobalOptions global;
  app.add_option("--seed", global.seed, "base seed (overrides the config file)");
  app.add_option("--workers", global.workers, "worker threads")->check(CLI::PositiveNumber);
  app.add_option("--config", global.config_path, "key-value config file");

  ScoreOptions score_o;
  auto* score_cmd = app.add_subcommand("score", "score generations against a gold dataset");
  score_cmd->add_option("--gold", score_o.gold_path, "gold dataset (JSONL)")
      ->required();
  score_cmd->add_option("--generations", score_o.generations_path, "generations (JSONL)")
      ->required();
  score_cmd->add_option("--thresholds", score_o.thresholds, "IoU thresholds, e.g. 0.5,0.75");
  score_cmd->add_option("--frame", score_o.frame, "absolute | normalized-1000");
  score_cmd->add_option("--vocab", score_o.vocab_path, "type vocabulary file");
  score_cmd->add_option("--out", score_o.out_path, "machine-readable report (JSON)");
  score_cmd->add_option("--table", score_o.table_path, "human-readable report");

  PerturbOptions perturb_o;
  auto* perturb_cmd = app.add_subcommand("perturb", "perturb every gold box of a dataset");
  perturb_cmd->add_option("--dataset", perturb_o.dataset_path)->required();
  perturb_cmd->add_option("--out", perturb_o.out_path)->required();
  perturb_cmd->add_option("--manifest", perturb_o.manifest_path, "default: OUT.manifest.json");
  perturb_o.overrides.add_to(perturb_cmd);

  BuildOptions build_o;
  auto* build_cmd = app.add_subcommand("build-train", "build an instruction-tuning set");
  build_cmd->add_option("--dataset", build_o.dataset_path)->required();
  build_cmd->add_option("--traces", build_o.traces_path, "reasoning traces (JSONL)");
  build_cmd->add_option("--template", build_o.template_path, "instruction template file");
  build_cmd->add_flag("--no-cot", build_o.no_cot, "targets without reasoning");
  build_cmd->add_option("--out", build_o.out_path)->required();
  build_cmd->add_option("--manifest", build_o.manifest_path, "default: OUT.manifest.json");
  build_o.overrides.add_to(build_cmd);

  ValidateOptions validate_o;
  auto* validate_cmd = app.add_subcommand("validate-train", "re-parse a built training set");
  validate_cmd->add_option("--train", validate_o.train_path)->required();
  validate_cmd->add_option("--gold", validate_o.gold_path);
  validate_cmd->add_option("--manifest", validate_o.manifest_path, "reads tau from it");
  validate_cmd->add_option("--tau", validate_o.tau);
  validate_cmd->add_option("--out", validate_o.out_path, "validation report (JSON)");

  SweepOptions sweep_o;
  auto* sweep_cmd = app.add_subcommand("sweep", "Monte-Carlo statistics over a jitter grid");
  sweep_cmd->add_option("--betas", sweep_o.betas, "comma-separated beta values");
  sweep_cmd->add_option("--gammas", sweep_o.gammas, "comma-separated gammas (default: = beta)");
  sweep_cmd->add_option("--dataset", sweep_o.dataset_path, "sample boxes from this dataset");
  sweep_cmd->add_option("--image", sweep_o.image, "synthetic image size WxH");
  sweep_cmd->add_option("--box-frac", sweep_o.box_frac, "synthetic box side fraction lo,hi");
  sweep_cmd->add_option("--n-samples", sweep_o.n_samples)->check(CLI::PositiveNumber);
  sweep_cmd->add_option("--out", sweep_o.out_path, "CSV output")->required();
  sweep_cmd->add_option("--manifest", sweep_o.manifest_path, "default: OUT.manifest.json");
  sweep_o.overrides.add_to(sweep_cmd);

  ParseCmdOptions parse_o;
  auto* parse_cmd = app.add_subcommand("parse", "parse raw generations with diagnostics");
  parse_cmd->add_option("--generations", parse_o.generations_path)->required();
  parse_cmd->add_option("--gold", parse_o.gold_path, "dataset providing image dims");
  parse_cmd->add_option("--frame", parse_o.frame, "absolute | normalized-1000");
  parse_cmd->add_option("--out", parse_o.out_path, "parsed predictions (JSONL)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kConfigError;
  }

  try {
    if (*score_cmd) return cmd_score(score_o, global, out, err);
    if (*perturb_cmd) return cmd_perturb(perturb_o, global, out, err);
    if (*build_cmd) return cmd_build_train(build_o, global, out, err);
    if (*validate_cmd) return cmd_validate_train(validate_o, global, out, err);
    if (*sweep_cmd) return cmd_sweep(sweep_o, global, out, err);
    if (*parse_cmd) return cmd_parse(parse_o, global, out, err);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const InputError& e) {
    err << "input error: " << e.what() << '\n';
    return kInputError;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << '\n';
    return kInternalError;
  }
  return kInternalError;
}

}  // namespace gmner::cli
