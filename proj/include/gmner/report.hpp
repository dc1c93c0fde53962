#pragma once

// Report rendering: machine-readable JSON (fixed field order, 4 decimals),
// a plain-text table, and CSV for sweep results.

#include <cmath>
#include <cstdio>
#include <ostream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "gmner/characterize.hpp"
#include "gmner/scoring.hpp"

namespace gmner {

inline double round4(double v) { return std::round(v * 10000.0) / 10000.0; }

inline std::string fixed4(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

inline nlohmann::ordered_json to_json(const TaskScore& t) {
  nlohmann::ordered_json j;
  j["n_correct"] = t.n_correct;
  j["n_pred"] = t.n_pred;
  j["n_gold"] = t.n_gold;
  j["precision"] = round4(t.precision);
  j["recall"] = round4(t.recall);
  j["f1"] = round4(t.f1);
  return j;
}

inline nlohmann::ordered_json to_json(const ScoreReport& r) {
  nlohmann::ordered_json j;
  j["MNER"] = to_json(r.mner);
  j["EEG"] = to_json(r.eeg);
  j["GMNER"] = to_json(r.gmner);
  j["acc_at"] = nlohmann::ordered_json::object();
  for (const auto& [thr, acc] : r.acc_at) j["acc_at"][threshold_label(thr)] = round4(acc);
  j["mean_iou"] = round4(r.mean_iou);
  j["n_gold_with_box"] = r.n_gold_with_box;
  return j;
}

inline void print_table(std::ostream& os, const ScoreReport& r) {
  char line[160];
  std::snprintf(line, sizeof line, "%-6s %9s %9s %9s %9s %9s %9s\n", "task", "correct", "pred",
                "gold", "P", "R", "F1");
  os << line;
  const std::pair<const char*, const TaskScore*> rows[] = {
      {"GMNER", &r.gmner}, {"MNER", &r.mner}, {"EEG", &r.eeg}};
  for (const auto& [name, t] : rows) {
    std::snprintf(line, sizeof line, "%-6s %9zu %9zu %9zu %9s %9s %9s\n", name, t->n_correct,
                  t->n_pred, t->n_gold, fixed4(t->precision).c_str(),
                  fixed4(t->recall).c_str(), fixed4(t->f1).c_str());
    os << line;
  }
  os << '\n';
  for (const auto& [thr, acc] : r.acc_at) {
    os << "Acc@" << threshold_label(thr) << " = " << fixed4(acc) << "  ("
       << r.matched_at.at(thr) << " / " << r.n_gold_with_box << " gold boxes)\n";
  }
  os << "mean IoU = " << fixed4(r.mean_iou) << "  (over " << r.n_gold_with_box
     << " gold boxes, unmatched count as 0)\n";
  os << "note: P, R, F1, Acc and mean IoU are 0 when their denominator is 0\n";
}

inline void write_sweep_csv(std::ostream& os, const std::vector<SweepRow>& rows) {
  os << "beta,gamma,tau,max_tries,min_size,s_min,s_max,n_samples,mean_iou,"
        "mean_iou_accepted,acceptance_rate,fallback_rate,acc_at_0.5\n";
  char buf[512];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%g,%g,%g,%d,%g,%g,%g,%zu,%.6f,%.6f,%.6f,%.6f,%.6f\n",
                  r.cfg.beta, r.cfg.gamma, r.cfg.tau, r.cfg.max_tries, r.cfg.min_size,
                  r.cfg.s_min, r.cfg.s_max, r.n_samples, r.mean_iou, r.mean_iou_accepted,
                  r.acceptance_rate, r.fallback_rate, r.acc_at_05);
    os << buf;
  }
}

}  // namespace gmner
