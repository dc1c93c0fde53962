#pragma once

// Corpus scoring for MNER, EEG and GMNER plus grounding accuracy.
//
// Per matched (pred, gold) pair:
//   c_et = span and type equal
//   c_b  = both boxes absent, or IoU(pred, gold) >= 0.5
//   MNER correct = c_et, EEG correct = span equal and c_b,
//   GMNER correct = c_et * c_b.
// Counts are micro-summed over the corpus. Every ratio with a zero
// denominator is reported as 0.
//
// Pairing: only records with equal normalized spans may pair. Candidate
// pairs are taken greedily, one-to-one, by descending IoU (both boxes
// absent ranks as 1, exactly one absent as 0). Ties go to the pair with the
// correct type, then by record content, then by (gold index, pred index).

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "gmner/error.hpp"
#include "gmner/geometry.hpp"
#include "gmner/records.hpp"
#include "gmner/schema.hpp"

namespace gmner {

inline constexpr double kGroundingIou = 0.5;

inline std::vector<double> default_thresholds() { return {0.5, 0.75}; }

struct MatchOutcome {
  bool c_et = false;
  bool c_b = false;
  bool c = false;
};

// IoU used to rank candidate pairs.
inline double pairing_iou(const EntityRecord& pred, const EntityRecord& gold) {
  if (!pred.box && !gold.box) return 1.0;
  if (!pred.box || !gold.box) return 0.0;
  return iou(*pred.box, *gold.box);
}

inline MatchOutcome evaluate_pair(const EntityRecord& pred, const EntityRecord& gold) {
  MatchOutcome m;
  const bool span_eq = pred.span == gold.span;
  m.c_et = span_eq && pred.etype == gold.etype;
  if (!pred.box && !gold.box) {
    m.c_b = true;
  } else if (pred.box && gold.box) {
    m.c_b = iou(*pred.box, *gold.box) >= kGroundingIou;
  }
  m.c = m.c_et && m.c_b;
  return m;
}

inline EntityRecord canonical(const EntityRecord& r) {
  return {normalize_span(r.span), std::string(trim(r.etype)), r.box};
}

// Normalizes spans and types, then drops exact repeats (first kept).
inline std::vector<EntityRecord> canonicalize_predictions(const std::vector<EntityRecord>& preds) {
  std::vector<EntityRecord> out;
  for (const auto& p : preds) {
    auto c = canonical(p);
    if (std::find(out.begin(), out.end(), c) == out.end()) out.push_back(std::move(c));
  }
  return out;
}

inline std::vector<EntityRecord> canonicalize_gold(const std::vector<EntityRecord>& gold) {
  std::vector<EntityRecord> out;
  out.reserve(gold.size());
  for (const auto& g : gold) out.push_back(canonical(g));
  return out;
}

struct MatchedPair {
  std::size_t pred = 0;
  std::size_t gold = 0;
  MatchOutcome outcome;
};

namespace detail {

using RecordKey =
    std::tuple<const std::string&, const std::string&, bool, double, double, double, double>;

inline RecordKey record_key(const EntityRecord& r) {
  const Box b = r.box.value_or(Box{});
  return {r.span, r.etype, r.box.has_value(), b.x1, b.y1, b.x2, b.y2};
}

}  // namespace detail

// Greedy one-to-one matching; inputs must already be canonicalized.
// Pairs are returned ordered by gold index.
inline std::vector<MatchedPair> match_records(const std::vector<EntityRecord>& pred,
                                              const std::vector<EntityRecord>& gold) {
  struct Candidate {
    double rank;
    bool type_ok;
    std::size_t g, p;
  };
  std::vector<Candidate> cands;
  for (std::size_t g = 0; g < gold.size(); ++g) {
    for (std::size_t p = 0; p < pred.size(); ++p) {
      if (pred[p].span != gold[g].span) continue;
      cands.push_back({pairing_iou(pred[p], gold[g]), pred[p].etype == gold[g].etype, g, p});
    }
  }
  std::sort(cands.begin(), cands.end(), [&](const Candidate& a, const Candidate& b) {
    if (a.rank != b.rank) return a.rank > b.rank;
    if (a.type_ok != b.type_ok) return a.type_ok;
    const auto ga = detail::record_key(gold[a.g]), gb = detail::record_key(gold[b.g]);
    if (ga != gb) return ga < gb;
    const auto pa = detail::record_key(pred[a.p]), pb = detail::record_key(pred[b.p]);
    if (pa != pb) return pa < pb;
    return std::tie(a.g, a.p) < std::tie(b.g, b.p);
  });

  std::vector<bool> gold_used(gold.size()), pred_used(pred.size());
  std::vector<MatchedPair> out;
  for (const auto& c : cands) {
    if (gold_used[c.g] || pred_used[c.p]) continue;
    gold_used[c.g] = pred_used[c.p] = true;
    out.push_back({c.p, c.g, evaluate_pair(pred[c.p], gold[c.g])});
  }
  std::sort(out.begin(), out.end(),
            [](const MatchedPair& a, const MatchedPair& b) { return a.gold < b.gold; });
  return out;
}

struct TaskScore {
  std::size_t n_correct = 0;
  std::size_t n_pred = 0;
  std::size_t n_gold = 0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

struct ScoreReport {
  TaskScore mner, eeg, gmner;
  std::map<double, double> acc_at;           // IoU threshold -> accuracy
  std::map<double, std::size_t> matched_at;  // IoU threshold -> N_matched
  double mean_iou = 0.0;
  std::size_t n_gold_with_box = 0;
  std::size_t n_examples = 0;
};

inline double safe_ratio(double num, double den) { return den == 0.0 ? 0.0 : num / den; }

inline void finalize(TaskScore& t) {
  t.precision = safe_ratio(static_cast<double>(t.n_correct), static_cast<double>(t.n_pred));
  t.recall = safe_ratio(static_cast<double>(t.n_correct), static_cast<double>(t.n_gold));
  t.f1 = safe_ratio(2.0 * t.precision * t.recall, t.precision + t.recall);
}

// Raw per-corpus tallies, shared by the greedy scorer and the oracle so both
// report through one set of ratio conventions.
struct ScoreTally {
  std::size_t n_examples = 0;
  std::size_t n_pred = 0;
  std::size_t n_gold = 0;
  std::size_t n_gold_with_box = 0;
  std::size_t mner = 0, eeg = 0, gmner = 0;
  std::vector<double> matched_ious;  // IoU of every matched pair with both boxes
};

inline ScoreReport make_report(ScoreTally tally, const std::vector<double>& thresholds) {
  ScoreReport r;
  r.n_examples = tally.n_examples;
  for (TaskScore* t : {&r.mner, &r.eeg, &r.gmner}) {
    t->n_pred = tally.n_pred;
    t->n_gold = tally.n_gold;
  }
  r.mner.n_correct = tally.mner;
  r.eeg.n_correct = tally.eeg;
  r.gmner.n_correct = tally.gmner;
  finalize(r.mner);
  finalize(r.eeg);
  finalize(r.gmner);

  // Sorted summation keeps the total independent of record/example order.
  std::sort(tally.matched_ious.begin(), tally.matched_ious.end());
  double sum = 0.0;
  for (double v : tally.matched_ious) sum += v;
  r.n_gold_with_box = tally.n_gold_with_box;
  const auto den = static_cast<double>(tally.n_gold_with_box);
  r.mean_iou = std::min(1.0, safe_ratio(sum, den));
  for (double thr : thresholds) {
    const auto n = static_cast<std::size_t>(
        std::count_if(tally.matched_ious.begin(), tally.matched_ious.end(),
                      [thr](double v) { return v >= thr; }));
    r.matched_at[thr] = n;
    r.acc_at[thr] = safe_ratio(static_cast<double>(n), den);
  }
  return r;
}

inline void validate_thresholds(const std::vector<double>& thresholds) {
  for (double t : thresholds) {
    if (!(t >= 0.0 && t <= 1.0)) {
      throw ConfigError("IoU threshold " + std::to_string(t) + " outside [0, 1]");
    }
  }
}

// One example's gold and predicted records.
struct ExampleRecords {
  std::vector<EntityRecord> gold;
  std::vector<EntityRecord> pred;
};

inline void tally_example(ScoreTally& tally, const ExampleRecords& ex) {
  const auto gold = canonicalize_gold(ex.gold);
  const auto pred = canonicalize_predictions(ex.pred);
  ++tally.n_examples;
  tally.n_gold += gold.size();
  tally.n_pred += pred.size();
  for (const auto& g : gold) tally.n_gold_with_box += g.box ? 1 : 0;
  for (const auto& m : match_records(pred, gold)) {
    tally.mner += m.outcome.c_et;
    tally.eeg += m.outcome.c_b;  // matched pairs always share the span
    tally.gmner += m.outcome.c;
    const auto& pb = pred[m.pred].box;
    const auto& gb = gold[m.gold].box;
    if (pb && gb) tally.matched_ious.push_back(iou(*gb, *pb));
  }
}

inline ScoreReport score(const std::vector<ExampleRecords>& corpus,
                         const std::vector<double>& thresholds = default_thresholds()) {
  validate_thresholds(thresholds);
  ScoreTally tally;
  for (const auto& ex : corpus) tally_example(tally, ex);
  return make_report(std::move(tally), thresholds);
}

// Outcome of lining up predictions with a gold dataset by example id.
struct Reconciled {
  std::vector<ExampleRecords> corpus;
  std::vector<std::string> unknown_ids;  // predicted ids absent from gold (ignored)
  std::size_t missing_predictions = 0;   // gold ids with no prediction
};

// preds: (id, records) in any order. Duplicate ids on either side are errors.
inline Reconciled reconcile(const std::vector<Example>& golds,
                            const std::vector<std::pair<std::string, std::vector<EntityRecord>>>& preds) {
  std::map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < golds.size(); ++i) {
    if (!index.emplace(golds[i].id, i).second) {
      throw InputError("duplicate gold example id '" + golds[i].id + "'");
    }
  }
  Reconciled out;
  out.corpus.resize(golds.size());
  for (std::size_t i = 0; i < golds.size(); ++i) out.corpus[i].gold = golds[i].gold;
  std::vector<bool> seen(golds.size());
  std::set<std::string> seen_unknown;
  for (const auto& [id, recs] : preds) {
    auto it = index.find(id);
    if (it == index.end()) {
      if (!seen_unknown.insert(id).second) {
        throw InputError("duplicate prediction id '" + id + "'");
      }
      out.unknown_ids.push_back(id);
      continue;
    }
    if (seen[it->second]) throw InputError("duplicate prediction id '" + id + "'");
    seen[it->second] = true;
    out.corpus[it->second].pred = recs;
  }
  out.missing_predictions =
      static_cast<std::size_t>(std::count(seen.begin(), seen.end(), false));
  return out;
}

// Threshold label used in reports: shortest form of the value at 4 decimals.
inline std::string threshold_label(double thr) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", thr);
  std::string s = buf;
  while (s.size() > 1 && s.back() == '0') s.pop_back();
  if (s.back() == '.') s.pop_back();
  return s;
}

}  // namespace gmner
