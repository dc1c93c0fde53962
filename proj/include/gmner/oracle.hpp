#pragma once

// Exhaustive reference scorer for small instances.
//
// For every example it enumerates all one-to-one pairings between
// same-span records and keeps the pairing that maximizes, in lexicographic
// order, (GMNER correct, EEG correct, MNER correct, summed IoU). It shares
// nothing with the greedy matcher except the record canonicalization and
// the ratio conventions of make_report.

#include <functional>
#include <string>
#include <tuple>
#include <vector>

#include "gmner/error.hpp"
#include "gmner/geometry.hpp"
#include "gmner/scoring.hpp"

namespace gmner {

inline constexpr std::size_t kOracleMaxRecords = 6;

class OracleSizeError : public InputError {
 public:
  using InputError::InputError;
};

namespace detail {

struct OracleTotals {
  std::size_t gmner = 0, eeg = 0, mner = 0;
  double iou_sum = 0.0;
  std::size_t pairs = 0;  // final tie-break: prefer matching more pairs
  std::vector<double> ious;

  auto key() const { return std::make_tuple(gmner, eeg, mner, iou_sum, pairs); }
};

inline std::vector<EntityRecord> oracle_dedup(const std::vector<EntityRecord>& preds) {
  std::vector<EntityRecord> out;
  for (const auto& p : preds) {
    const EntityRecord c = canonical(p);
    bool dup = false;
    for (const auto& q : out) {
      dup = dup || (q.span == c.span && q.etype == c.etype && q.box == c.box);
    }
    if (!dup) out.push_back(c);
  }
  return out;
}

}  // namespace detail

inline void oracle_tally_example(ScoreTally& tally, const ExampleRecords& ex) {
  const auto gold = canonicalize_gold(ex.gold);
  const auto pred = detail::oracle_dedup(ex.pred);
  if (gold.size() > kOracleMaxRecords || pred.size() > kOracleMaxRecords) {
    throw OracleSizeError("oracle scorer handles at most " +
                          std::to_string(kOracleMaxRecords) + " records per side, got " +
                          std::to_string(pred.size()) + " predicted / " +
                          std::to_string(gold.size()) + " gold");
  }

  detail::OracleTotals best;
  detail::OracleTotals current;
  std::vector<bool> used(pred.size());

  std::function<void(std::size_t)> search = [&](std::size_t g) {
    if (g == gold.size()) {
      if (current.key() > best.key()) best = current;
      return;
    }
    search(g + 1);  // leave gold g unmatched
    for (std::size_t p = 0; p < pred.size(); ++p) {
      if (used[p] || pred[p].span != gold[g].span) continue;
      const auto saved = current;
      const bool type_ok = pred[p].etype == gold[g].etype;
      bool box_ok = false;
      if (!pred[p].box && !gold[g].box) {
        box_ok = true;
      } else if (pred[p].box && gold[g].box) {
        const double v = iou(*gold[g].box, *pred[p].box);
        box_ok = v >= kGroundingIou;
        current.iou_sum += v;
        current.ious.push_back(v);
      }
      ++current.pairs;
      current.mner += type_ok;
      current.eeg += box_ok;
      current.gmner += type_ok && box_ok;
      used[p] = true;
      search(g + 1);
      used[p] = false;
      current = saved;
    }
  };
  search(0);

  ++tally.n_examples;
  tally.n_gold += gold.size();
  tally.n_pred += pred.size();
  for (const auto& g : gold) tally.n_gold_with_box += g.box ? 1 : 0;
  tally.mner += best.mner;
  tally.eeg += best.eeg;
  tally.gmner += best.gmner;
  tally.matched_ious.insert(tally.matched_ious.end(), best.ious.begin(), best.ious.end());
}

inline ScoreReport oracle_score(const std::vector<ExampleRecords>& corpus,
                                const std::vector<double>& thresholds = default_thresholds()) {
  validate_thresholds(thresholds);
  ScoreTally tally;
  for (const auto& ex : corpus) oracle_tally_example(tally, ex);
  return make_report(std::move(tally), thresholds);
}

}  // namespace gmner
