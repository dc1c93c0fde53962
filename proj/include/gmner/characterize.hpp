#pragma once

// Monte-Carlo statistics of the perturbation itself: how far perturbed
// boxes land from the originals for a grid of jitter strengths.

#include <cstdint>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "gmner/error.hpp"
#include "gmner/grbp.hpp"
#include "gmner/parallel.hpp"
#include "gmner/random.hpp"

namespace gmner {

// Uniformly placed boxes in a fixed image. Side lengths are drawn as a
// fraction of the image side in [min_frac, max_frac], floored at min_side.
struct SyntheticBoxes {
  ImageDims dims{640, 480};
  double min_frac = 0.05;
  double max_frac = 0.6;
  double min_side = 4.0;
};

// Boxes taken round-robin from a fixed pool (e.g. dataset gold boxes).
struct BoxPool {
  std::vector<std::pair<Box, ImageDims>> boxes;
};

using BoxSampler = std::variant<SyntheticBoxes, BoxPool>;

inline void validate(const SyntheticBoxes& s) {
  require_valid(s.dims);
  if (!(s.min_frac > 0.0 && s.min_frac <= s.max_frac && s.max_frac <= 1.0)) {
    throw ConfigError("box sampler: need 0 < min_frac <= max_frac <= 1");
  }
  if (!(s.min_side > 0.0) || s.min_side > s.dims.width || s.min_side > s.dims.height) {
    throw ConfigError("box sampler: min_side must be positive and fit the image");
  }
}

inline std::pair<Box, ImageDims> sample_box(const BoxSampler& sampler,
                                            std::uint64_t seed, std::size_t i) {
  if (const auto* pool = std::get_if<BoxPool>(&sampler)) {
    return pool->boxes[i % pool->boxes.size()];
  }
  const auto& s = std::get<SyntheticBoxes>(sampler);
  rng::Stream stream(rng::record_seed(seed, "box-sampler", i));
  const double W = s.dims.width;
  const double H = s.dims.height;
  const double w = std::max(s.min_side, stream.uniform(s.min_frac, s.max_frac) * W);
  const double h = std::max(s.min_side, stream.uniform(s.min_frac, s.max_frac) * H);
  const double x1 = stream.uniform(0.0, W - w);
  const double y1 = stream.uniform(0.0, H - h);
  return {Box{x1, y1, x1 + w, y1 + h}, s.dims};
}

struct SweepRow {
  GrbpConfig cfg;
  std::size_t n_samples = 0;
  double mean_iou = 0.0;           // over every output, fallbacks included
  double mean_iou_accepted = 0.0;  // over non-fallback outputs only
  double acceptance_rate = 0.0;    // accepted candidates / candidates drawn
  double fallback_rate = 0.0;      // fallback outputs / samples
  double acc_at_05 = 0.0;          // outputs with IoU >= 0.5 / samples
};

// Every grid cell sees the same boxes and the same per-sample seeds, so cells
// differ only by their configuration.
inline std::vector<SweepRow> characterize(const std::vector<GrbpConfig>& grid,
                                          const BoxSampler& sampler,
                                          std::size_t n_samples, std::uint64_t seed,
                                          int workers = 1) {
  if (n_samples < 1) throw ConfigError("characterize: n_samples must be >= 1");
  for (std::size_t g = 0; g < grid.size(); ++g) {
    try {
      validate(grid[g]);
    } catch (const ConfigError& e) {
      throw ConfigError("grid entry " + std::to_string(g) + ": " + e.what());
    }
  }
  if (const auto* s = std::get_if<SyntheticBoxes>(&sampler)) validate(*s);
  if (const auto* p = std::get_if<BoxPool>(&sampler); p && p->boxes.empty()) {
    throw ConfigError("box sampler: pool is empty");
  }

  struct Sample {
    double iou = 0.0;
    bool fallback = false;
    int tries = 0;
  };

  std::vector<SweepRow> rows;
  rows.reserve(grid.size());
  std::vector<Sample> samples(n_samples);
  for (const auto& cfg : grid) {
    parallel_for(n_samples, workers, [&](std::size_t i) {
      const auto [box, dims] = sample_box(sampler, seed, i);
      const auto out = perturb(box, dims, cfg, rng::record_seed(seed, "grbp", i));
      samples[i] = {iou(out.box, box), out.was_fallback, out.tries_used};
    });

    SweepRow row;
    row.cfg = cfg;
    row.n_samples = n_samples;
    double iou_sum = 0.0;
    double accepted_iou_sum = 0.0;
    std::size_t accepted = 0, fallbacks = 0, hits = 0, candidates = 0;
    for (const auto& s : samples) {
      iou_sum += s.iou;
      candidates += static_cast<std::size_t>(s.tries);
      if (s.fallback) {
        ++fallbacks;
      } else {
        ++accepted;
        accepted_iou_sum += s.iou;
      }
      if (s.iou >= 0.5) ++hits;
    }
    const auto n = static_cast<double>(n_samples);
    row.mean_iou = iou_sum / n;
    row.mean_iou_accepted = accepted ? accepted_iou_sum / static_cast<double>(accepted) : 0.0;
    row.acceptance_rate =
        candidates ? static_cast<double>(accepted) / static_cast<double>(candidates) : 0.0;
    row.fallback_rate = static_cast<double>(fallbacks) / n;
    row.acc_at_05 = static_cast<double>(hits) / n;
    rows.push_back(row);
  }
  return rows;
}

}  // namespace gmner
