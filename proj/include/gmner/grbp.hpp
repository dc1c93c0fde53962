#pragma once

// IoU-guarded Gaussian box perturbation.
//
// A ground-truth box is jittered in center (relative to its size) and in
// scale (multiplicative, bounded), clipped to the image, and accepted only
// if it keeps IoU >= tau with the original. After max_tries rejections the
// original box is returned. Boxes thinner than min_size are returned
// untouched without consuming randomness.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "gmner/error.hpp"
#include "gmner/geometry.hpp"
#include "gmner/parallel.hpp"
#include "gmner/random.hpp"
#include "gmner/records.hpp"

namespace gmner {

struct GrbpConfig {
  double beta = 0.03;   // center jitter std-dev, fraction of box size
  double gamma = 0.03;  // scale jitter std-dev
  double tau = 0.7;     // IoU acceptance threshold
  int max_tries = 10;
  double min_size = 4.0;  // pixels
  double s_min = 0.8;
  double s_max = 1.2;

  friend bool operator==(const GrbpConfig&, const GrbpConfig&) = default;
};

inline void validate(const GrbpConfig& cfg) {
  auto fail = [](const std::string& what) {
    throw ConfigError("invalid grbp config: " + what);
  };
  if (!std::isfinite(cfg.beta) || cfg.beta < 0.0) fail("beta must be >= 0");
  if (!std::isfinite(cfg.gamma) || cfg.gamma < 0.0) fail("gamma must be >= 0");
  if (!(cfg.tau >= 0.0 && cfg.tau <= 1.0)) fail("tau must lie in [0, 1]");
  if (cfg.max_tries < 1) fail("max_tries must be >= 1");
  if (!std::isfinite(cfg.min_size) || cfg.min_size <= 0.0) {
    fail("min_size must be > 0");
  }
  if (!std::isfinite(cfg.s_min) || !std::isfinite(cfg.s_max) ||
      cfg.s_min <= 0.0 || cfg.s_min > cfg.s_max) {
    fail("scale bounds must satisfy 0 < s_min <= s_max");
  }
}

struct PerturbOutcome {
  Box box;
  bool was_fallback = false;
  int tries_used = 0;
};

// Gaussian draws for try t (0-based) come from Philox blocks 2t and 2t+1 of
// the seed: (dx, dy) then (ew, eh).
inline PerturbOutcome perturb(const Box& b, const ImageDims& dims,
                              const GrbpConfig& cfg, std::uint64_t seed) {
  validate(cfg);
  require_valid(b);
  require_valid(dims);
  if (!inside(b, dims)) {
    throw InputError("box " + to_string(b) + " exceeds the " +
                     std::to_string(dims.width) + "x" +
                     std::to_string(dims.height) + " image");
  }

  const CenterSize cs = to_center_size(b);
  if (cs.w < cfg.min_size || cs.h < cfg.min_size) return {b, true, 0};

  for (int t = 0; t < cfg.max_tries; ++t) {
    const auto counter = 2 * static_cast<std::uint64_t>(t);
    const auto [zx, zy] = rng::gaussian_pair(seed, counter);
    const auto [zw, zh] = rng::gaussian_pair(seed, counter + 1);

    const double shift_x = cfg.beta * zx * cs.w;
    const double shift_y = cfg.beta * zy * cs.h;
    const double scale_w = std::min(cfg.s_max, std::max(cfg.s_min, 1.0 + cfg.gamma * zw));
    const double scale_h = std::min(cfg.s_max, std::max(cfg.s_min, 1.0 + cfg.gamma * zh));
    const double new_w = std::max(cfg.min_size, cs.w * scale_w);
    const double new_h = std::max(cfg.min_size, cs.h * scale_h);

    // Same box as centering (cx + shift, new_w) but expressed relative to the
    // original corners, so zero noise reproduces b bit-for-bit.
    const double grow_x = (new_w - cs.w) / 2.0;
    const double grow_y = (new_h - cs.h) / 2.0;
    const Box candidate{b.x1 + shift_x - grow_x, b.y1 + shift_y - grow_y,
                        b.x2 + shift_x + grow_x, b.y2 + shift_y + grow_y};

    const auto clipped = try_clip_to_image(candidate, dims);
    if (!clipped) continue;
    if (iou(*clipped, b) >= cfg.tau) return {*clipped, false, t + 1};
  }
  return {b, true, cfg.max_tries};
}

struct PerturbStats {
  std::size_t boxes = 0;
  std::size_t fallbacks = 0;
  std::size_t small_boxes = 0;  // early return, w or h below min_size
};

struct PerturbedDataset {
  std::vector<Example> examples;
  PerturbStats stats;
};

// Replaces every gold box with its perturbation. Record i of example `id`
// uses seed record_seed(base_seed, id, i), so the result is independent of
// example order and worker count.
inline PerturbedDataset perturb_dataset_detailed(const std::vector<Example>& examples,
                                                 const GrbpConfig& cfg,
                                                 std::uint64_t base_seed,
                                                 int workers = 1) {
  validate(cfg);
  PerturbedDataset out;
  out.examples = examples;
  std::vector<PerturbStats> per_example(examples.size());

  parallel_for(examples.size(), workers, [&](std::size_t i) {
    Example& ex = out.examples[i];
    PerturbStats& st = per_example[i];
    for (std::size_t r = 0; r < ex.gold.size(); ++r) {
      auto& box = ex.gold[r].box;
      if (!box) continue;
      try {
        const auto res = perturb(*box, ex.dims, cfg, rng::record_seed(base_seed, ex.id, r));
        ++st.boxes;
        if (res.was_fallback) ++st.fallbacks;
        if (res.was_fallback && res.tries_used == 0) ++st.small_boxes;
        *box = res.box;
      } catch (const InputError& e) {
        throw InputError("example '" + ex.id + "' entity " + std::to_string(r) +
                         ": " + e.what());
      }
    }
  });

  for (const auto& st : per_example) {
    out.stats.boxes += st.boxes;
    out.stats.fallbacks += st.fallbacks;
    out.stats.small_boxes += st.small_boxes;
  }
  return out;
}

inline std::vector<Example> perturb_dataset(const std::vector<Example>& examples,
                                            const GrbpConfig& cfg,
                                            std::uint64_t base_seed, int workers = 1) {
  return perturb_dataset_detailed(examples, cfg, base_seed, workers).examples;
}

}  // namespace gmner
