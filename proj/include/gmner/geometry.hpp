#pragma once

// Axis-aligned box arithmetic in continuous pixel coordinates.
//
// Origin is the top-left image corner, x grows rightward and y downward.
// Area is (x2 - x1) * (y2 - y1) with no +1 pixel inclusivity, so a box
// touching another along an edge has zero intersection.

#include <algorithm>
#include <cmath>
#include <optional>
#include <sstream>
#include <string>

#include "gmner/error.hpp"

namespace gmner {

struct Box {
  double x1 = 0.0;
  double y1 = 0.0;
  double x2 = 0.0;
  double y2 = 0.0;

  double width() const { return x2 - x1; }
  double height() const { return y2 - y1; }
  double area() const { return width() * height(); }

  bool valid() const {
    return std::isfinite(x1) && std::isfinite(y1) && std::isfinite(x2) &&
           std::isfinite(y2) && x2 > x1 && y2 > y1;
  }

  friend bool operator==(const Box&, const Box&) = default;
};

struct CenterSize {
  double cx = 0.0;
  double cy = 0.0;
  double w = 0.0;
  double h = 0.0;

  friend bool operator==(const CenterSize&, const CenterSize&) = default;
};

struct ImageDims {
  int width = 0;
  int height = 0;

  bool valid() const { return width >= 1 && height >= 1; }

  friend bool operator==(const ImageDims&, const ImageDims&) = default;
};

// Clipping left nothing inside the image.
class DegenerateClipError : public InputError {
 public:
  using InputError::InputError;
};

inline std::string to_string(const Box& b) {
  std::ostringstream os;
  os.precision(17);
  os << '(' << b.x1 << ", " << b.y1 << ", " << b.x2 << ", " << b.y2 << ')';
  return os.str();
}

inline void require_valid(const Box& b) {
  if (!b.valid()) {
    throw InputError("invalid box " + to_string(b) +
                     ": coordinates must be finite with x2 > x1 and y2 > y1");
  }
}

inline void require_valid(const ImageDims& d) {
  if (!d.valid()) {
    throw InputError("invalid image dims " + std::to_string(d.width) + "x" +
                     std::to_string(d.height));
  }
}

// True when the box lies in [0, W] x [0, H].
inline bool inside(const Box& b, const ImageDims& d) {
  return b.x1 >= 0.0 && b.y1 >= 0.0 && b.x2 <= d.width && b.y2 <= d.height;
}

inline double intersection_area(const Box& a, const Box& b) {
  const double iw = std::min(a.x2, b.x2) - std::max(a.x1, b.x1);
  const double ih = std::min(a.y2, b.y2) - std::max(a.y1, b.y1);
  if (iw <= 0.0 || ih <= 0.0) return 0.0;
  return iw * ih;
}

// Intersection over union. Symmetric, and exactly 1 for identical boxes.
inline double iou(const Box& a, const Box& b) {
  require_valid(a);
  require_valid(b);
  const double inter = intersection_area(a, b);
  if (inter == 0.0) return 0.0;
  const double uni = a.area() + b.area() - inter;
  return std::clamp(inter / uni, 0.0, 1.0);
}

inline CenterSize to_center_size(const Box& b) {
  require_valid(b);
  return {(b.x1 + b.x2) / 2.0, (b.y1 + b.y2) / 2.0, b.x2 - b.x1, b.y2 - b.y1};
}

inline Box to_box(const CenterSize& cs) {
  if (!(cs.w > 0.0) || !(cs.h > 0.0) || !std::isfinite(cs.cx) ||
      !std::isfinite(cs.cy) || !std::isfinite(cs.w) || !std::isfinite(cs.h)) {
    throw InputError("invalid center/size: width and height must be positive");
  }
  const Box b{cs.cx - cs.w / 2.0, cs.cy - cs.h / 2.0, cs.cx + cs.w / 2.0,
              cs.cy + cs.h / 2.0};
  require_valid(b);
  return b;
}

// Clamp to [0, W] x [0, H]; nullopt when nothing of the box remains.
inline std::optional<Box> try_clip_to_image(const Box& b, const ImageDims& d) {
  const double w = d.width;
  const double h = d.height;
  const Box c{std::clamp(b.x1, 0.0, w), std::clamp(b.y1, 0.0, h),
              std::clamp(b.x2, 0.0, w), std::clamp(b.y2, 0.0, h)};
  if (!c.valid()) return std::nullopt;
  return c;
}

inline Box clip_to_image(const Box& b, const ImageDims& d) {
  require_valid(b);
  require_valid(d);
  auto c = try_clip_to_image(b, d);
  if (!c) {
    throw DegenerateClipError("box " + to_string(b) + " lies outside the " +
                              std::to_string(d.width) + "x" +
                              std::to_string(d.height) + " image");
  }
  return *c;
}

}  // namespace gmner
