#pragma once

#include <vector>

#include "core/geometry.hpp"
#include "core/image.hpp"

namespace ftdn::flow {

using geom::Vec2;

enum class PointStatus { Ok, LostForward, LostBackward };

// Origin points, their forward-tracked and back-tracked positions, plus the
// forward-backward drift for points tracked successfully both ways.
// fb_error is NaN for lost points.
struct TrackedPointSet {
  std::vector<Vec2> origin;
  std::vector<Vec2> forward;
  std::vector<Vec2> back;
  std::vector<PointStatus> status;
  std::vector<double> fb_error;
};

struct LkParams {
  int levels = 3;          // pyramid levels, factor 2
  int window = 21;         // odd integration window
  int max_iterations = 30;
  double epsilon = 0.01;   // stop when the update is below this (px)
  double min_eig_factor = 1e-4;  // singular when eig_min < factor * window area
};

struct LkResult {
  std::vector<Vec2> points;
  std::vector<bool> ok;
};

// Iterative pyramidal Lucas-Kanade with bilinear sampling. A point is lost
// when its structure tensor is near-singular at any level, the iteration
// diverges, or the tracked position leaves the frame.
LkResult lk_track(const GrayFrame& prev, const GrayFrame& next,
                  const std::vector<Vec2>& pts, const LkParams& params = {});

// Euclidean forward-backward drift per point.
std::vector<double> fb_error(const std::vector<Vec2>& origin,
                             const std::vector<Vec2>& back);

// Forward + backward tracking with per-point status and FB error.
TrackedPointSet track_forward_backward(const GrayFrame& prev,
                                       const GrayFrame& next,
                                       const std::vector<Vec2>& pts,
                                       const LkParams& params = {});

// Drops lost points, then keeps the ceil(n_ok/2) survivors with the smallest
// FB error (ties by original index). Returned indices are ascending.
std::vector<int> screen_points(const TrackedPointSet& tps);

}  // namespace ftdn::flow
