#include "core/optical_flow.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace ftdn::flow {

namespace {

struct TrackOutcome {
  Vec2 point;
  bool ok = false;
};

// Tracks one point through the pyramid. `pyr_a` is the source frame
// (gradients), `pyr_b` the target.
TrackOutcome track_point(const std::vector<GrayFrame>& pyr_a,
                         const std::vector<GrayFrame>& pyr_b, const Vec2& p,
                         const LkParams& prm) {
  const int half = prm.window / 2;
  const int area = prm.window * prm.window;
  const double eig_threshold = prm.min_eig_factor * area;
  const double max_update = 2.0 * prm.window;

  const GrayFrame& finest = pyr_a.front();
  if (p.x < half || p.y < half || p.x > finest.width - 1 - half ||
      p.y > finest.height - 1 - half)
    return {p, false};

  std::vector<double> ix(static_cast<std::size_t>(area));
  std::vector<double> iy(static_cast<std::size_t>(area));
  std::vector<double> iv(static_cast<std::size_t>(area));

  Vec2 nu{0.0, 0.0};
  for (int level = static_cast<int>(pyr_a.size()) - 1; level >= 0; --level) {
    const GrayFrame& a = pyr_a[static_cast<std::size_t>(level)];
    const GrayFrame& b = pyr_b[static_cast<std::size_t>(level)];
    const double scale = std::pow(2.0, level);
    const Vec2 pl{p.x / scale, p.y / scale};

    // Spatial gradients of the source window (central differences,
    // clamped-border bilinear sampling).
    double gxx = 0.0, gxy = 0.0, gyy = 0.0;
    int k = 0;
    for (int dy = -half; dy <= half; ++dy)
      for (int dx = -half; dx <= half; ++dx, ++k) {
        const double qx = pl.x + dx;
        const double qy = pl.y + dy;
        const double gx = (sample_bilinear(a, qx + 1, qy) -
                           sample_bilinear(a, qx - 1, qy)) * 0.5;
        const double gy = (sample_bilinear(a, qx, qy + 1) -
                           sample_bilinear(a, qx, qy - 1)) * 0.5;
        ix[static_cast<std::size_t>(k)] = gx;
        iy[static_cast<std::size_t>(k)] = gy;
        iv[static_cast<std::size_t>(k)] = sample_bilinear(a, qx, qy);
        gxx += gx * gx;
        gxy += gx * gy;
        gyy += gy * gy;
      }

    const double trace = gxx + gyy;
    const double det_part = std::sqrt((gxx - gyy) * (gxx - gyy) + 4.0 * gxy * gxy);
    const double eig_min = 0.5 * (trace - det_part);
    if (eig_min < eig_threshold) return {p, false};
    const double det = gxx * gyy - gxy * gxy;
    if (det <= 0.0) return {p, false};

    for (int iter = 0; iter < prm.max_iterations; ++iter) {
      double bx = 0.0, by = 0.0;
      k = 0;
      for (int dy = -half; dy <= half; ++dy)
        for (int dx = -half; dx <= half; ++dx, ++k) {
          const double residual =
              iv[static_cast<std::size_t>(k)] -
              sample_bilinear(b, pl.x + nu.x + dx, pl.y + nu.y + dy);
          bx += residual * ix[static_cast<std::size_t>(k)];
          by += residual * iy[static_cast<std::size_t>(k)];
        }
      const double ux = (gyy * bx - gxy * by) / det;
      const double uy = (gxx * by - gxy * bx) / det;
      if (!std::isfinite(ux) || !std::isfinite(uy)) return {p, false};
      nu.x += ux;
      nu.y += uy;
      if (std::abs(nu.x) > max_update || std::abs(nu.y) > max_update)
        return {p, false};  // diverged
      if (std::hypot(ux, uy) < prm.epsilon) break;
    }
    if (level > 0) {
      nu.x *= 2.0;
      nu.y *= 2.0;
    }
  }

  const Vec2 out{p.x + nu.x, p.y + nu.y};
  if (out.x < 0.0 || out.y < 0.0 || out.x > finest.width - 1 ||
      out.y > finest.height - 1)
    return {out, false};
  return {out, true};
}

}  // namespace

LkResult lk_track(const GrayFrame& prev, const GrayFrame& next,
                  const std::vector<Vec2>& pts, const LkParams& params) {
  if (prev.width != next.width || prev.height != next.height)
    raise(ErrorKind::DimensionMismatch, "DimensionMismatch: lk_track frames");
  const auto pyr_a = build_pyramid(prev, params.levels);
  const auto pyr_b = build_pyramid(next, params.levels);
  LkResult res;
  res.points.resize(pts.size());
  res.ok.resize(pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const TrackOutcome o = track_point(pyr_a, pyr_b, pts[i], params);
    res.points[i] = o.point;
    res.ok[i] = o.ok;
  }
  return res;
}

std::vector<double> fb_error(const std::vector<Vec2>& origin,
                             const std::vector<Vec2>& back) {
  if (origin.size() != back.size())
    raise(ErrorKind::DimensionMismatch, "DimensionMismatch: fb_error");
  std::vector<double> out(origin.size());
  for (std::size_t i = 0; i < origin.size(); ++i)
    out[i] = std::hypot(origin[i].x - back[i].x, origin[i].y - back[i].y);
  return out;
}

TrackedPointSet track_forward_backward(const GrayFrame& prev,
                                       const GrayFrame& next,
                                       const std::vector<Vec2>& pts,
                                       const LkParams& params) {
  TrackedPointSet tps;
  tps.origin = pts;
  const LkResult fwd = lk_track(prev, next, pts, params);
  tps.forward = fwd.points;
  const LkResult bwd = lk_track(next, prev, fwd.points, params);
  tps.back = bwd.points;
  tps.status.resize(pts.size());
  tps.fb_error.assign(pts.size(), std::numeric_limits<double>::quiet_NaN());
  for (std::size_t i = 0; i < pts.size(); ++i) {
    if (!fwd.ok[i]) {
      tps.status[i] = PointStatus::LostForward;
    } else if (!bwd.ok[i]) {
      tps.status[i] = PointStatus::LostBackward;
    } else {
      tps.status[i] = PointStatus::Ok;
      tps.fb_error[i] =
          std::hypot(pts[i].x - tps.back[i].x, pts[i].y - tps.back[i].y);
    }
  }
  return tps;
}

std::vector<int> screen_points(const TrackedPointSet& tps) {
  std::vector<int> ok_idx;
  for (std::size_t i = 0; i < tps.status.size(); ++i)
    if (tps.status[i] == PointStatus::Ok) ok_idx.push_back(static_cast<int>(i));
  if (ok_idx.empty()) return {};
  const std::size_t keep = (ok_idx.size() + 1) / 2;
  std::sort(ok_idx.begin(), ok_idx.end(), [&tps](int a, int b) {
    const double ea = tps.fb_error[static_cast<std::size_t>(a)];
    const double eb = tps.fb_error[static_cast<std::size_t>(b)];
    return ea < eb || (ea == eb && a < b);
  });
  ok_idx.resize(keep);
  std::sort(ok_idx.begin(), ok_idx.end());
  return ok_idx;
}

}  // namespace ftdn::flow
