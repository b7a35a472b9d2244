#include "core/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <json.hpp>

namespace ftdn::geom {

void validate(const LandmarkFrame& lm) {
  if (!(lm.face_rect.w > 0.0) || !(lm.face_rect.h > 0.0))
    raise(ErrorKind::InvalidArgument, "LandmarkFrame: non-positive face rect");
  for (const Vec2& p : lm.points)
    if (!std::isfinite(p.x) || !std::isfinite(p.y))
      raise(ErrorKind::InvalidArgument, "LandmarkFrame: non-finite point");
  if (!std::isfinite(lm.face_rect.x) || !std::isfinite(lm.face_rect.y) ||
      !std::isfinite(lm.face_rect.w) || !std::isfinite(lm.face_rect.h))
    raise(ErrorKind::InvalidArgument, "LandmarkFrame: non-finite face rect");
}

double polygon_area(const Polygon& poly) {
  double s = 0.0;
  const std::size_t n = poly.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2& a = poly[i];
    const Vec2& b = poly[(i + 1) % n];
    s += a.x * b.y - b.x * a.y;
  }
  return std::abs(s) * 0.5;
}

bool point_in_polygon(const Vec2& p, const Polygon& poly) {
  const std::size_t n = poly.size();
  if (n < 3) return false;
  int winding = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2& a = poly[i];
    const Vec2& b = poly[(i + 1) % n];
    const double cross = (b.x - a.x) * (p.y - a.y) - (p.x - a.x) * (b.y - a.y);
    if (cross == 0.0 && std::min(a.x, b.x) <= p.x && p.x <= std::max(a.x, b.x) &&
        std::min(a.y, b.y) <= p.y && p.y <= std::max(a.y, b.y))
      return false;  // on the boundary
    if (a.y <= p.y) {
      if (b.y > p.y && cross > 0.0) ++winding;
    } else {
      if (b.y <= p.y && cross < 0.0) --winding;
    }
  }
  return winding != 0;
}

Polygon convex_hull(std::vector<Vec2> pts) {
  std::sort(pts.begin(), pts.end(), [](const Vec2& a, const Vec2& b) {
    return a.x < b.x || (a.x == b.x && a.y < b.y);
  });
  pts.erase(std::unique(pts.begin(), pts.end(),
                        [](const Vec2& a, const Vec2& b) {
                          return a.x == b.x && a.y == b.y;
                        }),
            pts.end());
  const std::size_t n = pts.size();
  if (n < 3) return pts;
  auto cross = [](const Vec2& o, const Vec2& a, const Vec2& b) {
    return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x);
  };
  std::vector<Vec2> hull(2 * n);
  std::size_t k = 0;
  for (std::size_t i = 0; i < n; ++i) {
    while (k >= 2 && cross(hull[k - 2], hull[k - 1], pts[i]) <= 0.0) --k;
    hull[k++] = pts[i];
  }
  for (std::size_t i = n - 1, t = k + 1; i-- > 0;) {
    while (k >= t && cross(hull[k - 2], hull[k - 1], pts[i]) <= 0.0) --k;
    hull[k++] = pts[i];
  }
  hull.resize(k - 1);
  return hull;
}

namespace {

Polygon hull_of(const LandmarkFrame& lm, std::initializer_list<int> idx) {
  std::vector<Vec2> pts;
  pts.reserve(idx.size());
  for (int i : idx) pts.push_back(lm.points[static_cast<std::size_t>(i)]);
  return convex_hull(std::move(pts));
}

Polygon hull_range(const LandmarkFrame& lm, int lo, int hi,
                   std::initializer_list<int> extra = {}) {
  std::vector<Vec2> pts;
  for (int i = lo; i <= hi; ++i) pts.push_back(lm.points[static_cast<std::size_t>(i)]);
  for (int i : extra) pts.push_back(lm.points[static_cast<std::size_t>(i)]);
  return convex_hull(std::move(pts));
}

void check_region(const Polygon& poly, const FaceRect& rect, const char* name) {
  if (poly.size() < 3 || polygon_area(poly) < 4.0)
    raise(ErrorKind::Degenerate,
          std::string("DegenerateLandmarks: region '") + name + "' collapsed");
  // Region must stay within the face rectangle scaled 1.5x about its center.
  const double cx = rect.x + rect.w / 2.0;
  const double cy = rect.y + rect.h / 2.0;
  const double hw = rect.w * 0.75;
  const double hh = rect.h * 0.75;
  for (const Vec2& v : poly) {
    if (std::abs(v.x - cx) > hw + 1e-9 || std::abs(v.y - cy) > hh + 1e-9)
      raise(ErrorKind::Degenerate,
            std::string("DegenerateLandmarks: region '") + name +
                "' outside 1.5x face rectangle");
  }
}

}  // namespace

RoiSet compute_rois(const LandmarkFrame& lm) {
  validate(lm);
  RoiSet rois;

  const double lift = 0.35 * lm.face_rect.h;
  const Vec2 lb = lm.points[19];  // outer top of the left brow
  const Vec2 rb = lm.points[24];  // outer top of the right brow
  rois.regions[0] = Polygon{lb, rb, Vec2{rb.x, rb.y - lift}, Vec2{lb.x, lb.y - lift}};

  std::vector<Vec2> left_eye_pts, right_eye_pts;
  for (int i = 17; i <= 21; ++i) left_eye_pts.push_back(lm.points[static_cast<std::size_t>(i)]);
  for (int i = 36; i <= 41; ++i) left_eye_pts.push_back(lm.points[static_cast<std::size_t>(i)]);
  for (int i = 22; i <= 26; ++i) right_eye_pts.push_back(lm.points[static_cast<std::size_t>(i)]);
  for (int i = 42; i <= 47; ++i) right_eye_pts.push_back(lm.points[static_cast<std::size_t>(i)]);
  rois.regions[1] = convex_hull(std::move(left_eye_pts));
  rois.regions[2] = convex_hull(std::move(right_eye_pts));
  rois.regions[3] = hull_range(lm, 27, 35);
  rois.regions[4] = hull_of(lm, {1, 2, 3, 4, 31, 36, 48});
  rois.regions[5] = hull_of(lm, {12, 13, 14, 15, 35, 45, 54});
  rois.regions[6] = hull_range(lm, 48, 67, {8});

  for (int r = 0; r < kNumRois; ++r)
    check_region(rois.regions[static_cast<std::size_t>(r)], lm.face_rect,
                 kRoiNames[r]);
  return rois;
}

std::vector<Vec2> seed_tracking_grid(const Polygon& roi,
                                     const LandmarkFrame& lm) {
  validate(lm);
  if (roi.size() < 3)
    raise(ErrorKind::InvalidArgument, "seed_tracking_grid: bad polygon");
  const double sx = lm.face_rect.w / 40.0;
  const double sy = lm.face_rect.h / 40.0;
  double min_x = roi[0].x, max_x = roi[0].x, min_y = roi[0].y, max_y = roi[0].y;
  for (const Vec2& v : roi) {
    min_x = std::min(min_x, v.x);
    max_x = std::max(max_x, v.x);
    min_y = std::min(min_y, v.y);
    max_y = std::max(max_y, v.y);
  }
  // Lattice is inset half a step from the bounding-box corner so the
  // boundary rows of a tight region are not systematically lost.
  std::vector<Vec2> out;
  for (long j = 0;; ++j) {
    const double y = min_y + (static_cast<double>(j) + 0.5) * sy;
    if (y >= max_y) break;
    for (long i = 0;; ++i) {
      const double x = min_x + (static_cast<double>(i) + 0.5) * sx;
      if (x >= max_x) break;
      if (point_in_polygon(Vec2{x, y}, roi)) out.push_back(Vec2{x, y});
    }
  }
  if (out.empty()) raise(ErrorKind::Degenerate, "EmptyGrid: no interior lattice point");
  return out;
}

LandmarkRecord parse_landmark_line(const std::string& line) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    raise(ErrorKind::Parse, std::string("landmarks: bad JSON line: ") + e.what());
  }
  LandmarkRecord rec;
  if (!j.contains("frame") || !j["frame"].is_number_integer())
    raise(ErrorKind::Parse, "landmarks: missing frame index");
  rec.frame = j["frame"].get<long>();
  if (!j.contains("points") || j["points"].is_null()) return rec;

  const auto& pts = j["points"];
  if (!pts.is_array() || pts.size() != 68)
    raise(ErrorKind::Parse, "landmarks: points must hold 68 pairs");
  if (!j.contains("rect") || !j["rect"].is_array() || j["rect"].size() != 4)
    raise(ErrorKind::Parse, "landmarks: rect must hold [x,y,w,h]");
  LandmarkFrame lm;
  lm.frame_index = rec.frame;
  for (std::size_t i = 0; i < 68; ++i) {
    if (!pts[i].is_array() || pts[i].size() != 2)
      raise(ErrorKind::Parse, "landmarks: point must be [x,y]");
    lm.points[i] = Vec2{pts[i][0].get<double>(), pts[i][1].get<double>()};
  }
  lm.face_rect = FaceRect{j["rect"][0].get<double>(), j["rect"][1].get<double>(),
                          j["rect"][2].get<double>(), j["rect"][3].get<double>()};
  validate(lm);
  rec.landmarks = lm;
  return rec;
}

std::vector<LandmarkRecord> load_landmarks_jsonl(const std::string& path) {
  std::ifstream in(path);
  if (!in) raise(ErrorKind::Io, "cannot open landmarks file: " + path);
  std::vector<LandmarkRecord> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    out.push_back(parse_landmark_line(line));
  }
  return out;
}

void save_landmarks_jsonl(const std::string& path,
                          const std::vector<LandmarkRecord>& records) {
  std::ofstream out(path);
  if (!out) raise(ErrorKind::Io, "cannot write landmarks file: " + path);
  for (const auto& rec : records) {
    nlohmann::json j;
    j["frame"] = rec.frame;
    if (rec.landmarks) {
      const LandmarkFrame& lm = *rec.landmarks;
      j["rect"] = {lm.face_rect.x, lm.face_rect.y, lm.face_rect.w, lm.face_rect.h};
      nlohmann::json pts = nlohmann::json::array();
      for (const Vec2& p : lm.points) pts.push_back({p.x, p.y});
      j["points"] = std::move(pts);
    } else {
      j["points"] = nullptr;
    }
    out << j.dump() << '\n';
  }
}

}  // namespace ftdn::geom
