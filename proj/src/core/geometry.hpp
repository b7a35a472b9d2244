#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "core/errors.hpp"

namespace ftdn::geom {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;
};

using Polygon = std::vector<Vec2>;

struct FaceRect {
  double x = 0.0, y = 0.0, w = 0.0, h = 0.0;
};

// One frame of landmark input: 68 points plus the detected face rectangle.
struct LandmarkFrame {
  std::array<Vec2, 68> points{};
  FaceRect face_rect;
  long frame_index = 0;
};

inline constexpr int kNumRois = 7;
inline constexpr const char* kRoiNames[kNumRois] = {
    "forehead", "left_eye",   "right_eye", "nose",
    "left_cheek", "right_cheek", "mouth"};

// Seven facial regions in canonical order (see kRoiNames).
struct RoiSet {
  std::array<Polygon, kNumRois> regions;
};

// Throws InvalidArgument when the landmark invariants are violated
// (non-finite coordinate, non-positive rectangle).
void validate(const LandmarkFrame& lm);

double polygon_area(const Polygon& poly);

// Strict interior test: points on an edge or vertex count as outside.
bool point_in_polygon(const Vec2& p, const Polygon& poly);

// Convex hull (Andrew monotone chain), collinear points dropped.
Polygon convex_hull(std::vector<Vec2> pts);

// Builds the seven ROIs from the 68-point layout. Eye regions take the
// brow+eye hulls, the nose its bridge+nostril hull, the mouth its lip hull
// widened to the chin point, cheeks the hulls of jaw/nose-wing/eye-corner/
// mouth-corner anchors. The forehead has no landmarks; it is the
// quadrilateral spanned by the two outer brow-top points and their copies
// shifted up by 0.35 * face height. Throws Degenerate ("DegenerateLandmarks")
// when a region collapses below 4 px^2 or escapes 1.5x the face rectangle.
RoiSet compute_rois(const LandmarkFrame& lm);

// Uniform tracking lattice: spacing (w/40, h/40) from the face rectangle,
// anchored half a step inside the polygon's bounding-box corner, keeping the
// points strictly interior. Throws Degenerate ("EmptyGrid") when nothing
// lands inside.
std::vector<Vec2> seed_tracking_grid(const Polygon& roi,
                                     const LandmarkFrame& lm);

// ---- landmark JSON Lines interface ----
// One object per frame: {"frame": k, "rect": [x,y,w,h], "points": [[x,y]*68]}
// "points": null (or absent) marks a frame with no detected face.

struct LandmarkRecord {
  long frame = 0;
  std::optional<LandmarkFrame> landmarks;
};

LandmarkRecord parse_landmark_line(const std::string& line);
std::vector<LandmarkRecord> load_landmarks_jsonl(const std::string& path);
void save_landmarks_jsonl(const std::string& path,
                          const std::vector<LandmarkRecord>& records);

}  // namespace ftdn::geom
