#pragma once

#include <Eigen/Dense>
#include <array>
#include <string>
#include <utility>
#include <vector>

#include "core/errors.hpp"
#include "core/geometry.hpp"

namespace ftdn::traj {

using Mat = Eigen::MatrixXd;

inline constexpr int kFeatureRows = 28;  // 7 ROIs x {mean,median} x {x,y}
inline constexpr int kWindow = 64;

// Canonical feature-row names: <roi>_<stat>_<axis>, rows 4r..4r+3 hold
// [mean_x, mean_y, median_x, median_y] for ROI r.
const std::array<std::string, kFeatureRows>& feature_row_names();

// Per-ROI anchor displacement statistics for one frame step.
struct AnchorStep {
  double mean_x = 0.0, mean_y = 0.0, median_x = 0.0, median_y = 0.0;
};

// Mean and per-axis median of the retained displacement vectors.
// Throws Degenerate ("EmptyRegion") on an empty list.
AnchorStep anchor_step(const std::vector<geom::Vec2>& flows);

struct FrameTrackStats {
  bool capture_ok = false;
  bool has_landmarks = false;
  long seeded = 0;
  long ok_points = 0;  // tracked both ways, before the 50% screening
};

// A frame is kept when it was captured, has landmarks and at least 20% of
// the seeded points survived forward-backward tracking.
bool frame_valid(const FrameTrackStats& stats);

// Maximal runs of consecutive valid frames, each at least `min_frames` long;
// half-open [start, end) frame ranges.
std::vector<std::pair<long, long>> split_clips(const std::vector<bool>& valid,
                                               long min_frames = 2);

struct AnchorSeries {
  Mat values;  // kFeatureRows x T
  double fps = 25.0;
  std::string video_id;
  int label = -1;  // 0 real, 1 fake, -1 unknown
  long start_frame = 0;
  bool eval_only = false;
};

// Normalized cumulative anchor positions from per-step displacements. Step k
// is scaled by frame k's face rectangle (x by 1/w, y by 1/h) and the scaled
// steps are summed from zero. steps.size() == rects.size() == frame count - 1.
AnchorSeries build_series(const std::vector<std::array<AnchorStep, 7>>& steps,
                          const std::vector<geom::FaceRect>& rects, double fps);

struct TrajectorySample {
  Mat x;  // kFeatureRows x kWindow, row-normalized
  int label = -1;
  long offset = 0;
  std::string video_id;
};

// Per-row z-score with population std; rows with std below 1e-12 become zero.
Mat normalize_window(const Mat& window);

// 64-frame windows at offsets 0, s, 2s, ... with stride s = round(fps);
// emits only full windows, each row-normalized.
std::vector<TrajectorySample> window_samples(const AnchorSeries& series);

// ---- CSV + sidecar interface ----
void save_series_csv(const AnchorSeries& series, const std::string& csv_path,
                     const std::string& meta_path);
AnchorSeries load_series_csv(const std::string& csv_path,
                             const std::string& meta_path);

// ---- sample-set manifest + float64 little-endian blob ----
struct SampleSet {
  std::vector<TrajectorySample> samples;
};

void append_windows(SampleSet& set, const AnchorSeries& series);
void save_samples(const SampleSet& set, const std::string& manifest_path,
                  const std::string& blob_path);
SampleSet load_samples(const std::string& manifest_path);

}  // namespace ftdn::traj
