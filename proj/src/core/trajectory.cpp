#include "core/trajectory.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "core/textio.hpp"

namespace ftdn::traj {

const std::array<std::string, kFeatureRows>& feature_row_names() {
  static const std::array<std::string, kFeatureRows> names = [] {
    std::array<std::string, kFeatureRows> out;
    static const char* stats[4] = {"mean_x", "mean_y", "median_x", "median_y"};
    for (int r = 0; r < geom::kNumRois; ++r)
      for (int s = 0; s < 4; ++s)
        out[static_cast<std::size_t>(4 * r + s)] =
            std::string(geom::kRoiNames[r]) + "_" + stats[s];
    return out;
  }();
  return names;
}

namespace {

double median_of(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  if (n % 2 == 1) return v[n / 2];
  return 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

AnchorStep anchor_step(const std::vector<geom::Vec2>& flows) {
  if (flows.empty()) raise(ErrorKind::Degenerate, "EmptyRegion: no retained flows");
  AnchorStep s;
  std::vector<double> xs(flows.size()), ys(flows.size());
  double sx = 0.0, sy = 0.0;
  for (std::size_t i = 0; i < flows.size(); ++i) {
    xs[i] = flows[i].x;
    ys[i] = flows[i].y;
    sx += flows[i].x;
    sy += flows[i].y;
  }
  s.mean_x = sx / static_cast<double>(flows.size());
  s.mean_y = sy / static_cast<double>(flows.size());
  s.median_x = median_of(std::move(xs));
  s.median_y = median_of(std::move(ys));
  return s;
}

bool frame_valid(const FrameTrackStats& stats) {
  if (!stats.capture_ok || !stats.has_landmarks) return false;
  if (stats.seeded <= 0) return false;
  return static_cast<double>(stats.ok_points) >=
         0.2 * static_cast<double>(stats.seeded);
}

std::vector<std::pair<long, long>> split_clips(const std::vector<bool>& valid,
                                               long min_frames) {
  std::vector<std::pair<long, long>> clips;
  long start = -1;
  const long n = static_cast<long>(valid.size());
  for (long i = 0; i <= n; ++i) {
    const bool v = i < n && valid[static_cast<std::size_t>(i)];
    if (v && start < 0) start = i;
    if (!v && start >= 0) {
      if (i - start >= min_frames) clips.emplace_back(start, i);
      start = -1;
    }
  }
  return clips;
}

AnchorSeries build_series(const std::vector<std::array<AnchorStep, 7>>& steps,
                          const std::vector<geom::FaceRect>& rects, double fps) {
  if (steps.empty())
    raise(ErrorKind::InvalidArgument, "TooShort: need at least one step");
  if (steps.size() != rects.size())
    raise(ErrorKind::DimensionMismatch, "build_series: steps/rects mismatch");
  const Eigen::Index T = static_cast<Eigen::Index>(steps.size());
  AnchorSeries series;
  series.fps = fps;
  series.values = Mat::Zero(kFeatureRows, T);
  std::array<double, kFeatureRows> acc{};
  for (Eigen::Index t = 0; t < T; ++t) {
    const auto& rect = rects[static_cast<std::size_t>(t)];
    if (!(rect.w > 0.0) || !(rect.h > 0.0))
      raise(ErrorKind::InvalidArgument, "build_series: non-positive face rect");
    for (int r = 0; r < 7; ++r) {
      const AnchorStep& s = steps[static_cast<std::size_t>(t)][static_cast<std::size_t>(r)];
      acc[static_cast<std::size_t>(4 * r + 0)] += s.mean_x / rect.w;
      acc[static_cast<std::size_t>(4 * r + 1)] += s.mean_y / rect.h;
      acc[static_cast<std::size_t>(4 * r + 2)] += s.median_x / rect.w;
      acc[static_cast<std::size_t>(4 * r + 3)] += s.median_y / rect.h;
    }
    for (int row = 0; row < kFeatureRows; ++row)
      series.values(row, t) = acc[static_cast<std::size_t>(row)];
  }
  return series;
}

Mat normalize_window(const Mat& window) {
  Mat out(window.rows(), window.cols());
  const double n = static_cast<double>(window.cols());
  for (Eigen::Index r = 0; r < window.rows(); ++r) {
    const double mean = window.row(r).mean();
    Eigen::RowVectorXd centered = window.row(r).array() - mean;
    const double std = std::sqrt(centered.squaredNorm() / n);
    if (std < 1e-12)
      out.row(r).setZero();
    else
      out.row(r) = centered / std;
  }
  return out;
}

std::vector<TrajectorySample> window_samples(const AnchorSeries& series) {
  if (!(series.fps > 0.0))
    raise(ErrorKind::InvalidArgument, "window_samples: fps must be positive");
  const long stride = std::lround(series.fps);
  std::vector<TrajectorySample> out;
  const long T = static_cast<long>(series.values.cols());
  for (long off = 0; off + kWindow <= T; off += std::max(1L, stride)) {
    TrajectorySample s;
    s.x = normalize_window(series.values.block(0, off, kFeatureRows, kWindow));
    s.label = series.label;
    s.offset = off;
    s.video_id = series.video_id;
    out.push_back(std::move(s));
  }
  return out;
}

void save_series_csv(const AnchorSeries& series, const std::string& csv_path,
                     const std::string& meta_path) {
  std::ostringstream csv;
  csv << "roi_stat_axis";
  for (Eigen::Index t = 0; t < series.values.cols(); ++t) csv << ',' << t;
  csv << '\n';
  const auto& names = feature_row_names();
  for (int r = 0; r < kFeatureRows; ++r) {
    csv << names[static_cast<std::size_t>(r)];
    for (Eigen::Index t = 0; t < series.values.cols(); ++t)
      csv << ',' << format_double(series.values(r, t));
    csv << '\n';
  }
  write_text_file(csv_path, csv.str());

  nlohmann::json meta;
  meta["fps"] = series.fps;
  meta["video_id"] = series.video_id;
  if (series.label < 0)
    meta["label"] = nullptr;
  else
    meta["label"] = series.label;
  meta["start_frame"] = series.start_frame;
  meta["eval_only"] = series.eval_only;
  write_text_file(meta_path, meta.dump(2) + "\n");
}

AnchorSeries load_series_csv(const std::string& csv_path,
                             const std::string& meta_path) {
  std::ifstream in(csv_path);
  if (!in) raise(ErrorKind::Io, "cannot open series CSV: " + csv_path);
  std::string line;
  if (!std::getline(in, line))
    raise(ErrorKind::Parse, "empty series CSV: " + csv_path);
  const auto header = split_csv_line(line);
  if (header.empty() || header[0] != "roi_stat_axis")
    raise(ErrorKind::Parse, "series CSV: bad header: " + csv_path);
  const Eigen::Index T = static_cast<Eigen::Index>(header.size()) - 1;
  if (T < 1) raise(ErrorKind::Parse, "series CSV: no columns: " + csv_path);

  AnchorSeries series;
  series.values = Mat::Zero(kFeatureRows, T);
  const auto& names = feature_row_names();
  for (int r = 0; r < kFeatureRows; ++r) {
    if (!std::getline(in, line))
      raise(ErrorKind::Parse, "series CSV: missing rows: " + csv_path);
    const auto cells = split_csv_line(line);
    if (static_cast<Eigen::Index>(cells.size()) != T + 1)
      raise(ErrorKind::Parse, "series CSV: ragged row: " + csv_path);
    if (cells[0] != names[static_cast<std::size_t>(r)])
      raise(ErrorKind::Parse, "series CSV: row order mismatch at '" + cells[0] +
                                  "': " + csv_path);
    for (Eigen::Index t = 0; t < T; ++t)
      series.values(r, t) = parse_double(cells[static_cast<std::size_t>(t) + 1]);
  }

  nlohmann::json meta;
  try {
    meta = nlohmann::json::parse(read_text_file(meta_path));
  } catch (const nlohmann::json::exception& e) {
    raise(ErrorKind::Parse, std::string("series meta: bad JSON: ") + e.what());
  }
  series.fps = meta.value("fps", 25.0);
  series.video_id = meta.value("video_id", std::string());
  series.label = meta.contains("label") && !meta["label"].is_null()
                     ? meta["label"].get<int>()
                     : -1;
  series.start_frame = meta.value("start_frame", 0L);
  series.eval_only = meta.value("eval_only", false);
  return series;
}

void append_windows(SampleSet& set, const AnchorSeries& series) {
  auto windows = window_samples(series);
  for (auto& w : windows) set.samples.push_back(std::move(w));
}

void save_samples(const SampleSet& set, const std::string& manifest_path,
                  const std::string& blob_path) {
  std::vector<double> blob;
  blob.reserve(set.samples.size() * kFeatureRows * kWindow);
  nlohmann::json list = nlohmann::json::array();
  for (const auto& s : set.samples) {
    if (s.x.rows() != kFeatureRows || s.x.cols() != kWindow)
      raise(ErrorKind::DimensionMismatch, "save_samples: bad sample shape");
    for (Eigen::Index r = 0; r < s.x.rows(); ++r)
      for (Eigen::Index c = 0; c < s.x.cols(); ++c) blob.push_back(s.x(r, c));
    nlohmann::json j;
    j["video_id"] = s.video_id;
    if (s.label < 0)
      j["label"] = nullptr;
    else
      j["label"] = s.label;
    j["offset"] = s.offset;
    list.push_back(std::move(j));
  }
  write_f64_blob(blob_path, blob);

  nlohmann::json manifest;
  manifest["version"] = 1;
  manifest["rows"] = kFeatureRows;
  manifest["cols"] = kWindow;
  manifest["dtype"] = "float64";
  manifest["byte_order"] = "little-endian";
  manifest["layout"] = "sample-major,row-major";
  manifest["blob"] = std::filesystem::path(blob_path).filename().string();
  manifest["samples"] = std::move(list);
  write_text_file(manifest_path, manifest.dump(2) + "\n");
}

SampleSet load_samples(const std::string& manifest_path) {
  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(read_text_file(manifest_path));
  } catch (const nlohmann::json::exception& e) {
    raise(ErrorKind::Parse, std::string("sample manifest: bad JSON: ") + e.what());
  }
  if (manifest.value("rows", 0) != kFeatureRows ||
      manifest.value("cols", 0) != kWindow)
    raise(ErrorKind::Parse, "sample manifest: unexpected sample shape");
  if (manifest.value("layout", std::string()) != "sample-major,row-major" ||
      manifest.value("dtype", std::string()) != "float64")
    raise(ErrorKind::Parse, "sample manifest: unsupported layout");
  const auto blob_name = manifest.value("blob", std::string());
  if (blob_name.empty())
    raise(ErrorKind::Parse, "sample manifest: missing blob");
  std::filesystem::path blob_path(blob_name);
  if (blob_path.is_relative())
    blob_path = std::filesystem::path(manifest_path).parent_path() / blob_path;

  const auto& list = manifest["samples"];
  const std::size_t n = list.size();
  const std::vector<double> blob =
      read_f64_blob(blob_path.string(),
                    n * static_cast<std::size_t>(kFeatureRows) *
                        static_cast<std::size_t>(kWindow));
  SampleSet set;
  set.samples.resize(n);
  std::size_t pos = 0;
  for (std::size_t i = 0; i < n; ++i) {
    TrajectorySample& s = set.samples[i];
    s.x.resize(kFeatureRows, kWindow);
    for (Eigen::Index r = 0; r < kFeatureRows; ++r)
      for (Eigen::Index c = 0; c < kWindow; ++c) s.x(r, c) = blob[pos++];
    const auto& j = list[i];
    s.video_id = j.value("video_id", std::string());
    s.label = j.contains("label") && !j["label"].is_null() ? j["label"].get<int>() : -1;
    s.offset = j.value("offset", 0L);
  }
  return set;
}

}  // namespace ftdn::traj
