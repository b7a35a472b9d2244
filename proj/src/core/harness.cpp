#include "core/harness.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <future>
#include <map>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "core/rng.hpp"
#include "core/textio.hpp"

namespace ftdn::harness {

namespace {

constexpr std::uint64_t kTagShuffle = 0x7368666cULL;
constexpr std::uint64_t kTagSynthReal = 0x73727265ULL;
constexpr std::uint64_t kTagSynthFake = 0x7366616bULL;

int resolve_threads(int threads) {
  if (threads > 0) return threads;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

struct GroupSpan {
  std::size_t begin = 0, end = 0;
};

std::vector<GroupSpan> partition_groups(std::size_t n, int group_size) {
  std::vector<GroupSpan> spans;
  const std::size_t step = group_size <= 0 ? n : static_cast<std::size_t>(group_size);
  for (std::size_t b = 0; b < n; b += step)
    spans.push_back(GroupSpan{b, std::min(n, b + step)});
  return spans;
}

}  // namespace

StepStats train_step(net::FtdnModel& model, const std::vector<const Mat*>& xs,
                     const std::vector<double>& labels, nn::AdamState& state,
                     const nn::AdamConfig& adam, int group_size, int threads) {
  if (xs.empty()) raise(ErrorKind::InvalidArgument, "train_step: empty batch");
  if (xs.size() != labels.size())
    raise(ErrorKind::DimensionMismatch, "train_step: labels mismatch");
  const auto spans = partition_groups(xs.size(), group_size);
  const double scale = 1.0 / static_cast<double>(xs.size());

  std::vector<std::vector<Mat>> group_grads(spans.size());
  std::vector<net::GroupRun> runs(spans.size());
  for (auto& g : group_grads) {
    g.resize(model.params().size());
    for (std::size_t i = 0; i < model.params().size(); ++i)
      g[i] = Mat::Zero(model.params()[static_cast<int>(i)].value.rows(),
                       model.params()[static_cast<int>(i)].value.cols());
  }

  auto run_one = [&](std::size_t gi) {
    const GroupSpan& s = spans[gi];
    std::vector<const Mat*> gx(xs.begin() + static_cast<long>(s.begin),
                               xs.begin() + static_cast<long>(s.end));
    std::vector<double> gl(labels.begin() + static_cast<long>(s.begin),
                           labels.begin() + static_cast<long>(s.end));
    runs[gi] = net::run_group(model, gx, gl, /*with_decoder=*/true, scale,
                              &group_grads[gi]);
  };

  const int n_workers = resolve_threads(threads);
  if (n_workers <= 1 || spans.size() == 1) {
    for (std::size_t gi = 0; gi < spans.size(); ++gi) run_one(gi);
  } else {
    std::vector<std::future<void>> futures;
    for (std::size_t gi = 1; gi < spans.size(); ++gi)
      futures.push_back(std::async(std::launch::async, run_one, gi));
    run_one(0);
    for (auto& f : futures) f.get();
  }

  // Deterministic reduction: groups in index order.
  model.params().zero_grads();
  for (std::size_t gi = 0; gi < spans.size(); ++gi)
    for (std::size_t i = 0; i < model.params().size(); ++i)
      model.params()[static_cast<int>(i)].grad += group_grads[gi][i];

  nn::adam_step(model.params(), state, adam);
  model.set_step(model.step() + 1);

  StepStats stats;
  for (const auto& r : runs) {
    stats.loss += r.loss_sum;
    stats.bce += r.bce_sum;
    stats.mse += r.mse_sum;
  }
  stats.loss *= scale;
  stats.bce *= scale;
  stats.mse *= scale;
  return stats;
}

void train(net::FtdnModel& model, const traj::SampleSet& train_set,
           const traj::SampleSet* val, const TrainConfig& cfg,
           const EpochCallback& cb) {
  if (train_set.samples.empty())
    raise(ErrorKind::InvalidArgument, "train: empty training set");
  for (const auto& s : train_set.samples)
    if (s.label != 0 && s.label != 1)
      raise(ErrorKind::InvalidArgument, "train: unlabeled sample for video '" +
                                            s.video_id + "'");

  nn::AdamState state;
  nn::AdamConfig adam;
  adam.lr = cfg.learning_rate;

  std::vector<std::size_t> order(train_set.samples.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  double best_val = -1.0;
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    Rng shuffle_rng(Rng::derive(cfg.seed, kTagShuffle,
                                static_cast<std::uint64_t>(epoch)));
    shuffle_rng.shuffle(order);

    double loss_sum = 0.0, bce_sum = 0.0, mse_sum = 0.0;
    const std::size_t n = order.size();
    const std::size_t bs = static_cast<std::size_t>(std::max(1, cfg.batch_size));
    for (std::size_t start = 0; start < n; start += bs) {
      const std::size_t end = std::min(n, start + bs);
      std::vector<const Mat*> xs;
      std::vector<double> labels;
      xs.reserve(end - start);
      for (std::size_t i = start; i < end; ++i) {
        const auto& s = train_set.samples[order[i]];
        xs.push_back(&s.x);
        labels.push_back(static_cast<double>(s.label));
      }
      const StepStats st = train_step(model, xs, labels, state, adam,
                                      cfg.group_size, cfg.threads);
      const double w = static_cast<double>(end - start);
      loss_sum += st.loss * w;
      bce_sum += st.bce * w;
      mse_sum += st.mse * w;
    }

    EpochStats es;
    es.epoch = epoch;
    es.loss = loss_sum / static_cast<double>(n);
    es.bce = bce_sum / static_cast<double>(n);
    es.mse = mse_sum / static_cast<double>(n);
    if (val && !val->samples.empty()) {
      const EvalReport report =
          evaluate(model, *val, 0.5, cfg.group_size, cfg.threads);
      es.val_sample_acc = report.sample_accuracy;
      es.val_video_acc = report.video_accuracy;
      if (report.sample_accuracy > best_val) {
        best_val = report.sample_accuracy;
        es.is_best = true;
      }
    }
    if (cb) cb(es);
  }
}

std::vector<double> predict_probs(const net::FtdnModel& model,
                                  const traj::SampleSet& set, int group_size,
                                  int threads) {
  const auto spans = partition_groups(set.samples.size(), group_size);
  std::vector<std::vector<double>> group_probs(spans.size());
  auto run_one = [&](std::size_t gi) {
    const GroupSpan& s = spans[gi];
    std::vector<const Mat*> gx;
    gx.reserve(s.end - s.begin);
    for (std::size_t i = s.begin; i < s.end; ++i)
      gx.push_back(&set.samples[i].x);
    group_probs[gi] =
        net::run_group(model, gx, {}, /*with_decoder=*/false, 0.0, nullptr)
            .probs;
  };
  const int n_workers = resolve_threads(threads);
  if (n_workers <= 1 || spans.size() <= 1) {
    for (std::size_t gi = 0; gi < spans.size(); ++gi) run_one(gi);
  } else {
    std::vector<std::future<void>> futures;
    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
      while (true) {
        const std::size_t gi = next.fetch_add(1);
        if (gi >= spans.size()) break;
        run_one(gi);
      }
    };
    for (int w = 1; w < n_workers; ++w)
      futures.push_back(std::async(std::launch::async, worker));
    worker();
    for (auto& f : futures) f.get();
  }
  std::vector<double> probs;
  probs.reserve(set.samples.size());
  for (const auto& g : group_probs) probs.insert(probs.end(), g.begin(), g.end());
  return probs;
}

Vote majority_vote(const std::vector<double>& probs, double threshold) {
  if (probs.empty()) raise(ErrorKind::InvalidArgument, "EmptyVideo: no samples");
  Vote v;
  for (double p : probs) {
    if (p >= threshold)
      ++v.votes_fake;
    else
      ++v.votes_real;
  }
  v.label = v.votes_fake >= v.votes_real ? 1 : 0;
  return v;
}

EvalReport evaluate_probs(const traj::SampleSet& set,
                          const std::vector<double>& probs, double threshold) {
  if (probs.size() != set.samples.size())
    raise(ErrorKind::DimensionMismatch, "evaluate: probs/samples mismatch");
  EvalReport report;
  report.n_samples = set.samples.size();
  report.threshold = threshold;

  std::vector<std::string> video_order;
  std::map<std::string, VideoVerdict> videos;
  long sample_correct = 0;
  for (std::size_t i = 0; i < set.samples.size(); ++i) {
    const auto& s = set.samples[i];
    if (s.label != 0 && s.label != 1)
      raise(ErrorKind::InvalidArgument,
            "evaluate: unlabeled sample for video '" + s.video_id + "'");
    const int vote = probs[i] >= threshold ? 1 : 0;
    if (vote == s.label) ++sample_correct;
    if (vote == 1 && s.label == 1) ++report.sample_tp;
    if (vote == 1 && s.label == 0) ++report.sample_fp;
    if (vote == 0 && s.label == 0) ++report.sample_tn;
    if (vote == 0 && s.label == 1) ++report.sample_fn;
    auto it = videos.find(s.video_id);
    if (it == videos.end()) {
      video_order.push_back(s.video_id);
      VideoVerdict v;
      v.video_id = s.video_id;
      v.label = s.label;
      it = videos.emplace(s.video_id, std::move(v)).first;
    } else if (it->second.label != s.label) {
      raise(ErrorKind::InvalidArgument,
            "evaluate: conflicting labels for video '" + s.video_id + "'");
    }
    it->second.probs.push_back(probs[i]);
  }

  long video_correct = 0;
  for (const auto& id : video_order) {
    VideoVerdict& v = videos[id];
    const Vote vote = majority_vote(v.probs, threshold);
    v.predicted = vote.label;
    v.votes_fake = vote.votes_fake;
    v.votes_real = vote.votes_real;
    if (v.predicted == v.label) ++video_correct;
    if (v.predicted == 1 && v.label == 1) ++report.video_tp;
    if (v.predicted == 1 && v.label == 0) ++report.video_fp;
    if (v.predicted == 0 && v.label == 0) ++report.video_tn;
    if (v.predicted == 0 && v.label == 1) ++report.video_fn;
    report.videos.push_back(std::move(v));
  }
  report.sample_accuracy = report.n_samples == 0
                               ? 0.0
                               : static_cast<double>(sample_correct) /
                                     static_cast<double>(report.n_samples);
  report.video_accuracy = report.videos.empty()
                              ? 0.0
                              : static_cast<double>(video_correct) /
                                    static_cast<double>(report.videos.size());
  return report;
}

EvalReport evaluate(const net::FtdnModel& model, const traj::SampleSet& set,
                    double threshold, int group_size, int threads) {
  const auto probs = predict_probs(model, set, group_size, threads);
  return evaluate_probs(set, probs, threshold);
}

std::string eval_report_json(const EvalReport& report) {
  nlohmann::json j;
  j["n_samples"] = report.n_samples;
  j["n_videos"] = report.videos.size();
  j["threshold"] = report.threshold;
  j["sample_accuracy"] = report.sample_accuracy;
  j["video_accuracy"] = report.video_accuracy;
  j["sample_confusion"] = {{"tp", report.sample_tp},
                           {"fp", report.sample_fp},
                           {"tn", report.sample_tn},
                           {"fn", report.sample_fn}};
  j["video_confusion"] = {{"tp", report.video_tp},
                          {"fp", report.video_fp},
                          {"tn", report.video_tn},
                          {"fn", report.video_fn}};
  nlohmann::json vids = nlohmann::json::array();
  for (const auto& v : report.videos) {
    nlohmann::json jv;
    jv["video_id"] = v.video_id;
    jv["label"] = v.label;
    jv["predicted"] = v.predicted;
    jv["votes_fake"] = v.votes_fake;
    jv["votes_real"] = v.votes_real;
    jv["probs"] = v.probs;
    vids.push_back(std::move(jv));
  }
  j["videos"] = std::move(vids);
  return j.dump(2) + "\n";
}

std::string eval_report_table(const EvalReport& report) {
  std::ostringstream out;
  char buf[256];
  std::snprintf(buf, sizeof(buf), "samples: %zu  videos: %zu  threshold: %.3f\n",
                report.n_samples, report.videos.size(), report.threshold);
  out << buf;
  std::snprintf(buf, sizeof(buf), "sample accuracy: %.4f   video accuracy: %.4f\n",
                report.sample_accuracy, report.video_accuracy);
  out << buf;
  std::snprintf(buf, sizeof(buf),
                "sample confusion  tp %ld  fp %ld  tn %ld  fn %ld\n",
                report.sample_tp, report.sample_fp, report.sample_tn,
                report.sample_fn);
  out << buf;
  std::snprintf(buf, sizeof(buf),
                "video confusion   tp %ld  fp %ld  tn %ld  fn %ld\n",
                report.video_tp, report.video_fp, report.video_tn,
                report.video_fn);
  out << buf;
  return out.str();
}

nn::GradCheckReport model_grad_check(net::FtdnModel& model,
                                     const std::vector<const Mat*>& xs,
                                     const std::vector<double>& labels,
                                     int entries_per_block, double h) {
  if (xs.empty() || xs.size() != labels.size())
    raise(ErrorKind::InvalidArgument, "model_grad_check: bad batch");
  const double inv_b = 1.0 / static_cast<double>(xs.size());
  auto loss_fn = [&]() {
    return net::run_group(model, xs, labels, true, 0.0, nullptr).loss_sum *
           inv_b;
  };
  auto compute_analytic = [&]() {
    std::vector<Mat> grads(model.params().size());
    for (std::size_t i = 0; i < grads.size(); ++i)
      grads[i] = Mat::Zero(model.params()[static_cast<int>(i)].value.rows(),
                           model.params()[static_cast<int>(i)].value.cols());
    net::run_group(model, xs, labels, true, inv_b, &grads);
    for (std::size_t i = 0; i < grads.size(); ++i)
      model.params()[static_cast<int>(i)].grad = grads[i];
  };
  return nn::grad_check(model.params(), loss_fn, compute_analytic, h,
                        entries_per_block, model.seed());
}

std::string grad_check_json(const nn::GradCheckReport& report) {
  nlohmann::json j;
  j["max_rel_err"] = report.max_rel_err;
  nlohmann::json blocks = nlohmann::json::array();
  for (const auto& b : report.blocks) {
    nlohmann::json jb;
    jb["name"] = b.name;
    jb["max_rel_err"] = b.max_rel_err;
    jb["entries_checked"] = b.entries_checked;
    blocks.push_back(std::move(jb));
  }
  j["blocks"] = std::move(blocks);
  return j.dump(2) + "\n";
}

// ---- extraction ----

namespace {

flow::TrackedPointSet slice_point_set(const flow::TrackedPointSet& tps,
                                      std::size_t begin, std::size_t end) {
  flow::TrackedPointSet out;
  out.origin.assign(tps.origin.begin() + static_cast<long>(begin),
                    tps.origin.begin() + static_cast<long>(end));
  out.forward.assign(tps.forward.begin() + static_cast<long>(begin),
                     tps.forward.begin() + static_cast<long>(end));
  out.back.assign(tps.back.begin() + static_cast<long>(begin),
                  tps.back.begin() + static_cast<long>(end));
  out.status.assign(tps.status.begin() + static_cast<long>(begin),
                    tps.status.begin() + static_cast<long>(end));
  out.fb_error.assign(tps.fb_error.begin() + static_cast<long>(begin),
                      tps.fb_error.begin() + static_cast<long>(end));
  return out;
}

std::string frame_name(long index) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%06ld.pgm", index);
  return buf;
}

}  // namespace

ExtractResult extract_video(const std::string& frames_dir,
                            const std::string& landmarks_path,
                            const ExtractConfig& cfg) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(frames_dir))
    raise(ErrorKind::Io, "MissingFrame: not a directory: " + frames_dir);

  // Frames must be named %06d.pgm with contiguous indices from 0.
  std::vector<long> indices;
  for (const auto& entry : fs::directory_iterator(frames_dir)) {
    if (!entry.is_regular_file()) continue;
    const std::string name = entry.path().filename().string();
    if (name.size() != 10 || name.substr(6) != ".pgm") continue;
    if (!std::all_of(name.begin(), name.begin() + 6,
                     [](char c) { return c >= '0' && c <= '9'; }))
      continue;
    indices.push_back(std::stol(name.substr(0, 6)));
  }
  if (indices.empty())
    raise(ErrorKind::Io, "MissingFrame: no %06d.pgm frames in " + frames_dir);
  std::sort(indices.begin(), indices.end());
  const long n_frames = static_cast<long>(indices.size());
  for (long i = 0; i < n_frames; ++i)
    if (indices[static_cast<std::size_t>(i)] != i)
      raise(ErrorKind::Io,
            "MissingFrame: frame " + frame_name(i) + " absent in " + frames_dir);

  const auto records = geom::load_landmarks_jsonl(landmarks_path);
  std::vector<const geom::LandmarkRecord*> by_frame(
      static_cast<std::size_t>(n_frames), nullptr);
  for (const auto& rec : records) {
    if (rec.frame < 0 || rec.frame >= n_frames)
      raise(ErrorKind::InvalidArgument,
            "MisalignedLandmarks: record for frame " + std::to_string(rec.frame) +
                " outside 0.." + std::to_string(n_frames - 1));
    if (by_frame[static_cast<std::size_t>(rec.frame)])
      raise(ErrorKind::InvalidArgument,
            "MisalignedLandmarks: duplicate frame " + std::to_string(rec.frame));
    by_frame[static_cast<std::size_t>(rec.frame)] = &rec;
  }
  for (long i = 0; i < n_frames; ++i)
    if (!by_frame[static_cast<std::size_t>(i)])
      raise(ErrorKind::InvalidArgument,
            "MisalignedLandmarks: landmarks cover " +
                std::to_string(records.size()) + " of " +
                std::to_string(n_frames) + " frames");

  ExtractResult result;
  result.report.frames_total = n_frames;

  // Load frames; a broken file counts as a failed capture, not an error.
  std::vector<flow::GrayFrame> frames(static_cast<std::size_t>(n_frames));
  std::vector<bool> captured(static_cast<std::size_t>(n_frames), false);
  for (long i = 0; i < n_frames; ++i) {
    try {
      frames[static_cast<std::size_t>(i)] =
          flow::load_pgm((fs::path(frames_dir) / frame_name(i)).string());
      captured[static_cast<std::size_t>(i)] = true;
    } catch (const Error&) {
      result.report.warnings.push_back("frame " + frame_name(i) +
                                       " unreadable; discarded");
    }
  }

  // Per-step tracking; valid[k] covers the k -> k+1 transition.
  std::vector<bool> valid(static_cast<std::size_t>(n_frames), false);
  std::vector<std::array<traj::AnchorStep, 7>> steps(
      static_cast<std::size_t>(std::max(0L, n_frames - 1)));
  std::vector<geom::FaceRect> rects(steps.size(), geom::FaceRect{0, 0, 1, 1});

  for (long k = 0; k < n_frames - 1; ++k) {
    const std::size_t sk = static_cast<std::size_t>(k);
    const auto* rec = by_frame[sk];
    traj::FrameTrackStats stats;
    stats.capture_ok = captured[sk] && captured[sk + 1];
    stats.has_landmarks = rec->landmarks.has_value();
    if (!stats.capture_ok || !stats.has_landmarks) {
      valid[sk] = false;
      continue;
    }
    const geom::LandmarkFrame& lm = *rec->landmarks;
    bool roi_failed = false;
    std::array<std::vector<geom::Vec2>, 7> grids;
    std::vector<geom::Vec2> all_points;
    std::array<std::pair<std::size_t, std::size_t>, 7> spans{};
    geom::RoiSet rois;
    try {
      rois = geom::compute_rois(lm);
      for (int r = 0; r < geom::kNumRois; ++r) {
        grids[static_cast<std::size_t>(r)] =
            geom::seed_tracking_grid(rois.regions[static_cast<std::size_t>(r)], lm);
        spans[static_cast<std::size_t>(r)].first = all_points.size();
        all_points.insert(all_points.end(),
                          grids[static_cast<std::size_t>(r)].begin(),
                          grids[static_cast<std::size_t>(r)].end());
        spans[static_cast<std::size_t>(r)].second = all_points.size();
      }
    } catch (const Error& e) {
      result.report.warnings.push_back("frame " + frame_name(k) + ": " +
                                       e.what());
      roi_failed = true;
    }
    if (roi_failed || all_points.empty()) {
      valid[sk] = false;
      continue;
    }

    const flow::TrackedPointSet tracked = flow::track_forward_backward(
        frames[sk], frames[sk + 1], all_points, cfg.lk);
    stats.seeded = static_cast<long>(all_points.size());
    stats.ok_points = static_cast<long>(
        std::count(tracked.status.begin(), tracked.status.end(),
                   flow::PointStatus::Ok));
    if (!traj::frame_valid(stats)) {
      valid[sk] = false;
      continue;
    }

    bool all_rois_ok = true;
    std::array<traj::AnchorStep, 7> frame_steps{};
    for (int r = 0; r < geom::kNumRois; ++r) {
      const auto span = spans[static_cast<std::size_t>(r)];
      const flow::TrackedPointSet roi_set =
          slice_point_set(tracked, span.first, span.second);
      const std::vector<int> retained = flow::screen_points(roi_set);
      if (retained.empty()) {
        all_rois_ok = false;
        break;
      }
      std::vector<geom::Vec2> flows;
      flows.reserve(retained.size());
      for (int idx : retained)
        flows.push_back(geom::Vec2{
            roi_set.forward[static_cast<std::size_t>(idx)].x -
                roi_set.origin[static_cast<std::size_t>(idx)].x,
            roi_set.forward[static_cast<std::size_t>(idx)].y -
                roi_set.origin[static_cast<std::size_t>(idx)].y});
      frame_steps[static_cast<std::size_t>(r)] = traj::anchor_step(flows);
    }
    if (!all_rois_ok) {
      valid[sk] = false;
      continue;
    }
    valid[sk] = true;
    steps[sk] = frame_steps;
    rects[sk] = lm.face_rect;
  }
  // Terminal frame: usable as a clip end point when present with landmarks.
  if (n_frames >= 1) {
    const std::size_t last = static_cast<std::size_t>(n_frames - 1);
    valid[last] = captured[last] && by_frame[last]->landmarks.has_value();
  }

  for (long k = 0; k < n_frames; ++k)
    if (!valid[static_cast<std::size_t>(k)])
      result.report.discarded_frames.push_back(k);

  const std::string video_id = fs::path(frames_dir).filename().string();
  const long discarded = static_cast<long>(result.report.discarded_frames.size());

  if (discarded == 0 || discarded <= cfg.max_discarded) {
    // Bridge short gaps with zero displacement so the time axis is kept.
    if (n_frames >= 2) {
      geom::FaceRect last_rect{0, 0, 1, 1};
      bool seen = false;
      for (std::size_t k = 0; k < steps.size(); ++k) {
        if (valid[k]) {
          last_rect = rects[k];
          seen = true;
        } else {
          steps[k] = {};
          rects[k] = seen ? last_rect : geom::FaceRect{0, 0, 1, 1};
        }
      }
      traj::AnchorSeries series = traj::build_series(steps, rects, cfg.fps);
      series.video_id = video_id;
      series.start_frame = 0;
      result.series.push_back(std::move(series));
      result.report.clips.emplace_back(0, n_frames);
    } else {
      result.report.warnings.push_back("video shorter than two frames");
    }
  } else {
    result.report.split = true;
    const auto clips = traj::split_clips(valid, 2);
    for (const auto& clip : clips) {
      const long len = clip.second - clip.first;
      std::vector<std::array<traj::AnchorStep, 7>> clip_steps(
          steps.begin() + clip.first, steps.begin() + clip.second - 1);
      std::vector<geom::FaceRect> clip_rects(rects.begin() + clip.first,
                                             rects.begin() + clip.second - 1);
      if (len < 2 || clip_steps.empty()) continue;
      traj::AnchorSeries series =
          traj::build_series(clip_steps, clip_rects, cfg.fps);
      series.video_id = video_id + "#" + std::to_string(clip.first);
      series.start_frame = clip.first;
      series.eval_only = true;
      result.series.push_back(std::move(series));
      result.report.clips.push_back(clip);
    }
    if (result.series.empty())
      result.report.warnings.push_back("no usable clip of >= 2 valid frames");
  }
  if (result.series.empty() &&
      result.report.warnings.empty())
    result.report.warnings.push_back("empty extraction output");
  return result;
}

std::string extract_report_json(const ExtractReport& report) {
  nlohmann::json j;
  j["frames_total"] = report.frames_total;
  j["discarded_frames"] = report.discarded_frames;
  j["split"] = report.split;
  nlohmann::json clips = nlohmann::json::array();
  for (const auto& c : report.clips)
    clips.push_back({{"start", c.first}, {"end", c.second}});
  j["clips"] = std::move(clips);
  j["warnings"] = report.warnings;
  return j.dump(2) + "\n";
}

SeriesAnalysis analyze_series(const traj::AnchorSeries& series,
                              double cutoff_hz) {
  SeriesAnalysis out;
  for (Eigen::Index r = 0; r < series.values.rows(); ++r) {
    std::vector<double> row(static_cast<std::size_t>(series.values.cols()));
    for (Eigen::Index t = 0; t < series.values.cols(); ++t)
      row[static_cast<std::size_t>(t)] = series.values(r, t);
    const auto det = spectral::detrend(row);
    out.hf_ratios.push_back(spectral::hf_ratio(det, series.fps, cutoff_hz));
    out.spectra.push_back(spectral::power_spectrum(det, series.fps));
  }
  return out;
}

synth::SynthConfig synth_video_config(const synth::SynthConfig& base,
                                      std::uint64_t master_seed, bool fake,
                                      long index) {
  synth::SynthConfig cfg = base;
  cfg.seed = Rng::derive(master_seed, fake ? kTagSynthFake : kTagSynthReal,
                         static_cast<std::uint64_t>(index));
  return cfg;
}

traj::AnchorSeries synth_video(const synth::SynthConfig& base,
                               std::uint64_t master_seed, bool fake,
                               long index) {
  const synth::SynthConfig cfg = synth_video_config(base, master_seed, fake, index);
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%s_%05ld", fake ? "fake" : "real", index);
  return fake ? synth::gen_fake(cfg, buf) : synth::gen_real(cfg, buf);
}

traj::SampleSet synth_sample_set(const synth::SynthConfig& base,
                                 std::uint64_t master_seed, long n_real,
                                 long n_fake, long first_index) {
  traj::SampleSet set;
  for (long i = 0; i < n_real; ++i)
    traj::append_windows(set, synth_video(base, master_seed, false, first_index + i));
  for (long i = 0; i < n_fake; ++i)
    traj::append_windows(set, synth_video(base, master_seed, true, first_index + i));
  return set;
}

}  // namespace ftdn::harness
