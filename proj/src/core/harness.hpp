#pragma once

#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "core/model.hpp"
#include "core/optical_flow.hpp"
#include "core/spectral.hpp"
#include "core/synthgen.hpp"
#include "core/trajectory.hpp"

namespace ftdn::harness {

using nn::Mat;

// ---- training ----

struct TrainConfig {
  int epochs = 20;
  int batch_size = 32;
  double learning_rate = 1e-3;
  std::uint64_t seed = 7;
  int threads = 0;      // 0: hardware concurrency
  int group_size = 16;  // fixed batch partition; must not depend on hardware
};

struct StepStats {
  double loss = 0.0, bce = 0.0, mse = 0.0;  // batch means
};

// One optimizer step on a batch. The batch is split into fixed consecutive
// groups of `group_size`; groups run on worker threads and their gradients
// are reduced in group order, so results are bit-identical for any thread
// count.
StepStats train_step(net::FtdnModel& model, const std::vector<const Mat*>& xs,
                     const std::vector<double>& labels, nn::AdamState& state,
                     const nn::AdamConfig& adam, int group_size, int threads);

struct EpochStats {
  int epoch = 0;  // 1-based
  double loss = 0.0, bce = 0.0, mse = 0.0;
  double val_sample_acc = -1.0, val_video_acc = -1.0;
  bool is_best = false;
};

using EpochCallback = std::function<void(const EpochStats&)>;

// Epoch loop with per-epoch shuffling derived from cfg.seed; runs validation
// after every epoch when `val` is given and marks the epochs with the best
// validation sample accuracy.
void train(net::FtdnModel& model, const traj::SampleSet& train_set,
           const traj::SampleSet* val, const TrainConfig& cfg,
           const EpochCallback& cb);

// ---- scoring / evaluation ----

std::vector<double> predict_probs(const net::FtdnModel& model,
                                  const traj::SampleSet& set,
                                  int group_size = 16, int threads = 0);

struct Vote {
  int label = 0;  // 1 fake, 0 real
  int votes_fake = 0;
  int votes_real = 0;
};

// A sample votes fake when prob >= threshold; ties between the vote counts
// go to fake.
Vote majority_vote(const std::vector<double>& probs, double threshold = 0.5);

struct VideoVerdict {
  std::string video_id;
  int label = -1;
  int predicted = 0;
  int votes_fake = 0, votes_real = 0;
  std::vector<double> probs;
};

struct EvalReport {
  std::size_t n_samples = 0;
  double threshold = 0.5;
  double sample_accuracy = 0.0;
  double video_accuracy = 0.0;
  long sample_tp = 0, sample_fp = 0, sample_tn = 0, sample_fn = 0;
  long video_tp = 0, video_fp = 0, video_tn = 0, video_fn = 0;
  std::vector<VideoVerdict> videos;
};

EvalReport evaluate(const net::FtdnModel& model, const traj::SampleSet& set,
                    double threshold = 0.5, int group_size = 16,
                    int threads = 0);
EvalReport evaluate_probs(const traj::SampleSet& set,
                          const std::vector<double>& probs, double threshold);
std::string eval_report_json(const EvalReport& report);
std::string eval_report_table(const EvalReport& report);

// ---- model gradient check ----

nn::GradCheckReport model_grad_check(net::FtdnModel& model,
                                     const std::vector<const Mat*>& xs,
                                     const std::vector<double>& labels,
                                     int entries_per_block = 64,
                                     double h = 1e-5);
std::string grad_check_json(const nn::GradCheckReport& report);

// ---- extraction pipeline ----

struct ExtractConfig {
  double fps = 25.0;
  long max_discarded = 10;  // beyond this the video splits into clips
  flow::LkParams lk;
};

struct ExtractReport {
  long frames_total = 0;
  std::vector<long> discarded_frames;
  bool split = false;
  std::vector<std::pair<long, long>> clips;  // [start, end) frame ranges
  std::vector<std::string> warnings;
};

struct ExtractResult {
  std::vector<traj::AnchorSeries> series;
  ExtractReport report;
};

// Runs landmarks -> ROIs -> grid -> forward/backward LK -> screening ->
// anchor statistics -> normalized cumulative series over a directory of
// %06d.pgm frames. Missing frame indices raise "MissingFrame"; landmark
// lines not covering every frame raise "MisalignedLandmarks".
ExtractResult extract_video(const std::string& frames_dir,
                            const std::string& landmarks_path,
                            const ExtractConfig& cfg);
std::string extract_report_json(const ExtractReport& report);

// ---- spectral summary ----

struct SeriesAnalysis {
  std::vector<double> hf_ratios;               // per feature row
  std::vector<spectral::Spectrum> spectra;     // per feature row, detrended
};

SeriesAnalysis analyze_series(const traj::AnchorSeries& series,
                              double cutoff_hz = 6.0);

// ---- synthetic datasets ----

// Per-video config seeds derive from (master_seed, profile, index), so any
// subrange of videos is reproducible in isolation.
synth::SynthConfig synth_video_config(const synth::SynthConfig& base,
                                      std::uint64_t master_seed, bool fake,
                                      long index);
traj::AnchorSeries synth_video(const synth::SynthConfig& base,
                               std::uint64_t master_seed, bool fake,
                               long index);
traj::SampleSet synth_sample_set(const synth::SynthConfig& base,
                                 std::uint64_t master_seed, long n_real,
                                 long n_fake, long first_index = 0);

}  // namespace ftdn::harness
