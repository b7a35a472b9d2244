#include "core/synthgen.hpp"

#include <cmath>

#include "core/rng.hpp"

namespace ftdn::synth {

namespace {

constexpr std::uint64_t kTagBase = 0x62617365ULL;      // base motion stream
constexpr std::uint64_t kTagArtifact = 0x61727466ULL;  // artifact stream

struct Harmonic {
  double freq, amp, phase;
};

// Base "real" series. Draw order is pinned: harmonics (x then y, per
// harmonic freq/amp/phase), per-ROI gains and offsets (x then y), then
// measurement noise row-major.
traj::AnchorSeries gen_base(const SynthConfig& cfg, const std::string& video_id) {
  validate(cfg);
  Rng rng(Rng::derive(cfg.seed, kTagBase));
  const long T = cfg.frames;

  std::vector<Harmonic> hx, hy;
  for (int axis = 0; axis < 2; ++axis) {
    auto& h = axis == 0 ? hx : hy;
    for (int k = 0; k < cfg.n_harmonics; ++k) {
      Harmonic hm;
      hm.freq = rng.uniform(cfg.base_freq_min, cfg.base_freq_max);
      hm.amp = rng.uniform(cfg.base_amp_min, cfg.base_amp_max) /
               static_cast<double>(k + 1);
      hm.phase = rng.uniform(0.0, 2.0 * M_PI);
      h.push_back(hm);
    }
  }

  struct RoiMotion {
    double gain_x, off_x, gain_y, off_y;
  };
  std::array<RoiMotion, 7> rois;
  for (auto& r : rois) {
    r.gain_x = rng.uniform(0.9, 1.1);
    r.off_x = rng.uniform(-0.02, 0.02);
    r.gain_y = rng.uniform(0.9, 1.1);
    r.off_y = rng.uniform(-0.02, 0.02);
  }

  auto motion = [&](const std::vector<Harmonic>& h, long t) {
    double v = 0.0;
    const double sec = static_cast<double>(t) / cfg.fps;
    for (const Harmonic& hm : h)
      v += hm.amp * std::sin(2.0 * M_PI * hm.freq * sec + hm.phase);
    return v;
  };

  traj::AnchorSeries series;
  series.fps = cfg.fps;
  series.video_id = video_id;
  series.values = traj::Mat::Zero(traj::kFeatureRows, T);
  for (int r = 0; r < 7; ++r) {
    for (long t = 0; t < T; ++t) {
      const double gx = rois[static_cast<std::size_t>(r)].gain_x * motion(hx, t) +
                        rois[static_cast<std::size_t>(r)].off_x;
      const double gy = rois[static_cast<std::size_t>(r)].gain_y * motion(hy, t) +
                        rois[static_cast<std::size_t>(r)].off_y;
      series.values(4 * r + 0, t) = gx;
      series.values(4 * r + 1, t) = gy;
      series.values(4 * r + 2, t) = gx;
      series.values(4 * r + 3, t) = gy;
    }
  }
  for (int row = 0; row < traj::kFeatureRows; ++row)
    for (long t = 0; t < T; ++t)
      series.values(row, t) += rng.normal(0.0, cfg.noise_std);
  return series;
}

}  // namespace

void validate(const SynthConfig& cfg) {
  if (cfg.frames < 2) raise(ErrorKind::InvalidArgument, "SynthConfig: frames < 2");
  if (!(cfg.fps > 0.0)) raise(ErrorKind::InvalidArgument, "SynthConfig: fps <= 0");
  if (cfg.n_harmonics < 1)
    raise(ErrorKind::InvalidArgument, "SynthConfig: n_harmonics < 1");
  if (!(cfg.base_freq_min > 0.0) || cfg.base_freq_max < cfg.base_freq_min ||
      !(cfg.base_amp_min > 0.0) || cfg.base_amp_max < cfg.base_amp_min ||
      cfg.noise_std < 0.0 || cfg.burr_rate < 0.0 ||
      !(cfg.burr_amp_min > 0.0) || cfg.burr_amp_max < cfg.burr_amp_min ||
      cfg.desync_std < 0.0)
    raise(ErrorKind::InvalidArgument, "SynthConfig: bad parameter range");
}

traj::AnchorSeries gen_real(const SynthConfig& cfg, const std::string& video_id) {
  traj::AnchorSeries series = gen_base(cfg, video_id);
  series.label = 0;
  return series;
}

traj::AnchorSeries gen_fake(const SynthConfig& cfg, const std::string& video_id) {
  traj::AnchorSeries series = gen_base(cfg, video_id);
  series.label = 1;
  const long T = cfg.frames;
  Rng rng(Rng::derive(cfg.seed, kTagArtifact));

  // Slow per-ROI drift; increments give desync_std of accumulated drift per
  // second. Shared by the mean and median rows of the ROI.
  if (cfg.desync_std > 0.0) {
    const double step_std = cfg.desync_std / cfg.fps;
    for (int r = 0; r < 7; ++r) {
      for (int axis = 0; axis < 2; ++axis) {
        double w = 0.0;
        for (long t = 0; t < T; ++t) {
          w += rng.normal(0.0, step_std);
          series.values(4 * r + axis, t) += w;
          series.values(4 * r + 2 + axis, t) += w;
        }
      }
    }
  }

  // Poisson-timed burrs: 1-2 frame position impulses on one ROI.
  if (cfg.burr_rate > 0.0) {
    double t_sec = 0.0;
    while (true) {
      t_sec += rng.exponential(cfg.burr_rate);
      const long frame = static_cast<long>(std::floor(t_sec * cfg.fps));
      if (frame >= T) break;
      const int roi = static_cast<int>(rng.below(7));
      const long duration = 1 + static_cast<long>(rng.below(2));
      const double amp = rng.uniform(cfg.burr_amp_min, cfg.burr_amp_max);
      const double theta = rng.uniform(0.0, 2.0 * M_PI);
      const double dx = amp * std::cos(theta);
      const double dy = amp * std::sin(theta);
      for (long f = frame; f < std::min(frame + duration, T); ++f) {
        series.values(4 * roi + 0, f) += dx;
        series.values(4 * roi + 1, f) += dy;
        series.values(4 * roi + 2, f) += dx;
        series.values(4 * roi + 3, f) += dy;
      }
    }
  }
  return series;
}

}  // namespace ftdn::synth
