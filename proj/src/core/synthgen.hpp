#pragma once

#include <cstdint>
#include <string>

#include "core/trajectory.hpp"

namespace ftdn::synth {

// Deterministic generator of anchor-position series. "Real" output is a
// shared low-frequency motion with per-ROI gains, offsets and measurement
// noise; "fake" output adds two artifact mechanisms on top of the identical
// base draw: short position impulses (burrs) and a slow per-ROI random-walk
// drift that breaks the relative ROI positions.
struct SynthConfig {
  std::uint64_t seed = 0;
  long frames = 300;
  double fps = 25.0;
  int n_harmonics = 3;
  double base_freq_min = 0.2, base_freq_max = 1.5;   // Hz
  double base_amp_min = 0.004, base_amp_max = 0.012; // face-size units
  double noise_std = 0.002;
  double burr_rate = 1.5;                            // events per second
  double burr_amp_min = 0.01, burr_amp_max = 0.05;
  double desync_std = 0.005;                         // drift per second
};

void validate(const SynthConfig& cfg);

traj::AnchorSeries gen_real(const SynthConfig& cfg, const std::string& video_id);
traj::AnchorSeries gen_fake(const SynthConfig& cfg, const std::string& video_id);

}  // namespace ftdn::synth
