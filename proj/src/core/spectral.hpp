#pragma once

#include <vector>

#include "core/errors.hpp"

namespace ftdn::spectral {

// Removes the least-squares linear trend, then z-scores (population std,
// rows collapsing below 1e-12 std become zero). Needs length >= 2.
std::vector<double> detrend(const std::vector<double>& series);

// One-sided power spectrum: bins k = 0..floor(N/2), freq_k = k * fs / N,
// power_k = |X_k|^2 of the unnormalized DFT.
struct Spectrum {
  std::vector<double> freq;
  std::vector<double> power;
};

Spectrum power_spectrum(const std::vector<double>& series, double fs);

// Fraction of (non-DC, one-sided) spectral power strictly above `cutoff_hz`.
// The series should be detrended first. Returns 0 when the total non-DC
// power is below 1e-12. Requires fs > 2 * cutoff_hz ("NyquistViolation").
double hf_ratio(const std::vector<double>& series, double fs,
                double cutoff_hz = 6.0);

}  // namespace ftdn::spectral
