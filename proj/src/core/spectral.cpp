#include "core/spectral.hpp"

#include <cmath>
#include <complex>
#include <mutex>

#include <fftw3.h>

namespace ftdn::spectral {

std::vector<double> detrend(const std::vector<double>& series) {
  const std::size_t n = series.size();
  if (n < 2) raise(ErrorKind::InvalidArgument, "TooShort: detrend needs >= 2 samples");
  const double nd = static_cast<double>(n);
  double t_mean = (nd - 1.0) / 2.0;
  double x_mean = 0.0;
  for (double v : series) x_mean += v;
  x_mean /= nd;
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dt = static_cast<double>(i) - t_mean;
    num += dt * (series[i] - x_mean);
    den += dt * dt;
  }
  const double slope = num / den;
  std::vector<double> out(n);
  double mean = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = series[i] - (x_mean + slope * (static_cast<double>(i) - t_mean));
    mean += out[i];
  }
  mean /= nd;
  double var = 0.0;
  for (double v : out) var += (v - mean) * (v - mean);
  const double std = std::sqrt(var / nd);
  if (std < 1e-12) {
    std::fill(out.begin(), out.end(), 0.0);
    return out;
  }
  for (double& v : out) v = (v - mean) / std;
  return out;
}

namespace {

// The FFTW planner is not thread-safe; execution is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

std::vector<std::complex<double>> dft_r2c(const std::vector<double>& x) {
  const std::size_t n = x.size();
  std::vector<double> in(x);
  std::vector<std::complex<double>> out(n / 2 + 1);
  fftw_plan plan;
  {
    std::lock_guard<std::mutex> lock(planner_mutex());
    plan = fftw_plan_dft_r2c_1d(static_cast<int>(n), in.data(),
                                reinterpret_cast<fftw_complex*>(out.data()),
                                FFTW_ESTIMATE | FFTW_PRESERVE_INPUT);
  }
  if (!plan) raise(ErrorKind::Internal, "fftw plan creation failed");
  fftw_execute(plan);
  {
    std::lock_guard<std::mutex> lock(planner_mutex());
    fftw_destroy_plan(plan);
  }
  return out;
}

}  // namespace

Spectrum power_spectrum(const std::vector<double>& series, double fs) {
  if (series.size() < 2)
    raise(ErrorKind::InvalidArgument, "TooShort: spectrum needs >= 2 samples");
  if (!(fs > 0.0)) raise(ErrorKind::InvalidArgument, "power_spectrum: fs <= 0");
  const auto bins = dft_r2c(series);
  Spectrum s;
  const double n = static_cast<double>(series.size());
  s.freq.resize(bins.size());
  s.power.resize(bins.size());
  for (std::size_t k = 0; k < bins.size(); ++k) {
    s.freq[k] = static_cast<double>(k) * fs / n;
    s.power[k] = std::norm(bins[k]);
  }
  return s;
}

double hf_ratio(const std::vector<double>& series, double fs, double cutoff_hz) {
  if (!(fs > 2.0 * cutoff_hz))
    raise(ErrorKind::InvalidArgument, "NyquistViolation: fs must exceed 2*cutoff");
  const Spectrum s = power_spectrum(series, fs);
  double total = 0.0, high = 0.0;
  for (std::size_t k = 1; k < s.power.size(); ++k) {
    total += s.power[k];
    if (s.freq[k] > cutoff_hz) high += s.power[k];
  }
  if (total < 1e-12) return 0.0;
  return high / total;
}

}  // namespace ftdn::spectral
