#pragma once

#include <string>
#include <vector>

#include "core/errors.hpp"

namespace ftdn::flow {

// Row-major luminance image with values in [0,1].
struct GrayFrame {
  int width = 0;
  int height = 0;
  std::vector<double> data;

  double at(int x, int y) const {
    return data[static_cast<std::size_t>(y) * static_cast<std::size_t>(width) +
                static_cast<std::size_t>(x)];
  }
  double& at(int x, int y) {
    return data[static_cast<std::size_t>(y) * static_cast<std::size_t>(width) +
                static_cast<std::size_t>(x)];
  }
};

GrayFrame make_frame(int width, int height, double fill = 0.0);

// Bilinear sample with clamped borders.
double sample_bilinear(const GrayFrame& f, double x, double y);

// 5-tap Gaussian blur ([1 4 6 4 1]/16, separable, replicated borders)
// followed by factor-2 decimation.
GrayFrame downsample_half(const GrayFrame& f);

std::vector<GrayFrame> build_pyramid(const GrayFrame& f, int levels);

// Binary PGM (P5), 8- or 16-bit, scaled to [0,1].
GrayFrame load_pgm(const std::string& path);
void save_pgm(const std::string& path, const GrayFrame& f, int maxval = 65535);

}  // namespace ftdn::flow
