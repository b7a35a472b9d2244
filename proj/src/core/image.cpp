#include "core/image.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

namespace ftdn::flow {

GrayFrame make_frame(int width, int height, double fill) {
  if (width <= 0 || height <= 0)
    raise(ErrorKind::InvalidArgument, "make_frame: non-positive size");
  GrayFrame f;
  f.width = width;
  f.height = height;
  f.data.assign(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), fill);
  return f;
}

double sample_bilinear(const GrayFrame& f, double x, double y) {
  x = std::clamp(x, 0.0, static_cast<double>(f.width - 1));
  y = std::clamp(y, 0.0, static_cast<double>(f.height - 1));
  const int x0 = std::min(static_cast<int>(x), f.width - 2 >= 0 ? f.width - 2 : 0);
  const int y0 = std::min(static_cast<int>(y), f.height - 2 >= 0 ? f.height - 2 : 0);
  const int x1 = std::min(x0 + 1, f.width - 1);
  const int y1 = std::min(y0 + 1, f.height - 1);
  const double fx = x - x0;
  const double fy = y - y0;
  const double v00 = f.at(x0, y0), v10 = f.at(x1, y0);
  const double v01 = f.at(x0, y1), v11 = f.at(x1, y1);
  return (1 - fx) * (1 - fy) * v00 + fx * (1 - fy) * v10 +
         (1 - fx) * fy * v01 + fx * fy * v11;
}

namespace {

inline int reflect(int i, int n) { return std::clamp(i, 0, n - 1); }

GrayFrame blur5(const GrayFrame& f) {
  static const double k[5] = {1.0 / 16, 4.0 / 16, 6.0 / 16, 4.0 / 16, 1.0 / 16};
  GrayFrame tmp = make_frame(f.width, f.height);
  for (int y = 0; y < f.height; ++y)
    for (int x = 0; x < f.width; ++x) {
      double s = 0.0;
      for (int d = -2; d <= 2; ++d) s += k[d + 2] * f.at(reflect(x + d, f.width), y);
      tmp.at(x, y) = s;
    }
  GrayFrame out = make_frame(f.width, f.height);
  for (int y = 0; y < f.height; ++y)
    for (int x = 0; x < f.width; ++x) {
      double s = 0.0;
      for (int d = -2; d <= 2; ++d) s += k[d + 2] * tmp.at(x, reflect(y + d, f.height));
      out.at(x, y) = s;
    }
  return out;
}

}  // namespace

GrayFrame downsample_half(const GrayFrame& f) {
  const GrayFrame blurred = blur5(f);
  const int w = std::max(1, (f.width + 1) / 2);
  const int h = std::max(1, (f.height + 1) / 2);
  GrayFrame out = make_frame(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      out.at(x, y) = blurred.at(std::min(2 * x, f.width - 1), std::min(2 * y, f.height - 1));
  return out;
}

std::vector<GrayFrame> build_pyramid(const GrayFrame& f, int levels) {
  if (levels < 1) raise(ErrorKind::InvalidArgument, "build_pyramid: levels < 1");
  std::vector<GrayFrame> pyr;
  pyr.push_back(f);
  for (int l = 1; l < levels; ++l) {
    if (pyr.back().width < 8 || pyr.back().height < 8) break;
    pyr.push_back(downsample_half(pyr.back()));
  }
  return pyr;
}

GrayFrame load_pgm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) raise(ErrorKind::Io, "cannot open PGM: " + path);

  auto next_token = [&in, &path]() -> std::string {
    std::string tok;
    while (in) {
      int c = in.get();
      if (c == EOF) break;
      if (c == '#') {  // comment to end of line
        while (in && in.get() != '\n') {}
        continue;
      }
      if (std::isspace(c)) {
        if (!tok.empty()) return tok;
        continue;
      }
      tok.push_back(static_cast<char>(c));
    }
    if (tok.empty()) raise(ErrorKind::Parse, "truncated PGM header: " + path);
    return tok;
  };

  if (next_token() != "P5") raise(ErrorKind::Parse, "not a binary PGM (P5): " + path);
  const int width = std::stoi(next_token());
  const int height = std::stoi(next_token());
  const int maxval = std::stoi(next_token());
  if (width <= 0 || height <= 0 || maxval <= 0 || maxval > 65535)
    raise(ErrorKind::Parse, "bad PGM header: " + path);

  GrayFrame f = make_frame(width, height);
  const std::size_t n = f.data.size();
  if (maxval < 256) {
    std::vector<unsigned char> raw(n);
    if (!in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(n)))
      raise(ErrorKind::Parse, "truncated PGM data: " + path);
    for (std::size_t i = 0; i < n; ++i)
      f.data[i] = static_cast<double>(raw[i]) / maxval;
  } else {
    std::vector<unsigned char> raw(2 * n);
    if (!in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(2 * n)))
      raise(ErrorKind::Parse, "truncated PGM data: " + path);
    for (std::size_t i = 0; i < n; ++i) {
      const unsigned v = (static_cast<unsigned>(raw[2 * i]) << 8) | raw[2 * i + 1];
      f.data[i] = static_cast<double>(v) / maxval;
    }
  }
  return f;
}

void save_pgm(const std::string& path, const GrayFrame& f, int maxval) {
  if (maxval <= 0 || maxval > 65535)
    raise(ErrorKind::InvalidArgument, "save_pgm: bad maxval");
  std::ofstream out(path, std::ios::binary);
  if (!out) raise(ErrorKind::Io, "cannot write PGM: " + path);
  out << "P5\n" << f.width << " " << f.height << "\n" << maxval << "\n";
  auto quantize = [maxval](double v) {
    const double c = std::clamp(v, 0.0, 1.0) * maxval;
    return static_cast<unsigned>(std::lround(c));
  };
  if (maxval < 256) {
    std::vector<unsigned char> raw(f.data.size());
    for (std::size_t i = 0; i < f.data.size(); ++i)
      raw[i] = static_cast<unsigned char>(quantize(f.data[i]));
    out.write(reinterpret_cast<const char*>(raw.data()),
              static_cast<std::streamsize>(raw.size()));
  } else {
    std::vector<unsigned char> raw(2 * f.data.size());
    for (std::size_t i = 0; i < f.data.size(); ++i) {
      const unsigned v = quantize(f.data[i]);
      raw[2 * i] = static_cast<unsigned char>(v >> 8);
      raw[2 * i + 1] = static_cast<unsigned char>(v & 0xff);
    }
    out.write(reinterpret_cast<const char*>(raw.data()),
              static_cast<std::streamsize>(raw.size()));
  }
  if (!out) raise(ErrorKind::Io, "write failed: " + path);
}

}  // namespace ftdn::flow
