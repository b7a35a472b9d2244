#include "core/textio.hpp"

#include <charconv>
#include <cstring>
#include <fstream>
#include <sstream>

#include "core/errors.hpp"

namespace ftdn {

std::string format_double(double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

double parse_double(const std::string& s) {
  double v = 0.0;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  while (first < last && (*first == ' ' || *first == '\t')) ++first;
  auto res = std::from_chars(first, last, v);
  if (res.ec != std::errc{})
    raise(ErrorKind::Parse, "cannot parse number: '" + s + "'");
  return v;
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) raise(ErrorKind::Io, "cannot open file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) raise(ErrorKind::Io, "cannot write file: " + path);
  out << content;
  if (!out) raise(ErrorKind::Io, "write failed: " + path);
}

std::vector<std::uint8_t> read_binary_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary | std::ios::ate);
  if (!in) raise(ErrorKind::Io, "cannot open file: " + path);
  const std::streamsize n = in.tellg();
  in.seekg(0);
  std::vector<std::uint8_t> data(static_cast<std::size_t>(n));
  if (n > 0 && !in.read(reinterpret_cast<char*>(data.data()), n))
    raise(ErrorKind::Io, "read failed: " + path);
  return data;
}

void write_binary_file(const std::string& path, const void* data,
                       std::size_t bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) raise(ErrorKind::Io, "cannot write file: " + path);
  out.write(static_cast<const char*>(data), static_cast<std::streamsize>(bytes));
  if (!out) raise(ErrorKind::Io, "write failed: " + path);
}

void write_f64_blob(const std::string& path, const std::vector<double>& data) {
  static_assert(sizeof(double) == 8);
  write_binary_file(path, data.data(), data.size() * sizeof(double));
}

std::vector<double> read_f64_blob(const std::string& path,
                                  std::size_t expected_count) {
  const auto bytes = read_binary_file(path);
  if (bytes.size() != expected_count * sizeof(double))
    raise(ErrorKind::Parse, "blob size mismatch: " + path);
  std::vector<double> out(expected_count);
  std::memcpy(out.data(), bytes.data(), bytes.size());
  return out;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= line.size(); ++i) {
    if (i == line.size() || line[i] == ',') {
      out.push_back(line.substr(start, i - start));
      start = i + 1;
    }
  }
  if (!out.empty() && !out.back().empty() && out.back().back() == '\r')
    out.back().pop_back();
  return out;
}

std::uint64_t fnv1a64(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  static const char* digits = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[static_cast<std::size_t>(i)] = digits[v & 0xf];
    v >>= 4;
  }
  return out;
}

}  // namespace ftdn
