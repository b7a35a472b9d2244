#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace ftdn {

// Locale-free float formatting via std::to_chars (shortest representation
// that round-trips bit-exactly) and the matching parser.
std::string format_double(double v);
double parse_double(const std::string& s);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);

std::vector<std::uint8_t> read_binary_file(const std::string& path);
void write_binary_file(const std::string& path, const void* data,
                       std::size_t bytes);

// Little-endian raw float64 blob IO. The in-memory representation on every
// supported target is already little-endian IEEE754; the readers validate
// size.
void write_f64_blob(const std::string& path, const std::vector<double>& data);
std::vector<double> read_f64_blob(const std::string& path,
                                  std::size_t expected_count);

std::vector<std::string> split_csv_line(const std::string& line);

// FNV-1a 64-bit over a string; used for config hashes.
std::uint64_t fnv1a64(const std::string& s);
std::string hex64(std::uint64_t v);

}  // namespace ftdn
