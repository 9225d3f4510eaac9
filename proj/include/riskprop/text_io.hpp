#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace riskprop::io {

/// Shortest-safe round-trip text form: 17 significant digits.
std::string format_double(double v);

double parse_double(std::string_view text, const std::filesystem::path& path, std::size_t line);
std::uint64_t parse_uint(std::string_view text, const std::filesystem::path& path, std::size_t line);

std::vector<std::string_view> split(std::string_view line, char sep);
std::string_view trim(std::string_view s);

/// Line-oriented reader that tracks 1-based line numbers for diagnostics.
class LineReader {
 public:
  explicit LineReader(const std::filesystem::path& path);

  /// Next line without its terminator; false at end of file.
  bool next(std::string& line);
  std::size_t line_number() const { return line_no_; }
  const std::filesystem::path& path() const { return path_; }

  [[noreturn]] void fail(const std::string& what) const;

 private:
  std::filesystem::path path_;
  std::string content_;
  std::size_t pos_ = 0;
  std::size_t line_no_ = 0;
};

/// Writes to `<path>.tmp` and renames over `path`, so readers never see a
/// truncated file. Creates parent directories as needed.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

std::string read_file(const std::filesystem::path& path);

struct KeyValue {
  std::string key;
  std::string value;
  std::size_t line = 0;
};

/// Parses `key=value` lines; blank lines and lines starting with '#' are skipped.
std::vector<KeyValue> parse_key_values(const std::filesystem::path& path);
std::vector<KeyValue> parse_key_values_text(std::string_view text, const std::filesystem::path& origin);

/// 64-bit FNV-1a, used for checkpoint content checksums.
std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t seed = 0xcbf29ce484222325ULL);

}  // namespace riskprop::io
