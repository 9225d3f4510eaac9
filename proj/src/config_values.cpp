#include "riskprop/config_values.hpp"

#include <charconv>
#include <cmath>

#include "riskprop/error.hpp"
#include "riskprop/text_io.hpp"

namespace riskprop::config {

namespace {

[[noreturn]] void bad(std::string_view key, std::string_view value, const char* what) {
  throw ConfigError("config key '" + std::string(key) + "': " + what + ", got '" + std::string(value) + "'");
}

}  // namespace

std::uint64_t to_u64(std::string_view value, std::string_view key) {
  value = io::trim(value);
  std::uint64_t v = 0;
  auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
  if (value.empty() || ec != std::errc{} || ptr != value.data() + value.size()) {
    bad(key, value, "expected a non-negative integer");
  }
  return v;
}

std::size_t to_size(std::string_view value, std::string_view key) {
  return static_cast<std::size_t>(to_u64(value, key));
}

double to_double(std::string_view value, std::string_view key) {
  value = io::trim(value);
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
  if (value.empty() || ec != std::errc{} || ptr != value.data() + value.size() || !std::isfinite(v)) {
    bad(key, value, "expected a finite number");
  }
  return v;
}

bool to_bool(std::string_view value, std::string_view key) {
  value = io::trim(value);
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  bad(key, value, "expected true/false");
}

std::vector<double> to_doubles(std::string_view value, std::string_view key) {
  std::vector<double> out;
  if (io::trim(value).empty()) return out;
  for (auto part : io::split(value, ',')) out.push_back(to_double(part, key));
  return out;
}

std::vector<std::uint64_t> to_u64s(std::string_view value, std::string_view key) {
  std::vector<std::uint64_t> out;
  if (io::trim(value).empty()) return out;
  for (auto part : io::split(value, ',')) out.push_back(to_u64(part, key));
  return out;
}

std::vector<std::string> to_strings(std::string_view value) {
  std::vector<std::string> out;
  if (io::trim(value).empty()) return out;
  for (auto part : io::split(value, ',')) out.emplace_back(io::trim(part));
  return out;
}

std::string join(const std::vector<double>& values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out += ',';
    out += io::format_double(values[i]);
  }
  return out;
}

std::string join(const std::vector<std::uint64_t>& values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out += ',';
    out += std::to_string(values[i]);
  }
  return out;
}

std::string join(const std::vector<std::string>& values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out += ',';
    out += values[i];
  }
  return out;
}

}  // namespace riskprop::config
