#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace riskprop::config {

// Typed conversions for `key=value` config files. Errors name the key.

std::size_t to_size(std::string_view value, std::string_view key);
std::uint64_t to_u64(std::string_view value, std::string_view key);
double to_double(std::string_view value, std::string_view key);
bool to_bool(std::string_view value, std::string_view key);
std::vector<double> to_doubles(std::string_view value, std::string_view key);
std::vector<std::uint64_t> to_u64s(std::string_view value, std::string_view key);
std::vector<std::string> to_strings(std::string_view value);

std::string join(const std::vector<double>& values);
std::string join(const std::vector<std::uint64_t>& values);
std::string join(const std::vector<std::string>& values);

}  // namespace riskprop::config
