#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace multipot::util {

std::string trim(std::string_view s);
std::string to_lower(std::string_view s);
std::vector<std::string> split(std::string_view s, char sep);
std::vector<std::string> split_lines(std::string_view text);
bool starts_with(std::string_view s, std::string_view prefix);
std::string replace_all(std::string s, std::string_view from, std::string_view to);

// FNV-1a, used for transcript keys and report hashes. Not cryptographic;
// collisions only risk a replay mismatch, which surfaces as a hard error.
std::uint64_t fnv1a(std::string_view data);
std::string fnv1a_hex(std::string_view data);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view content);
void append_line(const std::filesystem::path& path, std::string_view line);

// splitmix64; deterministic across platforms, used wherever the harness
// needs seeded pseudo-randomness.
std::uint64_t splitmix64(std::uint64_t& state);

// Fixed-point percentage formatting ("77.35"); reports round to 2 decimals.
std::string format_pct(double value);

}  // namespace multipot::util
