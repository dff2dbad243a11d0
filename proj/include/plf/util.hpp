#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

namespace plf {

/// Shortest decimal text that round-trips the double exactly.
std::string fmt_double(double v);

double deg_to_rad(double deg);
double rad_to_deg(double rad);

/// Degree text carrying extended precision (21 significant digits from a
/// long double conversion). A radian double written with rad_to_deg_text and
/// read back with deg_text_to_rad is recovered bit-for-bit; a double-rounded
/// degree value cannot guarantee that (some radian doubles have no exact
/// preimage among degree doubles).
std::string rad_to_deg_text(double rad);
double deg_text_to_rad(const std::string& deg);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::string& content);

std::uint64_t fnv1a(const std::string& bytes);

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream);

/// Runs fn(i) for i in [0, n). workers == 1 is a plain serial loop (the
/// reference path); workers == 0 uses all available cores. Results must be
/// written to disjoint slots so the schedule cannot change the output.
void parallel_for(int n, int workers, const std::function<void(int)>& fn);

}  // namespace plf
