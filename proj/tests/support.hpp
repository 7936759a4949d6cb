#pragma once

#include <complex>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "pmufdi/phasor.hpp"

namespace testutil {

inline std::mt19937_64 rng(std::uint64_t seed) { return std::mt19937_64(seed * 7919 + 17); }

inline double uniform(std::mt19937_64& g, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(g);
}

/// `n` points on an exact circle at random, distinct angles.
inline std::vector<pmufdi::Phasor> circle_points(std::mt19937_64& g, pmufdi::Phasor center,
                                                 double radius, int n) {
  std::vector<pmufdi::Phasor> pts;
  for (int i = 0; i < n; ++i) {
    const double a = uniform(g, 0.0, 6.283185307179586);
    pts.push_back(center + std::polar(radius, a));
  }
  return pts;
}

/// Scratch directory unique to the calling test.
inline std::filesystem::path temp_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("pmufdi_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace testutil
