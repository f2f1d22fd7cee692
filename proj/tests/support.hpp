#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "sarhcox/error.hpp"
#include "sarhcox/grid.hpp"

namespace testing_support {

inline std::vector<double> gaussian_vector(std::size_t n, std::uint64_t seed, double sd = 1.0) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> z(0.0, sd);
  std::vector<double> v(n);
  for (auto& x : v) x = z(rng);
  return v;
}

inline sarhcox::FunctionalField random_field(int s1, int s2, int depth, std::uint64_t seed) {
  const sarhcox::SpatialGrid g(s1, s2);
  const sarhcox::TimeGrid t(depth);
  return sarhcox::FunctionalField(g, t, gaussian_vector(g.size() * t.size(), seed));
}

inline std::filesystem::path temp_dir(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("sarhcox_test_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

}  // namespace testing_support

#define EXPECT_ERROR_KIND(stmt, k)                                     \
  do {                                                                 \
    try {                                                              \
      stmt;                                                            \
      ADD_FAILURE() << "expected sarhcox::Error";                      \
    } catch (const sarhcox::Error& e) {                                \
      EXPECT_EQ(e.kind(), k) << e.what();                              \
    }                                                                  \
  } while (0)
