#pragma once

#include <unistd.h>

#include <atomic>
#include <cmath>
#include <filesystem>
#include <optional>
#include <string>

#include "ruinkit/error.hpp"
#include "ruinkit/model.hpp"

namespace testing {

// a = 1, sigma^2 = 1, c = 1, alpha1 = 1, mu1 = 1, alpha2 = 0.5, mu2 = 2; beta = 1.
inline ruinkit::ModelParams beta_one() {
  ruinkit::ModelParams p;
  p.a = 1.0;
  p.sigma = 1.0;
  p.c = 1.0;
  p.alpha1 = 1.0;
  p.alpha2 = 0.5;
  p.mu1 = 1.0;
  p.mu2 = 2.0;
  return p;
}

// sigma = 0, a = 0, alpha2 = 0, c = 1.5, alpha1 = 1, mu1 = 1.
inline ruinkit::ModelParams cramer_lundberg() {
  ruinkit::ModelParams p;
  p.a = 0.0;
  p.sigma = 0.0;
  p.c = 1.5;
  p.alpha1 = 1.0;
  p.alpha2 = 0.0;
  p.mu1 = 1.0;
  p.mu2 = 1.0;
  return p;
}

// Classical ruin probability (alpha1 mu1 / c) exp(-(1/mu1 - alpha1/c) u).
inline double cramer_lundberg_psi(double alpha1, double mu1, double c, double u) {
  return alpha1 * mu1 / c * std::exp(-(1.0 / mu1 - alpha1 / c) * u);
}

// a = 0.3, sigma^2 = 0.8; beta = -0.25.
inline ruinkit::ModelParams certain_ruin() {
  ruinkit::ModelParams p = beta_one();
  p.a = 0.3;
  p.sigma = std::sqrt(0.8);
  p.mu2 = 1.0;
  return p;
}

inline std::filesystem::path scratch_dir(const std::string& name) {
  static std::atomic<int> counter{0};
  auto dir = std::filesystem::temp_directory_path() /
             ("ruinkit_" + name + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace testing

namespace testing {

// Code of the ruinkit::Error thrown by fn, or nullopt if nothing was thrown.
template <class F>
std::optional<ruinkit::ErrorCode> error_code_of(F&& fn) {
  try {
    fn();
  } catch (const ruinkit::Error& e) {
    return e.code();
  }
  return std::nullopt;
}

}  // namespace testing
