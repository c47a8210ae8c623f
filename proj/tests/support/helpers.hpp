#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>

#include "gde/autodiff/tape.hpp"

namespace gde::testing {

inline ad::Matrix uniform(ad::Index rows, ad::Index cols, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  ad::Matrix m(rows, cols);
  for (ad::Index i = 0; i < m.size(); ++i) m.data()[i] = u(rng);
  return m;
}

inline ad::Matrix mat(std::initializer_list<std::initializer_list<double>> rows) {
  ad::Matrix m(static_cast<ad::Index>(rows.size()), static_cast<ad::Index>(rows.begin()->size()));
  ad::Index i = 0;
  for (const auto& r : rows) {
    ad::Index j = 0;
    for (double v : r) m(i, j++) = v;
    ++i;
  }
  return m;
}

// Fresh empty directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() / ("gde_" + tag + "_" + std::to_string(rd()));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

}  // namespace gde::testing
