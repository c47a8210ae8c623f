#pragma once

#include <filesystem>
#include <map>
#include <random>
#include <string>

#include <nlohmann/json.hpp>

#include "gde/autodiff/tape.hpp"

namespace gde::ad {

// Named trainable matrices. Names are stable keys for checkpoints and for the
// optimizer state.
class ParameterSet {
 public:
  // Uniform Glorot range +-sqrt(6 / (fan_in + fan_out)).
  Matrix& add_glorot(const std::string& name, Index rows, Index cols, std::mt19937_64& rng);
  Matrix& add_zeros(const std::string& name, Index rows, Index cols);
  Matrix& add(const std::string& name, Matrix value);

  bool contains(const std::string& name) const { return values_.count(name) > 0; }
  const Matrix& at(const std::string& name) const;
  Matrix& at(const std::string& name);
  std::size_t size() const { return values_.size(); }
  std::size_t scalar_count() const;

  auto begin() const { return values_.begin(); }
  auto end() const { return values_.end(); }
  auto begin() { return values_.begin(); }
  auto end() { return values_.end(); }

  nlohmann::json to_json() const;
  static ParameterSet from_json(const nlohmann::json& j);
  void save(const std::filesystem::path& path) const;
  static ParameterSet load(const std::filesystem::path& path);

  bool operator==(const ParameterSet& other) const;

 private:
  std::map<std::string, Matrix> values_;
};

// Parameters placed on a tape as leaves for one forward pass.
class Binding {
 public:
  // trainable = false records the parameters as constants (evaluation).
  Binding(Tape& tape, const ParameterSet& params, bool trainable = true);

  Tensor operator[](const std::string& name) const;
  Tape& tape() const { return *tape_; }

  // Gradients keyed by parameter name, in the order of the set.
  std::map<std::string, Matrix> collect(const Gradients& grads) const;

 private:
  Tape* tape_;
  std::map<std::string, Tensor> leaves_;
};

}  // namespace gde::ad
