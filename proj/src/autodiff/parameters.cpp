#include "gde/autodiff/parameters.hpp"

#include <cmath>
#include <fstream>

#include "gde/errors.hpp"

namespace gde::ad {

Matrix& ParameterSet::add_glorot(const std::string& name, Index rows, Index cols, std::mt19937_64& rng) {
  const double bound = std::sqrt(6.0 / static_cast<double>(rows + cols));
  std::uniform_real_distribution<double> dist(-bound, bound);
  Matrix m(rows, cols);
  for (Index i = 0; i < m.size(); ++i) m.data()[i] = dist(rng);
  return add(name, std::move(m));
}

Matrix& ParameterSet::add_zeros(const std::string& name, Index rows, Index cols) {
  return add(name, Matrix::Zero(rows, cols));
}

Matrix& ParameterSet::add(const std::string& name, Matrix value) {
  auto [it, inserted] = values_.emplace(name, std::move(value));
  if (!inserted) throw ContractError("parameter '" + name + "' registered twice");
  return it->second;
}

const Matrix& ParameterSet::at(const std::string& name) const {
  auto it = values_.find(name);
  if (it == values_.end()) throw ContractError("unknown parameter '" + name + "'");
  return it->second;
}

Matrix& ParameterSet::at(const std::string& name) {
  auto it = values_.find(name);
  if (it == values_.end()) throw ContractError("unknown parameter '" + name + "'");
  return it->second;
}

std::size_t ParameterSet::scalar_count() const {
  std::size_t n = 0;
  for (const auto& [_, m] : values_) n += static_cast<std::size_t>(m.size());
  return n;
}

nlohmann::json ParameterSet::to_json() const {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [name, m] : values_) {
    j[name] = {{"rows", m.rows()}, {"cols", m.cols()},
               {"data", std::vector<double>(m.data(), m.data() + m.size())}};
  }
  return j;
}

ParameterSet ParameterSet::from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw IoError("checkpoint: expected a JSON object");
  ParameterSet p;
  for (const auto& [name, entry] : j.items()) {
    const auto rows = entry.at("rows").get<Index>();
    const auto cols = entry.at("cols").get<Index>();
    const auto data = entry.at("data").get<std::vector<double>>();
    if (rows <= 0 || cols <= 0 || static_cast<Index>(data.size()) != rows * cols)
      throw IoError("checkpoint: tensor '" + name + "' declares " + shape_string(rows, cols) + " but holds " +
                    std::to_string(data.size()) + " values");
    p.add(name, Eigen::Map<const Matrix>(data.data(), rows, cols));
  }
  return p;
}

void ParameterSet::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write checkpoint " + path.string());
  // nlohmann emits doubles with round-trip precision.
  out << to_json().dump(1) << "\n";
}

ParameterSet ParameterSet::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read checkpoint " + path.string());
  try {
    return from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::exception& e) {
    throw IoError("checkpoint " + path.string() + ": " + e.what());
  }
}

bool ParameterSet::operator==(const ParameterSet& other) const {
  if (values_.size() != other.values_.size()) return false;
  for (const auto& [name, m] : values_) {
    auto it = other.values_.find(name);
    if (it == other.values_.end()) return false;
    if (it->second.rows() != m.rows() || it->second.cols() != m.cols() || it->second != m) return false;
  }
  return true;
}

Binding::Binding(Tape& tape, const ParameterSet& params, bool trainable) : tape_(&tape) {
  for (const auto& [name, m] : params) leaves_.emplace(name, tape.leaf(m, trainable));
}

Tensor Binding::operator[](const std::string& name) const {
  auto it = leaves_.find(name);
  if (it == leaves_.end()) throw ContractError("parameter '" + name + "' is not bound");
  return it->second;
}

std::map<std::string, Matrix> Binding::collect(const Gradients& grads) const {
  std::map<std::string, Matrix> out;
  for (const auto& [name, t] : leaves_) {
    if (grads.contains(t)) {
      out.emplace(name, grads[t]);
    } else {
      out.emplace(name, Matrix::Zero(t.rows(), t.cols()));
    }
  }
  return out;
}

}  // namespace gde::ad
