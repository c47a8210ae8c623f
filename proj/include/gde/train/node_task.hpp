#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <string_view>
#include <vector>

#include "gde/fields/fields.hpp"
#include "gde/io/static_data.hpp"
#include "gde/odeint/odeint.hpp"
#include "gde/train/optim.hpp"

namespace gde::train {

enum class NodeModelKind { gcn, gcde_rk2, gcde_rk4, gcde_dopri5 };

NodeModelKind parse_node_model(std::string_view name);
std::string_view to_string(NodeModelKind kind);

struct NodeModelConfig {
  ad::Index hidden = 64;
  double input_dropout = 0.6;
  double field_dropout = 0.9;
  // Empty selects the default field for the scheme: two GCN layers
  // (softplus, none) for fixed-step solvers, one softplus layer for dopri5.
  std::vector<fields::LayerSpec> field;
  odeint::SolverConfig solver;
};

// GCN-in -> [GCDE flow on [0, 1]] -> GCN-out. The GCN kind skips the flow.
struct NodeModel {
  NodeModelKind kind = NodeModelKind::gcn;
  fields::GCNLayer input;
  std::optional<fields::GCDEField> field;
  fields::GCNLayer output;
  odeint::SolverConfig solver;

  static NodeModel create(NodeModelKind kind, ad::Index in, ad::Index classes, const NodeModelConfig& cfg,
                          ad::ParameterSet& params, std::mt19937_64& rng);

  struct Output {
    ad::Tensor logits;
    long nfe = 0;
  };

  // rng != nullptr enables dropout (training mode).
  Output forward(const ad::Binding& b, const fields::GraphOperator& op, const ad::Matrix& x,
                 std::mt19937_64* rng) const;
  ad::Matrix predict(const ad::ParameterSet& params, const fields::GraphOperator& op, const ad::Matrix& x) const;
};

struct NodeTrainConfig {
  int epochs = 200;
  AdamConfig adam{0.01, 0.9, 0.999, 1e-8, 5e-4};
  // Best validation loss is tracked from this epoch on; negative means
  // epochs / 2 (the late-epoch selection window scaled to the run length).
  int select_from = -1;
  std::uint64_t seed = 0;
};

struct NodeEpoch {
  int epoch = 0;
  double train_loss = 0.0;
  double val_loss = 0.0;
  double val_accuracy = 0.0;
  long nfe = 0;
};

struct NodeRun {
  NodeModel model;
  ad::ParameterSet params;   // selected (lowest validation loss) parameters
  int selected_epoch = -1;
  std::vector<NodeEpoch> curve;
  double test_accuracy = 0.0;
  double mean_nfe = 0.0;     // forward NFE per training epoch
};

NodeRun train_node_model(NodeModel model, ad::ParameterSet params, const io::StaticDataset& data,
                         const NodeTrainConfig& cfg, const std::function<void(const NodeEpoch&)>& on_epoch = {});

}  // namespace gde::train
