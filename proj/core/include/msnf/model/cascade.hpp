// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "msnf/engine/layers.hpp"
#include "msnf/model/config.hpp"

namespace msnf {

enum Task : std::size_t { kFD = 0, kTD = 1, kND = 2, kDD = 3, kCD = 4 };
inline constexpr std::size_t kTaskCount = 5;
const char* task_name(std::size_t task);

/// y1 = 1 means the student drops out. y2..y5 exist only for dropouts:
/// y2 = 1 temporary / 0 permanent, y3 = 1 next-semester dropout,
/// y4 duration in semesters, y5 cause index.
struct TaskLabels {
  bool dropout = false;
  std::optional<bool> temporary;
  std::optional<bool> next_semester;
  std::optional<double> duration;
  std::optional<std::size_t> cause;

  void validate() const;
  friend bool operator==(const TaskLabels&, const TaskLabels&) = default;
};

using TaskMask = std::array<bool, kTaskCount>;

struct MaskOptions {
  /// Temporary dropouts with y3 = 1 also drop the DD and CD losses.
  bool rule3 = false;
};

/// Throws ContractError when a label the mask switches on is undefined.
TaskMask derive_mask(const TaskLabels& labels, const MaskOptions& options = {});

struct TaskOutputs {
  std::array<double, 2> p1{}, p2{}, p3{};
  double y4_hat = 0.0;
  std::vector<double> p5;
  std::array<std::vector<double>, kTaskCount> hidden;
};

/// -log(max(p[y], 1e-12))
double cross_entropy(std::span<const double> p, std::size_t y);
/// (y_hat - y)^2
double euclidean_loss(double y_hat, double y);

struct LossTerms {
  std::array<double, kTaskCount> terms{};
  TaskMask mask{};
  double total = 0.0;
};
/// Unweighted masked sum over the five task losses.
LossTerms loss_terms(const TaskOutputs& outputs, const TaskLabels& labels, const MaskOptions& options = {});
double total_loss(const TaskOutputs& outputs, const TaskLabels& labels, const MaskOptions& options = {});

/// Five dense(head_width) -> output heads. Head k > 1 reads concat(z, h_{k-1}).
class CascadeHeads {
 public:
  struct Vars {
    std::array<Var, kTaskCount> out;     // [B,2] x3, [B,1], [B,15]
    std::array<Var, kTaskCount> hidden;  // [B, head_width]
  };

  static CascadeHeads create(ParameterStore& store, std::size_t z_width, const ModelConfig& config, Rng& rng);

  Vars forward(Tape& tape, ParameterStore& store, Var z) const;

  const DenseLayer& hidden_layer(std::size_t task) const { return hidden_.at(task); }
  const DenseLayer& output_layer(std::size_t task) const { return out_.at(task); }
  std::size_t z_width() const { return z_width_; }

 private:
  std::array<DenseLayer, kTaskCount> hidden_;
  std::array<DenseLayer, kTaskCount> out_;
  std::size_t z_width_ = 0;
  ops::Activation activation_ = ops::Activation::relu;
};

/// Per-row targets for a batch; rows whose task is masked carry weight 0.
struct BatchTargets {
  std::vector<std::size_t> fd, td, nd, cd;
  std::vector<double> dd;
  std::array<std::vector<double>, kTaskCount> weight;  // sample weight * mask

  static BatchTargets build(std::span<const TaskLabels* const> labels, std::span<const double> sample_weights,
                            const MaskOptions& options);
};

struct CascadeLoss {
  Var total;
  std::array<Var, kTaskCount> terms;
};

/// sum_i w_i sum_k m_ik L_ik, not yet divided by the batch size.
CascadeLoss cascade_loss(Tape& tape, const CascadeHeads::Vars& heads, const BatchTargets& targets);

}  // namespace msnf
