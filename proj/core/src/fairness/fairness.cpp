// SPDX-License-Identifier: Apache-2.0
#include "msnf/fairness/fairness.hpp"

#include <cmath>

#include "msnf/error.hpp"

namespace msnf::fairness {

void GroupOutcomes::add(bool privileged, bool favorable_label, bool favorable_prediction, std::size_t n) {
  counts[privileged ? kPrivileged : kUnprivileged][favorable_label ? 1 : 0][favorable_prediction ? 1 : 0] += n;
}

std::size_t GroupOutcomes::group_size(Group g) const {
  const auto& c = counts[g];
  return c[0][0] + c[0][1] + c[1][0] + c[1][1];
}

GroupOutcomes GroupOutcomes::swapped() const {
  GroupOutcomes s;
  s.counts[kUnprivileged] = counts[kPrivileged];
  s.counts[kPrivileged] = counts[kUnprivileged];
  return s;
}

GroupOutcomes GroupOutcomes::tally(std::span<const bool> privileged, std::span<const int> labels,
                                   std::span<const int> predictions, int favorable) {
  if (labels.size() != privileged.size() || predictions.size() != privileged.size()) {
    throw DimensionError("group, label and prediction arrays differ in length");
  }
  GroupOutcomes o;
  for (std::size_t i = 0; i < privileged.size(); ++i) {
    o.add(privileged[i], labels[i] == favorable, predictions[i] == favorable);
  }
  return o;
}

namespace {

std::optional<double> ratio(std::size_t num, std::size_t den) {
  if (den == 0) return std::nullopt;
  return static_cast<double>(num) / static_cast<double>(den);
}

std::optional<bool> within(const std::optional<double>& v, double lo, double hi) {
  if (!v) return std::nullopt;
  return *v >= lo && *v <= hi;
}

}  // namespace

std::size_t FairnessReport::fair_count() const {
  std::size_t n = 0;
  for (const auto& f : {spd_fair, eod_fair, aod_fair, di_fair}) n += f.value_or(false) ? 1 : 0;
  return n;
}

bool FairnessReport::all_fair() const { return fair_count() == 4; }

FairnessReport compute_metrics(const GroupOutcomes& o) {
  if (o.group_size(kPrivileged) == 0 || o.group_size(kUnprivileged) == 0) {
    throw ParameterError("fairness metrics need members in both the privileged and the unprivileged group");
  }
  struct Rates {
    std::optional<double> selection, tpr, fpr;
  };
  auto rates = [&](Group g) {
    const auto& c = o.counts[g];
    Rates r;
    r.selection = ratio(c[0][1] + c[1][1], o.group_size(g));
    r.tpr = ratio(c[1][1], c[1][0] + c[1][1]);
    r.fpr = ratio(c[0][1], c[0][0] + c[0][1]);
    return r;
  };
  const Rates u = rates(kUnprivileged), p = rates(kPrivileged);

  FairnessReport rep;
  rep.spd = *u.selection - *p.selection;
  if (*p.selection > 0.0) rep.di = *u.selection / *p.selection;
  if (u.tpr && p.tpr) rep.eod = *u.tpr - *p.tpr;
  if (u.tpr && p.tpr && u.fpr && p.fpr) rep.aod = 0.5 * ((*u.fpr - *p.fpr) + (*u.tpr - *p.tpr));

  rep.spd_fair = within(rep.spd, -kParityTarget, kParityTarget);
  rep.eod_fair = within(rep.eod, -kParityTarget, kParityTarget);
  rep.aod_fair = within(rep.aod, -kParityTarget, kParityTarget);
  rep.di_fair = within(rep.di, kImpactLow, kImpactHigh);
  return rep;
}

std::vector<double> reweigh(std::span<const bool> privileged, std::span<const int> labels, int favorable) {
  if (privileged.size() != labels.size()) throw DimensionError("group and label arrays differ in length");
  const std::size_t n = labels.size();
  std::array<std::array<double, 2>, 2> joint{};
  std::array<double, 2> group{}, label{};
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t s = privileged[i] ? 1 : 0, y = labels[i] == favorable ? 1 : 0;
    joint[s][y] += 1.0;
    group[s] += 1.0;
    label[y] += 1.0;
  }
  for (std::size_t s = 0; s < 2; ++s) {
    for (std::size_t y = 0; y < 2; ++y) {
      if (joint[s][y] == 0.0) {
        throw ParameterError(std::string("reweighing found no samples with group=") +
                             (s ? "privileged" : "unprivileged") + " and label=" + (y ? "favorable" : "unfavorable") +
                             "; regenerate the cohort with more students");
      }
    }
  }
  std::vector<double> w(n);
  const double total = static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t s = privileged[i] ? 1 : 0, y = labels[i] == favorable ? 1 : 0;
    w[i] = (group[s] / total) * (label[y] / total) / (joint[s][y] / total);
  }
  return w;
}

Var prejudice_regularizer(Tape& tape, Var p1, std::span<const bool> privileged, double eta) {
  const Tensor& p = tape.value(p1);
  if (p.rank() != 2 || p.dim(1) != 2 || p.dim(0) != privileged.size()) {
    throw DimensionError("regularizer expects [" + std::to_string(privileged.size()) + "x2] probabilities, got " +
                         shape_string(p.shape()));
  }
  std::size_t n_priv = 0;
  for (bool b : privileged) n_priv += b ? 1 : 0;
  const std::size_t n_unpriv = privileged.size() - n_priv;
  const bool active = eta != 0.0 && n_priv > 0 && n_unpriv > 0;

  double gap = 0.0;
  if (active) {
    double mu = 0.0, mp = 0.0;
    for (std::size_t r = 0; r < privileged.size(); ++r) (privileged[r] ? mp : mu) += p.at(r, 1);
    gap = mu / static_cast<double>(n_unpriv) - mp / static_cast<double>(n_priv);
  }
  const Var out{tape.size()};
  std::vector<bool> groups(privileged.begin(), privileged.end());
  return tape.record(Tensor::scalar(eta * gap * gap), {p1},
                     [p1, out, active, gap, eta, n_priv, n_unpriv, groups = std::move(groups)](Tape& t) {
                       if (!active) return;
                       const double g = t.grad(out)[0] * 2.0 * eta * gap;
                       auto dp = t.grad(p1);
                       for (std::size_t r = 0; r < groups.size(); ++r) {
                         dp[r * 2 + 1] += groups[r] ? -g / static_cast<double>(n_priv)
                                                    : g / static_cast<double>(n_unpriv);
                       }
                     });
}

}  // namespace msnf::fairness
