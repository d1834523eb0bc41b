// SPDX-License-Identifier: Apache-2.0
#include "msnf/data/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>
#include <string>

#include "msnf/data/schema.hpp"
#include "msnf/engine/rng.hpp"
#include "msnf/error.hpp"

namespace msnf::data {

namespace {

void shuffle(std::vector<std::size_t>& v, Rng& rng) {
  for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[uniform_index(rng, i)]);
}

std::vector<std::size_t> k_nearest(const std::vector<std::vector<double>>& pts, std::size_t self, std::size_t k) {
  std::vector<std::pair<double, std::size_t>> d;
  d.reserve(pts.size() - 1);
  for (std::size_t j = 0; j < pts.size(); ++j) {
    if (j == self) continue;
    double s = 0.0;
    for (std::size_t c = 0; c < pts[j].size(); ++c) s += (pts[j][c] - pts[self][c]) * (pts[j][c] - pts[self][c]);
    d.emplace_back(s, j);
  }
  std::partial_sort(d.begin(), d.begin() + static_cast<std::ptrdiff_t>(k), d.end());
  std::vector<std::size_t> out(k);
  for (std::size_t i = 0; i < k; ++i) out[i] = d[i].second;
  return out;
}

}  // namespace

std::vector<double> numeric_summary(const StudentRecord& r) {
  const auto& sem = r.performance.semesters;
  if (sem.empty()) throw SequenceLengthError("record '" + r.id + "' has no semesters");
  const std::size_t w = sem.front().size();
  std::vector<double> out(2 * w, 0.0);
  for (const auto& row : sem) {
    for (std::size_t c = 0; c < w; ++c) out[c] += row[c];
  }
  for (std::size_t c = 0; c < w; ++c) {
    out[c] /= static_cast<double>(sem.size());
    out[w + c] = sem.back()[c];
  }
  return out;
}

Dataset smote_rebalance(const Dataset& data, const SmoteOptions& opt) {
  if (opt.k == 0) throw ParameterError("SMOTE needs k >= 1");
  if (!(opt.target_ratio > 0.0)) throw ParameterError("SMOTE target_ratio must be positive");
  std::vector<std::size_t> pos, neg;
  for (std::size_t i = 0; i < data.size(); ++i) (data[i].labels.dropout ? pos : neg).push_back(i);
  const bool minority_is_dropout = pos.size() <= neg.size();
  const auto& minority = minority_is_dropout ? pos : neg;
  const std::size_t majority = minority_is_dropout ? neg.size() : pos.size();
  const auto target = static_cast<std::size_t>(std::llround(opt.target_ratio * static_cast<double>(majority)));

  Dataset out = data;
  if (minority.size() >= target) return out;
  if (minority.size() < opt.k + 1) {
    throw ParameterError("SMOTE with k=" + std::to_string(opt.k) + " needs at least " + std::to_string(opt.k + 1) +
                         " minority records, found " + std::to_string(minority.size()));
  }

  std::vector<std::vector<double>> pts;
  for (std::size_t i : minority) pts.push_back(numeric_summary(data[i]));
  const std::size_t dims = pts.front().size();
  for (std::size_t c = 0; c < dims; ++c) {
    double mean = 0.0, sq = 0.0;
    for (const auto& p : pts) mean += p[c];
    mean /= static_cast<double>(pts.size());
    for (const auto& p : pts) sq += (p[c] - mean) * (p[c] - mean);
    const double sd = std::sqrt(sq / static_cast<double>(pts.size()));
    for (auto& p : pts) p[c] = sd > 0.0 ? (p[c] - mean) / sd : 0.0;
  }
  std::vector<std::vector<std::size_t>> neighbors(minority.size());
  for (std::size_t i = 0; i < minority.size(); ++i) neighbors[i] = k_nearest(pts, i, opt.k);

  Rng rng(derive_seed(opt.seed, 0x5307e));
  const std::size_t needed = target - minority.size();
  out.reserve(data.size() + needed);
  for (std::size_t j = 0; j < needed; ++j) {
    const std::size_t bi = uniform_index(rng, minority.size());
    const std::size_t ni = neighbors[bi][uniform_index(rng, opt.k)];
    const double lambda = uniform01(rng);
    const StudentRecord& base = data[minority[bi]];
    const StudentRecord& nb = data[minority[ni]];

    StudentRecord s = base;
    s.id = "smote" + std::to_string(j) + "-" + base.id;
    s.synthetic = true;
    s.origin = SmoteOrigin{base.id, nb.id, lambda};
    const auto& nsem = nb.performance.semesters;
    for (std::size_t t = 0; t < s.performance.semesters.size(); ++t) {
      const auto& other = nsem[std::min(t, nsem.size() - 1)];
      auto& row = s.performance.semesters[t];
      for (std::size_t c = 0; c < row.size(); ++c) row[c] += lambda * (other[c] - row[c]);
    }
    // categorical fields: take the neighbor's value with probability lambda
    for (auto& [name, value] : s.raw_static) {
      auto it = nb.raw_static.find(name);
      if (it != nb.raw_static.end() && name != "gender" && bernoulli(rng, lambda)) value = it->second;
    }
    s.static_input = encode_static(s.raw_static);
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<Fold> split_folds(const Dataset& data, std::size_t k, std::uint64_t seed) {
  std::vector<std::size_t> pos, neg, synthetic;
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (data[i].synthetic) {
      synthetic.push_back(i);
    } else {
      (data[i].labels.dropout ? pos : neg).push_back(i);
    }
  }
  const std::size_t n = pos.size() + neg.size();
  if (k < 2) throw ParameterError("k-fold split needs k >= 2");
  if (k > n) {
    throw ParameterError("cannot split " + std::to_string(n) + " records into " + std::to_string(k) + " folds");
  }
  Rng rng(derive_seed(seed, 0xf01d));
  shuffle(pos, rng);
  shuffle(neg, rng);
  std::vector<std::size_t> order = pos;
  order.insert(order.end(), neg.begin(), neg.end());

  std::vector<std::size_t> fold_of(data.size(), k);
  for (std::size_t j = 0; j < order.size(); ++j) fold_of[order[j]] = j % k;
  std::map<std::string, std::size_t> fold_by_id;
  for (std::size_t i : order) fold_by_id[data[i].id] = fold_of[i];

  std::vector<Fold> folds(k);
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (data[i].synthetic) continue;
    for (std::size_t f = 0; f < k; ++f) (fold_of[i] == f ? folds[f].test : folds[f].train).push_back(i);
  }
  for (std::size_t i : synthetic) {
    auto it = data[i].origin ? fold_by_id.find(data[i].origin->base) : fold_by_id.end();
    for (std::size_t f = 0; f < k; ++f) {
      if (it == fold_by_id.end() || it->second != f) folds[f].train.push_back(i);
    }
  }
  return folds;
}

Fold holdout_split(const Dataset& data, double train_fraction, std::uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) throw ParameterError("holdout fraction must lie in (0, 1)");
  std::vector<std::size_t> pos, neg, synthetic;
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (data[i].synthetic) {
      synthetic.push_back(i);
    } else {
      (data[i].labels.dropout ? pos : neg).push_back(i);
    }
  }
  if (pos.size() + neg.size() < 2) throw ParameterError("holdout split needs at least two records");
  Rng rng(derive_seed(seed, 0x401d));
  shuffle(pos, rng);
  shuffle(neg, rng);
  Fold f;
  std::set<std::string> tested;
  for (auto* cls : {&pos, &neg}) {
    const auto n_train = static_cast<std::size_t>(std::llround(train_fraction * static_cast<double>(cls->size())));
    for (std::size_t j = 0; j < cls->size(); ++j) {
      const std::size_t i = (*cls)[j];
      if (j < n_train) {
        f.train.push_back(i);
      } else {
        f.test.push_back(i);
        tested.insert(data[i].id);
      }
    }
  }
  for (std::size_t i : synthetic) {
    if (!data[i].origin || !tested.count(data[i].origin->base)) f.train.push_back(i);
  }
  std::sort(f.train.begin(), f.train.end());
  std::sort(f.test.begin(), f.test.end());
  return f;
}

}  // namespace msnf::data
