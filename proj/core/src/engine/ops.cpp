// SPDX-License-Identifier: Apache-2.0
#include "msnf/engine/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "msnf/error.hpp"

namespace msnf::ops {

namespace {

Var next_var(const Tape& tape) { return Var{tape.size()}; }

double sigmoid(double a) { return 1.0 / (1.0 + std::exp(-a)); }

double dot(const double* a, const double* b, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

// Views a rank-2 or rank-3 sequence tensor as [batch, len, ch].
struct SeqView {
  std::size_t batch, len, ch;
  bool batched;
};

SeqView seq_view(const Tensor& t, const char* op) {
  if (t.rank() == 2) return {1, t.dim(0), t.dim(1), false};
  if (t.rank() == 3) return {t.dim(0), t.dim(1), t.dim(2), true};
  throw DimensionError(std::string(op) + ": expected [len x ch] or [batch x len x ch], got " +
                       shape_string(t.shape()));
}

Shape seq_shape(const SeqView& v, std::size_t len, std::size_t ch) {
  if (v.batched) return {v.batch, len, ch};
  return {len, ch};
}

void check_offsets(std::span<const std::size_t> offsets, std::size_t rows, const char* op) {
  if (offsets.size() < 2) throw SequenceLengthError(std::string(op) + ": empty batch of sequences");
  if (offsets.front() != 0 || offsets.back() != rows) {
    throw DimensionError(std::string(op) + ": offsets do not cover " + std::to_string(rows) + " rows");
  }
  for (std::size_t b = 0; b + 1 < offsets.size(); ++b) {
    if (offsets[b + 1] < offsets[b]) throw DimensionError(std::string(op) + ": offsets decrease");
  }
}

void derivative_from_output(Activation act, std::span<const double> y, std::span<double> g) {
  switch (act) {
    case Activation::identity:
      return;
    case Activation::relu:
      for (std::size_t i = 0; i < g.size(); ++i) {
        if (y[i] <= 0.0) g[i] = 0.0;
      }
      return;
    case Activation::tanh:
      for (std::size_t i = 0; i < g.size(); ++i) g[i] *= 1.0 - y[i] * y[i];
      return;
    case Activation::sigmoid:
      for (std::size_t i = 0; i < g.size(); ++i) g[i] *= y[i] * (1.0 - y[i]);
      return;
  }
}

void apply_activation(Activation act, std::span<double> v) {
  switch (act) {
    case Activation::identity:
      return;
    case Activation::relu:
      for (auto& x : v) x = x > 0.0 ? x : 0.0;
      return;
    case Activation::tanh:
      for (auto& x : v) x = std::tanh(x);
      return;
    case Activation::sigmoid:
      for (auto& x : v) x = sigmoid(x);
      return;
  }
}

}  // namespace

const char* to_string(Activation a) {
  switch (a) {
    case Activation::identity:
      return "identity";
    case Activation::relu:
      return "relu";
    case Activation::tanh:
      return "tanh";
    case Activation::sigmoid:
      return "sigmoid";
  }
  return "?";
}

Activation activation_from_string(const std::string& s) {
  if (s == "identity") return Activation::identity;
  if (s == "relu") return Activation::relu;
  if (s == "tanh") return Activation::tanh;
  if (s == "sigmoid") return Activation::sigmoid;
  throw ParameterError("unknown activation '" + s + "'");
}

Var activate(Tape& tape, Var x, Activation act) {
  if (act == Activation::identity) return x;
  Tensor y = tape.value(x);
  y.drop_grad();
  apply_activation(act, y.values());
  const Var out = next_var(tape);
  return tape.record(std::move(y), {x}, [x, out, act](Tape& t) {
    std::vector<double> g(t.grad(out).begin(), t.grad(out).end());
    derivative_from_output(act, t.value(out).values(), g);
    auto dx = t.grad(x);
    for (std::size_t i = 0; i < g.size(); ++i) dx[i] += g[i];
  });
}

Var dense(Tape& tape, Var x, Var weight, Var bias, Activation act) {
  const Tensor& X = tape.value(x);
  const Tensor& W = tape.value(weight);
  const Tensor& B = tape.value(bias);
  if (W.rank() != 2) throw DimensionError("dense: weight must be [out x in], got " + shape_string(W.shape()));
  const std::size_t out_dim = W.dim(0), in_dim = W.dim(1);
  const bool vec = X.rank() == 1;
  if (!(vec || X.rank() == 2) || (vec ? X.size() : X.dim(1)) != in_dim) {
    throw DimensionError("dense: input " + shape_string(X.shape()) + " does not match weight " +
                         shape_string(W.shape()));
  }
  require_shape(B, {out_dim}, "dense bias");
  const std::size_t n = vec ? 1 : X.dim(0);

  Tensor y(vec ? Shape{out_dim} : Shape{n, out_dim});
  for (std::size_t i = 0; i < n; ++i) {
    const double* xi = X.values().data() + i * in_dim;
    for (std::size_t o = 0; o < out_dim; ++o) {
      y[i * out_dim + o] = B[o] + dot(W.values().data() + o * in_dim, xi, in_dim);
    }
  }
  apply_activation(act, y.values());

  const Var out = next_var(tape);
  return tape.record(std::move(y), {x, weight, bias}, [=](Tape& t) {
    std::vector<double> g(t.grad(out).begin(), t.grad(out).end());
    derivative_from_output(act, t.value(out).values(), g);
    const Tensor& Xv = t.value(x);
    const Tensor& Wv = t.value(weight);
    if (t.requires_grad(weight)) {
      auto dW = t.grad(weight);
      for (std::size_t i = 0; i < n; ++i) {
        const double* xi = Xv.values().data() + i * in_dim;
        for (std::size_t o = 0; o < out_dim; ++o) {
          const double go = g[i * out_dim + o];
          if (go != 0.0) axpy(go, xi, dW.data() + o * in_dim, in_dim);
        }
      }
    }
    if (t.requires_grad(bias)) {
      auto db = t.grad(bias);
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t o = 0; o < out_dim; ++o) db[o] += g[i * out_dim + o];
      }
    }
    if (t.requires_grad(x)) {
      auto dx = t.grad(x);
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t o = 0; o < out_dim; ++o) {
          const double go = g[i * out_dim + o];
          if (go != 0.0) axpy(go, Wv.values().data() + o * in_dim, dx.data() + i * in_dim, in_dim);
        }
      }
    }
  });
}

Var conv1d(Tape& tape, Var x, Var weight, Var bias, Padding padding) {
  const Tensor& X = tape.value(x);
  const Tensor& W = tape.value(weight);
  const Tensor& B = tape.value(bias);
  const SeqView v = seq_view(X, "conv1d");
  if (W.rank() != 3 || W.dim(1) != v.ch) {
    throw DimensionError("conv1d: input " + shape_string(X.shape()) + " does not match weight " +
                         shape_string(W.shape()));
  }
  const std::size_t filters = W.dim(0), width = W.dim(2);
  require_shape(B, {filters}, "conv1d bias");
  if (padding == Padding::valid && v.len < width) {
    throw DimensionError("conv1d: input " + shape_string(X.shape()) + " shorter than filter width " +
                         std::to_string(width));
  }
  const std::size_t pad = padding == Padding::same ? (width - 1) / 2 : 0;
  const std::size_t out_len = padding == Padding::same ? v.len : v.len - width + 1;
  const std::size_t ch = v.ch;

  // [filter][tap][channel] so the innermost loop is contiguous in the input row.
  std::vector<double> wt(filters * width * ch);
  for (std::size_t f = 0; f < filters; ++f)
    for (std::size_t c = 0; c < ch; ++c)
      for (std::size_t k = 0; k < width; ++k) wt[(f * width + k) * ch + c] = W.at(f, c, k);

  Tensor y(seq_shape(v, out_len, filters));
  const double* xs = X.values().data();
  for (std::size_t b = 0; b < v.batch; ++b) {
    for (std::size_t t = 0; t < out_len; ++t) {
      double* yrow = y.values().data() + (b * out_len + t) * filters;
      for (std::size_t f = 0; f < filters; ++f) {
        double acc = B[f];
        for (std::size_t k = 0; k < width; ++k) {
          const std::ptrdiff_t s = static_cast<std::ptrdiff_t>(t + k) - static_cast<std::ptrdiff_t>(pad);
          if (s < 0 || s >= static_cast<std::ptrdiff_t>(v.len)) continue;
          acc += dot(wt.data() + (f * width + k) * ch, xs + (b * v.len + s) * ch, ch);
        }
        yrow[f] = acc;
      }
    }
  }

  const Var out = next_var(tape);
  return tape.record(std::move(y), {x, weight, bias}, [=, wt = std::move(wt)](Tape& t) {
    auto dy = t.grad(out);
    const double* xv = t.value(x).values().data();
    const bool need_w = t.requires_grad(weight), need_x = t.requires_grad(x);
    std::vector<double> dwt(need_w ? wt.size() : 0, 0.0);
    double* dx = need_x ? t.grad(x).data() : nullptr;
    if (t.requires_grad(bias)) {
      auto db = t.grad(bias);
      for (std::size_t r = 0; r < v.batch * out_len; ++r)
        for (std::size_t f = 0; f < filters; ++f) db[f] += dy[r * filters + f];
    }
    for (std::size_t b = 0; b < v.batch; ++b) {
      for (std::size_t tt = 0; tt < out_len; ++tt) {
        const double* g = dy.data() + (b * out_len + tt) * filters;
        for (std::size_t k = 0; k < width; ++k) {
          const std::ptrdiff_t s = static_cast<std::ptrdiff_t>(tt + k) - static_cast<std::ptrdiff_t>(pad);
          if (s < 0 || s >= static_cast<std::ptrdiff_t>(v.len)) continue;
          const double* xrow = xv + (b * v.len + s) * ch;
          for (std::size_t f = 0; f < filters; ++f) {
            if (g[f] == 0.0) continue;
            if (need_w) axpy(g[f], xrow, dwt.data() + (f * width + k) * ch, ch);
            if (need_x) axpy(g[f], wt.data() + (f * width + k) * ch, dx + (b * v.len + s) * ch, ch);
          }
        }
      }
    }
    if (need_w) {
      auto dW = t.grad(weight);
      for (std::size_t f = 0; f < filters; ++f)
        for (std::size_t c = 0; c < ch; ++c)
          for (std::size_t k = 0; k < width; ++k)
            dW[(f * ch + c) * width + k] += dwt[(f * width + k) * ch + c];
    }
  });
}

Var maxpool1d(Tape& tape, Var x, std::size_t window, std::size_t stride) {
  const Tensor& X = tape.value(x);
  const SeqView v = seq_view(X, "maxpool1d");
  if (window == 0 || stride == 0) throw ParameterError("maxpool1d: window and stride must be positive");
  if (window > v.len) {
    throw DimensionError("maxpool1d: window " + std::to_string(window) + " exceeds input " +
                         shape_string(X.shape()));
  }
  const std::size_t out_len = (v.len - window) / stride + 1;
  Tensor y(seq_shape(v, out_len, v.ch));
  std::vector<std::size_t> argmax(y.size());
  for (std::size_t b = 0; b < v.batch; ++b) {
    for (std::size_t t = 0; t < out_len; ++t) {
      for (std::size_t c = 0; c < v.ch; ++c) {
        std::size_t best = (b * v.len + t * stride) * v.ch + c;
        for (std::size_t k = 1; k < window; ++k) {
          const std::size_t idx = (b * v.len + t * stride + k) * v.ch + c;
          if (X[idx] > X[best]) best = idx;
        }
        const std::size_t o = (b * out_len + t) * v.ch + c;
        y[o] = X[best];
        argmax[o] = best;
      }
    }
  }
  const Var out = next_var(tape);
  return tape.record(std::move(y), {x}, [x, out, argmax = std::move(argmax)](Tape& t) {
    auto dy = t.grad(out);
    auto dx = t.grad(x);
    for (std::size_t o = 0; o < argmax.size(); ++o) dx[argmax[o]] += dy[o];
  });
}

Var batchnorm(Tape& tape, Var x, Var gamma, Var beta, Tensor& running_mean, Tensor& running_var,
              Mode mode, double epsilon, double momentum) {
  const Tensor& X = tape.value(x);
  const std::size_t ch = X.shape().back();
  const std::size_t rows = X.size() / ch;
  require_shape(tape.value(gamma), {ch}, "batchnorm gamma");
  require_shape(tape.value(beta), {ch}, "batchnorm beta");
  require_shape(running_mean, {ch}, "batchnorm running mean");
  require_shape(running_var, {ch}, "batchnorm running variance");
  if (mode == Mode::train && rows == 0) throw EmptyBatchError("batchnorm: empty batch in train mode");

  std::vector<double> mean(ch, 0.0), var(ch, 0.0);
  if (mode == Mode::train) {
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t c = 0; c < ch; ++c) mean[c] += X[r * ch + c];
    for (auto& m : mean) m /= static_cast<double>(rows);
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t c = 0; c < ch; ++c) {
        const double d = X[r * ch + c] - mean[c];
        var[c] += d * d;
      }
    for (auto& s : var) s /= static_cast<double>(rows);
    for (std::size_t c = 0; c < ch; ++c) {
      running_mean[c] = momentum * running_mean[c] + (1.0 - momentum) * mean[c];
      running_var[c] = momentum * running_var[c] + (1.0 - momentum) * var[c];
    }
  } else {
    for (std::size_t c = 0; c < ch; ++c) {
      mean[c] = running_mean[c];
      var[c] = std::max(running_var[c], 0.0);
    }
  }
  std::vector<double> inv_std(ch);
  for (std::size_t c = 0; c < ch; ++c) inv_std[c] = 1.0 / std::sqrt(var[c] + epsilon);

  const Tensor& G = tape.value(gamma);
  const Tensor& Bt = tape.value(beta);
  std::vector<double> xhat(X.size());
  Tensor y(X.shape());
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < ch; ++c) {
      const std::size_t i = r * ch + c;
      xhat[i] = (X[i] - mean[c]) * inv_std[c];
      y[i] = G[c] * xhat[i] + Bt[c];
    }

  const bool train = mode == Mode::train;
  const Var out = next_var(tape);
  return tape.record(std::move(y), {x, gamma, beta},
                     [=, xhat = std::move(xhat), inv_std = std::move(inv_std)](Tape& t) {
    auto dy = t.grad(out);
    const Tensor& Gv = t.value(gamma);
    if (t.requires_grad(gamma)) {
      auto dg = t.grad(gamma);
      for (std::size_t i = 0; i < xhat.size(); ++i) dg[i % ch] += dy[i] * xhat[i];
    }
    if (t.requires_grad(beta)) {
      auto dbeta = t.grad(beta);
      for (std::size_t i = 0; i < xhat.size(); ++i) dbeta[i % ch] += dy[i];
    }
    if (!t.requires_grad(x)) return;
    auto dx = t.grad(x);
    if (!train) {
      for (std::size_t i = 0; i < xhat.size(); ++i) dx[i] += dy[i] * Gv[i % ch] * inv_std[i % ch];
      return;
    }
    std::vector<double> sum_g(ch, 0.0), sum_gx(ch, 0.0);
    for (std::size_t i = 0; i < xhat.size(); ++i) {
      const double g = dy[i] * Gv[i % ch];
      sum_g[i % ch] += g;
      sum_gx[i % ch] += g * xhat[i];
    }
    const double n = static_cast<double>(rows);
    for (std::size_t i = 0; i < xhat.size(); ++i) {
      const std::size_t c = i % ch;
      const double g = dy[i] * Gv[c];
      dx[i] += inv_std[c] / n * (n * g - sum_g[c] - xhat[i] * sum_gx[c]);
    }
  });
}

Var dropout(Tape& tape, Var x, double rate, Mode mode, Rng& rng) {
  if (!(rate >= 0.0 && rate < 1.0)) {
    throw ParameterError("dropout: rate must be in [0, 1), got " + std::to_string(rate));
  }
  if (mode == Mode::infer || rate == 0.0) return x;
  const Tensor& X = tape.value(x);
  const double keep_scale = 1.0 / (1.0 - rate);
  std::vector<double> mask(X.size());
  Tensor y(X.shape());
  for (std::size_t i = 0; i < X.size(); ++i) {
    mask[i] = uniform01(rng) < rate ? 0.0 : keep_scale;
    y[i] = X[i] * mask[i];
  }
  const Var out = next_var(tape);
  return tape.record(std::move(y), {x}, [x, out, mask = std::move(mask)](Tape& t) {
    auto dy = t.grad(out);
    auto dx = t.grad(x);
    for (std::size_t i = 0; i < mask.size(); ++i) dx[i] += dy[i] * mask[i];
  });
}

Var lstm(Tape& tape, Var x, std::span<const std::size_t> offsets_in, Var weight, Var bias) {
  const Tensor& X = tape.value(x);
  const Tensor& W = tape.value(weight);
  if (X.rank() != 2) throw DimensionError("lstm: packed input must be [steps x in], got " + shape_string(X.shape()));
  if (W.rank() != 3 || W.dim(0) != 4) {
    throw DimensionError("lstm: weight must be [4 x hidden x (in + hidden)], got " + shape_string(W.shape()));
  }
  const std::size_t hidden = W.dim(1), in_dim = X.dim(1), zdim = in_dim + hidden;
  if (W.dim(2) != zdim) {
    throw DimensionError("lstm: input " + shape_string(X.shape()) + " does not match weight " +
                         shape_string(W.shape()));
  }
  require_shape(tape.value(bias), {4, hidden}, "lstm bias");
  check_offsets(offsets_in, X.dim(0), "lstm");
  std::vector<std::size_t> offsets(offsets_in.begin(), offsets_in.end());
  for (std::size_t b = 0; b + 1 < offsets.size(); ++b) {
    if (offsets[b + 1] == offsets[b]) throw SequenceLengthError("lstm: sequence " + std::to_string(b) + " is empty");
  }

  const std::size_t steps = X.dim(0), g4 = 4 * hidden;
  const double* w = W.values().data();
  const double* bv = tape.value(bias).values().data();
  std::vector<double> gates(steps * g4), cells(steps * hidden), tanh_c(steps * hidden);
  Tensor h({steps, hidden});
  std::vector<double> z(zdim), a(g4);
  for (std::size_t s = 0; s + 1 < offsets.size(); ++s) {
    for (std::size_t r = offsets[s]; r < offsets[s + 1]; ++r) {
      const bool first = r == offsets[s];
      std::copy_n(X.values().data() + r * in_dim, in_dim, z.begin());
      if (first) {
        std::fill(z.begin() + in_dim, z.end(), 0.0);
      } else {
        std::copy_n(h.values().data() + (r - 1) * hidden, hidden, z.begin() + in_dim);
      }
      for (std::size_t q = 0; q < g4; ++q) a[q] = bv[q] + dot(w + q * zdim, z.data(), zdim);
      double* gr = gates.data() + r * g4;
      for (std::size_t j = 0; j < hidden; ++j) {
        const double ig = sigmoid(a[j]);
        const double fg = sigmoid(a[hidden + j]);
        const double cg = std::tanh(a[2 * hidden + j]);
        const double og = sigmoid(a[3 * hidden + j]);
        gr[j] = ig;
        gr[hidden + j] = fg;
        gr[2 * hidden + j] = cg;
        gr[3 * hidden + j] = og;
        const double c_prev = first ? 0.0 : cells[(r - 1) * hidden + j];
        const double c = fg * c_prev + ig * cg;
        cells[r * hidden + j] = c;
        tanh_c[r * hidden + j] = std::tanh(c);
        h[r * hidden + j] = og * tanh_c[r * hidden + j];
      }
    }
  }

  const Var out = next_var(tape);
  return tape.record(std::move(h), {x, weight, bias},
                     [=, offsets = std::move(offsets), gates = std::move(gates),
                      cells = std::move(cells), tanh_c = std::move(tanh_c)](Tape& t) {
    auto dy = t.grad(out);
    const double* xv = t.value(x).values().data();
    const double* hv = t.value(out).values().data();
    const double* wv = t.value(weight).values().data();
    const bool need_w = t.requires_grad(weight), need_b = t.requires_grad(bias), need_x = t.requires_grad(x);
    double* dW = need_w ? t.grad(weight).data() : nullptr;
    double* db = need_b ? t.grad(bias).data() : nullptr;
    double* dx = need_x ? t.grad(x).data() : nullptr;
    std::vector<double> dh_next(hidden), dc_next(hidden), dA(g4), z(zdim), dz(zdim);
    for (std::size_t s = 0; s + 1 < offsets.size(); ++s) {
      std::fill(dh_next.begin(), dh_next.end(), 0.0);
      std::fill(dc_next.begin(), dc_next.end(), 0.0);
      for (std::size_t r = offsets[s + 1]; r-- > offsets[s];) {
        const bool first = r == offsets[s];
        const double* gr = gates.data() + r * g4;
        for (std::size_t j = 0; j < hidden; ++j) {
          const double ig = gr[j], fg = gr[hidden + j], cg = gr[2 * hidden + j], og = gr[3 * hidden + j];
          const double tc = tanh_c[r * hidden + j];
          const double dh = dy[r * hidden + j] + dh_next[j];
          const double dc = dc_next[j] + dh * og * (1.0 - tc * tc);
          const double c_prev = first ? 0.0 : cells[(r - 1) * hidden + j];
          dA[j] = dc * cg * ig * (1.0 - ig);
          dA[hidden + j] = dc * c_prev * fg * (1.0 - fg);
          dA[2 * hidden + j] = dc * ig * (1.0 - cg * cg);
          dA[3 * hidden + j] = dh * tc * og * (1.0 - og);
          dc_next[j] = dc * fg;
        }
        std::copy_n(xv + r * in_dim, in_dim, z.begin());
        if (first) {
          std::fill(z.begin() + in_dim, z.end(), 0.0);
        } else {
          std::copy_n(hv + (r - 1) * hidden, hidden, z.begin() + in_dim);
        }
        std::fill(dz.begin(), dz.end(), 0.0);
        for (std::size_t q = 0; q < g4; ++q) {
          if (dA[q] == 0.0) continue;
          if (dW) axpy(dA[q], z.data(), dW + q * zdim, zdim);
          if (db) db[q] += dA[q];
          axpy(dA[q], wv + q * zdim, dz.data(), zdim);
        }
        if (dx) {
          for (std::size_t i = 0; i < in_dim; ++i) dx[r * in_dim + i] += dz[i];
        }
        std::copy_n(dz.begin() + in_dim, hidden, dh_next.begin());
      }
    }
  });
}

Var reverse_sequences(Tape& tape, Var x, std::span<const std::size_t> offsets) {
  const Tensor& X = tape.value(x);
  if (X.rank() != 2) throw DimensionError("reverse_sequences: expected packed [steps x features]");
  check_offsets(offsets, X.dim(0), "reverse_sequences");
  const std::size_t f = X.dim(1);
  std::vector<std::size_t> src(X.dim(0));
  for (std::size_t s = 0; s + 1 < offsets.size(); ++s) {
    for (std::size_t r = offsets[s]; r < offsets[s + 1]; ++r) src[r] = offsets[s] + offsets[s + 1] - 1 - r;
  }
  Tensor y(X.shape());
  for (std::size_t r = 0; r < src.size(); ++r) std::copy_n(X.values().data() + src[r] * f, f, y.values().data() + r * f);
  const Var out = next_var(tape);
  return tape.record(std::move(y), {x}, [x, out, f, src = std::move(src)](Tape& t) {
    auto dy = t.grad(out);
    auto dx = t.grad(x);
    for (std::size_t r = 0; r < src.size(); ++r) axpy(1.0, dy.data() + r * f, dx.data() + src[r] * f, f);
  });
}

Var last_steps(Tape& tape, Var x, std::span<const std::size_t> offsets) {
  const Tensor& X = tape.value(x);
  if (X.rank() != 2) throw DimensionError("last_steps: expected packed [steps x features]");
  check_offsets(offsets, X.dim(0), "last_steps");
  const std::size_t batch = offsets.size() - 1, f = X.dim(1);
  std::vector<std::size_t> rows(batch);
  Tensor y({batch, f});
  for (std::size_t b = 0; b < batch; ++b) {
    if (offsets[b + 1] == offsets[b]) throw SequenceLengthError("last_steps: sequence " + std::to_string(b) + " is empty");
    rows[b] = offsets[b + 1] - 1;
    std::copy_n(X.values().data() + rows[b] * f, f, y.values().data() + b * f);
  }
  const Var out = next_var(tape);
  return tape.record(std::move(y), {x}, [x, out, f, rows = std::move(rows)](Tape& t) {
    auto dy = t.grad(out);
    auto dx = t.grad(x);
    for (std::size_t b = 0; b < rows.size(); ++b) axpy(1.0, dy.data() + b * f, dx.data() + rows[b] * f, f);
  });
}

Var segment_max(Tape& tape, const Var* x, std::span<const std::size_t> offsets, Var fallback) {
  const Tensor& F = tape.value(fallback);
  if (F.rank() != 1) throw DimensionError("segment_max: fallback must be a vector");
  const std::size_t f = F.size();
  const std::size_t rows = x ? tape.value(*x).dim(0) : 0;
  if (x && (tape.value(*x).rank() != 2 || tape.value(*x).dim(1) != f)) {
    throw DimensionError("segment_max: rows " + shape_string(tape.value(*x).shape()) +
                         " do not match fallback " + shape_string(F.shape()));
  }
  if (offsets.size() < 2) throw SequenceLengthError("segment_max: empty batch");
  if (offsets.front() != 0 || offsets.back() != rows) throw DimensionError("segment_max: offsets do not cover input");
  const std::size_t batch = offsets.size() - 1;
  constexpr std::size_t kFallback = std::numeric_limits<std::size_t>::max();
  std::vector<std::size_t> src(batch * f, kFallback);
  Tensor y({batch, f});
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t j = 0; j < f; ++j) {
      if (offsets[b + 1] == offsets[b]) {
        y[b * f + j] = F[j];
        continue;
      }
      const Tensor& X = tape.value(*x);
      std::size_t best = offsets[b] * f + j;
      for (std::size_t r = offsets[b] + 1; r < offsets[b + 1]; ++r) {
        if (X[r * f + j] > X[best]) best = r * f + j;
      }
      src[b * f + j] = best;
      y[b * f + j] = X[best];
    }
  }
  const Var out = next_var(tape);
  const Var xv = x ? *x : fallback;
  const bool has_x = x != nullptr;
  return tape.record(std::move(y), {xv, fallback}, [=, src = std::move(src)](Tape& t) {
    auto dy = t.grad(out);
    const bool need_x = has_x && t.requires_grad(xv);
    const bool need_f = t.requires_grad(fallback);
    double* dx = need_x ? t.grad(xv).data() : nullptr;
    double* df = need_f ? t.grad(fallback).data() : nullptr;
    for (std::size_t i = 0; i < src.size(); ++i) {
      if (src[i] == kFallback) {
        if (df) df[i % f] += dy[i];
      } else if (dx) {
        dx[src[i]] += dy[i];
      }
    }
  });
}

Var bilstm_maxpool(Tape& tape, const Var* x, std::span<const std::size_t> offsets, Var fwd_weight,
                   Var fwd_bias, Var bwd_weight, Var bwd_bias, Var fallback) {
  const std::size_t hidden = tape.value(fwd_weight).rank() == 3 ? tape.value(fwd_weight).dim(1) : 0;
  if (tape.value(fallback).size() != 2 * hidden) {
    throw DimensionError("bilstm_maxpool: fallback " + shape_string(tape.value(fallback).shape()) +
                         " must have 2 x hidden = " + std::to_string(2 * hidden) + " entries");
  }
  if (offsets.size() < 2) throw SequenceLengthError("bilstm_maxpool: empty batch");
  if (x == nullptr || offsets.back() == 0) {
    std::vector<std::size_t> zeros(offsets.size(), 0);
    return segment_max(tape, nullptr, zeros, fallback);
  }
  std::vector<std::size_t> compact{0};
  for (std::size_t b = 1; b < offsets.size(); ++b) {
    if (offsets[b] != offsets[b - 1]) compact.push_back(offsets[b]);
  }
  const Var hf = lstm(tape, *x, compact, fwd_weight, fwd_bias);
  const Var xr = reverse_sequences(tape, *x, compact);
  const Var hb_rev = lstm(tape, xr, compact, bwd_weight, bwd_bias);
  const Var hb = reverse_sequences(tape, hb_rev, compact);
  const Var both[] = {hf, hb};
  const Var h = concat_columns(tape, both);
  return segment_max(tape, &h, offsets, fallback);
}

Var concat_columns(Tape& tape, std::span<const Var> parts) {
  if (parts.empty()) throw DimensionError("concat_columns: nothing to concatenate");
  const bool vec = tape.value(parts[0]).rank() == 1;
  const std::size_t rows = vec ? 1 : tape.value(parts[0]).dim(0);
  std::vector<std::size_t> widths;
  std::size_t total = 0;
  for (Var p : parts) {
    const Tensor& T = tape.value(p);
    const bool ok = vec ? T.rank() == 1 : (T.rank() == 2 && T.dim(0) == rows);
    if (!ok) {
      throw DimensionError("concat_columns: part " + shape_string(T.shape()) + " does not match " +
                           shape_string(tape.value(parts[0]).shape()));
    }
    widths.push_back(vec ? T.size() : T.dim(1));
    total += widths.back();
  }
  Tensor y(vec ? Shape{total} : Shape{rows, total});
  std::size_t col = 0;
  for (std::size_t k = 0; k < parts.size(); ++k) {
    const Tensor& T = tape.value(parts[k]);
    for (std::size_t r = 0; r < rows; ++r) {
      std::copy_n(T.values().data() + r * widths[k], widths[k], y.values().data() + r * total + col);
    }
    col += widths[k];
  }
  std::vector<Var> ps(parts.begin(), parts.end());
  const Var out = next_var(tape);
  return tape.record(std::move(y), parts, [=](Tape& t) {
    auto dy = t.grad(out);
    std::size_t c = 0;
    for (std::size_t k = 0; k < ps.size(); ++k) {
      if (t.requires_grad(ps[k])) {
        auto dp = t.grad(ps[k]);
        for (std::size_t r = 0; r < rows; ++r) axpy(1.0, dy.data() + r * total + c, dp.data() + r * widths[k], widths[k]);
      }
      c += widths[k];
    }
  });
}

Var reshape(Tape& tape, Var x, Shape shape) {
  Tensor y = tape.value(x).reshaped(std::move(shape));
  const Var out = next_var(tape);
  return tape.record(std::move(y), {x}, [x, out](Tape& t) {
    auto dy = t.grad(out);
    auto dx = t.grad(x);
    for (std::size_t i = 0; i < dy.size(); ++i) dx[i] += dy[i];
  });
}

Var softmax_rows(Tape& tape, Var x) {
  const Tensor& X = tape.value(x);
  if (X.rank() > 2) throw DimensionError("softmax_rows: expected rank 1 or 2, got " + shape_string(X.shape()));
  const std::size_t k = X.shape().back(), rows = X.size() / k;
  Tensor y(X.shape());
  for (std::size_t r = 0; r < rows; ++r) {
    const double* xr = X.values().data() + r * k;
    const double m = *std::max_element(xr, xr + k);
    double z = 0.0;
    for (std::size_t j = 0; j < k; ++j) z += (y[r * k + j] = std::exp(xr[j] - m));
    for (std::size_t j = 0; j < k; ++j) y[r * k + j] /= z;
  }
  const Var out = next_var(tape);
  return tape.record(std::move(y), {x}, [x, out, k, rows](Tape& t) {
    auto dy = t.grad(out);
    auto dx = t.grad(x);
    const Tensor& Y = t.value(out);
    for (std::size_t r = 0; r < rows; ++r) {
      double s = 0.0;
      for (std::size_t j = 0; j < k; ++j) s += dy[r * k + j] * Y[r * k + j];
      for (std::size_t j = 0; j < k; ++j) dx[r * k + j] += Y[r * k + j] * (dy[r * k + j] - s);
    }
  });
}

Var add(Tape& tape, Var a, Var b) {
  const Tensor& A = tape.value(a);
  const Tensor& B = tape.value(b);
  if (A.shape() != B.shape()) {
    throw DimensionError("add: shapes " + shape_string(A.shape()) + " and " + shape_string(B.shape()) + " differ");
  }
  Tensor y(A.shape());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = A[i] + B[i];
  const Var out = next_var(tape);
  return tape.record(std::move(y), {a, b}, [a, b, out](Tape& t) {
    auto dy = t.grad(out);
    for (Var p : {a, b}) {
      if (!t.requires_grad(p)) continue;
      auto dp = t.grad(p);
      for (std::size_t i = 0; i < dy.size(); ++i) dp[i] += dy[i];
    }
  });
}

Var scale(Tape& tape, Var x, double factor) {
  Tensor y = tape.value(x);
  y.drop_grad();
  for (auto& v : y.values()) v *= factor;
  const Var out = next_var(tape);
  return tape.record(std::move(y), {x}, [x, out, factor](Tape& t) {
    auto dy = t.grad(out);
    auto dx = t.grad(x);
    for (std::size_t i = 0; i < dy.size(); ++i) dx[i] += factor * dy[i];
  });
}

Var sum(Tape& tape, Var x) {
  double s = 0.0;
  for (double v : tape.value(x).values()) s += v;
  const Var out = next_var(tape);
  return tape.record(Tensor::scalar(s), {x}, [x, out](Tape& t) {
    const double g = t.grad(out)[0];
    for (auto& d : t.grad(x)) d += g;
  });
}

Var mul(Tape& tape, Var a, Var b) {
  const Tensor& A = tape.value(a);
  const Tensor& B = tape.value(b);
  if (A.shape() != B.shape()) {
    throw DimensionError("mul: shapes " + shape_string(A.shape()) + " and " + shape_string(B.shape()) + " differ");
  }
  Tensor y(A.shape());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = A[i] * B[i];
  const Var out = next_var(tape);
  return tape.record(std::move(y), {a, b}, [a, b, out](Tape& t) {
    auto dy = t.grad(out);
    const Tensor& Av = t.value(a);
    const Tensor& Bv = t.value(b);
    if (t.requires_grad(a)) {
      auto da = t.grad(a);
      for (std::size_t i = 0; i < dy.size(); ++i) da[i] += dy[i] * Bv[i];
    }
    if (t.requires_grad(b)) {
      auto db = t.grad(b);
      for (std::size_t i = 0; i < dy.size(); ++i) db[i] += dy[i] * Av[i];
    }
  });
}

Var weighted_cross_entropy(Tape& tape, Var probs, std::span<const std::size_t> targets,
                           std::span<const double> weights) {
  const Tensor& P = tape.value(probs);
  const std::size_t k = P.shape().back(), rows = P.size() / k;
  if (targets.size() != rows || weights.size() != rows) {
    throw DimensionError("weighted_cross_entropy: " + std::to_string(rows) + " rows but " +
                         std::to_string(targets.size()) + " targets and " + std::to_string(weights.size()) +
                         " weights");
  }
  double total = 0.0;
  for (std::size_t r = 0; r < rows; ++r) {
    if (weights[r] == 0.0) continue;
    if (targets[r] >= k) throw ParameterError("weighted_cross_entropy: class index out of range");
    total += weights[r] * -std::log(std::max(P[r * k + targets[r]], kProbabilityFloor));
  }
  std::vector<std::size_t> y(targets.begin(), targets.end());
  std::vector<double> w(weights.begin(), weights.end());
  const Var out = next_var(tape);
  return tape.record(Tensor::scalar(total), {probs}, [=](Tape& t) {
    const double g = t.grad(out)[0];
    const Tensor& Pv = t.value(probs);
    auto dp = t.grad(probs);
    for (std::size_t r = 0; r < rows; ++r) {
      if (w[r] == 0.0) continue;
      const double p = Pv[r * k + y[r]];
      if (p > kProbabilityFloor) dp[r * k + y[r]] -= g * w[r] / p;
    }
  });
}

Var weighted_squared_error(Tape& tape, Var pred, std::span<const double> targets,
                           std::span<const double> weights) {
  const Tensor& P = tape.value(pred);
  const std::size_t rows = P.size();
  if (P.shape().back() != 1 && P.rank() != 1) {
    throw DimensionError("weighted_squared_error: expected [n] or [n x 1], got " + shape_string(P.shape()));
  }
  if (targets.size() != rows || weights.size() != rows) {
    throw DimensionError("weighted_squared_error: " + std::to_string(rows) + " rows but " +
                         std::to_string(targets.size()) + " targets");
  }
  double total = 0.0;
  for (std::size_t r = 0; r < rows; ++r) {
    if (weights[r] == 0.0) continue;
    const double d = P[r] - targets[r];
    total += weights[r] * d * d;
  }
  std::vector<double> y(targets.begin(), targets.end());
  std::vector<double> w(weights.begin(), weights.end());
  const Var out = next_var(tape);
  return tape.record(Tensor::scalar(total), {pred}, [=](Tape& t) {
    const double g = t.grad(out)[0];
    const Tensor& Pv = t.value(pred);
    auto dp = t.grad(pred);
    for (std::size_t r = 0; r < rows; ++r) {
      if (w[r] == 0.0) continue;
      dp[r] += g * 2.0 * w[r] * (Pv[r] - y[r]);
    }
  });
}

}  // namespace msnf::ops
