#pragma once

// Two stacked LSTM layers and a dense head over [subjects x steps x features]
// batches, exact backpropagation through time, component-wise gradient
// clipping and Adam. All trainable weights live in one flat vector so the
// optimizer, the checkpoint writer and gradient checks share one layout.

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "arrival/rng.hpp"
#include "arrival/tensor.hpp"

namespace arrival::nn {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

inline constexpr int kLstmLayers = 2;
inline constexpr double kForgetBiasInit = 1.0;

struct NetworkShape {
  std::size_t inputs = 0;
  std::size_t hidden = 0;
  std::size_t outputs = 0;

  friend bool operator==(const NetworkShape&, const NetworkShape&) = default;
};

/// A named column-major slice of the flat weight vector.
struct ParameterBlock {
  std::string name;
  Index rows = 0;
  Index cols = 0;
  Index offset = 0;

  Index size() const { return rows * cols; }
};

/// Gate rows in every LSTM kernel are ordered input, forget, candidate, output.
inline std::vector<ParameterBlock> parameter_layout(const NetworkShape& s) {
  if (s.inputs == 0 || s.hidden == 0 || s.outputs == 0) {
    throw std::invalid_argument("network dimensions must be positive");
  }
  const Index w = static_cast<Index>(s.hidden);
  std::vector<ParameterBlock> blocks;
  Index offset = 0;
  auto add = [&](std::string name, Index rows, Index cols) {
    blocks.push_back({std::move(name), rows, cols, offset});
    offset += rows * cols;
  };
  for (int l = 0; l < kLstmLayers; ++l) {
    const Index in = l == 0 ? static_cast<Index>(s.inputs) : w;
    const std::string p = "lstm" + std::to_string(l);
    add(p + ".input_kernel", 4 * w, in);
    add(p + ".recurrent_kernel", 4 * w, w);
    add(p + ".bias", 4 * w, 1);
  }
  add("dense.kernel", static_cast<Index>(s.outputs), w);
  add("dense.bias", static_cast<Index>(s.outputs), 1);
  return blocks;
}

inline Index parameter_count(const NetworkShape& s) {
  const auto blocks = parameter_layout(s);
  return blocks.back().offset + blocks.back().size();
}

/// Trainable weights plus Adam moment accumulators and step counter.
struct NetworkState {
  NetworkShape shape;
  VectorXd weights;
  VectorXd adam_m;
  VectorXd adam_v;
  std::int64_t step = 0;
};

/// Kernels uniform in +-1/sqrt(fan_in); biases zero except the forget gate.
inline NetworkState init_network(const NetworkShape& shape, std::uint64_t seed) {
  NetworkState st;
  st.shape = shape;
  const Index n = parameter_count(shape);
  st.weights = VectorXd::Zero(n);
  st.adam_m = VectorXd::Zero(n);
  st.adam_v = VectorXd::Zero(n);
  Rng rng(seed);
  const Index w = static_cast<Index>(shape.hidden);
  for (const auto& b : parameter_layout(shape)) {
    if (b.name.ends_with("kernel")) {
      const double bound = 1.0 / std::sqrt(double(b.cols));
      for (Index i = 0; i < b.size(); ++i) st.weights[b.offset + i] = rng.uniform(-bound, bound);
    } else if (b.name.starts_with("lstm")) {
      st.weights.segment(b.offset + w, w).setConstant(kForgetBiasInit);
    }
  }
  return st;
}

struct LstmLayerWeights {
  MatrixXd input_kernel;      // 4W x inputs
  MatrixXd recurrent_kernel;  // 4W x W
  VectorXd bias;              // 4W

  Index hidden() const { return recurrent_kernel.cols(); }
};

struct LstmStepResult {
  VectorXd h;
  VectorXd c;
};

namespace detail {

inline Eigen::Map<const MatrixXd> view(const VectorXd& flat, const ParameterBlock& b) {
  return {flat.data() + b.offset, b.rows, b.cols};
}
inline Eigen::Map<MatrixXd> view(VectorXd& flat, const ParameterBlock& b) {
  return {flat.data() + b.offset, b.rows, b.cols};
}
inline Eigen::Map<const VectorXd> column(const VectorXd& flat, const ParameterBlock& b) {
  return {flat.data() + b.offset, b.rows};
}
inline Eigen::Map<VectorXd> column(VectorXd& flat, const ParameterBlock& b) {
  return {flat.data() + b.offset, b.rows};
}

template <class M>
void sigmoid_inplace(M&& m) {
  m = (1.0 + (-m.array()).exp()).inverse().matrix();
}

// One LSTM step for a batch; columns are independent sequences. `gates`
// receives the activated (i, f, g, o) stack.
template <class Wx, class Wh, class B>
void lstm_cell(const Wx& wx, const Wh& wh, const B& bias, const MatrixXd& x,
               const MatrixXd& h_prev, const MatrixXd& c_prev, MatrixXd& gates, MatrixXd& c,
               MatrixXd& c_tanh, MatrixXd& h) {
  const Index w = wh.cols();
  gates.noalias() = wx * x;
  gates.noalias() += wh * h_prev;
  gates.colwise() += bias;
  sigmoid_inplace(gates.topRows(2 * w));
  gates.middleRows(2 * w, w) = gates.middleRows(2 * w, w).array().tanh().matrix();
  sigmoid_inplace(gates.bottomRows(w));
  c = gates.middleRows(w, w).cwiseProduct(c_prev) +
      gates.topRows(w).cwiseProduct(gates.middleRows(2 * w, w));
  c_tanh = c.array().tanh().matrix();
  h = gates.bottomRows(w).cwiseProduct(c_tanh);
}

}  // namespace detail

inline LstmLayerWeights lstm_layer_weights(const NetworkState& st, int layer) {
  const auto blocks = parameter_layout(st.shape);
  const auto base = static_cast<std::size_t>(3 * layer);
  return {detail::view(st.weights, blocks.at(base)), detail::view(st.weights, blocks[base + 1]),
          detail::column(st.weights, blocks[base + 2])};
}

/// Standard LSTM cell: sigmoid gates, tanh candidate,
/// c = f*c_prev + i*g, h = o*tanh(c).
inline LstmStepResult lstm_step(const VectorXd& x, const VectorXd& h_prev, const VectorXd& c_prev,
                                const LstmLayerWeights& w) {
  const Index hidden = w.hidden();
  if (w.input_kernel.rows() != 4 * hidden || w.recurrent_kernel.rows() != 4 * hidden ||
      w.bias.size() != 4 * hidden || w.input_kernel.cols() != x.size() ||
      h_prev.size() != hidden || c_prev.size() != hidden) {
    throw std::invalid_argument("lstm_step: inconsistent shapes");
  }
  MatrixXd gates(4 * hidden, 1), c(hidden, 1), ct(hidden, 1), h(hidden, 1);
  detail::lstm_cell(w.input_kernel, w.recurrent_kernel, w.bias, MatrixXd(x), MatrixXd(h_prev),
                    MatrixXd(c_prev), gates, c, ct, h);
  return {h.col(0), c.col(0)};
}

/// Per-layer activations kept for the backward pass, one matrix per step.
struct LayerTrace {
  std::vector<MatrixXd> gates;
  std::vector<MatrixXd> cell;
  std::vector<MatrixXd> cell_tanh;
  std::vector<MatrixXd> hidden;
};

struct ForwardCache {
  std::size_t batch = 0;
  std::size_t steps = 0;
  std::vector<MatrixXd> inputs;  // features x batch, per step
  std::array<LayerTrace, kLstmLayers> layers;

  bool empty() const { return inputs.empty(); }
};

/// Raw network outputs [subjects x steps x outputs]. Output at step t only
/// depends on inputs at steps <= t.
inline Tensor forward(const Tensor& batch, const NetworkState& st, ForwardCache* cache = nullptr) {
  if (batch.rank() != 3 || batch.dim(2) != st.shape.inputs) {
    throw std::invalid_argument("forward: expected [subjects x steps x " +
                                std::to_string(st.shape.inputs) + "], got " +
                                batch.shape_string());
  }
  if (!batch.all_finite()) throw std::domain_error("forward: non-finite input");
  const std::size_t nb = batch.dim(0), nt = batch.dim(1), nf = batch.dim(2);
  const Index w = static_cast<Index>(st.shape.hidden);
  const Index nbi = static_cast<Index>(nb);

  ForwardCache local;
  ForwardCache& cc = cache ? *cache : local;
  cc = ForwardCache{};
  cc.batch = nb;
  cc.steps = nt;
  cc.inputs.assign(nt, MatrixXd(static_cast<Index>(nf), nbi));
  for (std::size_t b = 0; b < nb; ++b) {
    for (std::size_t t = 0; t < nt; ++t) {
      for (std::size_t f = 0; f < nf; ++f) {
        cc.inputs[t](static_cast<Index>(f), static_cast<Index>(b)) = batch(b, t, f);
      }
    }
  }

  const auto blocks = parameter_layout(st.shape);
  const MatrixXd zeros = MatrixXd::Zero(w, nbi);
  for (int l = 0; l < kLstmLayers; ++l) {
    const auto base = static_cast<std::size_t>(3 * l);
    const auto wx = detail::view(st.weights, blocks[base]);
    const auto wh = detail::view(st.weights, blocks[base + 1]);
    const auto bias = detail::column(st.weights, blocks[base + 2]);
    LayerTrace& tr = cc.layers[l];
    const std::vector<MatrixXd>& in = l == 0 ? cc.inputs : cc.layers[l - 1].hidden;
    tr.gates.resize(nt);
    tr.cell.resize(nt);
    tr.cell_tanh.resize(nt);
    tr.hidden.resize(nt);
    for (std::size_t t = 0; t < nt; ++t) {
      tr.gates[t].resize(4 * w, nbi);
      tr.cell[t].resize(w, nbi);
      tr.cell_tanh[t].resize(w, nbi);
      tr.hidden[t].resize(w, nbi);
      detail::lstm_cell(wx, wh, bias, in[t], t ? tr.hidden[t - 1] : zeros,
                        t ? tr.cell[t - 1] : zeros, tr.gates[t], tr.cell[t], tr.cell_tanh[t],
                        tr.hidden[t]);
    }
  }

  const auto dk = detail::view(st.weights, blocks[3 * kLstmLayers]);
  const auto db = detail::column(st.weights, blocks[3 * kLstmLayers + 1]);
  const std::size_t no = st.shape.outputs;
  Tensor out({nb, nt, no});
  MatrixXd y(static_cast<Index>(no), nbi);
  for (std::size_t t = 0; t < nt; ++t) {
    y.noalias() = dk * cc.layers[kLstmLayers - 1].hidden[t];
    y.colwise() += db;
    for (std::size_t b = 0; b < nb; ++b) {
      for (std::size_t o = 0; o < no; ++o) {
        out(b, t, o) = y(static_cast<Index>(o), static_cast<Index>(b));
      }
    }
  }
  return out;
}

namespace detail {

// BPTT through one layer. `d_hidden` holds upstream gradients on the layer's
// hidden outputs; `d_inputs`, when given, receives gradients on its inputs.
inline void lstm_layer_backward(const LayerTrace& tr, const std::vector<MatrixXd>& inputs,
                                const std::vector<MatrixXd>& d_hidden,
                                Eigen::Map<const MatrixXd> wx, Eigen::Map<const MatrixXd> wh,
                                Eigen::Map<MatrixXd> gwx, Eigen::Map<MatrixXd> gwh,
                                Eigen::Map<VectorXd> gb, std::vector<MatrixXd>* d_inputs) {
  const std::size_t nt = tr.hidden.size();
  if (nt == 0) return;
  const Index w = wh.cols();
  const Index nb = tr.hidden[0].cols();
  MatrixXd dh_next = MatrixXd::Zero(w, nb);
  MatrixXd dc_next = MatrixXd::Zero(w, nb);
  const MatrixXd zeros = MatrixXd::Zero(w, nb);
  MatrixXd dz(4 * w, nb);
  if (d_inputs) d_inputs->assign(nt, MatrixXd());

  for (std::size_t tt = nt; tt-- > 0;) {
    const MatrixXd& g = tr.gates[tt];
    const auto i = g.topRows(w).array();
    const auto f = g.middleRows(w, w).array();
    const auto cand = g.middleRows(2 * w, w).array();
    const auto o = g.bottomRows(w).array();
    const auto tc = tr.cell_tanh[tt].array();
    const MatrixXd& c_prev = tt ? tr.cell[tt - 1] : zeros;
    const MatrixXd& h_prev = tt ? tr.hidden[tt - 1] : zeros;

    const MatrixXd dh = d_hidden[tt] + dh_next;
    const auto dha = dh.array();
    const MatrixXd dc = (dha * o * (1.0 - tc * tc)).matrix() + dc_next;
    const auto dca = dc.array();
    dz.topRows(w) = (dca * cand * i * (1.0 - i)).matrix();
    dz.middleRows(w, w) = (dca * c_prev.array() * f * (1.0 - f)).matrix();
    dz.middleRows(2 * w, w) = (dca * i * (1.0 - cand * cand)).matrix();
    dz.bottomRows(w) = (dha * tc * o * (1.0 - o)).matrix();
    dc_next = (dca * f).matrix();

    gwx.noalias() += dz * inputs[tt].transpose();
    gwh.noalias() += dz * h_prev.transpose();
    gb += dz.rowwise().sum();
    if (d_inputs) (*d_inputs)[tt].noalias() = wx.transpose() * dz;
    dh_next.noalias() = wh.transpose() * dz;
  }
}

}  // namespace detail

/// Gradient of sum(output_grad * outputs) with respect to every weight, in
/// the flat layout of NetworkState::weights.
inline VectorXd backward(const Tensor& output_grad, const ForwardCache& cache,
                         const NetworkState& st) {
  if (cache.empty()) throw std::logic_error("backward: forward cache missing");
  if (output_grad.rank() != 3 || output_grad.dim(0) != cache.batch ||
      output_grad.dim(1) != cache.steps || output_grad.dim(2) != st.shape.outputs) {
    throw std::invalid_argument("backward: gradient shape " + output_grad.shape_string() +
                                " does not match cached forward pass");
  }
  const auto blocks = parameter_layout(st.shape);
  VectorXd grad = VectorXd::Zero(st.weights.size());
  const std::size_t nb = cache.batch, nt = cache.steps, no = st.shape.outputs;
  const Index nbi = static_cast<Index>(nb);

  const auto& kblock = blocks[3 * kLstmLayers];
  const auto& bblock = blocks[3 * kLstmLayers + 1];
  const auto dk = detail::view(st.weights, kblock);
  auto gk = detail::view(grad, kblock);
  auto gbias = detail::column(grad, bblock);

  std::vector<MatrixXd> d_hidden(nt);
  MatrixXd dy(static_cast<Index>(no), nbi);
  for (std::size_t t = 0; t < nt; ++t) {
    for (std::size_t b = 0; b < nb; ++b) {
      for (std::size_t o = 0; o < no; ++o) {
        dy(static_cast<Index>(o), static_cast<Index>(b)) = output_grad(b, t, o);
      }
    }
    gk.noalias() += dy * cache.layers[kLstmLayers - 1].hidden[t].transpose();
    gbias += dy.rowwise().sum();
    d_hidden[t].noalias() = dk.transpose() * dy;
  }

  for (int l = kLstmLayers - 1; l >= 0; --l) {
    const auto base = static_cast<std::size_t>(3 * l);
    const std::vector<MatrixXd>& in = l == 0 ? cache.inputs : cache.layers[l - 1].hidden;
    std::vector<MatrixXd> d_in;
    detail::lstm_layer_backward(cache.layers[l], in, d_hidden,
                                detail::view(st.weights, blocks[base]),
                                detail::view(st.weights, blocks[base + 1]),
                                detail::view(grad, blocks[base]),
                                detail::view(grad, blocks[base + 1]),
                                detail::column(grad, blocks[base + 2]), l > 0 ? &d_in : nullptr);
    if (l > 0) d_hidden = std::move(d_in);
  }
  return grad;
}

/// Clamps every component to [-threshold, threshold].
inline VectorXd clip_gradients(VectorXd grads, double threshold) {
  if (!(threshold > 0.0)) throw std::invalid_argument("clip threshold must be positive");
  return grads.cwiseMax(-threshold).cwiseMin(threshold);
}

struct AdamOptions {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// One bias-corrected Adam step; increments the step counter.
inline void adam_update(NetworkState& st, const VectorXd& grads, const AdamOptions& opt = {}) {
  if (grads.size() != st.weights.size() || st.adam_m.size() != st.weights.size() ||
      st.adam_v.size() != st.weights.size()) {
    throw std::invalid_argument("adam_update: size mismatch");
  }
  ++st.step;
  st.adam_m = opt.beta1 * st.adam_m + (1.0 - opt.beta1) * grads;
  st.adam_v = opt.beta2 * st.adam_v + (1.0 - opt.beta2) * grads.cwiseProduct(grads);
  const double c1 = 1.0 - std::pow(opt.beta1, double(st.step));
  const double c2 = 1.0 - std::pow(opt.beta2, double(st.step));
  st.weights.array() -=
      opt.learning_rate * (st.adam_m.array() / c1) / ((st.adam_v.array() / c2).sqrt() + opt.epsilon);
}

}  // namespace arrival::nn
