#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "skillsim/matrix.hpp"
#include "skillsim/rng.hpp"

namespace skillsim {

enum class EncoderArch { kBagOfSubwords, kBiLstm };

std::string arch_name(EncoderArch arch);
EncoderArch arch_from_name(const std::string& name);

struct EncoderConfig {
  EncoderArch arch = EncoderArch::kBiLstm;
  std::uint32_t token_dim = 100;
  std::uint32_t hidden_dim = 256;   // per direction; unused by the bag arch
  std::uint32_t output_dim = 100;   // must equal the aux dataset dimension
  std::uint32_t epochs = 10;
  std::uint32_t batch_size = 64;
  double initial_lr = 0.01;
  // The cosine loss is scale-invariant in the projection output and its
  // gradient carries a 1/|z| factor, so unchecked SGD either explodes off
  // a small-norm init or inflates norms until steps vanish. Momentum, a
  // little decoupled weight decay, and gradient clipping keep it stable.
  double momentum = 0.9;
  double weight_decay = 1e-4;
  double grad_clip = 5.0;  // global L2 bound on the batch gradient; 0 = off
  std::uint64_t seed = 0;
  std::uint32_t tokenizer_vocab = 2000;

  void validate() const;
};

/// Title encoder parameters in one flat vector; slices are addressed via the
/// offset accessors. The flat layout keeps SGD updates, serialization, and
/// finite-difference sweeps trivial, and the scalar type is a template
/// parameter so gradient checks run the identical code in double precision.
template <typename T>
struct EncoderNet {
  EncoderConfig config;
  std::uint32_t vocab = 0;
  std::vector<T> params;

  std::uint32_t pooled_dim() const {
    return config.arch == EncoderArch::kBiLstm ? 2 * config.hidden_dim
                                               : config.token_dim;
  }

  // Flat layout: embed, [wx_f, wh_f, b_f, wx_b, wh_b, b_b,] proj_w, proj_b.
  std::size_t off_embed() const { return 0; }
  std::size_t embed_size() const {
    return static_cast<std::size_t>(vocab) * config.token_dim;
  }
  std::size_t gates() const { return 4 * static_cast<std::size_t>(config.hidden_dim); }
  std::size_t wx_size() const { return gates() * config.token_dim; }
  std::size_t wh_size() const { return gates() * config.hidden_dim; }
  std::size_t off_wx_f() const { return off_embed() + embed_size(); }
  std::size_t off_wh_f() const { return off_wx_f() + wx_size(); }
  std::size_t off_b_f() const { return off_wh_f() + wh_size(); }
  std::size_t off_wx_b() const { return off_b_f() + gates(); }
  std::size_t off_wh_b() const { return off_wx_b() + wx_size(); }
  std::size_t off_b_b() const { return off_wh_b() + wh_size(); }
  std::size_t off_proj_w() const {
    if (config.arch == EncoderArch::kBiLstm) return off_b_b() + gates();
    return off_embed() + embed_size();
  }
  std::size_t proj_w_size() const {
    return static_cast<std::size_t>(config.output_dim) * pooled_dim();
  }
  std::size_t off_proj_b() const { return off_proj_w() + proj_w_size(); }
  std::size_t param_count() const { return off_proj_b() + config.output_dim; }

  template <typename U>
  EncoderNet<U> cast() const {
    EncoderNet<U> out;
    out.config = config;
    out.vocab = vocab;
    out.params.resize(params.size());
    for (std::size_t i = 0; i < params.size(); ++i) {
      out.params[i] = static_cast<U>(params[i]);
    }
    return out;
  }
};

template <typename T>
EncoderNet<T> init_encoder_net(const EncoderConfig& config, std::uint32_t vocab,
                               std::uint64_t seed) {
  EncoderNet<T> net;
  net.config = config;
  net.vocab = vocab;
  net.params.assign(net.param_count(), T(0));
  Rng rng(seed);
  auto uniform = [&](std::size_t off, std::size_t n, double scale) {
    for (std::size_t i = 0; i < n; ++i) {
      net.params[off + i] = static_cast<T>((rng.next_double() * 2.0 - 1.0) * scale);
    }
  };
  // Embeddings are mean-pooled and projected, so they are scaled like any
  // other layer input (pooled activations of order one), not like the
  // tiny-dot-product init used by the embedding-only trainers.
  uniform(net.off_embed(), net.embed_size(),
          1.0 / std::sqrt(static_cast<double>(config.token_dim)));
  if (config.arch == EncoderArch::kBiLstm) {
    double k = 1.0 / std::sqrt(static_cast<double>(config.hidden_dim));
    uniform(net.off_wx_f(), net.wx_size(), k);
    uniform(net.off_wh_f(), net.wh_size(), k);
    uniform(net.off_wx_b(), net.wx_size(), k);
    uniform(net.off_wh_b(), net.wh_size(), k);
    // Forget-gate biases start at 1 so early gradients pass through time.
    for (std::uint32_t h = 0; h < config.hidden_dim; ++h) {
      net.params[net.off_b_f() + config.hidden_dim + h] = T(1);
      net.params[net.off_b_b() + config.hidden_dim + h] = T(1);
    }
  }
  uniform(net.off_proj_w(), net.proj_w_size(),
          1.0 / std::sqrt(static_cast<double>(net.pooled_dim())));
  return net;
}

template <typename T>
struct LstmTrace {
  // All matrices are steps x hidden, indexed by processing step (the
  // backward direction stores positions reversed).
  Matrix<T> gate_i, gate_f, gate_g, gate_o, cell, tanh_cell, hidden;
};

template <typename T>
struct EncoderTrace {
  std::vector<std::uint32_t> tokens;
  LstmTrace<T> fwd, bwd;
  std::vector<T> pooled;
  std::vector<T> projected;   // z
  std::vector<T> output;      // y = z / |z|
  T norm = T(0);
};

namespace detail {

template <typename T>
T sigmoid(T x) {
  if (x >= T(0)) return T(1) / (T(1) + std::exp(-x));
  T e = std::exp(x);
  return e / (T(1) + e);
}

template <typename T>
void lstm_run(const EncoderNet<T>& net, std::span<const std::uint32_t> tokens,
              bool reverse, LstmTrace<T>& trace) {
  const std::uint32_t H = net.config.hidden_dim;
  const std::uint32_t E = net.config.token_dim;
  const std::size_t steps = tokens.size();
  const T* wx = net.params.data() + (reverse ? net.off_wx_b() : net.off_wx_f());
  const T* wh = net.params.data() + (reverse ? net.off_wh_b() : net.off_wh_f());
  const T* b = net.params.data() + (reverse ? net.off_b_b() : net.off_b_f());

  trace.gate_i = Matrix<T>(steps, H);
  trace.gate_f = Matrix<T>(steps, H);
  trace.gate_g = Matrix<T>(steps, H);
  trace.gate_o = Matrix<T>(steps, H);
  trace.cell = Matrix<T>(steps, H);
  trace.tanh_cell = Matrix<T>(steps, H);
  trace.hidden = Matrix<T>(steps, H);

  std::vector<T> h_prev(H, T(0)), c_prev(H, T(0)), pre(4 * H);
  for (std::size_t s = 0; s < steps; ++s) {
    std::size_t pos = reverse ? steps - 1 - s : s;
    const T* x = net.params.data() + net.off_embed() +
                 static_cast<std::size_t>(tokens[pos]) * E;
    for (std::size_t gh = 0; gh < 4 * static_cast<std::size_t>(H); ++gh) {
      T acc = b[gh];
      const T* wx_row = wx + gh * E;
      for (std::uint32_t e = 0; e < E; ++e) acc += wx_row[e] * x[e];
      const T* wh_row = wh + gh * H;
      for (std::uint32_t h = 0; h < H; ++h) acc += wh_row[h] * h_prev[h];
      pre[gh] = acc;
    }
    for (std::uint32_t h = 0; h < H; ++h) {
      T gi = sigmoid(pre[h]);
      T gf = sigmoid(pre[H + h]);
      T gg = std::tanh(pre[2 * H + h]);
      T go = sigmoid(pre[3 * H + h]);
      T c = gf * c_prev[h] + gi * gg;
      T tc = std::tanh(c);
      trace.gate_i.at(s, h) = gi;
      trace.gate_f.at(s, h) = gf;
      trace.gate_g.at(s, h) = gg;
      trace.gate_o.at(s, h) = go;
      trace.cell.at(s, h) = c;
      trace.tanh_cell.at(s, h) = tc;
      trace.hidden.at(s, h) = go * tc;
    }
    for (std::uint32_t h = 0; h < H; ++h) {
      h_prev[h] = trace.hidden.at(s, h);
      c_prev[h] = trace.cell.at(s, h);
    }
  }
}

// Backpropagates dh_ext (per position) through one direction, accumulating
// weight gradients and per-position embedding gradients.
template <typename T>
void lstm_backward(const EncoderNet<T>& net,
                   std::span<const std::uint32_t> tokens, bool reverse,
                   const LstmTrace<T>& trace, const Matrix<T>& dh_ext,
                   std::span<T> grad) {
  const std::uint32_t H = net.config.hidden_dim;
  const std::uint32_t E = net.config.token_dim;
  const std::size_t steps = tokens.size();
  const T* wx = net.params.data() + (reverse ? net.off_wx_b() : net.off_wx_f());
  const T* wh = net.params.data() + (reverse ? net.off_wh_b() : net.off_wh_f());
  T* dwx = grad.data() + (reverse ? net.off_wx_b() : net.off_wx_f());
  T* dwh = grad.data() + (reverse ? net.off_wh_b() : net.off_wh_f());
  T* db = grad.data() + (reverse ? net.off_b_b() : net.off_b_f());

  std::vector<T> dh_carry(H, T(0)), dc_carry(H, T(0)), da(4 * H);
  for (std::size_t s = steps; s-- > 0;) {
    std::size_t pos = reverse ? steps - 1 - s : s;
    for (std::uint32_t h = 0; h < H; ++h) {
      T dh = dh_ext.at(pos, h) + dh_carry[h];
      T go = trace.gate_o.at(s, h);
      T tc = trace.tanh_cell.at(s, h);
      T dout = dh * tc;
      T dc = dh * go * (T(1) - tc * tc) + dc_carry[h];
      T c_prev = s == 0 ? T(0) : trace.cell.at(s - 1, h);
      T gi = trace.gate_i.at(s, h);
      T gf = trace.gate_f.at(s, h);
      T gg = trace.gate_g.at(s, h);
      T df = dc * c_prev;
      T di = dc * gg;
      T dg = dc * gi;
      da[h] = di * gi * (T(1) - gi);
      da[H + h] = df * gf * (T(1) - gf);
      da[2 * H + h] = dg * (T(1) - gg * gg);
      da[3 * H + h] = dout * go * (T(1) - go);
      dc_carry[h] = dc * gf;
    }
    const T* x = net.params.data() + net.off_embed() +
                 static_cast<std::size_t>(tokens[pos]) * E;
    T* dx = grad.data() + net.off_embed() +
            static_cast<std::size_t>(tokens[pos]) * E;
    for (std::size_t gh = 0; gh < 4 * static_cast<std::size_t>(H); ++gh) {
      T d = da[gh];
      T* dwx_row = dwx + gh * E;
      for (std::uint32_t e = 0; e < E; ++e) dwx_row[e] += d * x[e];
      db[gh] += d;
    }
    for (std::uint32_t e = 0; e < E; ++e) {
      T acc = T(0);
      for (std::size_t gh = 0; gh < 4 * static_cast<std::size_t>(H); ++gh) {
        acc += wx[gh * E + e] * da[gh];
      }
      dx[e] += acc;
    }
    if (s > 0) {
      for (std::size_t gh = 0; gh < 4 * static_cast<std::size_t>(H); ++gh) {
        T d = da[gh];
        T* dwh_row = dwh + gh * H;
        for (std::uint32_t h = 0; h < H; ++h) {
          dwh_row[h] += d * trace.hidden.at(s - 1, h);
        }
      }
      for (std::uint32_t h = 0; h < H; ++h) {
        T acc = T(0);
        for (std::size_t gh = 0; gh < 4 * static_cast<std::size_t>(H); ++gh) {
          acc += wh[gh * H + h] * da[gh];
        }
        dh_carry[h] = acc;
      }
    }
  }
}

}  // namespace detail

/// Forward pass: embed, sequence-encode, mean-pool, project, L2-normalize.
template <typename T>
void encoder_forward(const EncoderNet<T>& net,
                     std::span<const std::uint32_t> tokens,
                     EncoderTrace<T>& trace) {
  if (tokens.empty()) {
    throw std::runtime_error("encoder: empty token sequence");
  }
  for (std::uint32_t id : tokens) {
    if (id >= net.vocab) {
      throw std::runtime_error("encoder: token id out of range");
    }
  }
  trace.tokens.assign(tokens.begin(), tokens.end());
  const std::uint32_t E = net.config.token_dim;
  const std::uint32_t D = net.config.output_dim;
  const std::size_t steps = tokens.size();
  const std::uint32_t P = net.pooled_dim();
  trace.pooled.assign(P, T(0));

  if (net.config.arch == EncoderArch::kBiLstm) {
    detail::lstm_run(net, tokens, false, trace.fwd);
    detail::lstm_run(net, tokens, true, trace.bwd);
    const std::uint32_t H = net.config.hidden_dim;
    for (std::size_t s = 0; s < steps; ++s) {
      std::size_t rs = steps - 1 - s;  // backward trace row for position s
      for (std::uint32_t h = 0; h < H; ++h) {
        trace.pooled[h] += trace.fwd.hidden.at(s, h);
        trace.pooled[H + h] += trace.bwd.hidden.at(rs, h);
      }
    }
  } else {
    for (std::size_t s = 0; s < steps; ++s) {
      const T* x = net.params.data() + net.off_embed() +
                   static_cast<std::size_t>(tokens[s]) * E;
      for (std::uint32_t e = 0; e < E; ++e) trace.pooled[e] += x[e];
    }
  }
  T inv_steps = T(1) / static_cast<T>(steps);
  for (std::uint32_t p = 0; p < P; ++p) trace.pooled[p] *= inv_steps;

  trace.projected.assign(D, T(0));
  const T* pw = net.params.data() + net.off_proj_w();
  const T* pb = net.params.data() + net.off_proj_b();
  for (std::uint32_t d = 0; d < D; ++d) {
    T acc = pb[d];
    const T* row = pw + static_cast<std::size_t>(d) * P;
    for (std::uint32_t p = 0; p < P; ++p) acc += row[p] * trace.pooled[p];
    trace.projected[d] = acc;
  }

  T norm_sq = T(0);
  for (T v : trace.projected) norm_sq += v * v;
  trace.norm = std::sqrt(norm_sq);
  if (!(trace.norm > T(0)) || !std::isfinite(static_cast<double>(trace.norm))) {
    throw std::runtime_error("encoder: degenerate output norm");
  }
  trace.output.assign(D, T(0));
  for (std::uint32_t d = 0; d < D; ++d) {
    trace.output[d] = trace.projected[d] / trace.norm;
  }
}

/// Backward pass from dL/dy; accumulates into `grad` (same layout as params).
template <typename T>
void encoder_backward(const EncoderNet<T>& net, const EncoderTrace<T>& trace,
                      std::span<const T> d_output, std::span<T> grad) {
  const std::uint32_t D = net.config.output_dim;
  const std::uint32_t P = net.pooled_dim();
  const std::size_t steps = trace.tokens.size();

  // Through y = z / |z|.
  T y_dot = T(0);
  for (std::uint32_t d = 0; d < D; ++d) y_dot += trace.output[d] * d_output[d];
  std::vector<T> dz(D);
  for (std::uint32_t d = 0; d < D; ++d) {
    dz[d] = (d_output[d] - trace.output[d] * y_dot) / trace.norm;
  }

  std::vector<T> dpooled(P, T(0));
  const T* pw = net.params.data() + net.off_proj_w();
  T* dpw = grad.data() + net.off_proj_w();
  T* dpb = grad.data() + net.off_proj_b();
  for (std::uint32_t d = 0; d < D; ++d) {
    const T* row = pw + static_cast<std::size_t>(d) * P;
    T* drow = dpw + static_cast<std::size_t>(d) * P;
    for (std::uint32_t p = 0; p < P; ++p) {
      drow[p] += dz[d] * trace.pooled[p];
      dpooled[p] += row[p] * dz[d];
    }
    dpb[d] += dz[d];
  }

  T inv_steps = T(1) / static_cast<T>(steps);
  if (net.config.arch == EncoderArch::kBiLstm) {
    const std::uint32_t H = net.config.hidden_dim;
    Matrix<T> dh_f(steps, H), dh_b(steps, H);
    for (std::size_t s = 0; s < steps; ++s) {
      for (std::uint32_t h = 0; h < H; ++h) {
        dh_f.at(s, h) = dpooled[h] * inv_steps;
        dh_b.at(s, h) = dpooled[H + h] * inv_steps;
      }
    }
    detail::lstm_backward(net, std::span<const std::uint32_t>(trace.tokens),
                          false, trace.fwd, dh_f, grad);
    detail::lstm_backward(net, std::span<const std::uint32_t>(trace.tokens),
                          true, trace.bwd, dh_b, grad);
  } else {
    const std::uint32_t E = net.config.token_dim;
    for (std::size_t s = 0; s < steps; ++s) {
      T* dx = grad.data() + net.off_embed() +
              static_cast<std::size_t>(trace.tokens[s]) * E;
      for (std::uint32_t e = 0; e < E; ++e) dx[e] += dpooled[e] * inv_steps;
    }
  }
}

/// Loss 1 - y.e against a unit target; accumulates parameter gradients.
template <typename T>
T cosine_loss_and_grad(const EncoderNet<T>& net,
                       std::span<const std::uint32_t> tokens,
                       std::span<const T> target, std::span<T> grad) {
  EncoderTrace<T> trace;
  encoder_forward(net, tokens, trace);
  T loss = T(1);
  for (std::size_t d = 0; d < target.size(); ++d) {
    loss -= trace.output[d] * target[d];
  }
  std::vector<T> d_output(target.size());
  for (std::size_t d = 0; d < target.size(); ++d) d_output[d] = -target[d];
  encoder_backward(net, trace, std::span<const T>(d_output), grad);
  return loss;
}

}  // namespace skillsim
