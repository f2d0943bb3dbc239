#include "skillsim/encoder.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

#include "skillsim/binio.hpp"
#include "skillsim/text.hpp"

namespace skillsim {

namespace {

constexpr char kEncoderMagic[4] = {'J', 'S', 'T', 'M'};

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t salt) {
  Rng rng(seed ^ (0x9e3779b97f4a7c15ULL * (salt + 1)));
  rng.next_u64();
  return rng.next_u64();
}

}  // namespace

std::string arch_name(EncoderArch arch) {
  switch (arch) {
    case EncoderArch::kBagOfSubwords:
      return "bag-of-subwords";
    case EncoderArch::kBiLstm:
      return "bilstm";
  }
  return "bilstm";
}

EncoderArch arch_from_name(const std::string& name) {
  if (name == "bag-of-subwords" || name == "bag") {
    return EncoderArch::kBagOfSubwords;
  }
  if (name == "bilstm") return EncoderArch::kBiLstm;
  throw std::runtime_error("unknown encoder arch \"" + name +
                           "\" (expected bilstm or bag-of-subwords)");
}

void EncoderConfig::validate() const {
  if (token_dim == 0 || output_dim == 0 || batch_size == 0) {
    throw std::runtime_error("encoder config: zero dimension or batch size");
  }
  if (arch == EncoderArch::kBiLstm && hidden_dim == 0) {
    throw std::runtime_error("encoder config: hidden_dim must be positive");
  }
  if (initial_lr <= 0) {
    throw std::runtime_error("encoder config: initial_lr must be > 0");
  }
  if (momentum < 0 || momentum >= 1) {
    throw std::runtime_error("encoder config: momentum must be in [0, 1)");
  }
  if (weight_decay < 0) {
    throw std::runtime_error("encoder config: weight_decay must be >= 0");
  }
  if (tokenizer_vocab < 257) {
    throw std::runtime_error("encoder config: tokenizer_vocab must be >= 257");
  }
}

std::vector<std::uint32_t> encoder_input_ids(const Tokenizer& tokenizer,
                                             std::string_view title) {
  std::vector<std::uint32_t> tokens = tokenizer.tokenize(title);
  std::erase(tokens, static_cast<std::uint32_t>(' '));
  return tokens;
}

std::vector<float> EncoderModel::encode(std::string_view title) const {
  std::vector<std::uint32_t> tokens = encoder_input_ids(tokenizer, title);
  if (tokens.empty()) {
    throw std::runtime_error("encode: empty title");
  }
  EncoderTrace<float> trace;
  encoder_forward(net, std::span<const std::uint32_t>(tokens), trace);
  return trace.output;
}

double cosine_distance(std::span<const float> u, std::span<const float> v) {
  if (u.size() != v.size()) {
    throw std::runtime_error("cosine_distance: dimension mismatch");
  }
  double uu = 0.0, vv = 0.0, uv = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    uu += static_cast<double>(u[i]) * u[i];
    vv += static_cast<double>(v[i]) * v[i];
    uv += static_cast<double>(u[i]) * v[i];
  }
  if (uu == 0.0 || vv == 0.0) {
    throw std::runtime_error("cosine_distance: zero vector");
  }
  return 1.0 - uv / (std::sqrt(uu) * std::sqrt(vv));
}

namespace {

struct Sample {
  std::vector<std::uint32_t> tokens;
  const float* target;
};

// Shuffled cyclic sample stream; reshuffles each time the list is exhausted.
class SampleStream {
 public:
  SampleStream(std::size_t n, std::uint64_t seed) : order_(n), rng_(seed) {
    for (std::size_t i = 0; i < n; ++i) order_[i] = i;
    shuffle(order_, rng_);
  }

  std::size_t next() {
    if (cursor_ == order_.size()) {
      shuffle(order_, rng_);
      cursor_ = 0;
    }
    return order_[cursor_++];
  }

 private:
  std::vector<std::size_t> order_;
  Rng rng_;
  std::size_t cursor_ = 0;
};

}  // namespace

EncoderModel train_encoder(const AuxDataset& aux, const EncoderConfig& config,
                           const EncoderTrainOptions& options) {
  config.validate();
  if (aux.pairs.empty()) {
    throw std::runtime_error("train_encoder: empty aux dataset");
  }
  if (config.output_dim != aux.dim) {
    throw std::runtime_error(
        "train_encoder: output_dim " + std::to_string(config.output_dim) +
        " does not match aux dimension " + std::to_string(aux.dim));
  }

  std::vector<std::string> titles;
  titles.reserve(aux.pairs.size());
  for (const auto& [key, vec] : aux.pairs) titles.push_back(key);

  EncoderModel model;
  model.config = config;
  model.tokenizer = Tokenizer::train(titles, config.tokenizer_vocab);
  model.net = init_encoder_net<float>(config, model.tokenizer.vocab_size(),
                                      derive_seed(config.seed, 0));

  std::vector<Sample> samples;
  samples.reserve(aux.pairs.size());
  for (const auto& [key, vec] : aux.pairs) {
    Sample s;
    s.tokens = encoder_input_ids(model.tokenizer, key);
    if (s.tokens.empty()) {
      throw std::runtime_error("train_encoder: title normalizes to empty: \"" +
                               key + "\"");
    }
    s.target = vec.data();
    samples.push_back(std::move(s));
  }

  const std::uint64_t steps_per_epoch =
      options.steps_per_epoch > 0
          ? options.steps_per_epoch
          : (samples.size() + config.batch_size - 1) / config.batch_size;
  const std::uint64_t total_steps =
      static_cast<std::uint64_t>(config.epochs) * steps_per_epoch;

  auto emit_snapshot = [&](std::uint64_t step) {
    if (options.snapshot && options.snapshot_every > 0) {
      options.snapshot(step, model);
    }
  };
  emit_snapshot(0);
  if (total_steps == 0) return model;

  SampleStream stream(samples.size(), derive_seed(config.seed, 1));
  const std::size_t n_params = model.net.param_count();
  int workers = std::max(1, options.workers);

  std::vector<std::vector<float>> worker_grads(
      workers, std::vector<float>(n_params, 0.0f));
  std::vector<double> worker_loss(workers, 0.0);
  std::vector<float> velocity(n_params, 0.0f);
  std::vector<std::size_t> batch(config.batch_size);

  std::uint64_t step = 0;
  for (std::uint32_t epoch = 0; epoch < config.epochs; ++epoch) {
    double epoch_loss = 0.0;
    std::uint64_t epoch_samples = 0;
    for (std::uint64_t bs = 0; bs < steps_per_epoch; ++bs) {
      std::size_t batch_n =
          std::min<std::size_t>(config.batch_size, samples.size());
      for (std::size_t i = 0; i < batch_n; ++i) batch[i] = stream.next();

      auto run_range = [&](int w, std::size_t begin, std::size_t end) {
        std::vector<float>& grad = worker_grads[w];
        std::fill(grad.begin(), grad.end(), 0.0f);
        worker_loss[w] = 0.0;
        for (std::size_t i = begin; i < end; ++i) {
          const Sample& s = samples[batch[i]];
          worker_loss[w] += cosine_loss_and_grad<float>(
              model.net, std::span<const std::uint32_t>(s.tokens),
              std::span<const float>(s.target, config.output_dim),
              std::span<float>(grad));
        }
      };

      int nw = static_cast<int>(
          std::min<std::size_t>(static_cast<std::size_t>(workers), batch_n));
      if (nw <= 1) {
        run_range(0, 0, batch_n);
      } else {
        std::vector<std::thread> threads;
        std::size_t chunk = (batch_n + nw - 1) / nw;
        for (int w = 0; w < nw; ++w) {
          std::size_t begin = static_cast<std::size_t>(w) * chunk;
          std::size_t end = std::min(batch_n, begin + chunk);
          if (begin >= end) break;
          threads.emplace_back(run_range, w, begin, end);
        }
        for (auto& t : threads) t.join();
      }

      double batch_loss = 0.0;
      for (int w = 0; w < nw; ++w) batch_loss += worker_loss[w];
      if (!std::isfinite(batch_loss)) {
        throw std::runtime_error("train_encoder: non-finite loss at epoch " +
                                 std::to_string(epoch + 1) + ", step " +
                                 std::to_string(step));
      }
      epoch_loss += batch_loss;
      epoch_samples += batch_n;

      double frac = static_cast<double>(step) / static_cast<double>(total_steps);
      float lr = static_cast<float>(config.initial_lr *
                                    std::max(1e-4, 1.0 - frac));
      float inv_batch = 1.0f / static_cast<float>(batch_n);
      float mu = static_cast<float>(config.momentum);
      float decay = 1.0f - lr * static_cast<float>(config.weight_decay);
      float* grad0 = worker_grads[0].data();
      for (int w = 1; w < nw; ++w) {
        const float* grad = worker_grads[w].data();
        for (std::size_t p = 0; p < n_params; ++p) grad0[p] += grad[p];
      }
      double grad_norm_sq = 0.0;
      for (std::size_t p = 0; p < n_params; ++p) {
        double g = static_cast<double>(grad0[p]) * inv_batch;
        grad_norm_sq += g * g;
      }
      float clip_scale = inv_batch;
      if (config.grad_clip > 0.0) {
        double norm = std::sqrt(grad_norm_sq);
        if (norm > config.grad_clip) {
          clip_scale = static_cast<float>(inv_batch * config.grad_clip / norm);
        }
      }
      float* params = model.net.params.data();
      for (std::size_t p = 0; p < n_params; ++p) {
        velocity[p] = mu * velocity[p] + grad0[p] * clip_scale;
        params[p] = params[p] * decay - lr * velocity[p];
      }

      ++step;
      if (options.snapshot && options.snapshot_every > 0 &&
          (step % options.snapshot_every == 0 || step == total_steps)) {
        emit_snapshot(step);
      }
    }
    if (options.epoch_mean_loss) {
      options.epoch_mean_loss->push_back(
          epoch_samples ? epoch_loss / static_cast<double>(epoch_samples)
                        : 0.0);
    }
  }
  return model;
}

void EncoderModel::save(const std::string& path) const {
  BinWriter w(path);
  w.magic(kEncoderMagic);
  w.u32(1);

  std::uint32_t n_sections = 4;  // tokenizer, config, proj_w, proj_b
  n_sections += 1;               // tok_embed
  if (config.arch == EncoderArch::kBiLstm) n_sections += 6;
  if (!ns_skills.empty()) n_sections += 1;
  w.u32(n_sections);

  auto matrix_section = [&](const std::string& name, const float* data,
                            std::uint32_t rows, std::uint32_t cols) {
    w.str(name);
    w.u32(rows);
    w.u32(cols);
    w.f32_row(data, static_cast<std::size_t>(rows) * cols);
  };

  w.str("tokenizer");
  tokenizer.write(w);

  w.str("config");
  w.str(arch_name(config.arch));
  w.u32(config.token_dim);
  w.u32(config.hidden_dim);
  w.u32(config.output_dim);
  w.u32(config.epochs);
  w.u32(config.batch_size);
  w.u32(config.tokenizer_vocab);
  w.f64(config.initial_lr);
  w.f64(config.momentum);
  w.f64(config.weight_decay);
  w.u64(config.seed);

  const float* p = net.params.data();
  matrix_section("tok_embed", p + net.off_embed(), net.vocab, config.token_dim);
  if (config.arch == EncoderArch::kBiLstm) {
    std::uint32_t g = 4 * config.hidden_dim;
    matrix_section("lstm_fwd_wx", p + net.off_wx_f(), g, config.token_dim);
    matrix_section("lstm_fwd_wh", p + net.off_wh_f(), g, config.hidden_dim);
    matrix_section("lstm_fwd_b", p + net.off_b_f(), g, 1);
    matrix_section("lstm_bwd_wx", p + net.off_wx_b(), g, config.token_dim);
    matrix_section("lstm_bwd_wh", p + net.off_wh_b(), g, config.hidden_dim);
    matrix_section("lstm_bwd_b", p + net.off_b_b(), g, 1);
  }
  matrix_section("proj_w", p + net.off_proj_w(), config.output_dim,
                 net.pooled_dim());
  matrix_section("proj_b", p + net.off_proj_b(), config.output_dim, 1);

  if (!ns_skills.empty()) {
    w.str("ns_skill_out");
    w.u32(static_cast<std::uint32_t>(ns_skills.size()));
    for (const std::string& s : ns_skills) w.str(s);
    w.u32(static_cast<std::uint32_t>(ns_skill_out.rows));
    w.u32(static_cast<std::uint32_t>(ns_skill_out.cols));
    w.f32_row(ns_skill_out.data.data(), ns_skill_out.size());
  }
  w.close();
}

EncoderModel EncoderModel::load(const std::string& path) {
  BinReader r(path);
  r.expect_magic(kEncoderMagic);
  std::uint32_t version = r.u32();
  if (version != 1) {
    throw std::runtime_error(path + ": unsupported version " +
                             std::to_string(version));
  }
  std::uint32_t n_sections = r.u32();

  EncoderModel model;
  bool have_tokenizer = false, have_config = false;
  std::vector<std::pair<std::string, Matrix<float>>> matrices;

  for (std::uint32_t s = 0; s < n_sections; ++s) {
    std::string name = r.str();
    if (name == "tokenizer") {
      model.tokenizer = Tokenizer::read(r);
      have_tokenizer = true;
    } else if (name == "config") {
      model.config.arch = arch_from_name(r.str());
      model.config.token_dim = r.u32();
      model.config.hidden_dim = r.u32();
      model.config.output_dim = r.u32();
      model.config.epochs = r.u32();
      model.config.batch_size = r.u32();
      model.config.tokenizer_vocab = r.u32();
      model.config.initial_lr = r.f64();
      model.config.momentum = r.f64();
      model.config.weight_decay = r.f64();
      model.config.seed = r.u64();
      have_config = true;
    } else if (name == "ns_skill_out") {
      std::uint32_t n = r.u32();
      for (std::uint32_t i = 0; i < n; ++i) {
        model.ns_skills.push_back(r.str());
      }
      std::uint32_t rows = r.u32();
      std::uint32_t cols = r.u32();
      model.ns_skill_out = Matrix<float>(rows, cols);
      r.f32_row(model.ns_skill_out.data.data(), model.ns_skill_out.size());
    } else {
      static const char* kParamSections[] = {
          "tok_embed",   "lstm_fwd_wx", "lstm_fwd_wh",
          "lstm_fwd_b",  "lstm_bwd_wx", "lstm_bwd_wh",
          "lstm_bwd_b",  "proj_w",      "proj_b"};
      bool known = false;
      for (const char* k : kParamSections) known = known || name == k;
      if (!known) {
        throw std::runtime_error(path + ": unknown section \"" + name + "\"");
      }
      std::uint32_t rows = r.u32();
      std::uint32_t cols = r.u32();
      Matrix<float> m(rows, cols);
      r.f32_row(m.data.data(), m.size());
      matrices.emplace_back(name, std::move(m));
    }
  }
  r.expect_end();
  if (!have_tokenizer || !have_config) {
    throw std::runtime_error(path + ": missing tokenizer or config section");
  }

  model.net.config = model.config;
  model.net.vocab = model.tokenizer.vocab_size();
  model.net.params.assign(model.net.param_count(), 0.0f);

  auto take = [&](const std::string& name, std::size_t off, std::size_t rows,
                  std::size_t cols) {
    for (auto& [n, m] : matrices) {
      if (n != name) continue;
      if (m.rows != rows || m.cols != cols) {
        throw std::runtime_error(path + ": section " + name +
                                 " has unexpected shape");
      }
      std::copy(m.data.begin(), m.data.end(), model.net.params.begin() + off);
      return;
    }
    throw std::runtime_error(path + ": missing section " + name);
  };

  const EncoderNet<float>& net = model.net;
  take("tok_embed", net.off_embed(), net.vocab, model.config.token_dim);
  if (model.config.arch == EncoderArch::kBiLstm) {
    std::size_t g = 4 * static_cast<std::size_t>(model.config.hidden_dim);
    take("lstm_fwd_wx", net.off_wx_f(), g, model.config.token_dim);
    take("lstm_fwd_wh", net.off_wh_f(), g, model.config.hidden_dim);
    take("lstm_fwd_b", net.off_b_f(), g, 1);
    take("lstm_bwd_wx", net.off_wx_b(), g, model.config.token_dim);
    take("lstm_bwd_wh", net.off_wh_b(), g, model.config.hidden_dim);
    take("lstm_bwd_b", net.off_b_b(), g, 1);
  }
  take("proj_w", net.off_proj_w(), model.config.output_dim, net.pooled_dim());
  take("proj_b", net.off_proj_b(), model.config.output_dim, 1);
  return model;
}

}  // namespace skillsim
