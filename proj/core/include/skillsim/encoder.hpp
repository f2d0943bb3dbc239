#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "skillsim/aux_embed.hpp"
#include "skillsim/encoder_net.hpp"
#include "skillsim/tokenizer.hpp"

namespace skillsim {

/// Subword ids seen by the network: the tokenizer output without the
/// whitespace unit (word boundaries carry no content and would otherwise
/// dominate the pooled average).
std::vector<std::uint32_t> encoder_input_ids(const Tokenizer& tokenizer,
                                             std::string_view title);

/// Deployable title encoder: tokenizer + network. Models trained with the
/// negative-sampling objective also carry the skill output head.
struct EncoderModel {
  Tokenizer tokenizer;
  EncoderConfig config;
  EncoderNet<float> net;
  std::vector<std::string> ns_skills;
  Matrix<float> ns_skill_out;

  /// Unit-norm vector for a title. Throws if the title normalizes to empty.
  std::vector<float> encode(std::string_view title) const;

  void save(const std::string& path) const;
  static EncoderModel load(const std::string& path);
};

/// 1 - cos(u, v), in [0, 2]. Throws on dimension mismatch or zero input.
double cosine_distance(std::span<const float> u, std::span<const float> v);

struct EncoderTrainOptions {
  int workers = 1;
  /// Optimizer steps per epoch; 0 derives ceil(n_samples / batch_size).
  /// An explicit value makes step budgets comparable across objectives.
  std::uint64_t steps_per_epoch = 0;
  std::uint64_t snapshot_every = 0;  // 0 disables snapshots
  std::function<void(std::uint64_t step, const EncoderModel&)> snapshot;
  std::vector<double>* epoch_mean_loss = nullptr;
};

/// Stage 2: fits the encoder to the auxiliary targets under cosine distance.
EncoderModel train_encoder(const AuxDataset& aux, const EncoderConfig& config,
                           const EncoderTrainOptions& options = {});

}  // namespace skillsim
