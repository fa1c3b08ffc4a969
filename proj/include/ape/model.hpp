#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "ape/corpus.hpp"
#include "ape/labels.hpp"
#include "ape/losses.hpp"
#include "ape/nn.hpp"

namespace ape {

using nn::Matrix;
using nn::Parameter;

struct ModelConfig {
  int d_model = 64;    // encoder / decoder width (d_h)
  int d_shared = 64;   // task-shared layer width
  int layers = 2;
  int heads = 2;
  int d_ff = 128;
  int max_positions = 256;
  int vocab_size = 0;         // encoder vocabulary (C_mlm)
  int target_vocab_size = 0;  // decoder vocabulary
  int pos_classes = kNumPosTags;
  int ner_classes = kNumNerTags;
  int kt_classes = kNumKtTags;

  // Throws ConfigError on inconsistent sizes.
  void validate() const;
  bool operator==(const ModelConfig&) const = default;
};

// One training example as seen by the model. `labels` is required when any
// auxiliary head except MLM is active, `mlm` when MLM is active.
struct TrainItem {
  const StageInput* input = nullptr;
  const TaskLabels* labels = nullptr;
  const MlmMask* mlm = nullptr;
};

// Weighted sum of per-task mean losses: joint = sum_k coefficient[k] * L_k.
struct Objective {
  std::array<bool, kNumTasks> active{};
  std::array<double, kNumTasks> coefficient{};
  TaskLossSpecs losses;

  // Only the post-editing loss, weight 1.
  static Objective pe_only();

  // The multi-task objective (1/K) sum_k lambda_k L_k over the active tasks.
  // With include_main the PE loss is one of the K weighted terms; otherwise it
  // enters with weight 1 and K counts the active subtasks only.
  static Objective joint(const std::array<bool, kNumTasks>& active, std::span<const double> lambdas,
                         bool include_main, TaskLossSpecs losses);

  std::size_t num_weighted() const;
};

struct BatchLosses {
  std::array<double, kNumTasks> mean{};          // per-task mean over contributing positions
  std::array<std::size_t, kNumTasks> count{};    // contributing positions
  double joint = 0.0;
};

// Pre-norm Transformer encoder-decoder with a task-shared affine layer over
// the encoder states feeding the POS, NER, MLM and encoder Keep/Translate
// heads, and a Keep/Translate head over the decoder states.
class Model {
 public:
  Model() = default;
  Model(const ModelConfig& config, std::uint64_t seed);

  const ModelConfig& config() const noexcept { return config_; }

  // Encoder states H, one d_model row per input position. Throws VocabError on
  // an unknown id, EmptyInput on an empty sequence.
  Matrix encode(const Ids& ids) const;

  // H_s = H W1^T + b1 (no activation).
  Matrix shared_layer(const Matrix& encoded) const;

  // Per-position class distributions.
  Matrix head_pos(const Matrix& shared) const;
  Matrix head_ner(const Matrix& shared) const;
  Matrix head_kt_enc(const Matrix& shared) const;
  // Distributions over the encoder vocabulary at the given positions only.
  Matrix head_mlm(const Matrix& shared, std::span<const std::size_t> positions) const;

  // Decoder states for a prefix starting with <bos>.
  Matrix decoder_states(const Matrix& encoded, const Ids& prefix) const;
  // Next-token distribution after `prefix`.
  std::vector<double> next_token_distribution(const Matrix& encoded, const Ids& prefix) const;
  // Keep/Translate distributions for decoder states at rows 1..n (one per pe token).
  Matrix head_kt_dec(const Matrix& states) const;

  // Greedy decoding; returns the generated ids without <bos>/<eos>.
  Ids greedy_decode(const Ids& encoder_ids, std::size_t max_length) const;

  // Forward pass over a batch; with `with_grad` also accumulates the exact
  // gradient of `joint` into every parameter's grad (grads are not zeroed).
  BatchLosses forward_backward(std::span<const TrainItem> batch, const Objective& objective, bool with_grad);

  void zero_grad();
  std::size_t parameter_count() const;

  // Every parameter with a stable dotted name, in a fixed order.
  std::vector<std::pair<std::string, Parameter*>> named_parameters();
  std::vector<std::pair<std::string, const Parameter*>> named_parameters() const;

  // Rounds every parameter to the nearest float32 value.
  void round_to_float();

 private:
  struct EncoderCache {
    Ids ids;
    std::vector<nn::EncoderLayer::Cache> layers;
    nn::LayerNorm::Cache final_norm;
  };
  struct DecoderCache {
    Ids ids;
    std::vector<nn::DecoderLayer::Cache> layers;
    nn::LayerNorm::Cache final_norm;
  };

  void check_ids(const Ids& ids, int vocab) const;
  Matrix encode(const Ids& ids, EncoderCache& cache) const;
  void encode_backward(const EncoderCache& cache, const Matrix& dout);
  Matrix decode(const Matrix& encoded, const Ids& prefix, DecoderCache& cache) const;
  void decode_backward(const DecoderCache& cache, const Matrix& dout, Matrix& dencoded);

  template <typename F>
  void visit(F&& f);

  ModelConfig config_;
  Matrix positions_;

  Parameter src_embed_;
  std::vector<nn::EncoderLayer> encoder_;
  nn::LayerNorm encoder_norm_;

  Parameter tgt_embed_;
  std::vector<nn::DecoderLayer> decoder_;
  nn::LayerNorm decoder_norm_;
  nn::Linear output_;

  nn::Linear shared_;
  nn::Linear pos_head_;
  nn::Linear ner_head_;
  nn::Linear mlm_head_;
  nn::Linear kt_enc_head_;
  nn::Linear kt_dec_head_;
};

}  // namespace ape
