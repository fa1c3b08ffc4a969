#include "ape/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "ape/error.hpp"

namespace ape {

namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

Matrix gather_rows(const Matrix& m, std::span<const std::size_t> rows) {
  Matrix out(static_cast<Eigen::Index>(rows.size()), m.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = m.row(static_cast<Eigen::Index>(rows[i]));
  return out;
}

// Evaluates `spec` on every row of `logits` against `targets`. Returns the
// summed loss; when `dlogits` is non-null it receives scale * d loss / d logits.
template <typename Target>
double rowwise_loss(const Matrix& logits, std::span<const Target> targets, const LossSpec& spec, double scale,
                    Matrix* dlogits) {
  RowMatrix z = logits;
  RowMatrix g;
  if (dlogits) g.resize(z.rows(), z.cols());
  double total = 0.0;
  const auto cols = static_cast<std::size_t>(z.cols());
  for (Eigen::Index i = 0; i < z.rows(); ++i) {
    std::span<const double> row(z.row(i).data(), cols);
    std::span<double> grad = dlogits ? std::span<double>(g.row(i).data(), cols) : std::span<double>();
    total += spec.evaluate(row, static_cast<int>(targets[static_cast<std::size_t>(i)]), grad);
  }
  if (dlogits) *dlogits = g * scale;
  return total;
}

}  // namespace

void ModelConfig::validate() const {
  if (d_model < 1 || d_shared < 1 || layers < 1 || heads < 1 || d_ff < 1 || max_positions < 1) {
    throw ConfigError("model dimensions must be positive");
  }
  if (d_model % heads != 0) throw ConfigError("d_model must be divisible by heads");
  if (vocab_size <= Vocab::kNumReserved || target_vocab_size <= Vocab::kNumReserved) {
    throw ConfigError("vocabulary must hold more than the reserved tokens");
  }
  if (pos_classes < 2 || ner_classes < 2 || kt_classes < 2) throw ConfigError("class counts must be >= 2");
}

Objective Objective::pe_only() {
  Objective o;
  o.active[index(Task::Pe)] = true;
  o.coefficient[index(Task::Pe)] = 1.0;
  return o;
}

Objective Objective::joint(const std::array<bool, kNumTasks>& active, std::span<const double> lambdas,
                           bool include_main, TaskLossSpecs losses) {
  if (lambdas.size() != kNumTasks) throw ConfigError("need one weight per task");
  if (!active[index(Task::Pe)]) throw ConfigError("the post-editing task is always active");
  Objective o;
  o.active = active;
  o.losses = std::move(losses);
  std::size_t k = 0;
  for (auto t : kAllTasks) {
    if (active[index(t)] && (include_main || t != Task::Pe)) ++k;
  }
  for (auto t : kAllTasks) {
    const auto i = index(t);
    if (!active[i]) continue;
    if (t == Task::Pe && !include_main) {
      o.coefficient[i] = 1.0;
    } else {
      o.coefficient[i] = lambdas[i] / static_cast<double>(k);
    }
  }
  return o;
}

std::size_t Objective::num_weighted() const {
  return static_cast<std::size_t>(std::count(active.begin(), active.end(), true));
}

Model::Model(const ModelConfig& config, std::uint64_t seed) : config_(config) {
  config_.validate();
  const Eigen::Index d = config_.d_model;
  positions_ = nn::sinusoidal_positions(config_.max_positions, d);

  src_embed_.resize(config_.vocab_size, d);
  tgt_embed_.resize(config_.target_vocab_size, d);
  for (int i = 0; i < config_.layers; ++i) {
    encoder_.emplace_back(d, config_.heads, config_.d_ff);
    decoder_.emplace_back(d, config_.heads, config_.d_ff);
  }
  encoder_norm_ = nn::LayerNorm(d);
  decoder_norm_ = nn::LayerNorm(d);
  output_ = nn::Linear(d, config_.target_vocab_size);
  shared_ = nn::Linear(d, config_.d_shared);
  pos_head_ = nn::Linear(config_.d_shared, config_.pos_classes);
  ner_head_ = nn::Linear(config_.d_shared, config_.ner_classes);
  mlm_head_ = nn::Linear(config_.d_shared, config_.vocab_size);
  kt_enc_head_ = nn::Linear(config_.d_shared, config_.kt_classes);
  kt_dec_head_ = nn::Linear(d, config_.kt_classes);

  Rng rng(seed);
  nn::init_uniform(src_embed_, d, rng);
  for (auto& l : encoder_) l.init(rng);
  nn::init_uniform(tgt_embed_, d, rng);
  for (auto& l : decoder_) l.init(rng);
  output_.init(rng);
  shared_.init(rng);
  pos_head_.init(rng);
  ner_head_.init(rng);
  mlm_head_.init(rng);
  kt_enc_head_.init(rng);
  kt_dec_head_.init(rng);
  round_to_float();
}

template <typename F>
void Model::visit(F&& f) {
  f("encoder.embed", src_embed_);
  for (std::size_t i = 0; i < encoder_.size(); ++i) encoder_[i].visit("encoder.layer" + std::to_string(i), f);
  encoder_norm_.visit("encoder.norm", f);
  f("decoder.embed", tgt_embed_);
  for (std::size_t i = 0; i < decoder_.size(); ++i) decoder_[i].visit("decoder.layer" + std::to_string(i), f);
  decoder_norm_.visit("decoder.norm", f);
  output_.visit("decoder.output", f);
  shared_.visit("shared", f);
  pos_head_.visit("head.pos", f);
  ner_head_.visit("head.ner", f);
  mlm_head_.visit("head.mlm", f);
  kt_enc_head_.visit("head.kt_enc", f);
  kt_dec_head_.visit("head.kt_dec", f);
}

std::vector<std::pair<std::string, Parameter*>> Model::named_parameters() {
  std::vector<std::pair<std::string, Parameter*>> out;
  visit([&](const std::string& name, Parameter& p) { out.emplace_back(name, &p); });
  return out;
}

std::vector<std::pair<std::string, const Parameter*>> Model::named_parameters() const {
  std::vector<std::pair<std::string, const Parameter*>> out;
  for (auto& [name, p] : const_cast<Model*>(this)->named_parameters()) out.emplace_back(name, p);
  return out;
}

void Model::zero_grad() {
  visit([](const std::string&, Parameter& p) { p.zero_grad(); });
}

std::size_t Model::parameter_count() const {
  std::size_t n = 0;
  for (const auto& [name, p] : named_parameters()) n += static_cast<std::size_t>(p->value.size());
  return n;
}

void Model::round_to_float() {
  visit([](const std::string&, Parameter& p) {
    p.value = p.value.unaryExpr([](double v) { return static_cast<double>(static_cast<float>(v)); });
  });
}

void Model::check_ids(const Ids& ids, int vocab) const {
  if (ids.empty()) throw EmptyInput("empty id sequence");
  if (ids.size() > static_cast<std::size_t>(config_.max_positions)) {
    throw VocabError("sequence longer than max_positions");
  }
  for (auto id : ids) {
    if (id < 0 || id >= vocab) throw VocabError("id " + std::to_string(id) + " outside vocabulary");
  }
}

Matrix Model::encode(const Ids& ids, EncoderCache& cache) const {
  check_ids(ids, config_.vocab_size);
  const double scale = std::sqrt(static_cast<double>(config_.d_model));
  const auto n = static_cast<Eigen::Index>(ids.size());
  Matrix x(n, config_.d_model);
  for (Eigen::Index i = 0; i < n; ++i) {
    x.row(i) = src_embed_.value.row(ids[static_cast<std::size_t>(i)]) * scale + positions_.row(i);
  }
  cache.ids = ids;
  cache.layers.resize(encoder_.size());
  for (std::size_t l = 0; l < encoder_.size(); ++l) x = encoder_[l].forward(x, cache.layers[l]);
  return encoder_norm_.forward(x, cache.final_norm);
}

void Model::encode_backward(const EncoderCache& cache, const Matrix& dout) {
  Matrix dx = encoder_norm_.backward(cache.final_norm, dout);
  for (std::size_t l = encoder_.size(); l-- > 0;) dx = encoder_[l].backward(cache.layers[l], dx);
  const double scale = std::sqrt(static_cast<double>(config_.d_model));
  for (std::size_t i = 0; i < cache.ids.size(); ++i) {
    src_embed_.grad.row(cache.ids[i]) += dx.row(static_cast<Eigen::Index>(i)) * scale;
  }
}

Matrix Model::decode(const Matrix& encoded, const Ids& prefix, DecoderCache& cache) const {
  check_ids(prefix, config_.target_vocab_size);
  const double scale = std::sqrt(static_cast<double>(config_.d_model));
  const auto n = static_cast<Eigen::Index>(prefix.size());
  Matrix x(n, config_.d_model);
  for (Eigen::Index i = 0; i < n; ++i) {
    x.row(i) = tgt_embed_.value.row(prefix[static_cast<std::size_t>(i)]) * scale + positions_.row(i);
  }
  cache.ids = prefix;
  cache.layers.resize(decoder_.size());
  for (std::size_t l = 0; l < decoder_.size(); ++l) x = decoder_[l].forward(x, encoded, cache.layers[l]);
  return decoder_norm_.forward(x, cache.final_norm);
}

void Model::decode_backward(const DecoderCache& cache, const Matrix& dout, Matrix& dencoded) {
  Matrix dx = decoder_norm_.backward(cache.final_norm, dout);
  for (std::size_t l = decoder_.size(); l-- > 0;) dx = decoder_[l].backward(cache.layers[l], dx, dencoded);
  const double scale = std::sqrt(static_cast<double>(config_.d_model));
  for (std::size_t i = 0; i < cache.ids.size(); ++i) {
    tgt_embed_.grad.row(cache.ids[i]) += dx.row(static_cast<Eigen::Index>(i)) * scale;
  }
}

Matrix Model::encode(const Ids& ids) const {
  EncoderCache cache;
  return encode(ids, cache);
}

Matrix Model::shared_layer(const Matrix& encoded) const { return shared_.forward(encoded); }

Matrix Model::head_pos(const Matrix& shared) const { return nn::softmax_rows(pos_head_.forward(shared)); }

Matrix Model::head_ner(const Matrix& shared) const { return nn::softmax_rows(ner_head_.forward(shared)); }

Matrix Model::head_kt_enc(const Matrix& shared) const { return nn::softmax_rows(kt_enc_head_.forward(shared)); }

Matrix Model::head_mlm(const Matrix& shared, std::span<const std::size_t> positions) const {
  for (auto p : positions) {
    if (p >= static_cast<std::size_t>(shared.rows())) throw LabelError("masked position out of range");
  }
  return nn::softmax_rows(mlm_head_.forward(gather_rows(shared, positions)));
}

Matrix Model::decoder_states(const Matrix& encoded, const Ids& prefix) const {
  DecoderCache cache;
  return decode(encoded, prefix, cache);
}

std::vector<double> Model::next_token_distribution(const Matrix& encoded, const Ids& prefix) const {
  const Matrix states = decoder_states(encoded, prefix);
  const Matrix p = nn::softmax_rows(output_.forward(states.bottomRows(1)));
  return {p.data(), p.data() + p.size()};
}

Matrix Model::head_kt_dec(const Matrix& states) const {
  return nn::softmax_rows(kt_dec_head_.forward(states.bottomRows(states.rows() - 1)));
}

Ids Model::greedy_decode(const Ids& encoder_ids, std::size_t max_length) const {
  const Matrix encoded = encode(encoder_ids);
  Ids prefix{Vocab::kBos};
  Ids out;
  const std::size_t limit = std::min<std::size_t>(max_length, static_cast<std::size_t>(config_.max_positions) - 1);
  while (out.size() < limit) {
    const Matrix states = decoder_states(encoded, prefix);
    const Matrix logits = output_.forward(states.bottomRows(1));
    TokenId best = Vocab::kEos;
    double best_score = logits(0, Vocab::kEos);
    for (Eigen::Index j = Vocab::kNumReserved; j < logits.cols(); ++j) {
      if (logits(0, j) > best_score) {
        best_score = logits(0, j);
        best = static_cast<TokenId>(j);
      }
    }
    if (best == Vocab::kEos) break;
    out.push_back(best);
    prefix.push_back(best);
  }
  return out;
}

BatchLosses Model::forward_backward(std::span<const TrainItem> batch, const Objective& objective, bool with_grad) {
  const auto on = [&](Task t) { return objective.active[index(t)]; };
  const bool encoder_heads = on(Task::Pos) || on(Task::Ner) || on(Task::KtEnc);

  BatchLosses result;
  for (const auto& item : batch) {
    const auto& in = *item.input;
    const std::size_t n = in.encoder_ids.size();
    if (in.decoder_target_ids.size() < 2) throw LabelError("decoder target needs <bos> and <eos>");
    result.count[index(Task::Pe)] += in.decoder_target_ids.size() - 1;
    if (encoder_heads || on(Task::KtDec)) {
      if (!item.labels) throw LabelError("auxiliary heads need task labels");
      const auto& l = *item.labels;
      if ((on(Task::Pos) && l.pos.size() != n) || (on(Task::Ner) && l.ner.size() != n) ||
          (on(Task::KtEnc) && l.kt_enc.size() != n)) {
        throw LabelError("encoder label length does not match the encoder input");
      }
      if (on(Task::KtDec) && l.kt_dec.size() != in.decoder_target_ids.size() - 2) {
        throw LabelError("decoder label length does not match pe");
      }
      if (on(Task::Pos)) result.count[index(Task::Pos)] += n;
      if (on(Task::Ner)) result.count[index(Task::Ner)] += n;
      if (on(Task::KtEnc)) result.count[index(Task::KtEnc)] += n;
      if (on(Task::KtDec)) result.count[index(Task::KtDec)] += l.kt_dec.size();
    }
    if (on(Task::Mlm)) {
      if (!item.mlm) throw LabelError("MLM head needs a mask");
      if (item.mlm->input_ids.size() != n) throw LabelError("MLM input length does not match the encoder input");
      result.count[index(Task::Mlm)] += item.mlm->positions.size();
    }
  }

  std::array<double, kNumTasks> scale{};
  for (auto t : kAllTasks) {
    const auto i = index(t);
    if (on(t) && result.count[i] > 0) scale[i] = objective.coefficient[i] / static_cast<double>(result.count[i]);
  }
  std::array<double, kNumTasks> total{};

  auto run_head = [&](nn::Linear& head, const Matrix& input, Task task, auto targets, Matrix* dinput) {
    const Matrix logits = head.forward(input);
    Matrix dlogits;
    total[index(task)] += rowwise_loss(logits, targets, objective.losses[index(task)], scale[index(task)],
                                       with_grad ? &dlogits : nullptr);
    if (with_grad) *dinput += head.backward(input, dlogits);
  };

  for (const auto& item : batch) {
    const auto& in = *item.input;
    EncoderCache enc_cache;
    const Matrix encoded = encode(in.encoder_ids, enc_cache);
    Matrix dencoded = Matrix::Zero(encoded.rows(), encoded.cols());

    if (encoder_heads) {
      const Matrix shared = shared_.forward(encoded);
      Matrix dshared = Matrix::Zero(shared.rows(), shared.cols());
      const auto& l = *item.labels;
      if (on(Task::Pos)) run_head(pos_head_, shared, Task::Pos, std::span<const int>(l.pos), &dshared);
      if (on(Task::Ner)) run_head(ner_head_, shared, Task::Ner, std::span<const int>(l.ner), &dshared);
      if (on(Task::KtEnc)) run_head(kt_enc_head_, shared, Task::KtEnc, std::span<const KtTag>(l.kt_enc), &dshared);
      if (with_grad) dencoded += shared_.backward(encoded, dshared);
    }

    const Ids prefix(in.decoder_target_ids.begin(), in.decoder_target_ids.end() - 1);
    const std::span<const TokenId> next(in.decoder_target_ids.data() + 1, in.decoder_target_ids.size() - 1);
    DecoderCache dec_cache;
    const Matrix states = decode(encoded, prefix, dec_cache);
    Matrix dstates = Matrix::Zero(states.rows(), states.cols());
    run_head(output_, states, Task::Pe, next, &dstates);
    if (on(Task::KtDec)) {
      const Eigen::Index m = states.rows() - 1;
      const Matrix pe_states = states.bottomRows(m);
      Matrix dpe = Matrix::Zero(m, states.cols());
      run_head(kt_dec_head_, pe_states, Task::KtDec, std::span<const KtTag>(item.labels->kt_dec), &dpe);
      if (with_grad) dstates.bottomRows(m) += dpe;
    }
    if (with_grad) {
      decode_backward(dec_cache, dstates, dencoded);
      encode_backward(enc_cache, dencoded);
    }

    if (on(Task::Mlm) && !item.mlm->positions.empty()) {
      const auto& mask = *item.mlm;
      EncoderCache mlm_cache;
      const Matrix masked = encode(mask.input_ids, mlm_cache);
      const Matrix rows = gather_rows(masked, mask.positions);
      const Matrix shared = shared_.forward(rows);
      Matrix dshared = Matrix::Zero(shared.rows(), shared.cols());
      run_head(mlm_head_, shared, Task::Mlm, std::span<const TokenId>(mask.target_ids), &dshared);
      if (with_grad) {
        const Matrix drows = shared_.backward(rows, dshared);
        Matrix dmasked = Matrix::Zero(masked.rows(), masked.cols());
        for (std::size_t i = 0; i < mask.positions.size(); ++i) {
          dmasked.row(static_cast<Eigen::Index>(mask.positions[i])) += drows.row(static_cast<Eigen::Index>(i));
        }
        encode_backward(mlm_cache, dmasked);
      }
    }
  }

  for (auto t : kAllTasks) {
    const auto i = index(t);
    if (!on(t) || result.count[i] == 0) continue;
    result.mean[i] = total[i] / static_cast<double>(result.count[i]);
    result.joint += objective.coefficient[i] * result.mean[i];
  }
  return result;
}

}  // namespace ape
