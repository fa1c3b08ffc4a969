#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "ape/rng.hpp"

namespace ape::nn {

// Sequences are stored one position per row.
using Matrix = Eigen::MatrixXd;

struct Parameter {
  Matrix value;
  Matrix grad;

  void resize(Eigen::Index rows, Eigen::Index cols) {
    value = Matrix::Zero(rows, cols);
    grad = Matrix::Zero(rows, cols);
  }
  void zero_grad() { grad.setZero(); }
};

// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)).
void init_uniform(Parameter& p, Eigen::Index fan_in, Rng& rng);

// y = x W^T + b, W is out x in, b is 1 x out.
struct Linear {
  Parameter weight;
  Parameter bias;

  Linear() = default;
  Linear(Eigen::Index in, Eigen::Index out);

  void init(Rng& rng);
  Matrix forward(const Matrix& x) const;
  // Accumulates parameter gradients and returns dL/dx.
  Matrix backward(const Matrix& x, const Matrix& dy);

  template <typename F>
  void visit(const std::string& prefix, F&& f) {
    f(prefix + ".weight", weight);
    f(prefix + ".bias", bias);
  }
};

struct LayerNorm {
  static constexpr double kEps = 1e-5;

  Parameter gain;
  Parameter shift;

  struct Cache {
    Matrix xhat;
    Eigen::VectorXd inv_std;
  };

  LayerNorm() = default;
  explicit LayerNorm(Eigen::Index dim);

  Matrix forward(const Matrix& x, Cache& cache) const;
  Matrix backward(const Cache& cache, const Matrix& dy);

  template <typename F>
  void visit(const std::string& prefix, F&& f) {
    f(prefix + ".gain", gain);
    f(prefix + ".shift", shift);
  }
};

double gelu(double x);
double gelu_grad(double x);

// Two-layer position-wise network with a GELU in between.
struct FeedForward {
  Linear in;
  Linear out;

  struct Cache {
    Matrix x;
    Matrix pre;
    Matrix act;
  };

  FeedForward() = default;
  FeedForward(Eigen::Index dim, Eigen::Index hidden);

  void init(Rng& rng);
  Matrix forward(const Matrix& x, Cache& cache) const;
  Matrix backward(const Cache& cache, const Matrix& dy);

  template <typename F>
  void visit(const std::string& prefix, F&& f) {
    in.visit(prefix + ".in", f);
    out.visit(prefix + ".out", f);
  }
};

// Multi-head scaled dot-product attention. Queries come from `xq`, keys and
// values from `xkv`; with `causal` position i attends to positions <= i.
struct Attention {
  Linear q;
  Linear k;
  Linear v;
  Linear o;
  int heads = 1;

  struct Cache {
    Matrix xq;
    Matrix xkv;
    Matrix queries;
    Matrix keys;
    Matrix values;
    Matrix context;
    std::vector<Matrix> probs;
  };

  Attention() = default;
  Attention(Eigen::Index dim, int heads);

  void init(Rng& rng);
  Matrix forward(const Matrix& xq, const Matrix& xkv, bool causal, Cache& cache) const;
  // Adds dL/dxq into dxq and dL/dxkv into dxkv (both must be sized).
  void backward(const Cache& cache, const Matrix& dy, Matrix& dxq, Matrix& dxkv);

  template <typename F>
  void visit(const std::string& prefix, F&& f) {
    q.visit(prefix + ".q", f);
    k.visit(prefix + ".k", f);
    v.visit(prefix + ".v", f);
    o.visit(prefix + ".o", f);
  }
};

// Pre-norm encoder block: x + attn(ln(x)), then h + ffn(ln(h)).
struct EncoderLayer {
  LayerNorm ln_attn;
  Attention attn;
  LayerNorm ln_ffn;
  FeedForward ffn;

  struct Cache {
    LayerNorm::Cache ln_attn;
    Attention::Cache attn;
    LayerNorm::Cache ln_ffn;
    FeedForward::Cache ffn;
  };

  EncoderLayer() = default;
  EncoderLayer(Eigen::Index dim, int heads, Eigen::Index hidden);

  void init(Rng& rng);
  Matrix forward(const Matrix& x, Cache& cache) const;
  Matrix backward(const Cache& cache, const Matrix& dy);

  template <typename F>
  void visit(const std::string& prefix, F&& f) {
    ln_attn.visit(prefix + ".ln_attn", f);
    attn.visit(prefix + ".attn", f);
    ln_ffn.visit(prefix + ".ln_ffn", f);
    ffn.visit(prefix + ".ffn", f);
  }
};

// Pre-norm decoder block: causal self-attention, cross-attention over the
// encoder states, feed-forward.
struct DecoderLayer {
  LayerNorm ln_self;
  Attention self_attn;
  LayerNorm ln_cross;
  Attention cross_attn;
  LayerNorm ln_ffn;
  FeedForward ffn;

  struct Cache {
    LayerNorm::Cache ln_self;
    Attention::Cache self_attn;
    LayerNorm::Cache ln_cross;
    Attention::Cache cross_attn;
    LayerNorm::Cache ln_ffn;
    FeedForward::Cache ffn;
  };

  DecoderLayer() = default;
  DecoderLayer(Eigen::Index dim, int heads, Eigen::Index hidden);

  void init(Rng& rng);
  Matrix forward(const Matrix& x, const Matrix& memory, Cache& cache) const;
  // Returns dL/dx and adds dL/dmemory into dmemory.
  Matrix backward(const Cache& cache, const Matrix& dy, Matrix& dmemory);

  template <typename F>
  void visit(const std::string& prefix, F&& f) {
    ln_self.visit(prefix + ".ln_self", f);
    self_attn.visit(prefix + ".self_attn", f);
    ln_cross.visit(prefix + ".ln_cross", f);
    cross_attn.visit(prefix + ".cross_attn", f);
    ln_ffn.visit(prefix + ".ln_ffn", f);
    ffn.visit(prefix + ".ffn", f);
  }
};

// Row-wise softmax.
Matrix softmax_rows(const Matrix& logits);

// Fixed sinusoidal position table, `positions` x `dim`.
Matrix sinusoidal_positions(Eigen::Index positions, Eigen::Index dim);

}  // namespace ape::nn
