#include "ape/nn.hpp"

#include <cmath>
#include <limits>

namespace ape::nn {

namespace {

constexpr double kInvSqrt2 = 0.70710678118654752440;
constexpr double kInvSqrt2Pi = 0.39894228040143267794;

}  // namespace

void init_uniform(Parameter& p, Eigen::Index fan_in, Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  for (Eigen::Index c = 0; c < p.value.cols(); ++c) {
    for (Eigen::Index r = 0; r < p.value.rows(); ++r) p.value(r, c) = rng.uniform(-bound, bound);
  }
}

Linear::Linear(Eigen::Index in, Eigen::Index out) {
  weight.resize(out, in);
  bias.resize(1, out);
}

void Linear::init(Rng& rng) {
  init_uniform(weight, weight.value.cols(), rng);
  bias.value.setZero();
}

Matrix Linear::forward(const Matrix& x) const {
  Matrix y(x.rows(), weight.value.rows());
  y.noalias() = x * weight.value.transpose();
  y.rowwise() += bias.value.row(0);
  return y;
}

Matrix Linear::backward(const Matrix& x, const Matrix& dy) {
  weight.grad.noalias() += dy.transpose() * x;
  bias.grad += dy.colwise().sum();
  Matrix dx(dy.rows(), weight.value.cols());
  dx.noalias() = dy * weight.value;
  return dx;
}

LayerNorm::LayerNorm(Eigen::Index dim) {
  gain.resize(1, dim);
  gain.value.setOnes();
  shift.resize(1, dim);
}

Matrix LayerNorm::forward(const Matrix& x, Cache& cache) const {
  const auto d = static_cast<double>(x.cols());
  cache.xhat.resize(x.rows(), x.cols());
  cache.inv_std.resize(x.rows());
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const double mean = x.row(i).sum() / d;
    const double var = (x.row(i).array() - mean).square().sum() / d;
    const double inv = 1.0 / std::sqrt(var + kEps);
    cache.inv_std(i) = inv;
    cache.xhat.row(i) = (x.row(i).array() - mean) * inv;
  }
  Matrix y = cache.xhat.array().rowwise() * gain.value.row(0).array();
  y.rowwise() += shift.value.row(0);
  return y;
}

Matrix LayerNorm::backward(const Cache& cache, const Matrix& dy) {
  gain.grad += (dy.array() * cache.xhat.array()).colwise().sum().matrix();
  shift.grad += dy.colwise().sum();
  const Matrix dxhat = dy.array().rowwise() * gain.value.row(0).array();
  const auto d = static_cast<double>(dy.cols());
  Matrix dx(dy.rows(), dy.cols());
  for (Eigen::Index i = 0; i < dy.rows(); ++i) {
    const double mean_d = dxhat.row(i).sum() / d;
    const double mean_dx = dxhat.row(i).dot(cache.xhat.row(i)) / d;
    dx.row(i) = cache.inv_std(i) * (dxhat.row(i).array() - mean_d - cache.xhat.row(i).array() * mean_dx);
  }
  return dx;
}

double gelu(double x) { return 0.5 * x * (1.0 + std::erf(x * kInvSqrt2)); }

double gelu_grad(double x) {
  return 0.5 * (1.0 + std::erf(x * kInvSqrt2)) + x * kInvSqrt2Pi * std::exp(-0.5 * x * x);
}

FeedForward::FeedForward(Eigen::Index dim, Eigen::Index hidden) : in(dim, hidden), out(hidden, dim) {}

void FeedForward::init(Rng& rng) {
  in.init(rng);
  out.init(rng);
}

Matrix FeedForward::forward(const Matrix& x, Cache& cache) const {
  cache.x = x;
  cache.pre = in.forward(x);
  cache.act = cache.pre.unaryExpr([](double v) { return gelu(v); });
  return out.forward(cache.act);
}

Matrix FeedForward::backward(const Cache& cache, const Matrix& dy) {
  Matrix dact = out.backward(cache.act, dy);
  dact.array() *= cache.pre.unaryExpr([](double v) { return gelu_grad(v); }).array();
  return in.backward(cache.x, dact);
}

Attention::Attention(Eigen::Index dim, int heads) : q(dim, dim), k(dim, dim), v(dim, dim), o(dim, dim), heads(heads) {}

void Attention::init(Rng& rng) {
  q.init(rng);
  k.init(rng);
  v.init(rng);
  o.init(rng);
}

Matrix Attention::forward(const Matrix& xq, const Matrix& xkv, bool causal, Cache& cache) const {
  cache.xq = xq;
  cache.xkv = xkv;
  cache.queries = q.forward(xq);
  cache.keys = k.forward(xkv);
  cache.values = v.forward(xkv);

  const Eigen::Index n = xq.rows();
  const Eigen::Index m = xkv.rows();
  const Eigen::Index dk = cache.queries.cols() / heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dk));

  cache.context.resize(n, cache.queries.cols());
  cache.probs.resize(static_cast<std::size_t>(heads));
  for (int h = 0; h < heads; ++h) {
    auto& p = cache.probs[static_cast<std::size_t>(h)];
    p.noalias() = cache.queries.middleCols(h * dk, dk) * cache.keys.middleCols(h * dk, dk).transpose();
    p *= scale;
    for (Eigen::Index i = 0; i < n; ++i) {
      const Eigen::Index visible = causal ? std::min(i + 1, m) : m;
      const double top = p.row(i).head(visible).maxCoeff();
      double sum = 0.0;
      for (Eigen::Index j = 0; j < visible; ++j) {
        p(i, j) = std::exp(p(i, j) - top);
        sum += p(i, j);
      }
      p.row(i).head(visible) /= sum;
      p.row(i).tail(m - visible).setZero();
    }
    cache.context.middleCols(h * dk, dk).noalias() = p * cache.values.middleCols(h * dk, dk);
  }
  return o.forward(cache.context);
}

void Attention::backward(const Cache& cache, const Matrix& dy, Matrix& dxq, Matrix& dxkv) {
  const Matrix dcontext = o.backward(cache.context, dy);
  const Eigen::Index dk = cache.queries.cols() / heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dk));

  Matrix dq(cache.queries.rows(), cache.queries.cols());
  Matrix dkeys(cache.keys.rows(), cache.keys.cols());
  Matrix dvalues(cache.values.rows(), cache.values.cols());
  for (int h = 0; h < heads; ++h) {
    const auto& p = cache.probs[static_cast<std::size_t>(h)];
    const auto dctx_h = dcontext.middleCols(h * dk, dk);
    Matrix dp = dctx_h * cache.values.middleCols(h * dk, dk).transpose();
    dvalues.middleCols(h * dk, dk).noalias() = p.transpose() * dctx_h;
    const Eigen::VectorXd row_dot = (dp.array() * p.array()).rowwise().sum();
    Matrix ds = p.array() * (dp.colwise() - row_dot).array();
    ds *= scale;
    dq.middleCols(h * dk, dk).noalias() = ds * cache.keys.middleCols(h * dk, dk);
    dkeys.middleCols(h * dk, dk).noalias() = ds.transpose() * cache.queries.middleCols(h * dk, dk);
  }
  dxq += q.backward(cache.xq, dq);
  dxkv += k.backward(cache.xkv, dkeys);
  dxkv += v.backward(cache.xkv, dvalues);
}

EncoderLayer::EncoderLayer(Eigen::Index dim, int heads, Eigen::Index hidden)
    : ln_attn(dim), attn(dim, heads), ln_ffn(dim), ffn(dim, hidden) {}

void EncoderLayer::init(Rng& rng) {
  attn.init(rng);
  ffn.init(rng);
}

Matrix EncoderLayer::forward(const Matrix& x, Cache& cache) const {
  const Matrix a = ln_attn.forward(x, cache.ln_attn);
  Matrix h = x + attn.forward(a, a, false, cache.attn);
  const Matrix c = ln_ffn.forward(h, cache.ln_ffn);
  h += ffn.forward(c, cache.ffn);
  return h;
}

Matrix EncoderLayer::backward(const Cache& cache, const Matrix& dy) {
  Matrix dh = dy + ln_ffn.backward(cache.ln_ffn, ffn.backward(cache.ffn, dy));
  Matrix da = Matrix::Zero(dy.rows(), dy.cols());
  attn.backward(cache.attn, dh, da, da);
  dh += ln_attn.backward(cache.ln_attn, da);
  return dh;
}

DecoderLayer::DecoderLayer(Eigen::Index dim, int heads, Eigen::Index hidden)
    : ln_self(dim), self_attn(dim, heads), ln_cross(dim), cross_attn(dim, heads), ln_ffn(dim), ffn(dim, hidden) {}

void DecoderLayer::init(Rng& rng) {
  self_attn.init(rng);
  cross_attn.init(rng);
  ffn.init(rng);
}

Matrix DecoderLayer::forward(const Matrix& x, const Matrix& memory, Cache& cache) const {
  const Matrix a = ln_self.forward(x, cache.ln_self);
  Matrix h = x + self_attn.forward(a, a, true, cache.self_attn);
  const Matrix c = ln_cross.forward(h, cache.ln_cross);
  h += cross_attn.forward(c, memory, false, cache.cross_attn);
  const Matrix e = ln_ffn.forward(h, cache.ln_ffn);
  h += ffn.forward(e, cache.ffn);
  return h;
}

Matrix DecoderLayer::backward(const Cache& cache, const Matrix& dy, Matrix& dmemory) {
  Matrix dh = dy + ln_ffn.backward(cache.ln_ffn, ffn.backward(cache.ffn, dy));
  Matrix dc = Matrix::Zero(dy.rows(), dy.cols());
  cross_attn.backward(cache.cross_attn, dh, dc, dmemory);
  dh += ln_cross.backward(cache.ln_cross, dc);
  Matrix da = Matrix::Zero(dy.rows(), dy.cols());
  self_attn.backward(cache.self_attn, dh, da, da);
  dh += ln_self.backward(cache.ln_self, da);
  return dh;
}

Matrix softmax_rows(const Matrix& logits) {
  Matrix p(logits.rows(), logits.cols());
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    const double top = logits.row(i).maxCoeff();
    p.row(i) = (logits.row(i).array() - top).exp();
    p.row(i) /= p.row(i).sum();
  }
  return p;
}

Matrix sinusoidal_positions(Eigen::Index positions, Eigen::Index dim) {
  Matrix table(positions, dim);
  for (Eigen::Index pos = 0; pos < positions; ++pos) {
    for (Eigen::Index i = 0; i < dim; ++i) {
      const double rate = std::pow(10000.0, -static_cast<double>(2 * (i / 2)) / static_cast<double>(dim));
      const double angle = static_cast<double>(pos) * rate;
      table(pos, i) = (i % 2 == 0) ? std::sin(angle) : std::cos(angle);
    }
  }
  return table;
}

}  // namespace ape::nn
