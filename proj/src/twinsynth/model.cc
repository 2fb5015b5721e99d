// Copyright 2026 The TwinSynth Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "twinsynth/model.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <utility>

#include "twinsynth/rng.h"

namespace twinsynth {
namespace {

// y[n x m] = x[n x k] * w[k x m]
void MatMul(const double* x, const double* w, double* y, std::size_t n,
            std::size_t k, std::size_t m) {
  for (std::size_t i = 0; i < n; ++i) {
    double* yi = y + i * m;
    std::fill(yi, yi + m, 0.0);
    const double* xi = x + i * k;
    for (std::size_t p = 0; p < k; ++p) {
      const double a = xi[p];
      const double* wr = w + p * m;
      for (std::size_t j = 0; j < m; ++j) yi[j] += a * wr[j];
    }
  }
}

// dw[k x m] += x[n x k]^T * dy[n x m]
void AccumulateXtDy(const double* x, const double* dy, double* dw,
                    std::size_t n, std::size_t k, std::size_t m) {
  for (std::size_t i = 0; i < n; ++i) {
    const double* xi = x + i * k;
    const double* dyi = dy + i * m;
    for (std::size_t p = 0; p < k; ++p) {
      const double a = xi[p];
      double* row = dw + p * m;
      for (std::size_t j = 0; j < m; ++j) row[j] += a * dyi[j];
    }
  }
}

// dx[n x k] += dy[n x m] * w[k x m]^T
void AccumulateDyWt(const double* dy, const double* w, double* dx,
                    std::size_t n, std::size_t m, std::size_t k) {
  for (std::size_t i = 0; i < n; ++i) {
    const double* dyi = dy + i * m;
    double* dxi = dx + i * k;
    for (std::size_t p = 0; p < k; ++p) {
      const double* wr = w + p * m;
      double s = 0.0;
      for (std::size_t j = 0; j < m; ++j) s += dyi[j] * wr[j];
      dxi[p] += s;
    }
  }
}

double Dot(const double* a, const double* b, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

// Softmax in place; returns log of the normalizer.
double SoftmaxInPlace(double* z, std::size_t n) {
  const double mx = *std::max_element(z, z + n);
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    z[i] = std::exp(z[i] - mx);
    sum += z[i];
  }
  const double inv = 1.0 / sum;
  for (std::size_t i = 0; i < n; ++i) z[i] *= inv;
  return mx + std::log(sum);
}

struct Workspace {
  std::size_t length = 0;
  std::vector<double> x0, q, k, v, att, c, x1, g, x2;
  // Row t holds the next-token distribution after position t; only rows
  // in [loss_start - 1, L - 1) are filled.
  std::vector<double> probs;
  std::vector<double> dx2, dx1, du, dc, dq, dk, dv, datt;

  void Resize(std::size_t L, const ModelConfig& cfg) {
    length = L;
    const std::size_t d = cfg.embed_dim, h = cfg.hidden_dim, V = cfg.vocab_size;
    for (auto* buf :
         {&x0, &q, &k, &v, &c, &x1, &x2, &dx2, &dx1, &dc, &dq, &dk, &dv}) {
      buf->assign(L * d, 0.0);
    }
    g.assign(L * h, 0.0);
    du.assign(L * h, 0.0);
    att.assign(L * L, 0.0);
    datt.assign(L, 0.0);
    probs.assign(L * V, 0.0);
  }
};

class Network {
 public:
  explicit Network(const LanguageModel& model)
      : cfg_(model.config()),
        layout_(model.layout()),
        theta_(model.params().data()) {}

  void CheckSequence(std::span<const TokenId> ids) const {
    if (ids.size() < 2) {
      throw InvalidArgument("sequence needs at least 2 tokens, got " +
                            std::to_string(ids.size()));
    }
    if (ids.size() > cfg_.context_length) {
      throw InvalidArgument("sequence of " + std::to_string(ids.size()) +
                            " tokens exceeds the context length " +
                            std::to_string(cfg_.context_length));
    }
    for (TokenId id : ids) {
      if (id < 0 || static_cast<std::size_t>(id) >= cfg_.vocab_size) {
        throw InvalidArgument("token id " + std::to_string(id) +
                              " outside the model vocabulary");
      }
    }
  }

  // Runs the network and returns the summed NLL over predicted positions
  // [loss_start, L). With `all_positions` every distribution row is kept.
  double Forward(std::span<const TokenId> ids, std::size_t loss_start,
                 Workspace& ws, bool all_positions = false) const {
    const std::size_t L = ids.size();
    const std::size_t d = cfg_.embed_dim, h = cfg_.hidden_dim,
                      V = cfg_.vocab_size;
    ws.Resize(L, cfg_);
    const double* E = theta_ + layout_.token_embedding;
    const double* P = theta_ + layout_.position_embedding;

    for (std::size_t l = 0; l < L; ++l) {
      const double* e = E + static_cast<std::size_t>(ids[l]) * d;
      const double* p = P + l * d;
      double* x = ws.x0.data() + l * d;
      for (std::size_t j = 0; j < d; ++j) x[j] = e[j] + p[j];
    }
    MatMul(ws.x0.data(), theta_ + layout_.wq, ws.q.data(), L, d, d);
    MatMul(ws.x0.data(), theta_ + layout_.wk, ws.k.data(), L, d, d);
    MatMul(ws.x0.data(), theta_ + layout_.wv, ws.v.data(), L, d, d);

    const double scale = 1.0 / std::sqrt(static_cast<double>(d));
    for (std::size_t l = 0; l < L; ++l) {
      double* a = ws.att.data() + l * L;
      const double* ql = ws.q.data() + l * d;
      for (std::size_t m = 0; m <= l; ++m) {
        a[m] = scale * Dot(ql, ws.k.data() + m * d, d);
      }
      SoftmaxInPlace(a, l + 1);
      double* cl = ws.c.data() + l * d;
      std::fill(cl, cl + d, 0.0);
      for (std::size_t m = 0; m <= l; ++m) {
        const double w = a[m];
        const double* vm = ws.v.data() + m * d;
        for (std::size_t j = 0; j < d; ++j) cl[j] += w * vm[j];
      }
    }

    MatMul(ws.c.data(), theta_ + layout_.wo, ws.x1.data(), L, d, d);
    for (std::size_t i = 0; i < L * d; ++i) ws.x1[i] += ws.x0[i];

    MatMul(ws.x1.data(), theta_ + layout_.w1, ws.g.data(), L, d, h);
    const double* b1 = theta_ + layout_.b1;
    for (std::size_t l = 0; l < L; ++l) {
      double* gl = ws.g.data() + l * h;
      for (std::size_t j = 0; j < h; ++j) gl[j] = std::tanh(gl[j] + b1[j]);
    }
    MatMul(ws.g.data(), theta_ + layout_.w2, ws.x2.data(), L, h, d);
    const double* b2 = theta_ + layout_.b2;
    for (std::size_t l = 0; l < L; ++l) {
      double* x2 = ws.x2.data() + l * d;
      const double* x1 = ws.x1.data() + l * d;
      for (std::size_t j = 0; j < d; ++j) x2[j] += x1[j] + b2[j];
    }

    const double* bo = theta_ + layout_.output_bias;
    double nll = 0.0;
    const std::size_t first = all_positions ? 0 : loss_start - 1;
    const std::size_t last = all_positions ? L : L - 1;
    for (std::size_t t = first; t < last; ++t) {
      double* z = ws.probs.data() + t * V;
      const double* x2 = ws.x2.data() + t * d;
      for (std::size_t w = 0; w < V; ++w) z[w] = Dot(x2, E + w * d, d) + bo[w];
      const bool counted = t + 1 < L && t + 1 >= loss_start;
      const double target_logit =
          counted ? z[static_cast<std::size_t>(ids[t + 1])] : 0.0;
      const double log_norm = SoftmaxInPlace(z, V);
      if (counted) nll += log_norm - target_logit;
    }
    return nll;
  }

  // Adds scale * dNLL/dtheta to grad. Requires a preceding Forward() on the
  // same ids and loss_start.
  void Backward(std::span<const TokenId> ids, std::size_t loss_start,
                double scale, Workspace& ws, double* grad) const {
    const std::size_t L = ids.size();
    const std::size_t d = cfg_.embed_dim, h = cfg_.hidden_dim,
                      V = cfg_.vocab_size;
    const double* E = theta_ + layout_.token_embedding;
    double* dE = grad + layout_.token_embedding;
    double* dbo = grad + layout_.output_bias;

    std::fill(ws.dx2.begin(), ws.dx2.end(), 0.0);
    for (std::size_t t = loss_start - 1; t + 1 < L; ++t) {
      const double* p = ws.probs.data() + t * V;
      const double* x2 = ws.x2.data() + t * d;
      double* dx2 = ws.dx2.data() + t * d;
      const auto target = static_cast<std::size_t>(ids[t + 1]);
      for (std::size_t w = 0; w < V; ++w) {
        const double dz = scale * (p[w] - (w == target ? 1.0 : 0.0));
        dbo[w] += dz;
        const double* ew = E + w * d;
        double* dew = dE + w * d;
        for (std::size_t j = 0; j < d; ++j) {
          dx2[j] += dz * ew[j];
          dew[j] += dz * x2[j];
        }
      }
    }

    // Feed-forward block.
    ws.dx1 = ws.dx2;
    AccumulateXtDy(ws.g.data(), ws.dx2.data(), grad + layout_.w2, L, h, d);
    double* db2 = grad + layout_.b2;
    for (std::size_t l = 0; l < L; ++l) {
      const double* dx2 = ws.dx2.data() + l * d;
      for (std::size_t j = 0; j < d; ++j) db2[j] += dx2[j];
    }
    std::fill(ws.du.begin(), ws.du.end(), 0.0);
    AccumulateDyWt(ws.dx2.data(), theta_ + layout_.w2, ws.du.data(), L, d, h);
    double* db1 = grad + layout_.b1;
    for (std::size_t l = 0; l < L; ++l) {
      double* du = ws.du.data() + l * h;
      const double* g = ws.g.data() + l * h;
      for (std::size_t j = 0; j < h; ++j) {
        du[j] *= 1.0 - g[j] * g[j];
        db1[j] += du[j];
      }
    }
    AccumulateXtDy(ws.x1.data(), ws.du.data(), grad + layout_.w1, L, d, h);
    AccumulateDyWt(ws.du.data(), theta_ + layout_.w1, ws.dx1.data(), L, h, d);

    // Attention block; dx1 doubles as dx0 from here on.
    AccumulateXtDy(ws.c.data(), ws.dx1.data(), grad + layout_.wo, L, d, d);
    std::fill(ws.dc.begin(), ws.dc.end(), 0.0);
    AccumulateDyWt(ws.dx1.data(), theta_ + layout_.wo, ws.dc.data(), L, d, d);

    std::fill(ws.dq.begin(), ws.dq.end(), 0.0);
    std::fill(ws.dk.begin(), ws.dk.end(), 0.0);
    std::fill(ws.dv.begin(), ws.dv.end(), 0.0);
    const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(d));
    for (std::size_t l = 0; l < L; ++l) {
      const double* a = ws.att.data() + l * L;
      const double* dcl = ws.dc.data() + l * d;
      double weighted = 0.0;
      for (std::size_t m = 0; m <= l; ++m) {
        ws.datt[m] = Dot(dcl, ws.v.data() + m * d, d);
        weighted += a[m] * ws.datt[m];
        double* dvm = ws.dv.data() + m * d;
        for (std::size_t j = 0; j < d; ++j) dvm[j] += a[m] * dcl[j];
      }
      const double* ql = ws.q.data() + l * d;
      double* dql = ws.dq.data() + l * d;
      for (std::size_t m = 0; m <= l; ++m) {
        const double ds = a[m] * (ws.datt[m] - weighted) * inv_sqrt_d;
        if (ds == 0.0) continue;
        const double* km = ws.k.data() + m * d;
        double* dkm = ws.dk.data() + m * d;
        for (std::size_t j = 0; j < d; ++j) {
          dql[j] += ds * km[j];
          dkm[j] += ds * ql[j];
        }
      }
    }
    AccumulateXtDy(ws.x0.data(), ws.dq.data(), grad + layout_.wq, L, d, d);
    AccumulateXtDy(ws.x0.data(), ws.dk.data(), grad + layout_.wk, L, d, d);
    AccumulateXtDy(ws.x0.data(), ws.dv.data(), grad + layout_.wv, L, d, d);
    AccumulateDyWt(ws.dq.data(), theta_ + layout_.wq, ws.dx1.data(), L, d, d);
    AccumulateDyWt(ws.dk.data(), theta_ + layout_.wk, ws.dx1.data(), L, d, d);
    AccumulateDyWt(ws.dv.data(), theta_ + layout_.wv, ws.dx1.data(), L, d, d);

    double* dP = grad + layout_.position_embedding;
    for (std::size_t l = 0; l < L; ++l) {
      const double* dx0 = ws.dx1.data() + l * d;
      double* de = dE + static_cast<std::size_t>(ids[l]) * d;
      double* dp = dP + l * d;
      for (std::size_t j = 0; j < d; ++j) {
        de[j] += dx0[j];
        dp[j] += dx0[j];
      }
    }
  }

  const ModelConfig& config() const { return cfg_; }
  const ParameterLayout& layout() const { return layout_; }
  const double* theta() const { return theta_; }

 private:
  const ModelConfig& cfg_;
  const ParameterLayout& layout_;
  const double* theta_;
};

// Single-sequence decoder that appends one token at a time, caching keys
// and values.
class IncrementalDecoder {
 public:
  explicit IncrementalDecoder(const LanguageModel& model)
      : cfg_(model.config()),
        layout_(model.layout()),
        theta_(model.params().data()),
        keys_(cfg_.context_length * cfg_.embed_dim),
        values_(cfg_.context_length * cfg_.embed_dim),
        x0_(cfg_.embed_dim),
        q_(cfg_.embed_dim),
        c_(cfg_.embed_dim),
        x1_(cfg_.embed_dim),
        g_(cfg_.hidden_dim),
        x2_(cfg_.embed_dim),
        att_(cfg_.context_length),
        logits_(cfg_.vocab_size) {}

  std::size_t length() const { return length_; }

  // Appends `token` and returns the next-token distribution.
  const std::vector<double>& Push(TokenId token) {
    const std::size_t d = cfg_.embed_dim, h = cfg_.hidden_dim,
                      V = cfg_.vocab_size;
    const std::size_t pos = length_++;
    const double* E = theta_ + layout_.token_embedding;
    const double* e = E + static_cast<std::size_t>(token) * d;
    const double* p = theta_ + layout_.position_embedding + pos * d;
    for (std::size_t j = 0; j < d; ++j) x0_[j] = e[j] + p[j];
    MatMul(x0_.data(), theta_ + layout_.wq, q_.data(), 1, d, d);
    MatMul(x0_.data(), theta_ + layout_.wk, keys_.data() + pos * d, 1, d, d);
    MatMul(x0_.data(), theta_ + layout_.wv, values_.data() + pos * d, 1, d, d);
    const double scale = 1.0 / std::sqrt(static_cast<double>(d));
    for (std::size_t m = 0; m <= pos; ++m) {
      att_[m] = scale * Dot(q_.data(), keys_.data() + m * d, d);
    }
    SoftmaxInPlace(att_.data(), pos + 1);
    std::fill(c_.begin(), c_.end(), 0.0);
    for (std::size_t m = 0; m <= pos; ++m) {
      const double* vm = values_.data() + m * d;
      for (std::size_t j = 0; j < d; ++j) c_[j] += att_[m] * vm[j];
    }
    MatMul(c_.data(), theta_ + layout_.wo, x1_.data(), 1, d, d);
    for (std::size_t j = 0; j < d; ++j) x1_[j] += x0_[j];
    MatMul(x1_.data(), theta_ + layout_.w1, g_.data(), 1, d, h);
    const double* b1 = theta_ + layout_.b1;
    for (std::size_t j = 0; j < h; ++j) g_[j] = std::tanh(g_[j] + b1[j]);
    MatMul(g_.data(), theta_ + layout_.w2, x2_.data(), 1, h, d);
    const double* b2 = theta_ + layout_.b2;
    for (std::size_t j = 0; j < d; ++j) x2_[j] += x1_[j] + b2[j];
    const double* bo = theta_ + layout_.output_bias;
    for (std::size_t w = 0; w < V; ++w) {
      logits_[w] = Dot(x2_.data(), E + w * d, d) + bo[w];
    }
    SoftmaxInPlace(logits_.data(), V);
    return logits_;
  }

 private:
  const ModelConfig& cfg_;
  const ParameterLayout& layout_;
  const double* theta_;
  std::size_t length_ = 0;
  std::vector<double> keys_, values_, x0_, q_, c_, x1_, g_, x2_, att_, logits_;
};

Workspace& ThreadWorkspace() {
  thread_local Workspace ws;
  return ws;
}

void CheckFinite(double loss, std::span<const double> grad) {
  if (!std::isfinite(loss)) {
    throw Error(ErrorCode::kDivergence, "loss is not finite");
  }
  for (double g : grad) {
    if (!std::isfinite(g)) {
      throw Error(ErrorCode::kDivergence, "gradient is not finite");
    }
  }
}

std::size_t PredictedPositions(const TokenSequence& seq) {
  return seq.ids.size() - seq.loss_start;
}

void CheckLossStart(const TokenSequence& seq) {
  if (seq.loss_start == 0 || seq.loss_start >= seq.ids.size()) {
    throw InvalidArgument("loss_start must lie in [1, sequence length)");
  }
}

}  // namespace

void ModelConfig::Validate() const {
  if (vocab_size < 1 || embed_dim < 1 || hidden_dim < 1) {
    throw InvalidArgument("model dimensions must be >= 1");
  }
  if (context_length < 2) {
    throw InvalidArgument("model context length must be >= 2");
  }
  if (architecture != kArchitectureTag) {
    throw InvalidArgument("unsupported architecture '" + architecture + "'");
  }
}

ParameterLayout ParameterLayout::For(const ModelConfig& config) {
  const std::size_t V = config.vocab_size, d = config.embed_dim,
                    h = config.hidden_dim, T = config.context_length;
  ParameterLayout l;
  std::size_t at = 0;
  auto take = [&at](std::size_t n) {
    const std::size_t start = at;
    at += n;
    return start;
  };
  l.token_embedding = take(V * d);
  l.position_embedding = take(T * d);
  l.wq = take(d * d);
  l.wk = take(d * d);
  l.wv = take(d * d);
  l.wo = take(d * d);
  l.w1 = take(d * h);
  l.b1 = take(h);
  l.w2 = take(h * d);
  l.b2 = take(d);
  l.output_bias = take(V);
  l.total = at;
  return l;
}

LanguageModel::LanguageModel(ModelConfig config,
                             std::shared_ptr<const Vocabulary> vocab)
    : config_(std::move(config)), vocab_(std::move(vocab)) {
  config_.Validate();
  layout_ = ParameterLayout::For(config_);
  params_.assign(layout_.total, 0.0);
  Rng rng(DeriveSeed(config_.init_seed, Stream::kInit));
  const double d = static_cast<double>(config_.embed_dim);
  const double h = static_cast<double>(config_.hidden_dim);
  auto fill = [&](std::size_t offset, std::size_t count, double stddev) {
    for (std::size_t i = 0; i < count; ++i) {
      params_[offset + i] = stddev * rng.Normal();
    }
  };
  const std::size_t dd = config_.embed_dim * config_.embed_dim;
  const std::size_t dh = config_.embed_dim * config_.hidden_dim;
  fill(layout_.token_embedding, config_.vocab_size * config_.embed_dim, 0.1);
  fill(layout_.position_embedding, config_.context_length * config_.embed_dim,
       0.02);
  fill(layout_.wq, dd, 1.0 / std::sqrt(d));
  fill(layout_.wk, dd, 1.0 / std::sqrt(d));
  fill(layout_.wv, dd, 1.0 / std::sqrt(d));
  fill(layout_.wo, dd, 0.5 / std::sqrt(d));
  fill(layout_.w1, dh, 1.0 / std::sqrt(d));
  fill(layout_.w2, dh, 0.5 / std::sqrt(h));
  if (vocab_ && vocab_->size() != config_.vocab_size) {
    throw InvalidArgument("vocabulary size does not match model config");
  }
}

LanguageModel::LanguageModel(ModelConfig config, std::vector<double> params,
                             std::shared_ptr<const Vocabulary> vocab)
    : config_(std::move(config)),
      params_(std::move(params)),
      vocab_(std::move(vocab)) {
  config_.Validate();
  layout_ = ParameterLayout::For(config_);
  if (params_.size() != layout_.total) {
    throw InvalidArgument("expected " + std::to_string(layout_.total) +
                          " parameters, got " + std::to_string(params_.size()));
  }
  for (double p : params_) {
    if (!std::isfinite(p)) throw InvalidArgument("non-finite model parameter");
  }
  if (vocab_ && vocab_->size() != config_.vocab_size) {
    throw InvalidArgument("vocabulary size does not match model config");
  }
}

double Nll(const LanguageModel& model, const TokenSequence& seq) {
  Network net(model);
  net.CheckSequence(seq.ids);
  CheckLossStart(seq);
  return net.Forward(seq.ids, seq.loss_start, ThreadWorkspace());
}

double Nll(const LanguageModel& model, std::span<const TokenId> ids) {
  TokenSequence seq{std::vector<TokenId>(ids.begin(), ids.end()), 1};
  return Nll(model, seq);
}

double CombinedLoss(const LanguageModel& model, const TokenSequence& correct,
                    std::span<const TokenSequence> wrong,
                    const LossConfig& cfg) {
  if (cfg.lambda < 0.0) throw InvalidArgument("lambda must be >= 0");
  double loss = Nll(model, correct);
  if (cfg.lambda == 0.0) return loss;
  if (wrong.empty()) {
    throw InvalidArgument("lambda > 0 requires at least one wrong prompt");
  }
  double penalty = 0.0;
  for (const TokenSequence& w : wrong) {
    double nll = Nll(model, w);
    if (cfg.wrong_cap_per_token) {
      nll = std::min(nll, *cfg.wrong_cap_per_token *
                              static_cast<double>(PredictedPositions(w)));
    }
    penalty += nll;
  }
  return loss - cfg.lambda / static_cast<double>(wrong.size()) * penalty;
}

double PerSampleGradient(const LanguageModel& model,
                         const TokenSequence& correct,
                         std::span<const TokenSequence> wrong,
                         const LossConfig& cfg, std::vector<double>& grad) {
  if (cfg.lambda < 0.0) throw InvalidArgument("lambda must be >= 0");
  Network net(model);
  Workspace& ws = ThreadWorkspace();
  grad.assign(model.num_parameters(), 0.0);

  net.CheckSequence(correct.ids);
  CheckLossStart(correct);
  double loss = net.Forward(correct.ids, correct.loss_start, ws);
  net.Backward(correct.ids, correct.loss_start, 1.0, ws, grad.data());

  if (cfg.lambda > 0.0) {
    if (wrong.empty()) {
      throw InvalidArgument("lambda > 0 requires at least one wrong prompt");
    }
    const double coeff = cfg.lambda / static_cast<double>(wrong.size());
    double penalty = 0.0;
    for (const TokenSequence& w : wrong) {
      net.CheckSequence(w.ids);
      CheckLossStart(w);
      const double nll = net.Forward(w.ids, w.loss_start, ws);
      if (cfg.wrong_cap_per_token) {
        const double cap = *cfg.wrong_cap_per_token *
                           static_cast<double>(PredictedPositions(w));
        if (nll >= cap) {
          penalty += cap;
          continue;
        }
      }
      penalty += nll;
      net.Backward(w.ids, w.loss_start, -coeff, ws, grad.data());
    }
    loss -= coeff * penalty;
  }
  CheckFinite(loss, grad);
  return loss;
}

double NllGradient(const LanguageModel& model, const TokenSequence& seq,
                   std::vector<double>& grad) {
  LossConfig plain;
  plain.lambda = 0.0;
  return PerSampleGradient(model, seq, {}, plain, grad);
}

std::vector<std::vector<double>> NextTokenDistributions(
    const LanguageModel& model, std::span<const TokenId> ids) {
  Network net(model);
  if (ids.empty() || ids.size() > model.config().context_length) {
    throw InvalidArgument("prefix length must lie in [1, context length]");
  }
  Workspace& ws = ThreadWorkspace();
  if (ids.size() == 1) {
    // Forward() wants two tokens; pad and keep only the first row.
    std::vector<TokenId> padded{ids[0], Vocabulary::kPad};
    net.CheckSequence(padded);
    net.Forward(padded, 1, ws, true);
  } else {
    net.CheckSequence(ids);
    net.Forward(ids, 1, ws, true);
  }
  const std::size_t V = model.config().vocab_size;
  std::vector<std::vector<double>> out;
  for (std::size_t t = 0; t < ids.size(); ++t) {
    out.emplace_back(
        ws.probs.begin() + static_cast<std::ptrdiff_t>(t * V),
        ws.probs.begin() + static_cast<std::ptrdiff_t>((t + 1) * V));
  }
  return out;
}

std::vector<std::size_t> NucleusSet(std::span<const double> probs, double p) {
  std::vector<std::size_t> order(probs.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(
      order.begin(), order.end(),
      [&](std::size_t a, std::size_t b) { return probs[a] > probs[b]; });
  if (order.empty() || p >= 1.0) return order;
  if (p <= 0.0) return {order.front()};
  double mass = 0.0;
  std::size_t keep = 0;
  while (keep < order.size()) {
    mass += probs[order[keep]];
    ++keep;
    if (mass >= p) break;
  }
  order.resize(keep);
  return order;
}

std::vector<TokenId> Sample(const LanguageModel& model,
                            std::span<const TokenId> prefix,
                            const SamplerConfig& sampler, std::uint64_t seed) {
  const ModelConfig& cfg = model.config();
  if (prefix.empty() || prefix.size() >= cfg.context_length) {
    throw InvalidArgument("instruction must leave room in the context");
  }
  for (TokenId id : prefix) {
    if (id < 0 || static_cast<std::size_t>(id) >= cfg.vocab_size) {
      throw InvalidArgument("prefix token outside the model vocabulary");
    }
  }
  IncrementalDecoder decoder(model);
  const std::vector<double>* probs = nullptr;
  for (TokenId id : prefix) probs = &decoder.Push(id);

  Rng rng(DeriveSeed(seed, Stream::kGeneration));
  std::vector<TokenId> out;
  const std::size_t budget =
      sampler.max_new_tokens == 0 ? cfg.context_length : sampler.max_new_tokens;
  while (true) {
    const std::vector<std::size_t> nucleus =
        NucleusSet(*probs, sampler.nucleus_p);
    double mass = 0.0;
    for (std::size_t i : nucleus) mass += (*probs)[i];
    const double u = rng.Uniform() * mass;
    double acc = 0.0;
    std::size_t chosen = nucleus.back();
    for (std::size_t i : nucleus) {
      acc += (*probs)[i];
      if (u < acc) {
        chosen = i;
        break;
      }
    }
    const auto token = static_cast<TokenId>(chosen);
    out.push_back(token);
    if (token == Vocabulary::kEos) break;
    if (decoder.length() + 1 >= cfg.context_length || out.size() >= budget) {
      break;
    }
    probs = &decoder.Push(token);
  }
  return out;
}

}  // namespace twinsynth
