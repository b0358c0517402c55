#include "eatspeed/model.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace eatspeed {

long ModelConfig::receptive_field() const noexcept {
  return 1 + static_cast<long>(kernel_size - 1) * ((1L << layers) - 1);
}

void ModelConfig::validate() const {
  std::ostringstream msg;
  if (layers < 1 || layers > 20) msg << "layers must be in [1, 20]; ";
  if (channels < 1) msg << "channels must be positive; ";
  if (kernel_size < 1 || kernel_size % 2 == 0) msg << "kernel_size must be a positive odd integer; ";
  if (dropout < 0.0 || dropout >= 1.0) msg << "dropout must be in [0, 1); ";
  if (heads < 1 || head_dim < 1) msg << "heads and head_dim must be positive; ";
  if (fcn_hidden < 1) msg << "fcn_hidden must be positive; ";
  if (classes != kNumClasses) msg << "classes must be 3; ";
  if (!(learning_rate > 0.0)) msg << "learning_rate must be positive; ";
  if (!(smoothing_tau > 0.0) || smoothing_lambda < 0.0) msg << "invalid smoothing parameters; ";
  if (batch_size < 1 || max_epochs < 1 || patience < 1) msg << "batch_size, max_epochs, patience must be positive; ";
  if (window_frames < 1) msg << "window_frames must be positive; ";
  if (!msg.str().empty()) throw Error("invalid model config: " + msg.str());
}

Eigen::MatrixXd positional_encoding(Eigen::Index frames, int dim) {
  Eigen::MatrixXd pe(frames, dim);
  for (int i = 0; i < dim; ++i) {
    const double rate = std::pow(10000.0, -static_cast<double>(2 * (i / 2)) / dim);
    for (Eigen::Index t = 0; t < frames; ++t) {
      const double angle = static_cast<double>(t) * rate;
      pe(t, i) = (i % 2 == 0) ? std::sin(angle) : std::cos(angle);
    }
  }
  return pe;
}

template <typename Scalar>
RowMatrix<Scalar> softmax_rows(const RowMatrix<Scalar>& logits) {
  RowMatrix<Scalar> out = logits;
  out.colwise() -= logits.rowwise().maxCoeff();
  out = out.array().exp();
  const auto sums = out.rowwise().sum().eval();
  out.array().colwise() /= sums.array();
  return out;
}

template RowMatrix<float> softmax_rows(const RowMatrix<float>&);
template RowMatrix<double> softmax_rows(const RowMatrix<double>&);

namespace {

// Adds the contribution of one conv tap: out[t] += in[t + shift] * w.
template <typename Scalar, typename W>
void accumulate_tap(RowMatrix<Scalar>& out, const RowMatrix<Scalar>& in, const W& w, Eigen::Index shift) {
  const Eigen::Index frames = in.rows();
  const Eigen::Index n = frames - std::abs(shift);
  if (n <= 0) return;
  if (shift >= 0) {
    out.topRows(n).noalias() += in.middleRows(shift, n) * w;
  } else {
    out.bottomRows(n).noalias() += in.topRows(n) * w;
  }
}

}  // namespace

template <typename Scalar>
Network<Scalar>::Network(const ModelConfig& config) : config_(config) {
  config_.validate();
  std::mt19937_64 rng(config_.seed);
  const int c = config_.channels;
  const int d = config_.d_model();
  const auto bound = [](double fan_in) { return 1.0 / std::sqrt(fan_in); };

  in_w_ = add("tcn.input.weight", kNumChannels, c, bound(kNumChannels), rng);
  in_b_ = add("tcn.input.bias", 1, c, bound(kNumChannels), rng);
  for (int l = 0; l < config_.layers; ++l) {
    const std::string prefix = "tcn.layer" + std::to_string(l) + ".";
    const double conv_bound = bound(static_cast<double>(c) * config_.kernel_size);
    dil_w_.push_back(add(prefix + "dilated.weight", static_cast<Eigen::Index>(config_.kernel_size) * c, c,
                         conv_bound, rng));
    dil_b_.push_back(add(prefix + "dilated.bias", 1, c, conv_bound, rng));
    pt_w_.push_back(add(prefix + "pointwise.weight", c, c, bound(c), rng));
    pt_b_.push_back(add(prefix + "pointwise.bias", 1, c, bound(c), rng));
  }
  q_w_ = add("mha.query.weight", c, d, bound(c), rng);
  q_b_ = add("mha.query.bias", 1, d, bound(c), rng);
  k_w_ = add("mha.key.weight", c, d, bound(c), rng);
  k_b_ = add("mha.key.bias", 1, d, bound(c), rng);
  v_w_ = add("mha.value.weight", c, d, bound(c), rng);
  v_b_ = add("mha.value.bias", 1, d, bound(c), rng);
  o_w_ = add("mha.output.weight", d, d, bound(d), rng);
  o_b_ = add("mha.output.bias", 1, d, bound(d), rng);
  f1_w_ = add("fcn.hidden.weight", d, config_.fcn_hidden, bound(d), rng);
  f1_b_ = add("fcn.hidden.bias", 1, config_.fcn_hidden, bound(d), rng);
  f2_w_ = add("fcn.output.weight", config_.fcn_hidden, config_.classes, bound(config_.fcn_hidden), rng);
  f2_b_ = add("fcn.output.bias", 1, config_.classes, bound(config_.fcn_hidden), rng);
}

template <typename Scalar>
std::size_t Network<Scalar>::add(const std::string& name, Eigen::Index rows, Eigen::Index cols, double bound,
                                 std::mt19937_64& rng) {
  std::uniform_real_distribution<double> dist(-bound, bound);
  NamedTensor<Scalar> t{name, Matrix(rows, cols), Matrix::Zero(rows, cols)};
  for (Eigen::Index i = 0; i < t.value.size(); ++i) t.value.data()[i] = static_cast<Scalar>(dist(rng));
  params_.push_back(std::move(t));
  return params_.size() - 1;
}

template <typename Scalar>
std::size_t Network<Scalar>::parameter_count() const noexcept {
  std::size_t n = 0;
  for (const auto& p : params_) n += static_cast<std::size_t>(p.value.size());
  return n;
}

template <typename Scalar>
NamedTensor<Scalar>& Network<Scalar>::parameter(const std::string& name) {
  for (auto& p : params_) {
    if (p.name == name) return p;
  }
  throw Error("no parameter named " + name);
}

template <typename Scalar>
void Network<Scalar>::zero_grad() {
  for (auto& p : params_) p.grad.setZero();
}

template <typename Scalar>
typename Network<Scalar>::Matrix Network<Scalar>::tcn_forward(const Matrix& x, Mode mode, std::mt19937_64* rng,
                                                               TcnCache<Scalar>* cache) const {
  if (x.cols() != kNumChannels) throw Error("network input must have 6 channels");
  if (mode == Mode::kTrain && config_.dropout > 0.0 && rng == nullptr) {
    throw Error("train mode requires a random generator");
  }
  const int c = config_.channels;
  const int k = config_.kernel_size;
  const int half = k / 2;
  const Eigen::Index frames = x.rows();

  Matrix h = x * params_[in_w_].value;
  h.rowwise() += params_[in_b_].value.row(0);
  if (cache) {
    cache->input = x;
    cache->layer_in.clear();
    cache->pre_act.clear();
    cache->act.clear();
    cache->drop_mask.clear();
  }
  const bool drop = mode == Mode::kTrain && config_.dropout > 0.0;
  std::bernoulli_distribution keep(1.0 - config_.dropout);
  const auto keep_scale = static_cast<Scalar>(1.0 / (1.0 - config_.dropout));

  for (int l = 0; l < config_.layers; ++l) {
    const Eigen::Index dilation = Eigen::Index{1} << l;
    const auto& w = params_[dil_w_[l]].value;
    Matrix pre(frames, c);
    pre.rowwise() = params_[dil_b_[l]].value.row(0);
    for (int j = 0; j < k; ++j) {
      accumulate_tap(pre, h, w.middleRows(static_cast<Eigen::Index>(j) * c, c), (j - half) * dilation);
    }
    Matrix act = pre.cwiseMax(Scalar(0));
    Matrix branch = act * params_[pt_w_[l]].value;
    branch.rowwise() += params_[pt_b_[l]].value.row(0);
    Matrix mask;
    if (drop) {
      mask.resize(frames, c);
      for (Eigen::Index i = 0; i < mask.size(); ++i) mask.data()[i] = keep(*rng) ? keep_scale : Scalar(0);
      branch.array() *= mask.array();
    }
    if (cache) {
      cache->layer_in.push_back(h);
      cache->pre_act.push_back(std::move(pre));
      cache->act.push_back(std::move(act));
      cache->drop_mask.push_back(std::move(mask));
    }
    h += branch;
  }
  return h;
}

template <typename Scalar>
typename Network<Scalar>::Matrix Network<Scalar>::mha_forward(const Matrix& features, Eigen::Index valid_frames,
                                                               MhaCache<Scalar>* cache) const {
  if (features.cols() != config_.channels) throw Error("attention input width must equal the TCN channel count");
  const Eigen::Index frames = features.rows();
  const Eigen::Index valid = std::clamp<Eigen::Index>(valid_frames, 1, frames);
  const int dh = config_.head_dim;
  const auto scale = static_cast<Scalar>(1.0 / std::sqrt(static_cast<double>(config_.d_model())));

  Matrix input = features + positional_encoding(frames, config_.channels).cast<Scalar>();
  Matrix q = input * params_[q_w_].value;
  q.rowwise() += params_[q_b_].value.row(0);
  Matrix k = input * params_[k_w_].value;
  k.rowwise() += params_[k_b_].value.row(0);
  Matrix v = input * params_[v_w_].value;
  v.rowwise() += params_[v_b_].value.row(0);

  Matrix context(frames, config_.d_model());
  if (cache) cache->attention.clear();
  Matrix scores(frames, valid);
  for (int head = 0; head < config_.heads; ++head) {
    const Eigen::Index col = static_cast<Eigen::Index>(head) * dh;
    scores.noalias() = q.middleCols(col, dh) * k.middleCols(col, dh).topRows(valid).transpose();
    scores *= scale;
    Matrix weights = softmax_rows<Scalar>(scores);
    context.middleCols(col, dh).noalias() = weights * v.middleCols(col, dh).topRows(valid);
    if (cache) cache->attention.push_back(std::move(weights));
  }
  Matrix out = context * params_[o_w_].value;
  out.rowwise() += params_[o_b_].value.row(0);
  if (cache) {
    cache->input = std::move(input);
    cache->q = std::move(q);
    cache->k = std::move(k);
    cache->v = std::move(v);
    cache->context = std::move(context);
    cache->valid_frames = valid;
  }
  return out;
}

template <typename Scalar>
typename Network<Scalar>::Matrix Network<Scalar>::fcn_logits(const Matrix& attended, FcnCache<Scalar>* cache) const {
  Matrix pre = attended * params_[f1_w_].value;
  pre.rowwise() += params_[f1_b_].value.row(0);
  Matrix hidden = pre.cwiseMax(Scalar(0));
  Matrix logits = hidden * params_[f2_w_].value;
  logits.rowwise() += params_[f2_b_].value.row(0);
  if (cache) {
    cache->input = attended;
    cache->hidden_pre = std::move(pre);
    cache->hidden = std::move(hidden);
  }
  return logits;
}

template <typename Scalar>
typename Network<Scalar>::Matrix Network<Scalar>::fcn_forward(const Matrix& attended) const {
  return softmax_rows<Scalar>(fcn_logits(attended));
}

template <typename Scalar>
typename Network<Scalar>::Matrix Network<Scalar>::forward(const Matrix& x, Mode mode, Eigen::Index valid_frames,
                                                           std::mt19937_64* rng, ForwardCache<Scalar>* cache) const {
  const Matrix features = tcn_forward(x, mode, rng, cache ? &cache->tcn : nullptr);
  const Matrix attended = mha_forward(features, valid_frames, cache ? &cache->mha : nullptr);
  return fcn_logits(attended, cache ? &cache->fcn : nullptr);
}

template <typename Scalar>
typename Network<Scalar>::Matrix Network<Scalar>::fcn_backward(const FcnCache<Scalar>& cache,
                                                                const Matrix& grad_logits) {
  params_[f2_w_].grad.noalias() += cache.hidden.transpose() * grad_logits;
  params_[f2_b_].grad += grad_logits.colwise().sum();
  Matrix grad_hidden = grad_logits * params_[f2_w_].value.transpose();
  grad_hidden.array() *= (cache.hidden_pre.array() > Scalar(0)).template cast<Scalar>();
  params_[f1_w_].grad.noalias() += cache.input.transpose() * grad_hidden;
  params_[f1_b_].grad += grad_hidden.colwise().sum();
  return grad_hidden * params_[f1_w_].value.transpose();
}

template <typename Scalar>
typename Network<Scalar>::Matrix Network<Scalar>::mha_backward(const MhaCache<Scalar>& cache, const Matrix& grad) {
  const Eigen::Index frames = cache.input.rows();
  const Eigen::Index valid = cache.valid_frames;
  const int dh = config_.head_dim;
  const auto scale = static_cast<Scalar>(1.0 / std::sqrt(static_cast<double>(config_.d_model())));

  params_[o_w_].grad.noalias() += cache.context.transpose() * grad;
  params_[o_b_].grad += grad.colwise().sum();
  const Matrix grad_context = grad * params_[o_w_].value.transpose();

  Matrix grad_q = Matrix::Zero(frames, config_.d_model());
  Matrix grad_k = Matrix::Zero(frames, config_.d_model());
  Matrix grad_v = Matrix::Zero(frames, config_.d_model());
  Matrix grad_weights(frames, valid);
  for (int head = 0; head < config_.heads; ++head) {
    const Eigen::Index col = static_cast<Eigen::Index>(head) * dh;
    const Matrix& weights = cache.attention[static_cast<std::size_t>(head)];
    const auto grad_ctx = grad_context.middleCols(col, dh);
    grad_weights.noalias() = grad_ctx * cache.v.middleCols(col, dh).topRows(valid).transpose();
    grad_v.middleCols(col, dh).topRows(valid).noalias() = weights.transpose() * grad_ctx;
    // Softmax backward: dS = A * (dA - rowsum(A * dA)).
    const auto row_dot = (weights.array() * grad_weights.array()).rowwise().sum().eval();
    grad_weights.array().colwise() -= row_dot;
    grad_weights.array() *= weights.array();
    grad_weights *= scale;
    grad_q.middleCols(col, dh).noalias() = grad_weights * cache.k.middleCols(col, dh).topRows(valid);
    grad_k.middleCols(col, dh).topRows(valid).noalias() = grad_weights.transpose() * cache.q.middleCols(col, dh);
  }
  params_[q_w_].grad.noalias() += cache.input.transpose() * grad_q;
  params_[q_b_].grad += grad_q.colwise().sum();
  params_[k_w_].grad.noalias() += cache.input.transpose() * grad_k;
  params_[k_b_].grad += grad_k.colwise().sum();
  params_[v_w_].grad.noalias() += cache.input.transpose() * grad_v;
  params_[v_b_].grad += grad_v.colwise().sum();
  Matrix grad_input = grad_q * params_[q_w_].value.transpose();
  grad_input.noalias() += grad_k * params_[k_w_].value.transpose();
  grad_input.noalias() += grad_v * params_[v_w_].value.transpose();
  return grad_input;
}

template <typename Scalar>
typename Network<Scalar>::Matrix Network<Scalar>::tcn_backward(const TcnCache<Scalar>& cache, Matrix grad) {
  const int c = config_.channels;
  const int k = config_.kernel_size;
  const int half = k / 2;
  const Eigen::Index frames = grad.rows();
  for (int l = config_.layers - 1; l >= 0; --l) {
    const auto ul = static_cast<std::size_t>(l);
    const Eigen::Index dilation = Eigen::Index{1} << l;
    Matrix grad_branch = grad;
    if (cache.drop_mask[ul].size() > 0) grad_branch.array() *= cache.drop_mask[ul].array();
    params_[pt_w_[ul]].grad.noalias() += cache.act[ul].transpose() * grad_branch;
    params_[pt_b_[ul]].grad += grad_branch.colwise().sum();
    Matrix grad_pre = grad_branch * params_[pt_w_[ul]].value.transpose();
    grad_pre.array() *= (cache.pre_act[ul].array() > Scalar(0)).template cast<Scalar>();
    params_[dil_b_[ul]].grad += grad_pre.colwise().sum();

    const Matrix& in = cache.layer_in[ul];
    auto& w = params_[dil_w_[ul]];
    for (int j = 0; j < k; ++j) {
      const Eigen::Index shift = (j - half) * dilation;
      const Eigen::Index n = frames - std::abs(shift);
      if (n <= 0) continue;
      auto w_tap = w.value.middleRows(static_cast<Eigen::Index>(j) * c, c);
      auto g_tap = w.grad.middleRows(static_cast<Eigen::Index>(j) * c, c);
      // Forward: pre[t] += in[t + shift] * W_j.
      if (shift >= 0) {
        g_tap.noalias() += in.middleRows(shift, n).transpose() * grad_pre.topRows(n);
        grad.middleRows(shift, n).noalias() += grad_pre.topRows(n) * w_tap.transpose();
      } else {
        g_tap.noalias() += in.topRows(n).transpose() * grad_pre.bottomRows(n);
        grad.topRows(n).noalias() += grad_pre.bottomRows(n) * w_tap.transpose();
      }
    }
  }
  params_[in_w_].grad.noalias() += cache.input.transpose() * grad;
  params_[in_b_].grad += grad.colwise().sum();
  return grad * params_[in_w_].value.transpose();
}

template <typename Scalar>
void Network<Scalar>::backward(const ForwardCache<Scalar>& cache, const Matrix& grad_logits) {
  backward_with_input(cache, grad_logits);
}

template <typename Scalar>
typename Network<Scalar>::Matrix Network<Scalar>::backward_with_input(const ForwardCache<Scalar>& cache,
                                                                       const Matrix& grad_logits) {
  const Matrix grad_attended = fcn_backward(cache.fcn, grad_logits);
  Matrix grad_features = mha_backward(cache.mha, grad_attended);
  return tcn_backward(cache.tcn, std::move(grad_features));
}

template class Network<float>;
template class Network<double>;

void validate(const ProbSequence& probs) {
  if (probs.probs.cols() != kNumClasses) throw Error("probability sequence must have 3 columns");
  for (Eigen::Index t = 0; t < probs.probs.rows(); ++t) {
    const auto row = probs.probs.row(t);
    if (!row.allFinite() || row.minCoeff() < 0.0 || row.maxCoeff() > 1.0 || std::abs(row.sum() - 1.0) > 1e-5) {
      throw Error("probability row " + std::to_string(t) + " is not a distribution");
    }
  }
}

}  // namespace eatspeed
