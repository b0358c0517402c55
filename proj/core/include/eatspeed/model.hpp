#pragma once

#include "eatspeed/types.hpp"

#include <Eigen/Core>

#include <array>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace eatspeed {

/// Hyper-parameters of the TCN + multi-head attention + FCN network and of
/// its training loop.
struct ModelConfig {
  int layers = 9;
  int channels = 64;  // kernels per dilated layer
  int kernel_size = 3;
  double dropout = 0.30;
  int heads = 8;
  int head_dim = 16;
  int fcn_hidden = 64;
  int classes = kNumClasses;
  double learning_rate = 5e-4;
  double smoothing_tau = 4.0;
  double smoothing_lambda = 0.15;
  std::uint64_t seed = 0;

  int batch_size = 16;
  int max_epochs = 100;
  int patience = 10;
  int window_frames = 960;
  /// Optional per-class cross-entropy weights; off by default.
  std::optional<std::array<double, kNumClasses>> class_weights;

  [[nodiscard]] int d_model() const noexcept { return heads * head_dim; }
  /// 1 + (k - 1) * (2^L - 1) frames.
  [[nodiscard]] long receptive_field() const noexcept;
  /// Throws on inconsistent settings.
  void validate() const;

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

enum class Mode { kTrain, kEval };

template <typename Scalar>
using RowMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <typename Scalar>
struct NamedTensor {
  std::string name;
  RowMatrix<Scalar> value;
  RowMatrix<Scalar> grad;
};

template <typename Scalar>
struct TcnCache {
  RowMatrix<Scalar> input;                    // T x 6
  std::vector<RowMatrix<Scalar>> layer_in;    // T x C, one per layer
  std::vector<RowMatrix<Scalar>> pre_act;     // dilated conv output
  std::vector<RowMatrix<Scalar>> act;         // ReLU(pre_act)
  std::vector<RowMatrix<Scalar>> drop_mask;   // empty in eval mode
};

template <typename Scalar>
struct MhaCache {
  RowMatrix<Scalar> input;  // TCN features plus positional encoding
  RowMatrix<Scalar> q, k, v;
  std::vector<RowMatrix<Scalar>> attention;  // per head, T x T, rows sum to 1
  RowMatrix<Scalar> context;                 // concatenated heads, T x d_model
  Eigen::Index valid_frames = 0;
};

template <typename Scalar>
struct FcnCache {
  RowMatrix<Scalar> input;
  RowMatrix<Scalar> hidden_pre;
  RowMatrix<Scalar> hidden;
};

template <typename Scalar>
struct ForwardCache {
  TcnCache<Scalar> tcn;
  MhaCache<Scalar> mha;
  FcnCache<Scalar> fcn;
};

/// The sequence-to-sequence bite network. Input T x 6, output T x C_out.
///
/// TCN: 1x1 conv 6 -> C, then L residual layers
///   out = in + dropout(conv1x1(relu(dilated_conv(in, dilation 2^(l-1)))))
/// with symmetric zero padding. MHA: sinusoidal positional encoding, fused
/// Q/K/V projections C -> d_model split into h heads, scaled dot-product
/// attention with 1/sqrt(d_model), concat and output projection. FCN:
/// d_model -> 64 ReLU -> C_out.
template <typename Scalar>
class Network {
 public:
  using Matrix = RowMatrix<Scalar>;

  explicit Network(const ModelConfig& config);

  [[nodiscard]] const ModelConfig& config() const noexcept { return config_; }
  [[nodiscard]] std::vector<NamedTensor<Scalar>>& parameters() noexcept { return params_; }
  [[nodiscard]] const std::vector<NamedTensor<Scalar>>& parameters() const noexcept { return params_; }
  [[nodiscard]] std::size_t parameter_count() const noexcept;
  [[nodiscard]] NamedTensor<Scalar>& parameter(const std::string& name);

  void zero_grad();

  /// Logits for one window. `valid_frames` masks padded keys out of attention
  /// (pass x.rows() for unpadded input). `rng` is required in train mode.
  Matrix forward(const Matrix& x, Mode mode, Eigen::Index valid_frames, std::mt19937_64* rng = nullptr,
                 ForwardCache<Scalar>* cache = nullptr) const;

  /// Accumulates parameter gradients for d(loss)/d(logits).
  void backward(const ForwardCache<Scalar>& cache, const Matrix& grad_logits);

  /// Returns d(loss)/d(input) as well; used by gradient checks.
  Matrix backward_with_input(const ForwardCache<Scalar>& cache, const Matrix& grad_logits);

  Matrix tcn_forward(const Matrix& x, Mode mode, std::mt19937_64* rng = nullptr,
                     TcnCache<Scalar>* cache = nullptr) const;
  Matrix mha_forward(const Matrix& features, Eigen::Index valid_frames, MhaCache<Scalar>* cache = nullptr) const;
  Matrix fcn_logits(const Matrix& attended, FcnCache<Scalar>* cache = nullptr) const;
  /// Softmax of fcn_logits.
  Matrix fcn_forward(const Matrix& attended) const;

  /// Copies values from another precision.
  template <typename Other>
  void copy_values_from(const Network<Other>& other) {
    for (std::size_t i = 0; i < params_.size(); ++i) {
      params_[i].value = other.parameters()[i].value.template cast<Scalar>();
    }
  }

 private:
  std::size_t add(const std::string& name, Eigen::Index rows, Eigen::Index cols, double bound,
                  std::mt19937_64& rng);

  Matrix tcn_backward(const TcnCache<Scalar>& cache, Matrix grad);
  Matrix mha_backward(const MhaCache<Scalar>& cache, const Matrix& grad);
  Matrix fcn_backward(const FcnCache<Scalar>& cache, const Matrix& grad_logits);

  ModelConfig config_;
  std::vector<NamedTensor<Scalar>> params_;
  // Indices into params_.
  std::size_t in_w_ = 0, in_b_ = 0;
  std::vector<std::size_t> dil_w_, dil_b_, pt_w_, pt_b_;
  std::size_t q_w_ = 0, q_b_ = 0, k_w_ = 0, k_b_ = 0, v_w_ = 0, v_b_ = 0, o_w_ = 0, o_b_ = 0;
  std::size_t f1_w_ = 0, f1_b_ = 0, f2_w_ = 0, f2_b_ = 0;
};

extern template class Network<float>;
extern template class Network<double>;

/// Fixed sinusoidal positional encoding, T x dim.
Eigen::MatrixXd positional_encoding(Eigen::Index frames, int dim);

/// Row-wise softmax.
template <typename Scalar>
RowMatrix<Scalar> softmax_rows(const RowMatrix<Scalar>& logits);

/// Per-frame class probabilities on a real timeline.
struct ProbSequence {
  Eigen::MatrixXd probs;  // T x C_out
  double rate_hz = kProcessedRateHz;
  double start_s = 0.0;
  Hand hand = Hand::kRight;

  [[nodiscard]] Eigen::Index size() const noexcept { return probs.rows(); }
};

/// Throws unless every row is a distribution (entries in [0,1], sum 1 +- 1e-5).
void validate(const ProbSequence& probs);

struct LossValue {
  double total = 0.0;
  double cross_entropy = 0.0;
  double smoothing = 0.0;
};

/// Frame-mean cross entropy plus lambda x mean over adjacent valid frame pairs
/// and classes of min((log p_t - log p_{t-1})^2, tau^2). Frames at or past
/// `valid_frames` are ignored. When `grad_logits` is given it receives the
/// exact gradient with respect to the logits.
template <typename Scalar>
LossValue sequence_loss(const RowMatrix<Scalar>& logits, const std::vector<std::uint8_t>& target,
                        Eigen::Index valid_frames, const ModelConfig& config,
                        RowMatrix<Scalar>* grad_logits = nullptr);

}  // namespace eatspeed
