#include "eatspeed/model.hpp"

#include <cmath>

namespace eatspeed {

template <typename Scalar>
LossValue sequence_loss(const RowMatrix<Scalar>& logits, const std::vector<std::uint8_t>& target,
                        Eigen::Index valid_frames, const ModelConfig& config, RowMatrix<Scalar>* grad_logits) {
  const Eigen::Index frames = logits.rows();
  const Eigen::Index classes = logits.cols();
  if (static_cast<Eigen::Index>(target.size()) != frames) throw Error("loss target length does not match logits");
  const Eigen::Index valid = std::min(valid_frames, frames);
  if (valid < 1) throw Error("loss: all frames are masked");

  // Work in double; the gradient is cast back at the end.
  const Eigen::MatrixXd z = logits.template cast<double>();
  Eigen::MatrixXd log_p(frames, classes);
  for (Eigen::Index t = 0; t < valid; ++t) {
    const double m = z.row(t).maxCoeff();
    const double lse = m + std::log((z.row(t).array() - m).exp().sum());
    log_p.row(t) = z.row(t).array() - lse;
  }

  LossValue value;
  Eigen::MatrixXd grad_log_p = Eigen::MatrixXd::Zero(frames, classes);
  const double inv_frames = 1.0 / static_cast<double>(valid);
  for (Eigen::Index t = 0; t < valid; ++t) {
    const int y = target[static_cast<std::size_t>(t)];
    if (y < 0 || y >= classes) throw Error("loss target value out of range");
    const double w = config.class_weights ? (*config.class_weights)[static_cast<std::size_t>(y)] : 1.0;
    value.cross_entropy -= w * log_p(t, y) * inv_frames;
    grad_log_p(t, y) -= w * inv_frames;
  }

  if (valid > 1 && config.smoothing_lambda > 0.0) {
    const double tau2 = config.smoothing_tau * config.smoothing_tau;
    const double inv_pairs = 1.0 / (static_cast<double>(valid - 1) * static_cast<double>(classes));
    double sum = 0.0;
    for (Eigen::Index t = 1; t < valid; ++t) {
      for (Eigen::Index c = 0; c < classes; ++c) {
        const double delta = log_p(t, c) - log_p(t - 1, c);
        const double sq = delta * delta;
        if (sq < tau2) {
          sum += sq;
          const double g = config.smoothing_lambda * 2.0 * delta * inv_pairs;
          grad_log_p(t, c) += g;
          grad_log_p(t - 1, c) -= g;
        } else {
          sum += tau2;  // truncated: no gradient
        }
      }
    }
    value.smoothing = sum * inv_pairs;
  }
  value.total = value.cross_entropy + config.smoothing_lambda * value.smoothing;

  if (grad_logits) {
    // d log_softmax: g_z = g_lp - softmax * rowsum(g_lp).
    Eigen::MatrixXd grad = Eigen::MatrixXd::Zero(frames, classes);
    for (Eigen::Index t = 0; t < valid; ++t) {
      const double row_sum = grad_log_p.row(t).sum();
      grad.row(t) = grad_log_p.row(t).array() - log_p.row(t).array().exp() * row_sum;
    }
    *grad_logits = grad.cast<Scalar>();
  }
  return value;
}

template LossValue sequence_loss(const RowMatrix<float>&, const std::vector<std::uint8_t>&, Eigen::Index,
                                 const ModelConfig&, RowMatrix<float>*);
template LossValue sequence_loss(const RowMatrix<double>&, const std::vector<std::uint8_t>&, Eigen::Index,
                                 const ModelConfig&, RowMatrix<double>*);

}  // namespace eatspeed
