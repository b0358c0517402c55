#include "eatspeed/trainer.hpp"

#include "eatspeed/bites.hpp"
#include "eatspeed/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace eatspeed {

namespace {

constexpr double kBeta1 = 0.9;
constexpr double kBeta2 = 0.999;
constexpr double kAdamEps = 1e-8;

RowMatrix<float> to_float(const FrameMatrix& x) { return x.cast<float>(); }

std::vector<BiteInterval> window_truth(const Window& w, double rate) {
  std::vector<std::uint8_t> labels(w.y->begin(), w.y->begin() + w.valid_frames);
  return extract_runs(LabelSequence(std::move(labels), rate));
}

}  // namespace

void adam_update(NamedTensor<float>& param, AdamState& state, double learning_rate, long step) {
  if (state.m.size() == 0) {
    state.m = RowMatrix<float>::Zero(param.value.rows(), param.value.cols());
    state.v = RowMatrix<float>::Zero(param.value.rows(), param.value.cols());
  }
  state.m = static_cast<float>(kBeta1) * state.m + static_cast<float>(1.0 - kBeta1) * param.grad;
  state.v = static_cast<float>(kBeta2) * state.v +
            static_cast<float>(1.0 - kBeta2) * param.grad.cwiseProduct(param.grad);
  const double correction1 = 1.0 - std::pow(kBeta1, static_cast<double>(step));
  const double correction2 = 1.0 - std::pow(kBeta2, static_cast<double>(step));
  const auto step_size = static_cast<float>(learning_rate / correction1);
  const auto v_scale = static_cast<float>(1.0 / correction2);
  param.value.array() -=
      step_size * state.m.array() / ((state.v.array() * v_scale).sqrt() + static_cast<float>(kAdamEps));
}

double windowed_segmental_f1(const Network<float>& net, const WindowBatch& windows, GestureClass klass, double k) {
  MatchResult pooled;
  for (const auto& w : windows.windows) {
    if (!w.y) throw Error("validation windows must carry labels");
    const RowMatrix<float> logits = net.forward(to_float(w.x), Mode::kEval, w.valid_frames);
    ProbSequence probs;
    probs.probs = softmax_rows<float>(logits.topRows(w.valid_frames)).cast<double>();
    const auto bites = detect_bites(probs);
    const auto result = segmental_match(bites.bites, window_truth(w, probs.rate_hz), klass, k);
    pooled.tp += result.tp;
    pooled.fp += result.fp;
    pooled.fn += result.fn;
  }
  return pooled.f1();
}

Checkpoint train(const WindowBatch& train_windows, const WindowBatch& val_windows, const ModelConfig& config,
                 const NormStats& norm, const EpochCallback& on_epoch) {
  config.validate();
  if (train_windows.windows.empty()) throw Error("training set is empty");
  for (const auto& w : train_windows.windows) {
    if (!w.y) throw Error("training windows must carry labels");
  }

  Network<float> net(config);
  auto& params = net.parameters();
  std::vector<AdamState> adam(params.size());
  std::mt19937_64 rng(config.seed ^ 0x9e3779b97f4a7c15ULL);

  std::vector<RowMatrix<float>> inputs;
  inputs.reserve(train_windows.windows.size());
  for (const auto& w : train_windows.windows) inputs.push_back(to_float(w.x));

  std::vector<std::size_t> order(train_windows.windows.size());
  std::iota(order.begin(), order.end(), 0);

  TrainingMetadata meta;
  std::vector<RowMatrix<float>> best = [&] {
    std::vector<RowMatrix<float>> copy;
    for (const auto& p : params) copy.push_back(p.value);
    return copy;
  }();
  double best_score = -std::numeric_limits<double>::infinity();
  int since_best = 0;
  long step = 0;
  ForwardCache<float> cache;
  RowMatrix<float> grad_logits;

  for (int epoch = 1; epoch <= config.max_epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double loss_sum = 0.0;
    for (std::size_t begin = 0; begin < order.size(); begin += static_cast<std::size_t>(config.batch_size)) {
      const std::size_t end = std::min(order.size(), begin + static_cast<std::size_t>(config.batch_size));
      const auto inv_batch = static_cast<float>(1.0 / static_cast<double>(end - begin));
      net.zero_grad();
      for (std::size_t i = begin; i < end; ++i) {
        const auto& w = train_windows.windows[order[i]];
        const RowMatrix<float> logits = net.forward(inputs[order[i]], Mode::kTrain, w.valid_frames, &rng, &cache);
        const auto loss = sequence_loss<float>(logits, *w.y, w.valid_frames, config, &grad_logits);
        if (!std::isfinite(loss.total)) {
          std::ostringstream msg;
          msg << "training diverged: non-finite loss (" << loss.total << ") at epoch " << epoch << ", window "
              << order[i] << " (cross entropy " << loss.cross_entropy << ", smoothing " << loss.smoothing << ")";
          throw Error(msg.str());
        }
        loss_sum += loss.total;
        grad_logits *= inv_batch;
        net.backward(cache, grad_logits);
      }
      ++step;
      for (std::size_t p = 0; p < params.size(); ++p) adam_update(params[p], adam[p], config.learning_rate, step);
    }

    EpochReport report;
    report.epoch = epoch;
    report.train_loss = loss_sum / static_cast<double>(order.size());
    // Without validation data the lowest training loss selects the weights.
    const double score = val_windows.windows.empty()
                             ? -report.train_loss
                             : windowed_segmental_f1(net, val_windows, GestureClass::kEating, 0.1);
    report.val_f1 = val_windows.windows.empty() ? 0.0 : score;
    report.improved = score > best_score;
    meta.train_loss.push_back(report.train_loss);
    meta.val_f1.push_back(report.val_f1);
    meta.epochs_run = epoch;
    if (report.improved) {
      best_score = score;
      meta.best_epoch = epoch;
      meta.best_val_f1 = report.val_f1;
      for (std::size_t p = 0; p < params.size(); ++p) best[p] = params[p].value;
      since_best = 0;
    } else {
      ++since_best;
    }
    if (on_epoch) on_epoch(report);
    if (since_best >= config.patience) break;
  }

  for (std::size_t p = 0; p < params.size(); ++p) params[p].value = best[p];
  return Checkpoint::from_network(net, norm, std::move(meta));
}

}  // namespace eatspeed
