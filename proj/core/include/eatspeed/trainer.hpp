#pragma once

#include "eatspeed/checkpoint.hpp"
#include "eatspeed/model.hpp"
#include "eatspeed/preprocess.hpp"

#include <functional>

namespace eatspeed {

struct EpochReport {
  int epoch = 0;
  double train_loss = 0.0;
  double val_f1 = 0.0;
  bool improved = false;
};

using EpochCallback = std::function<void(const EpochReport&)>;

/// Adam training with early stopping on validation segmental eating F1
/// (k = 0.1) and `config.patience` epochs of patience. Returns the
/// best-validation weights. Windows must carry labels and already be
/// normalized with `norm`. Deterministic for a fixed config.seed.
/// Throws Error when the loss becomes non-finite.
Checkpoint train(const WindowBatch& train_windows, const WindowBatch& val_windows, const ModelConfig& config,
                 const NormStats& norm, const EpochCallback& on_epoch = {});

/// Segmental F1 of `klass` at threshold k, pooling counts over windows. Bites
/// are detected and matched inside each window's valid region.
double windowed_segmental_f1(const Network<float>& net, const WindowBatch& windows, GestureClass klass, double k);

/// Adam moments for one tensor.
struct AdamState {
  RowMatrix<float> m;
  RowMatrix<float> v;
};

/// One Adam update (beta1 0.9, beta2 0.999, eps 1e-8); `step` starts at 1.
void adam_update(NamedTensor<float>& param, AdamState& state, double learning_rate, long step);

}  // namespace eatspeed
