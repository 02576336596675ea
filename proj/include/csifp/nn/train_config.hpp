#pragma once

#include <cstdint>

namespace csifp::nn {

/// Defaults: 150 epochs, batch 20, learning rate 1e-6, weight decay 1e-3.
struct TrainConfig {
    int epochs = 150;
    int batch_size = 20;
    double learning_rate = 1e-6;
    double weight_decay = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    std::uint64_t shuffle_seed = 1;
    friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

inline constexpr double kReferenceLearningRate = 1e-6;

struct EpochMetrics {
    int epoch = 0;
    double train_loss = 0.0;
    double train_acc = 0.0;
    double val_loss = 0.0;
    double val_acc = 0.0;
    friend bool operator==(const EpochMetrics&, const EpochMetrics&) = default;
};

} // namespace csifp::nn
