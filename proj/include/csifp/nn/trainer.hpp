#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "csifp/dataset/fingerprint_dataset.hpp"
#include "csifp/nn/adamw.hpp"
#include "csifp/nn/checkpoint.hpp"
#include "csifp/nn/loss.hpp"
#include "csifp/nn/network.hpp"

namespace csifp::nn {

/// Thrown when a minibatch loss is not finite. Carries the state at the
/// moment of failure.
class TrainingDiverged : public DivergenceError {
public:
    TrainingDiverged(const std::string& what, Checkpoint state) : DivergenceError(what), state_(std::move(state)) {}
    const Checkpoint& state() const noexcept { return state_; }

private:
    Checkpoint state_;
};

/// Stacks samples[indices[begin..end)] into an (n, 1, M, 2B) batch.
inline Tensor4 make_batch(std::span<const dataset::LabeledSample> samples, std::span<const std::size_t> indices,
                          std::vector<std::uint32_t>* labels = nullptr) {
    if (indices.empty()) {
        throw ShapeError("empty batch");
    }
    const auto& first = samples[indices[0]].tensor;
    Tensor4 batch({indices.size(), 1, first.rows(), first.cols()});
    auto dst = batch.values();
    const std::size_t per = first.size();
    if (labels) {
        labels->clear();
    }
    for (std::size_t i = 0; i < indices.size(); ++i) {
        const auto& s = samples[indices[i]];
        if (s.tensor.rows() != first.rows() || s.tensor.cols() != first.cols()) {
            throw ShapeError("samples in a batch have different shapes");
        }
        auto src = s.tensor.values();
        std::copy(src.begin(), src.end(), dst.begin() + static_cast<std::ptrdiff_t>(i * per));
        if (labels) {
            labels->push_back(s.class_id);
        }
    }
    return batch;
}

inline Tensor4 make_single(const dataset::FeatureMap& tensor) {
    Tensor4 t({1, 1, tensor.rows(), tensor.cols()});
    auto src = tensor.values();
    std::copy(src.begin(), src.end(), t.values().begin());
    return t;
}

struct SplitScore {
    double loss = 0.0;
    double accuracy = 0.0;
};

/// Eval-mode mean NLL and accuracy.
inline SplitScore score(const Network& net, std::span<const dataset::LabeledSample> samples,
                        std::size_t batch_size = 64) {
    if (samples.empty()) {
        return {};
    }
    std::vector<std::size_t> idx(samples.size());
    std::iota(idx.begin(), idx.end(), 0);
    double loss = 0.0;
    std::size_t correct = 0;
    std::vector<std::uint32_t> labels;
    for (std::size_t b = 0; b < idx.size(); b += batch_size) {
        const std::size_t e = std::min(idx.size(), b + batch_size);
        auto chunk = std::span<const std::size_t>(idx).subspan(b, e - b);
        const auto logits = net.predict(make_batch(samples, chunk, &labels));
        const auto r = softmax_nll_batch(logits, labels);
        loss += r.mean_loss * static_cast<double>(chunk.size());
        correct += r.correct;
    }
    return {loss / static_cast<double>(samples.size()),
            static_cast<double>(correct) / static_cast<double>(samples.size())};
}

/// Minibatch boundaries for one epoch. A trailing batch of one sample is
/// merged into the previous batch since batch norm needs two values.
inline std::vector<std::pair<std::size_t, std::size_t>> batch_ranges(std::size_t n, std::size_t batch_size) {
    std::vector<std::pair<std::size_t, std::size_t>> out;
    for (std::size_t b = 0; b < n; b += batch_size) {
        out.emplace_back(b, std::min(n, b + batch_size));
    }
    if (out.size() > 1 && out.back().second - out.back().first == 1) {
        out.pop_back();
        out.back().second = n;
    }
    return out;
}

inline std::vector<std::size_t> epoch_order(std::size_t n, std::uint64_t seed, int epoch) {
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(epoch), 0x5eedu};
    std::mt19937_64 rng(seq);
    std::shuffle(order.begin(), order.end(), rng);
    return order;
}

using EpochObserver = std::function<void(const EpochMetrics&, const Network&)>;

struct TrainOptions {
    const Checkpoint* resume = nullptr;       ///< continue from this state
    const Checkpoint* resume_best = nullptr;  ///< best snapshot so far when resuming
    EpochObserver observer;
    Digest dataset_hash{};
    Digest config_hash{};
};

struct TrainResult {
    std::vector<EpochMetrics> history;
    Checkpoint best;
    Checkpoint last;
    /// Mean NLL on the validation split before any update, using batch statistics.
    double initial_loss = 0.0;
};

inline void check_train_config(const TrainConfig& cfg) {
    if (cfg.epochs < 1 || cfg.batch_size < 1 || !(cfg.learning_rate > 0.0) || !(cfg.weight_decay >= 0.0) ||
        !(cfg.beta1 >= 0.0 && cfg.beta1 < 1.0) || !(cfg.beta2 >= 0.0 && cfg.beta2 < 1.0) || !(cfg.epsilon > 0.0)) {
        throw ConfigError("invalid training configuration");
    }
}

/// Seeded minibatch training with AdamW. Each epoch shuffles the training
/// split, steps once per minibatch, then scores train-mode averages and the
/// eval-mode validation split. The best checkpoint is the first epoch with
/// the highest validation accuracy.
inline TrainResult train(std::span<const dataset::LabeledSample> train_set,
                         std::span<const dataset::LabeledSample> validation_set, const NetworkConfig& net_cfg,
                         const TrainConfig& cfg, const TrainOptions& options = {}) {
    check_train_config(cfg);
    if (train_set.empty() || validation_set.empty()) {
        throw ConfigError("training needs non-empty train and validation splits");
    }
    if (train_set.size() < 2) {
        throw ConfigError("training split needs at least two samples");
    }
    const AdamWHyper hyper{cfg.learning_rate, cfg.weight_decay, cfg.beta1, cfg.beta2, cfg.epsilon};

    Network net(net_cfg);
    AdamW opt(hyper);
    TrainResult result;
    int start_epoch = 0;
    if (options.resume) {
        const auto& r = *options.resume;
        auto same_run = r.train_config;
        same_run.epochs = cfg.epochs;
        if (!(same_run == cfg)) {
            throw ConfigError("resume checkpoint was produced with different training hyperparameters");
        }
        restore(net, r);
        opt.set_state(r.optimizer);
        result.history = r.history;
        start_epoch = static_cast<int>(r.epochs_completed);
        if (r.best_epoch >= 0) {
            if (!options.resume_best) {
                throw ConfigError("resuming needs the best checkpoint recorded so far");
            }
            // the weights stay; identity follows the continuing run
            result.best = *options.resume_best;
            result.best.train_config = cfg;
            result.best.dataset_hash = options.dataset_hash;
            result.best.config_hash = options.config_hash;
        }
        result.last = r;
    } else {
        Network probe = net;
        double loss = 0.0;
        std::vector<std::size_t> idx(validation_set.size());
        std::iota(idx.begin(), idx.end(), 0);
        std::vector<std::uint32_t> labels;
        for (const auto& [b, e] : batch_ranges(idx.size(), static_cast<std::size_t>(cfg.batch_size))) {
            auto chunk = std::span<const std::size_t>(idx).subspan(b, e - b);
            const auto logits = probe.forward(make_batch(validation_set, chunk, &labels), Mode::train);
            loss += softmax_nll_batch(logits, labels).mean_loss * static_cast<double>(chunk.size());
        }
        result.initial_loss = loss / static_cast<double>(validation_set.size());
    }
    std::int32_t best_epoch = options.resume ? options.resume->best_epoch : -1;
    double best_acc = options.resume ? options.resume->best_val_acc : -1.0;

    auto make_snapshot = [&](int epochs_done) {
        Checkpoint c = snapshot(net, opt, cfg);
        c.epochs_completed = static_cast<std::uint32_t>(epochs_done);
        c.history = result.history;
        c.best_epoch = best_epoch;
        c.best_val_acc = best_acc;
        c.dataset_hash = options.dataset_hash;
        c.config_hash = options.config_hash;
        return c;
    };

    std::vector<std::uint32_t> labels;
    for (int epoch = start_epoch; epoch < cfg.epochs; ++epoch) {
        const auto order = epoch_order(train_set.size(), cfg.shuffle_seed, epoch);
        double loss_sum = 0.0;
        std::size_t correct = 0;
        int batch_no = 0;
        for (const auto& [b, e] : batch_ranges(order.size(), static_cast<std::size_t>(cfg.batch_size))) {
            auto chunk = std::span<const std::size_t>(order).subspan(b, e - b);
            const auto logits = net.forward(make_batch(train_set, chunk, &labels), Mode::train);
            const auto loss = softmax_nll_batch(logits, labels);
            if (!std::isfinite(loss.mean_loss)) {
                throw TrainingDiverged("non-finite training loss at epoch " + std::to_string(epoch) + ", batch " +
                                           std::to_string(batch_no),
                                       make_snapshot(epoch));
            }
            net.backward(loss.logit_grad);
            opt.step(net.parameters());
            loss_sum += loss.mean_loss * static_cast<double>(chunk.size());
            correct += loss.correct;
            ++batch_no;
        }
        const auto val = score(net, validation_set);
        EpochMetrics m{epoch, loss_sum / static_cast<double>(train_set.size()),
                       static_cast<double>(correct) / static_cast<double>(train_set.size()), val.loss, val.accuracy};
        if (!std::isfinite(m.val_loss)) {
            throw TrainingDiverged("non-finite validation loss at epoch " + std::to_string(epoch),
                                   make_snapshot(epoch + 1));
        }
        result.history.push_back(m);
        if (m.val_acc > best_acc) {
            best_acc = m.val_acc;
            best_epoch = epoch;
            result.best = make_snapshot(epoch + 1);
        }
        if (options.observer) {
            options.observer(m, net);
        }
    }
    result.last = make_snapshot(cfg.epochs);
    if (options.resume && start_epoch >= cfg.epochs) {
        result.last = *options.resume;
    }
    return result;
}

} // namespace csifp::nn
