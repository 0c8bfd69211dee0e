#pragma once

#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "cnnaa/adam.hpp"
#include "cnnaa/datapipe.hpp"
#include "cnnaa/netdef.hpp"

namespace cnnaa {

struct TrainConfig {
    std::size_t batch_size = 64;
    long eval_every = 100;   // steps between dev evaluations
    int patience = 5;        // evaluations without improvement before stopping
    long max_steps = 10000;
    std::uint64_t seed = 0;
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    // Eq-style alternative: normalize each attribute's term by its positive
    // count in the batch instead of the batch size.
    bool normalize_by_positives = false;

    void validate() const;
};

struct TrainReport {
    std::vector<double> loss_curve;                      // one entry per step
    std::vector<std::pair<long, double>> dev_curve;      // (step, mean accuracy)
    long best_step = -1;
    double best_dev_accuracy = -1.0;
    std::string best_checkpoint_id;
    std::string stop_reason;  // early_stop | max_steps | diverged

    std::string to_json() const;
};

void save_report(const TrainReport& report, const std::string& path);

struct LossResult {
    double loss = 0.0;
    NetworkGrads grads;
};

/// Mean 2-way cross entropy over the batch (single attribute), with backprop.
LossResult binary_loss(const Network& net, const std::vector<BatchItem>& batch);

/// Part loss: average over the part's attributes of the per-attribute mean
/// cross entropy. With one attribute this equals binary_loss exactly.
LossResult multitask_loss(const Network& net, const std::vector<BatchItem>& batch,
                          bool normalize_by_positives = false);

struct EvalSet {
    std::vector<Tensor> crops;
    std::vector<std::vector<int>> labels;  // per sample, one entry per attribute
};

/// Mean over attributes of per-attribute argmax accuracy.
double eval_accuracy_mean(const Network& net, const EvalSet& set);
std::vector<double> eval_accuracy_per_attr(const Network& net, const EvalSet& set);

using BatchFn = std::function<std::vector<BatchItem>(std::size_t batch_size, Rng& rng)>;

/// Adam training loop with dev-accuracy early stopping; returns the network
/// snapshot with the best dev accuracy. Deterministic for a fixed config.
std::pair<Network, TrainReport> train(Network initial, const BatchFn& next_batch,
                                      const EvalSet& dev, const TrainConfig& config);

std::pair<Network, TrainReport> train(const NetworkSpec& spec, const BatchFn& next_batch,
                                      const EvalSet& dev, const TrainConfig& config);

/// The shared last-FC activation for one crop.
Tensor embed(const Network& net, const Tensor& crop);

}  // namespace cnnaa
