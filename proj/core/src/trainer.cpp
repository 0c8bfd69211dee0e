#include "cnnaa/trainer.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

namespace cnnaa {

using nlohmann::json;

void TrainConfig::validate() const {
    if (batch_size == 0) throw std::invalid_argument("train config: batch_size must be positive");
    if (eval_every < 1) throw std::invalid_argument("train config: eval_every must be >= 1");
    if (patience < 1) throw std::invalid_argument("train config: patience must be >= 1");
    if (max_steps < 1) throw std::invalid_argument("train config: max_steps must be >= 1");
}

std::string TrainReport::to_json() const {
    json j;
    j["loss_curve"] = loss_curve;
    json dev = json::array();
    for (const auto& [step, acc] : dev_curve) dev.push_back({step, acc});
    j["dev_curve"] = dev;
    j["best_step"] = best_step;
    j["best_dev_accuracy"] = best_dev_accuracy;
    j["best_checkpoint_id"] = best_checkpoint_id;
    j["stop_reason"] = stop_reason;
    return j.dump(2);
}

void save_report(const TrainReport& report, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw FormatError("cannot open report file for writing: " + path);
    f << report.to_json() << "\n";
}

namespace {

LossResult part_loss(const Network& net, const std::vector<BatchItem>& batch,
                     bool normalize_by_positives) {
    if (batch.empty()) throw std::invalid_argument("loss: empty batch");
    const int num_attrs = net.spec.num_attrs;
    const std::size_t n = batch.size();
    for (const BatchItem& item : batch) {
        if (static_cast<int>(item.labels.size()) != num_attrs) {
            throw ShapeError("loss: batch item carries " + std::to_string(item.labels.size()) +
                             " labels but the network has " + std::to_string(num_attrs) + " attributes");
        }
    }

    // per-attribute normalizers
    std::vector<double> norm(num_attrs, static_cast<double>(n));
    if (normalize_by_positives) {
        for (int a = 0; a < num_attrs; ++a) {
            std::size_t pos = 0;
            for (const BatchItem& item : batch) pos += static_cast<std::size_t>(item.labels[a]);
            norm[a] = static_cast<double>(pos);  // 0 disables the attribute's term
        }
    }

    LossResult result;
    result.grads = NetworkGrads::zeros_like(net);
    double loss = 0.0;
    for (const BatchItem& item : batch) {
        ForwardTrace trace = forward_trace(net, item.crop);
        Tensor dlogits({2 * num_attrs});
        for (int a = 0; a < num_attrs; ++a) {
            if (norm[a] <= 0.0) continue;
            Tensor pair({2});
            pair.data[0] = trace.logits.data[2 * a];
            pair.data[1] = trace.logits.data[2 * a + 1];
            auto [l, g] = softmax_xent(pair, item.labels[a]);
            const double w = 1.0 / (static_cast<double>(num_attrs) * norm[a]);
            loss += w * l;
            dlogits.data[2 * a] = static_cast<float>(w * g.data[0]);
            dlogits.data[2 * a + 1] = static_cast<float>(w * g.data[1]);
        }
        backward(net, trace, dlogits, result.grads);
    }
    result.loss = loss;
    return result;
}

}  // namespace

LossResult binary_loss(const Network& net, const std::vector<BatchItem>& batch) {
    if (net.spec.num_attrs != 1) {
        throw ShapeError("binary_loss: network has more than one attribute");
    }
    return part_loss(net, batch, false);
}

LossResult multitask_loss(const Network& net, const std::vector<BatchItem>& batch,
                          bool normalize_by_positives) {
    return part_loss(net, batch, normalize_by_positives);
}

std::vector<double> eval_accuracy_per_attr(const Network& net, const EvalSet& set) {
    const int num_attrs = net.spec.num_attrs;
    if (set.crops.empty()) throw std::invalid_argument("eval: empty set");
    std::vector<std::size_t> correct(num_attrs, 0);
    for (std::size_t i = 0; i < set.crops.size(); ++i) {
        const ForwardResult r = forward(net, set.crops[i]);
        for (int a = 0; a < num_attrs; ++a) {
            const int pred = r.logits.at2(a, 1) > r.logits.at2(a, 0) ? 1 : 0;
            if (pred == set.labels[i][a]) ++correct[a];
        }
    }
    std::vector<double> acc(num_attrs);
    for (int a = 0; a < num_attrs; ++a) {
        acc[a] = static_cast<double>(correct[a]) / static_cast<double>(set.crops.size());
    }
    return acc;
}

double eval_accuracy_mean(const Network& net, const EvalSet& set) {
    const auto per = eval_accuracy_per_attr(net, set);
    double s = 0.0;
    for (double a : per) s += a;
    return s / static_cast<double>(per.size());
}

std::pair<Network, TrainReport> train(Network net, const BatchFn& next_batch, const EvalSet& dev,
                                      const TrainConfig& config) {
    config.validate();
    TrainReport report;
    Rng rng(config.seed);

    auto params = net.trainable();
    const std::vector<const Tensor*> cparams(params.begin(), params.end());
    AdamState adam = AdamState::init(cparams, config.lr, config.beta1, config.beta2, config.epsilon);
    const bool multi = net.spec.mode == Mode::kMulti;

    Network best = net;
    int evals_since_best = 0;
    bool stopped = false;

    for (long step = 1; step <= config.max_steps; ++step) {
        const std::vector<BatchItem> batch = next_batch(config.batch_size, rng);
        LossResult res = multi ? multitask_loss(net, batch, config.normalize_by_positives)
                               : binary_loss(net, batch);
        if (!std::isfinite(res.loss)) {
            report.stop_reason = "diverged";
            stopped = true;
            break;
        }
        report.loss_curve.push_back(res.loss);
        adam_step(params, res.grads.pointers(), adam);

        if (step % config.eval_every == 0) {
            const double acc = eval_accuracy_mean(net, dev);
            report.dev_curve.emplace_back(step, acc);
            if (acc > report.best_dev_accuracy) {
                report.best_dev_accuracy = acc;
                report.best_step = step;
                best = net;
                evals_since_best = 0;
            } else {
                ++evals_since_best;
            }
            if (evals_since_best >= config.patience) {
                report.stop_reason = "early_stop";
                stopped = true;
                break;
            }
        }
    }
    if (!stopped) report.stop_reason = "max_steps";

    if (report.best_step < 0) {
        // never evaluated: fall back to the final weights
        best = net;
        report.best_step = static_cast<long>(report.loss_curve.size());
    }
    report.best_checkpoint_id = "step-" + std::to_string(report.best_step);
    return {std::move(best), std::move(report)};
}

std::pair<Network, TrainReport> train(const NetworkSpec& spec, const BatchFn& next_batch,
                                      const EvalSet& dev, const TrainConfig& config) {
    return train(build(spec, config.seed), next_batch, dev, config);
}

Tensor embed(const Network& net, const Tensor& crop) {
    return forward(net, crop).embedding;
}

}  // namespace cnnaa
