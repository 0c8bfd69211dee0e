#include "cnnaa/budget.hpp"

#include <chrono>
#include <stdexcept>

namespace cnnaa {

void BudgetParams::validate() const {
    if (capacity_wh < 0.0 || normal_power_w < 0.0 || detector_power_w < 0.0 ||
        prediction_time_s < 0.0) {
        throw std::invalid_argument("budget: quantities must be non-negative");
    }
    if (alpha < 0.0 || alpha > 1.0) throw std::invalid_argument("budget: alpha must lie in [0,1]");
    if (beta < 0.0 || beta > 1.0) throw std::invalid_argument("budget: beta must lie in [0,1]");
}

double battery_life_hours(const BudgetParams& p) {
    p.validate();
    const double draw = p.normal_power_w + p.beta * p.alpha * p.detector_power_w;
    if (draw <= 0.0) throw std::invalid_argument("budget: total draw is zero");
    return p.capacity_wh / draw;
}

AuthInterval auth_interval(double prediction_time_s, double alpha) {
    if (alpha < 0.0 || alpha > 1.0) throw std::invalid_argument("auth_interval: alpha must lie in [0,1]");
    if (prediction_time_s < 0.0) throw std::invalid_argument("auth_interval: negative prediction time");
    AuthInterval out;
    if (alpha == 0.0) {
        out.never = true;
        return out;
    }
    out.seconds = prediction_time_s / alpha;
    return out;
}

BenchReport bench_forward(const std::vector<std::pair<std::string, const Network*>>& nets,
                          int repetitions, int warmup) {
    if (repetitions < 1) throw std::invalid_argument("bench_forward: repetitions must be >= 1");
    BenchReport report;
    report.repetitions = repetitions;
    for (const auto& [name, net] : nets) {
        Tensor image({net->spec.input_h, net->spec.input_w, 3});
        image.fill(0.5f);
        for (int i = 0; i < warmup; ++i) (void)forward(*net, image);
        const auto start = std::chrono::steady_clock::now();
        for (int i = 0; i < repetitions; ++i) (void)forward(*net, image);
        const auto stop = std::chrono::steady_clock::now();
        const double secs = std::chrono::duration<double>(stop - start).count() /
                            static_cast<double>(repetitions);
        report.rows.push_back({name, net->param_count(), secs});
        report.total_seconds += secs;
    }
    return report;
}

std::size_t conv_macs(int h, int w, int kh, int kw, int cin, int cout) {
    return static_cast<std::size_t>(h) * w * kh * kw * cin * cout;
}

std::size_t dense_macs(int din, int dout) {
    return static_cast<std::size_t>(din) * dout;
}

std::size_t count_macs(const NetworkSpec& spec) {
    spec.validate();
    std::size_t macs = 0;
    int h = spec.input_h, w = spec.input_w;
    if (spec.family == Family::kDeep) {
        macs += conv_macs(h, w, 7, 7, 3, 32);
        h = pool_out_dim(h);
        w = pool_out_dim(w);
        macs += 3 * conv_macs(h, w, 5, 5, 32, 32);
        h = pool_out_dim(h);
        w = pool_out_dim(w);
        macs += 4 * conv_macs(h, w, 3, 3, 32, 32);
        h = pool_out_dim(h);
        w = pool_out_dim(w);
        macs += dense_macs(h * w * 32, 64);
        macs += dense_macs(64, 32);
        macs += dense_macs(32, 2 * spec.num_attrs);
    } else {
        macs += conv_macs(h, w, 7, 7, 3, 128);
        h = pool_out_dim(h);
        w = pool_out_dim(w);
        macs += conv_macs(h, w, 5, 5, 128, 128);
        h = pool_out_dim(h);
        w = pool_out_dim(w);
        macs += conv_macs(h, w, 3, 3, 128, 128);
        h = pool_out_dim(h);
        w = pool_out_dim(w);
        macs += dense_macs(h * w * 128, 128);
        macs += dense_macs(128, 128);
        macs += dense_macs(128, 2 * spec.num_attrs);
    }
    return macs;
}

}  // namespace cnnaa
