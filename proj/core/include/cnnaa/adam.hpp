#pragma once

#include <vector>

#include "cnnaa/tensor.hpp"

namespace cnnaa {

/// Bias-corrected Adam over a flat list of parameter tensors. m and v mirror
/// the parameter shapes; v entries stay non-negative.
struct AdamState {
    long step = 0;
    std::vector<Tensor> m;
    std::vector<Tensor> v;
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;

    static AdamState init(const std::vector<const Tensor*>& params, double lr = 1e-3,
                          double beta1 = 0.9, double beta2 = 0.999, double epsilon = 1e-8);
};

/// One Adam update; increments state.step. Shapes of params/grads/state must agree.
void adam_step(const std::vector<Tensor*>& params, const std::vector<const Tensor*>& grads,
               AdamState& state);

}  // namespace cnnaa
