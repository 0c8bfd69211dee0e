#include "cnnaa/adam.hpp"

#include <cmath>

namespace cnnaa {

AdamState AdamState::init(const std::vector<const Tensor*>& params, double lr, double beta1,
                          double beta2, double epsilon) {
    AdamState s;
    s.lr = lr;
    s.beta1 = beta1;
    s.beta2 = beta2;
    s.epsilon = epsilon;
    s.m.reserve(params.size());
    s.v.reserve(params.size());
    for (const Tensor* p : params) {
        s.m.emplace_back(p->shape);
        s.v.emplace_back(p->shape);
    }
    return s;
}

void adam_step(const std::vector<Tensor*>& params, const std::vector<const Tensor*>& grads,
               AdamState& state) {
    if (params.size() != grads.size() || params.size() != state.m.size()) {
        throw ShapeError("adam_step: parameter/gradient/state list sizes disagree");
    }
    state.step += 1;
    const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
    for (std::size_t t = 0; t < params.size(); ++t) {
        Tensor& p = *params[t];
        const Tensor& g = *grads[t];
        require_same_shape(p, g, "adam_step");
        require_same_shape(p, state.m[t], "adam_step");
        Tensor& m = state.m[t];
        Tensor& v = state.v[t];
        for (std::size_t i = 0; i < p.data.size(); ++i) {
            const double gi = g.data[i];
            const double mi = state.beta1 * m.data[i] + (1.0 - state.beta1) * gi;
            const double vi = state.beta2 * v.data[i] + (1.0 - state.beta2) * gi * gi;
            m.data[i] = static_cast<float>(mi);
            v.data[i] = static_cast<float>(vi);
            const double mhat = mi / bc1;
            const double vhat = vi / bc2;
            p.data[i] = static_cast<float>(p.data[i] - state.lr * mhat / (std::sqrt(vhat) + state.epsilon));
        }
    }
}

}  // namespace cnnaa
