#pragma once

#include <optional>
#include <utility>

#include "cnnaa/tensor.hpp"

namespace cnnaa {

// Layer math for the network families: stride-1 "same" convolution, 3x3/2
// valid max pooling, affine layers and the 2-way softmax cross-entropy.
// Backward functions take the forward inputs plus the output gradient and
// return gradients w.r.t. every differentiable input.

/// Cross-correlation, stride 1, zero padding chosen so output spatial dims
/// equal input spatial dims. input [h x w x cin], kernel [kh x kw x cin x cout]
/// (spatial dims odd), bias [cout] -> [h x w x cout].
Tensor conv2d(const Tensor& input, const Tensor& kernel, const Tensor& bias);

struct Conv2dGrads {
    Tensor input;
    Tensor kernel;
    Tensor bias;
};
Conv2dGrads conv2d_backward(const Tensor& input, const Tensor& kernel, const Tensor& grad_out);

/// Valid 3x3 stride-2 max pooling; output dims floor((n-3)/2)+1.
Tensor maxpool3x3s2(const Tensor& input);
/// Routes gradient to the argmax of each window (first occurrence on ties).
Tensor maxpool3x3s2_backward(const Tensor& input, const Tensor& grad_out);

inline int pool_out_dim(int n) { return (n - 3) / 2 + 1; }

/// Affine map: out[o] = sum_i in[i] * W[i][o] (+ bias[o]). input [din],
/// weight [din x dout], bias optional [dout].
Tensor dense(const Tensor& input, const Tensor& weight, const Tensor* bias);

struct DenseGrads {
    Tensor input;
    Tensor weight;
    Tensor bias;  // empty when the layer has no bias
};
DenseGrads dense_backward(const Tensor& input, const Tensor& weight, bool has_bias,
                          const Tensor& grad_out);

Tensor relu(const Tensor& input);
/// grad of relu given the pre-activation values.
Tensor relu_backward(const Tensor& pre_activation, const Tensor& grad_out);

/// 2-way softmax cross entropy with max-subtraction. logits [2], label in {0,1}.
/// Returns (loss, dloss/dlogits = p - onehot(label)).
std::pair<double, Tensor> softmax_xent(const Tensor& logits, int label);

/// Stable 2-way softmax probability of class 1 for a (z0, z1) pair.
double softmax2_p1(float z0, float z1);

}  // namespace cnnaa
