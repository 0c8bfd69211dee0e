#include "cnnaa/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace cnnaa {

namespace {

void check_conv_shapes(const Tensor& input, const Tensor& kernel, const Tensor* bias) {
    if (input.rank() != 3) throw ShapeError("conv2d: input must be h x w x cin, got " + input.shape_str());
    if (kernel.rank() != 4) throw ShapeError("conv2d: kernel must be kh x kw x cin x cout, got " + kernel.shape_str());
    if (kernel.dim(0) % 2 == 0 || kernel.dim(1) % 2 == 0) {
        throw ShapeError("conv2d: kernel spatial dims must be odd, got " + kernel.shape_str());
    }
    if (input.dim(2) != kernel.dim(2)) {
        throw ShapeError("conv2d: input channels " + std::to_string(input.dim(2)) +
                         " do not match kernel channels " + std::to_string(kernel.dim(2)));
    }
    if (bias != nullptr && (bias->rank() != 1 || bias->dim(0) != kernel.dim(3))) {
        throw ShapeError("conv2d: bias must be [cout]");
    }
}

}  // namespace

Tensor conv2d(const Tensor& input, const Tensor& kernel, const Tensor& bias) {
    check_conv_shapes(input, kernel, &bias);
    const int h = input.dim(0), w = input.dim(1), cin = input.dim(2);
    const int kh = kernel.dim(0), kw = kernel.dim(1), cout = kernel.dim(3);
    const int ph = kh / 2, pw = kw / 2;

    Tensor out({h, w, cout});
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            float* o = &out.data[(static_cast<std::size_t>(y) * w + x) * cout];
            for (int c = 0; c < cout; ++c) o[c] = bias.data[c];
            for (int ky = 0; ky < kh; ++ky) {
                const int iy = y + ky - ph;
                if (iy < 0 || iy >= h) continue;
                for (int kx = 0; kx < kw; ++kx) {
                    const int ix = x + kx - pw;
                    if (ix < 0 || ix >= w) continue;
                    const float* in = &input.data[(static_cast<std::size_t>(iy) * w + ix) * cin];
                    const float* kr = &kernel.data[((static_cast<std::size_t>(ky) * kw + kx) * cin) * cout];
                    for (int ci = 0; ci < cin; ++ci) {
                        const float v = in[ci];
                        const float* kc = kr + static_cast<std::size_t>(ci) * cout;
                        for (int c = 0; c < cout; ++c) o[c] += v * kc[c];
                    }
                }
            }
        }
    }
    return out;
}

Conv2dGrads conv2d_backward(const Tensor& input, const Tensor& kernel, const Tensor& grad_out) {
    check_conv_shapes(input, kernel, nullptr);
    const int h = input.dim(0), w = input.dim(1), cin = input.dim(2);
    const int kh = kernel.dim(0), kw = kernel.dim(1), cout = kernel.dim(3);
    const int ph = kh / 2, pw = kw / 2;
    if (grad_out.rank() != 3 || grad_out.dim(0) != h || grad_out.dim(1) != w || grad_out.dim(2) != cout) {
        throw ShapeError("conv2d_backward: grad_out shape mismatch");
    }

    Conv2dGrads g;
    g.input = Tensor({h, w, cin});
    g.kernel = Tensor({kh, kw, cin, cout});
    g.bias = Tensor({cout});

    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const float* go = &grad_out.data[(static_cast<std::size_t>(y) * w + x) * cout];
            for (int c = 0; c < cout; ++c) g.bias.data[c] += go[c];
            for (int ky = 0; ky < kh; ++ky) {
                const int iy = y + ky - ph;
                if (iy < 0 || iy >= h) continue;
                for (int kx = 0; kx < kw; ++kx) {
                    const int ix = x + kx - pw;
                    if (ix < 0 || ix >= w) continue;
                    const float* in = &input.data[(static_cast<std::size_t>(iy) * w + ix) * cin];
                    float* gin = &g.input.data[(static_cast<std::size_t>(iy) * w + ix) * cin];
                    for (int ci = 0; ci < cin; ++ci) {
                        const std::size_t kbase = ((static_cast<std::size_t>(ky) * kw + kx) * cin + ci) * cout;
                        const float* kc = &kernel.data[kbase];
                        float* gk = &g.kernel.data[kbase];
                        const float v = in[ci];
                        float acc = 0.0f;
                        for (int c = 0; c < cout; ++c) {
                            gk[c] += v * go[c];
                            acc += kc[c] * go[c];
                        }
                        gin[ci] += acc;
                    }
                }
            }
        }
    }
    return g;
}

Tensor maxpool3x3s2(const Tensor& input) {
    if (input.rank() != 3) throw ShapeError("maxpool3x3s2: input must be h x w x c");
    const int h = input.dim(0), w = input.dim(1), c = input.dim(2);
    if (h < 3 || w < 3) {
        throw ShapeError("maxpool3x3s2: input " + input.shape_str() + " smaller than 3x3 window");
    }
    const int oh = pool_out_dim(h), ow = pool_out_dim(w);
    Tensor out({oh, ow, c});
    for (int oy = 0; oy < oh; ++oy) {
        for (int ox = 0; ox < ow; ++ox) {
            for (int ch = 0; ch < c; ++ch) {
                float best = -std::numeric_limits<float>::infinity();
                for (int ky = 0; ky < 3; ++ky) {
                    for (int kx = 0; kx < 3; ++kx) {
                        best = std::max(best, input.at3(oy * 2 + ky, ox * 2 + kx, ch));
                    }
                }
                out.at3(oy, ox, ch) = best;
            }
        }
    }
    return out;
}

Tensor maxpool3x3s2_backward(const Tensor& input, const Tensor& grad_out) {
    const int h = input.dim(0), w = input.dim(1), c = input.dim(2);
    const int oh = pool_out_dim(h), ow = pool_out_dim(w);
    if (grad_out.rank() != 3 || grad_out.dim(0) != oh || grad_out.dim(1) != ow || grad_out.dim(2) != c) {
        throw ShapeError("maxpool3x3s2_backward: grad_out shape mismatch");
    }
    Tensor gin({h, w, c});
    for (int oy = 0; oy < oh; ++oy) {
        for (int ox = 0; ox < ow; ++ox) {
            for (int ch = 0; ch < c; ++ch) {
                // first occurrence wins on ties, scanning the window row-major
                float best = -std::numeric_limits<float>::infinity();
                int by = 0, bx = 0;
                for (int ky = 0; ky < 3; ++ky) {
                    for (int kx = 0; kx < 3; ++kx) {
                        const float v = input.at3(oy * 2 + ky, ox * 2 + kx, ch);
                        if (v > best) {
                            best = v;
                            by = oy * 2 + ky;
                            bx = ox * 2 + kx;
                        }
                    }
                }
                gin.at3(by, bx, ch) += grad_out.at3(oy, ox, ch);
            }
        }
    }
    return gin;
}

Tensor dense(const Tensor& input, const Tensor& weight, const Tensor* bias) {
    if (input.rank() != 1) throw ShapeError("dense: input must be rank 1, got " + input.shape_str());
    if (weight.rank() != 2) throw ShapeError("dense: weight must be din x dout, got " + weight.shape_str());
    const int din = weight.dim(0), dout = weight.dim(1);
    if (input.dim(0) != din) {
        throw ShapeError("dense: input dim " + std::to_string(input.dim(0)) + " does not match weight rows " +
                         std::to_string(din));
    }
    if (bias != nullptr && (bias->rank() != 1 || bias->dim(0) != dout)) {
        throw ShapeError("dense: bias must be [dout]");
    }
    Tensor out({dout});
    if (bias != nullptr) out.data = bias->data;
    for (int i = 0; i < din; ++i) {
        const float v = input.data[i];
        const float* wr = &weight.data[static_cast<std::size_t>(i) * dout];
        for (int o = 0; o < dout; ++o) out.data[o] += v * wr[o];
    }
    return out;
}

DenseGrads dense_backward(const Tensor& input, const Tensor& weight, bool has_bias,
                          const Tensor& grad_out) {
    const int din = weight.dim(0), dout = weight.dim(1);
    if (grad_out.rank() != 1 || grad_out.dim(0) != dout) {
        throw ShapeError("dense_backward: grad_out shape mismatch");
    }
    DenseGrads g;
    g.input = Tensor({din});
    g.weight = Tensor({din, dout});
    if (has_bias) g.bias = grad_out;
    for (int i = 0; i < din; ++i) {
        const float v = input.data[i];
        const float* wr = &weight.data[static_cast<std::size_t>(i) * dout];
        float* gw = &g.weight.data[static_cast<std::size_t>(i) * dout];
        float acc = 0.0f;
        for (int o = 0; o < dout; ++o) {
            gw[o] = v * grad_out.data[o];
            acc += wr[o] * grad_out.data[o];
        }
        g.input.data[i] = acc;
    }
    return g;
}

Tensor relu(const Tensor& input) {
    Tensor out = input;
    for (float& v : out.data) v = v > 0.0f ? v : 0.0f;
    return out;
}

Tensor relu_backward(const Tensor& pre_activation, const Tensor& grad_out) {
    require_same_shape(pre_activation, grad_out, "relu_backward");
    Tensor gin = grad_out;
    for (std::size_t i = 0; i < gin.data.size(); ++i) {
        if (pre_activation.data[i] <= 0.0f) gin.data[i] = 0.0f;
    }
    return gin;
}

double softmax2_p1(float z0, float z1) {
    const double m = std::max(z0, z1);
    const double e0 = std::exp(static_cast<double>(z0) - m);
    const double e1 = std::exp(static_cast<double>(z1) - m);
    return e1 / (e0 + e1);
}

std::pair<double, Tensor> softmax_xent(const Tensor& logits, int label) {
    if (logits.rank() != 1 || logits.dim(0) != 2) {
        throw ShapeError("softmax_xent: logits must be [2]");
    }
    if (label != 0 && label != 1) throw std::invalid_argument("softmax_xent: label must be 0 or 1");
    const double z0 = logits.data[0], z1 = logits.data[1];
    const double m = std::max(z0, z1);
    const double e0 = std::exp(z0 - m), e1 = std::exp(z1 - m);
    const double sum = e0 + e1;
    const double p0 = e0 / sum, p1 = e1 / sum;
    // -log p(label) = log(sum) - (z_label - m)
    const double loss = std::log(sum) - ((label == 0 ? z0 : z1) - m);
    Tensor grad({2});
    grad.data[0] = static_cast<float>(p0 - (label == 0 ? 1.0 : 0.0));
    grad.data[1] = static_cast<float>(p1 - (label == 1 ? 1.0 : 0.0));
    return {loss, grad};
}

}  // namespace cnnaa
