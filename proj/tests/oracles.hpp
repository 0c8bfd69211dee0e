#pragma once

// Independent reference implementations the tests check the library against.
// These stay deliberately naive and share no code with the library paths they
// validate.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <vector>

#include "cnnaa/datapipe.hpp"
#include "cnnaa/netdef.hpp"
#include "cnnaa/rng.hpp"
#include "cnnaa/tensor.hpp"

namespace oracles {

/// Six-loop direct convolution, stride 1, same zero padding.
inline cnnaa::Tensor conv2d_naive(const cnnaa::Tensor& in, const cnnaa::Tensor& k,
                                  const cnnaa::Tensor& bias) {
    const int h = in.dim(0), w = in.dim(1), cin = in.dim(2);
    const int kh = k.dim(0), kw = k.dim(1), cout = k.dim(3);
    cnnaa::Tensor out({h, w, cout});
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            for (int co = 0; co < cout; ++co) {
                double acc = bias.data[co];
                for (int ky = 0; ky < kh; ++ky)
                    for (int kx = 0; kx < kw; ++kx)
                        for (int ci = 0; ci < cin; ++ci) {
                            const int iy = y + ky - kh / 2;
                            const int ix = x + kx - kw / 2;
                            if (iy < 0 || iy >= h || ix < 0 || ix >= w) continue;
                            acc += static_cast<double>(in.at3(iy, ix, ci)) *
                                   k.data[((static_cast<std::size_t>(ky) * kw + kx) * cin + ci) * cout + co];
                        }
                out.at3(y, x, co) = static_cast<float>(acc);
            }
    return out;
}

/// Explicit dot-product affine map.
inline cnnaa::Tensor dense_naive(const cnnaa::Tensor& in, const cnnaa::Tensor& w,
                                 const cnnaa::Tensor* bias) {
    const int din = w.dim(0), dout = w.dim(1);
    cnnaa::Tensor out({dout});
    for (int o = 0; o < dout; ++o) {
        double acc = bias ? bias->data[o] : 0.0;
        for (int i = 0; i < din; ++i) acc += static_cast<double>(in.data[i]) * w.at2(i, o);
        out.data[o] = static_cast<float>(acc);
    }
    return out;
}

/// Central finite difference of a scalar function w.r.t. one tensor entry.
/// Divides by the perturbation the fp32 storage actually applied.
inline double central_diff(const std::function<double()>& f, float& entry, double h = 1e-3) {
    const float saved = entry;
    const float up_v = static_cast<float>(saved + h);
    const float down_v = static_cast<float>(saved - h);
    entry = up_v;
    const double up = f();
    entry = down_v;
    const double down = f();
    entry = saved;
    return (up - down) / (static_cast<double>(up_v) - static_cast<double>(down_v));
}

/// Double-precision scalar <grad_out, conv2d(in, k, b)> for stable finite
/// differences (the fp32 op itself is too noisy to difference through).
inline double conv2d_scalar_double(const cnnaa::Tensor& in, const cnnaa::Tensor& k,
                                   const cnnaa::Tensor& b, const cnnaa::Tensor& gout) {
    const int h = in.dim(0), w = in.dim(1), cin = in.dim(2);
    const int kh = k.dim(0), kw = k.dim(1), cout = k.dim(3);
    double s = 0.0;
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            for (int co = 0; co < cout; ++co) {
                double acc = b.data[co];
                for (int ky = 0; ky < kh; ++ky)
                    for (int kx = 0; kx < kw; ++kx) {
                        const int iy = y + ky - kh / 2, ix = x + kx - kw / 2;
                        if (iy < 0 || iy >= h || ix < 0 || ix >= w) continue;
                        for (int ci = 0; ci < cin; ++ci) {
                            acc += static_cast<double>(in.at3(iy, ix, ci)) *
                                   k.data[((static_cast<std::size_t>(ky) * kw + kx) * cin + ci) * cout + co];
                        }
                    }
                s += acc * gout.at3(y, x, co);
            }
    return s;
}

/// Double-precision scalar <grad_out, relu(dense(in, w))>.
inline double dense_relu_scalar_double(const cnnaa::Tensor& in, const cnnaa::Tensor& w,
                                       const cnnaa::Tensor& gout) {
    const int din = w.dim(0), dout = w.dim(1);
    double s = 0.0;
    for (int o = 0; o < dout; ++o) {
        double acc = 0.0;
        for (int i = 0; i < din; ++i) acc += static_cast<double>(in.data[i]) * w.at2(i, o);
        s += std::max(acc, 0.0) * gout.data[o];
    }
    return s;
}

/// Double-precision scalar <grad_out, maxpool3x3s2(in)>.
inline double maxpool_scalar_double(const cnnaa::Tensor& in, const cnnaa::Tensor& gout) {
    const int oh = gout.dim(0), ow = gout.dim(1), c = gout.dim(2);
    double s = 0.0;
    for (int oy = 0; oy < oh; ++oy)
        for (int ox = 0; ox < ow; ++ox)
            for (int ch = 0; ch < c; ++ch) {
                double best = -std::numeric_limits<double>::infinity();
                for (int ky = 0; ky < 3; ++ky)
                    for (int kx = 0; kx < 3; ++kx)
                        best = std::max(best, static_cast<double>(in.at3(oy * 2 + ky, ox * 2 + kx, ch)));
                s += best * gout.at3(oy, ox, ch);
            }
    return s;
}

inline void fill_random(cnnaa::Tensor& t, cnnaa::Rng& rng, double lo = -1.0, double hi = 1.0) {
    for (float& v : t.data) v = static_cast<float>(rng.uniform(lo, hi));
}

/// Max relative error between analytic and finite-difference gradients,
/// guarded against tiny denominators.
inline double grad_rel_error(double analytic, double numeric) {
    const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-4});
    return std::abs(analytic - numeric) / denom;
}

/// Double-precision mirror of the whole network forward plus the part loss;
/// used to finite-difference end-to-end through fp32 parameters.
inline double net_loss_double(const cnnaa::Network& net,
                              const std::vector<cnnaa::BatchItem>& batch,
                              bool normalize_by_positives = false) {
    const int num_attrs = net.spec.num_attrs;
    std::vector<double> norm(num_attrs, static_cast<double>(batch.size()));
    if (normalize_by_positives) {
        for (int a = 0; a < num_attrs; ++a) {
            double pos = 0.0;
            for (const auto& item : batch) pos += item.labels[a];
            norm[a] = pos;
        }
    }

    double total = 0.0;
    for (const auto& item : batch) {
        // forward in double
        std::vector<double> act(item.crop.data.begin(), item.crop.data.end());
        int h = item.crop.dim(0), w = item.crop.dim(1), c = item.crop.dim(2);
        for (const cnnaa::Layer& l : net.layers) {
            switch (l.kind) {
                case cnnaa::LayerKind::kConv: {
                    const int kh = l.weight.dim(0), kw = l.weight.dim(1), cout = l.weight.dim(3);
                    std::vector<double> out(static_cast<std::size_t>(h) * w * cout);
                    for (int y = 0; y < h; ++y)
                        for (int x = 0; x < w; ++x)
                            for (int co = 0; co < cout; ++co) {
                                double acc = l.bias.data[co];
                                for (int ky = 0; ky < kh; ++ky)
                                    for (int kx = 0; kx < kw; ++kx) {
                                        const int iy = y + ky - kh / 2, ix = x + kx - kw / 2;
                                        if (iy < 0 || iy >= h || ix < 0 || ix >= w) continue;
                                        for (int ci = 0; ci < c; ++ci) {
                                            acc += act[(static_cast<std::size_t>(iy) * w + ix) * c + ci] *
                                                   l.weight.data[((static_cast<std::size_t>(ky) * kw + kx) * c + ci) * cout + co];
                                        }
                                    }
                                out[(static_cast<std::size_t>(y) * w + x) * cout + co] = std::max(acc, 0.0);
                            }
                    act = std::move(out);
                    c = cout;
                    break;
                }
                case cnnaa::LayerKind::kPool: {
                    const int oh = (h - 3) / 2 + 1, ow = (w - 3) / 2 + 1;
                    std::vector<double> out(static_cast<std::size_t>(oh) * ow * c);
                    for (int oy = 0; oy < oh; ++oy)
                        for (int ox = 0; ox < ow; ++ox)
                            for (int ch = 0; ch < c; ++ch) {
                                double best = -std::numeric_limits<double>::infinity();
                                for (int ky = 0; ky < 3; ++ky)
                                    for (int kx = 0; kx < 3; ++kx)
                                        best = std::max(best,
                                                        act[(static_cast<std::size_t>(oy * 2 + ky) * w + ox * 2 + kx) * c + ch]);
                                out[(static_cast<std::size_t>(oy) * ow + ox) * c + ch] = best;
                            }
                    act = std::move(out);
                    h = oh;
                    w = ow;
                    break;
                }
                case cnnaa::LayerKind::kDense: {
                    const int din = l.weight.dim(0), dout = l.weight.dim(1);
                    std::vector<double> out(dout);
                    for (int o = 0; o < dout; ++o) {
                        double acc = l.bias.data[o];
                        for (int i = 0; i < din; ++i) acc += act[i] * l.weight.at2(i, o);
                        out[o] = std::max(acc, 0.0);
                    }
                    act = std::move(out);
                    break;
                }
                case cnnaa::LayerKind::kEmbed: {
                    const int din = l.weight.dim(0), dout = l.weight.dim(1);
                    std::vector<double> out(dout);
                    for (int o = 0; o < dout; ++o) {
                        double acc = 0.0;
                        for (int i = 0; i < din; ++i) acc += (act[i] + l.bias.data[i]) * l.weight.at2(i, o);
                        out[o] = std::max(acc, 0.0);
                    }
                    act = std::move(out);
                    break;
                }
                case cnnaa::LayerKind::kLogits: {
                    const int din = l.weight.dim(0), dout = l.weight.dim(1);
                    std::vector<double> out(dout);
                    for (int o = 0; o < dout; ++o) {
                        double acc = 0.0;
                        for (int i = 0; i < din; ++i) acc += act[i] * l.weight.at2(i, o);
                        out[o] = acc;
                    }
                    act = std::move(out);
                    break;
                }
            }
        }
        for (int a = 0; a < num_attrs; ++a) {
            if (norm[a] <= 0.0) continue;
            const double z0 = act[2 * a], z1 = act[2 * a + 1];
            const double m = std::max(z0, z1);
            const double lse = m + std::log(std::exp(z0 - m) + std::exp(z1 - m));
            const double loss = lse - (item.labels[a] ? z1 : z0);
            total += loss / (static_cast<double>(num_attrs) * norm[a]);
        }
    }
    return total;
}

/// Exhaustive-threshold ROC/EER oracle: direct counting at every candidate
/// threshold (pooled-score midpoints plus sentinels), then the same linear
/// interpolation rule re-derived independently.
struct BruteRoc {
    std::vector<double> thresholds;
    std::vector<double> far;
    std::vector<double> tar;
    double eer = 0.5;
};

inline BruteRoc roc_brute(const std::vector<double>& genuine, const std::vector<double>& impostor) {
    std::vector<double> pooled = genuine;
    pooled.insert(pooled.end(), impostor.begin(), impostor.end());
    std::sort(pooled.begin(), pooled.end());
    pooled.erase(std::unique(pooled.begin(), pooled.end()), pooled.end());

    BruteRoc roc;
    roc.thresholds.push_back(std::numeric_limits<double>::infinity());
    for (std::size_t i = pooled.size(); i-- > 1;) {
        roc.thresholds.push_back(0.5 * (pooled[i - 1] + pooled[i]));
    }
    roc.thresholds.push_back(-std::numeric_limits<double>::infinity());

    for (double t : roc.thresholds) {
        std::size_t fa = 0, ta = 0;
        for (double s : impostor) {
            if (t == -std::numeric_limits<double>::infinity() || s >= t) ++fa;
        }
        for (double s : genuine) {
            if (t == -std::numeric_limits<double>::infinity() || s >= t) ++ta;
        }
        roc.far.push_back(static_cast<double>(fa) / impostor.size());
        roc.tar.push_back(static_cast<double>(ta) / genuine.size());
    }

    for (std::size_t i = 0; i < roc.thresholds.size(); ++i) {
        const double diff = roc.far[i] - (1.0 - roc.tar[i]);
        if (diff >= 0.0) {
            if (diff == 0.0 || i == 0) {
                roc.eer = roc.far[i];
            } else {
                const double f1 = roc.far[i - 1], r1 = 1.0 - roc.tar[i - 1];
                const double f2 = roc.far[i], r2 = 1.0 - roc.tar[i];
                const double denom = (f2 - f1) - (r2 - r1);
                const double s = denom != 0.0 ? (r1 - f1) / denom : 0.5;
                roc.eer = f1 + s * (f2 - f1);
            }
            break;
        }
    }
    return roc;
}

/// Best cluster-accuracy over label permutations via bitmask assignment DP.
inline double matched_accuracy(const std::vector<int>& truth, const std::vector<int>& labels, int k) {
    std::vector<std::vector<int>> agree(k, std::vector<int>(k, 0));
    for (std::size_t i = 0; i < truth.size(); ++i) agree[truth[i]][labels[i]] += 1;
    const int full = 1 << k;
    std::vector<long> best(full, -1);
    best[0] = 0;
    for (int mask = 0; mask < full; ++mask) {
        if (best[mask] < 0) continue;
        const int row = __builtin_popcount(static_cast<unsigned>(mask));
        if (row >= k) continue;
        for (int col = 0; col < k; ++col) {
            if (mask & (1 << col)) continue;
            const int next = mask | (1 << col);
            best[next] = std::max(best[next], best[mask] + agree[row][col]);
        }
    }
    return static_cast<double>(best[full - 1]) / static_cast<double>(truth.size());
}

}  // namespace oracles
