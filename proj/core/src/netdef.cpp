#include "cnnaa/netdef.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace cnnaa {

namespace {

constexpr char kMagic[6] = {'C', 'N', 'N', 'A', 'A', '1'};
constexpr std::uint8_t kVersion = 1;

struct LayerPlan {
    LayerKind kind;
    std::string name;
    std::vector<int> weight_shape;  // empty for pool
    int bias_len = 0;               // 0 = no bias
};

/// The layer list of one family instantiated for a spec. The embedding FC
/// carries its bias on the input side (size = its input width), which is what
/// reproduces the published per-network parameter counts.
std::vector<LayerPlan> plan_layers(const NetworkSpec& spec) {
    spec.validate();
    const auto [ph, pw] = pre_fc_spatial(spec);
    const int logits_out = 2 * spec.num_attrs;
    std::vector<LayerPlan> plan;
    if (spec.family == Family::kDeep) {
        const int c = 32;
        plan.push_back({LayerKind::kConv, "conv1", {7, 7, 3, c}, c});
        plan.push_back({LayerKind::kPool, "pool1", {}, 0});
        for (int i = 2; i <= 4; ++i)
            plan.push_back({LayerKind::kConv, "conv" + std::to_string(i), {5, 5, c, c}, c});
        plan.push_back({LayerKind::kPool, "pool2", {}, 0});
        for (int i = 5; i <= 8; ++i)
            plan.push_back({LayerKind::kConv, "conv" + std::to_string(i), {3, 3, c, c}, c});
        plan.push_back({LayerKind::kPool, "pool3", {}, 0});
        const int dim = ph * pw * c;
        plan.push_back({LayerKind::kDense, "fc1", {dim, 64}, 64});
        plan.push_back({LayerKind::kEmbed, "fc2", {64, 32}, 64});
        plan.push_back({LayerKind::kLogits, "logits", {32, logits_out}, 0});
    } else {
        const int c = 128;
        plan.push_back({LayerKind::kConv, "conv1", {7, 7, 3, c}, c});
        plan.push_back({LayerKind::kPool, "pool1", {}, 0});
        plan.push_back({LayerKind::kConv, "conv2", {5, 5, c, c}, c});
        plan.push_back({LayerKind::kPool, "pool2", {}, 0});
        plan.push_back({LayerKind::kConv, "conv3", {3, 3, c, c}, c});
        plan.push_back({LayerKind::kPool, "pool3", {}, 0});
        const int dim = ph * pw * c;
        plan.push_back({LayerKind::kDense, "fc1", {dim, 128}, 128});
        plan.push_back({LayerKind::kEmbed, "fc2", {128, 128}, 128});
        plan.push_back({LayerKind::kLogits, "logits", {128, logits_out}, 0});
    }
    return plan;
}

}  // namespace

void NetworkSpec::validate() const {
    if (input_h <= 0 || input_w <= 0) throw ShapeError("network spec: input dims must be positive");
    if (num_attrs < 1) throw ShapeError("network spec: num_attrs must be >= 1");
    if (mode == Mode::kBinary && num_attrs != 1) {
        throw ShapeError("network spec: binary mode requires num_attrs == 1");
    }
    int h = input_h, w = input_w;
    for (int stage = 0; stage < 3; ++stage) {
        if (h < 3 || w < 3) {
            throw ShapeError("network spec: spatial underflow at pool stage " + std::to_string(stage + 1) +
                             " for input " + std::to_string(input_h) + "x" + std::to_string(input_w));
        }
        h = pool_out_dim(h);
        w = pool_out_dim(w);
    }
}

std::pair<int, int> pre_fc_spatial(const NetworkSpec& spec) {
    int h = spec.input_h, w = spec.input_w;
    for (int stage = 0; stage < 3; ++stage) {
        if (h < 3 || w < 3) {
            throw ShapeError("pre_fc_spatial: spatial underflow for input " + std::to_string(spec.input_h) +
                             "x" + std::to_string(spec.input_w));
        }
        h = pool_out_dim(h);
        w = pool_out_dim(w);
    }
    return {h, w};
}

std::vector<Tensor*> Network::trainable() {
    std::vector<Tensor*> out;
    for (Layer& l : layers) {
        if (!l.weight.data.empty()) out.push_back(&l.weight);
        if (l.has_bias()) out.push_back(&l.bias);
    }
    return out;
}

std::vector<const Tensor*> Network::trainable() const {
    std::vector<const Tensor*> out;
    for (const Layer& l : layers) {
        if (!l.weight.data.empty()) out.push_back(&l.weight);
        if (l.has_bias()) out.push_back(&l.bias);
    }
    return out;
}

std::size_t Network::param_count() const {
    std::size_t n = 0;
    for (const Tensor* t : trainable()) n += t->numel();
    return n;
}

Network build(const NetworkSpec& spec, std::uint64_t seed) {
    Network net;
    net.spec = spec;
    Rng rng(seed);
    for (const LayerPlan& lp : plan_layers(spec)) {
        Layer layer;
        layer.kind = lp.kind;
        layer.name = lp.name;
        if (!lp.weight_shape.empty()) {
            layer.weight = Tensor(lp.weight_shape);
            std::size_t fan_in = 1;
            for (std::size_t i = 0; i + 1 < lp.weight_shape.size(); ++i) {
                fan_in *= static_cast<std::size_t>(lp.weight_shape[i]);
            }
            const double std = std::sqrt(2.0 / static_cast<double>(fan_in));
            for (float& v : layer.weight.data) v = static_cast<float>(rng.gaussian() * std);
        }
        if (lp.bias_len > 0) layer.bias = Tensor({lp.bias_len});
        net.layers.push_back(std::move(layer));
    }
    return net;
}

std::size_t count_params(const NetworkSpec& spec) {
    std::size_t n = 0;
    for (const LayerPlan& lp : plan_layers(spec)) {
        std::size_t w = lp.weight_shape.empty() ? 0 : 1;
        for (int d : lp.weight_shape) w *= static_cast<std::size_t>(d);
        n += w + static_cast<std::size_t>(lp.bias_len);
    }
    return n;
}

ForwardResult forward(const Network& net, const Tensor& image) {
    ForwardTrace t = forward_trace(net, image);
    ForwardResult r;
    r.embedding = std::move(t.embedding);
    r.logits = Tensor({net.spec.num_attrs, 2}, std::move(t.logits.data));
    return r;
}

ForwardTrace forward_trace(const Network& net, const Tensor& image) {
    const NetworkSpec& spec = net.spec;
    if (image.rank() != 3 || image.dim(0) != spec.input_h || image.dim(1) != spec.input_w ||
        image.dim(2) != 3) {
        throw ShapeError("forward: image " + image.shape_str() + " does not match spec input " +
                         std::to_string(spec.input_h) + "x" + std::to_string(spec.input_w) + "x3");
    }
    ForwardTrace trace;
    trace.inputs.resize(net.layers.size());
    trace.pre.resize(net.layers.size());

    Tensor act = image;
    for (std::size_t i = 0; i < net.layers.size(); ++i) {
        const Layer& l = net.layers[i];
        switch (l.kind) {
            case LayerKind::kConv: {
                trace.inputs[i] = act;
                Tensor z = conv2d(act, l.weight, l.bias);
                trace.pre[i] = z;
                act = relu(z);
                break;
            }
            case LayerKind::kPool: {
                trace.inputs[i] = act;
                act = maxpool3x3s2(act);
                break;
            }
            case LayerKind::kDense: {
                Tensor flat({static_cast<int>(act.numel())}, act.data);
                trace.inputs[i] = flat;
                Tensor z = dense(flat, l.weight, &l.bias);
                trace.pre[i] = z;
                act = relu(z);
                break;
            }
            case LayerKind::kEmbed: {
                trace.inputs[i] = act;
                Tensor biased = act;
                for (std::size_t k = 0; k < biased.data.size(); ++k) biased.data[k] += l.bias.data[k];
                Tensor z = dense(biased, l.weight, nullptr);
                trace.pre[i] = z;
                act = relu(z);
                trace.embedding = act;
                break;
            }
            case LayerKind::kLogits: {
                trace.inputs[i] = act;
                act = dense(act, l.weight, nullptr);
                break;
            }
        }
    }
    trace.logits = std::move(act);
    return trace;
}

NetworkGrads NetworkGrads::zeros_like(const Network& net) {
    NetworkGrads g;
    for (const Tensor* t : net.trainable()) g.tensors.emplace_back(t->shape);
    return g;
}

void NetworkGrads::add_scaled(const NetworkGrads& other, double scale) {
    for (std::size_t i = 0; i < tensors.size(); ++i) {
        for (std::size_t k = 0; k < tensors[i].data.size(); ++k) {
            tensors[i].data[k] += static_cast<float>(scale * other.tensors[i].data[k]);
        }
    }
}

void NetworkGrads::scale(double s) {
    for (Tensor& t : tensors) {
        for (float& v : t.data) v = static_cast<float>(v * s);
    }
}

std::vector<const Tensor*> NetworkGrads::pointers() const {
    std::vector<const Tensor*> out;
    out.reserve(tensors.size());
    for (const Tensor& t : tensors) out.push_back(&t);
    return out;
}

void backward(const Network& net, const ForwardTrace& trace, const Tensor& dlogits,
              NetworkGrads& grads) {
    // grads.tensors follows trainable() order: per layer weight then bias.
    std::vector<Tensor*> slots;
    {
        std::size_t idx = 0;
        for (const Layer& l : net.layers) {
            if (!l.weight.data.empty()) slots.push_back(&grads.tensors[idx++]);
            else slots.push_back(nullptr);
            if (l.has_bias()) slots.push_back(&grads.tensors[idx++]);
            else slots.push_back(nullptr);
        }
    }

    Tensor g = dlogits;  // flat [2*num_attrs]
    for (std::size_t ri = net.layers.size(); ri-- > 0;) {
        const Layer& l = net.layers[ri];
        Tensor* gw = slots[2 * ri];
        Tensor* gb = slots[2 * ri + 1];
        switch (l.kind) {
            case LayerKind::kLogits: {
                DenseGrads dg = dense_backward(trace.inputs[ri], l.weight, false, g);
                for (std::size_t k = 0; k < gw->data.size(); ++k) gw->data[k] += dg.weight.data[k];
                g = std::move(dg.input);
                break;
            }
            case LayerKind::kEmbed: {
                Tensor dz = relu_backward(trace.pre[ri], g);
                Tensor biased = trace.inputs[ri];
                for (std::size_t k = 0; k < biased.data.size(); ++k) biased.data[k] += l.bias.data[k];
                DenseGrads dg = dense_backward(biased, l.weight, false, dz);
                for (std::size_t k = 0; k < gw->data.size(); ++k) gw->data[k] += dg.weight.data[k];
                for (std::size_t k = 0; k < gb->data.size(); ++k) gb->data[k] += dg.input.data[k];
                g = std::move(dg.input);
                break;
            }
            case LayerKind::kDense: {
                Tensor dz = relu_backward(trace.pre[ri], g);
                DenseGrads dg = dense_backward(trace.inputs[ri], l.weight, true, dz);
                for (std::size_t k = 0; k < gw->data.size(); ++k) gw->data[k] += dg.weight.data[k];
                for (std::size_t k = 0; k < gb->data.size(); ++k) gb->data[k] += dg.bias.data[k];
                g = std::move(dg.input);
                // reshape back to the pooled activation if one precedes
                if (ri > 0 && net.layers[ri - 1].kind == LayerKind::kPool) {
                    const Tensor& pooled_in = trace.inputs[ri - 1];
                    const int oh = pool_out_dim(pooled_in.dim(0));
                    const int ow = pool_out_dim(pooled_in.dim(1));
                    g = Tensor({oh, ow, pooled_in.dim(2)}, std::move(g.data));
                }
                break;
            }
            case LayerKind::kPool: {
                g = maxpool3x3s2_backward(trace.inputs[ri], g);
                break;
            }
            case LayerKind::kConv: {
                Tensor dz = relu_backward(trace.pre[ri], g);
                Conv2dGrads cg = conv2d_backward(trace.inputs[ri], l.weight, dz);
                for (std::size_t k = 0; k < gw->data.size(); ++k) gw->data[k] += cg.kernel.data[k];
                for (std::size_t k = 0; k < gb->data.size(); ++k) gb->data[k] += cg.bias.data[k];
                g = std::move(cg.input);
                break;
            }
        }
    }
}

namespace {

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    out.push_back(static_cast<std::uint8_t>(v & 0xff));
    out.push_back(static_cast<std::uint8_t>((v >> 8) & 0xff));
    out.push_back(static_cast<std::uint8_t>((v >> 16) & 0xff));
    out.push_back(static_cast<std::uint8_t>((v >> 24) & 0xff));
}

void put_f32(std::vector<std::uint8_t>& out, float f) {
    std::uint32_t v;
    std::memcpy(&v, &f, 4);
    put_u32(out, v);
}

struct ByteReader {
    const std::vector<std::uint8_t>& bytes;
    std::size_t pos = 0;

    std::uint8_t u8() {
        if (pos + 1 > bytes.size()) throw FormatError("checkpoint: truncated payload");
        return bytes[pos++];
    }
    std::uint32_t u32() {
        if (pos + 4 > bytes.size()) throw FormatError("checkpoint: truncated payload");
        std::uint32_t v = bytes[pos] | (bytes[pos + 1] << 8) | (bytes[pos + 2] << 16) |
                          (static_cast<std::uint32_t>(bytes[pos + 3]) << 24);
        pos += 4;
        return v;
    }
    float f32() {
        const std::uint32_t v = u32();
        float f;
        std::memcpy(&f, &v, 4);
        return f;
    }
    std::string str(std::size_t n) {
        if (pos + n > bytes.size()) throw FormatError("checkpoint: truncated payload");
        std::string s(reinterpret_cast<const char*>(bytes.data() + pos), n);
        pos += n;
        return s;
    }
};

void put_tensor_entry(std::vector<std::uint8_t>& out, const std::string& name, const Tensor& t) {
    put_u32(out, static_cast<std::uint32_t>(name.size()));
    out.insert(out.end(), name.begin(), name.end());
    put_u32(out, static_cast<std::uint32_t>(t.rank()));
    for (int d : t.shape) put_u32(out, static_cast<std::uint32_t>(d));
    for (float v : t.data) put_f32(out, v);
}

Tensor read_tensor_entry(ByteReader& r, std::string& name) {
    const std::uint32_t name_len = r.u32();
    name = r.str(name_len);
    const std::uint32_t rank = r.u32();
    if (rank > 8) throw FormatError("checkpoint: implausible tensor rank");
    std::vector<int> shape(rank);
    for (std::uint32_t i = 0; i < rank; ++i) shape[i] = static_cast<int>(r.u32());
    Tensor t(shape);
    for (float& v : t.data) v = r.f32();
    return t;
}

}  // namespace

std::vector<std::uint8_t> save_checkpoint(const Network& net) {
    std::vector<std::uint8_t> out;
    out.insert(out.end(), kMagic, kMagic + 6);
    out.push_back(kVersion);
    out.push_back(net.spec.family == Family::kDeep ? 0 : 1);
    out.push_back(net.spec.mode == Mode::kBinary ? 0 : 1);
    put_u32(out, static_cast<std::uint32_t>(net.spec.input_h));
    put_u32(out, static_cast<std::uint32_t>(net.spec.input_w));
    put_u32(out, static_cast<std::uint32_t>(net.spec.num_attrs));

    std::uint32_t entries = 0;
    for (const Layer& l : net.layers) {
        if (!l.weight.data.empty()) ++entries;
        if (l.has_bias()) ++entries;
    }
    put_u32(out, entries);
    for (const Layer& l : net.layers) {
        if (!l.weight.data.empty()) put_tensor_entry(out, l.name + ".weight", l.weight);
        if (l.has_bias()) put_tensor_entry(out, l.name + ".bias", l.bias);
    }
    return out;
}

Network load_checkpoint(const std::vector<std::uint8_t>& bytes) {
    ByteReader r{bytes};
    if (bytes.size() < 7 || std::memcmp(bytes.data(), kMagic, 6) != 0) {
        throw FormatError("checkpoint: bad magic");
    }
    r.pos = 6;
    const std::uint8_t version = r.u8();
    if (version != kVersion) throw FormatError("checkpoint: unsupported version");
    NetworkSpec spec;
    spec.family = r.u8() == 0 ? Family::kDeep : Family::kWide;
    spec.mode = r.u8() == 0 ? Mode::kBinary : Mode::kMulti;
    spec.input_h = static_cast<int>(r.u32());
    spec.input_w = static_cast<int>(r.u32());
    spec.num_attrs = static_cast<int>(r.u32());

    Network net = build(spec, 0);
    const std::uint32_t entries = r.u32();
    std::uint32_t expected = 0;
    for (const Layer& l : net.layers) {
        if (!l.weight.data.empty()) ++expected;
        if (l.has_bias()) ++expected;
    }
    if (entries != expected) throw FormatError("checkpoint: entry count does not match spec");

    for (Layer& l : net.layers) {
        if (!l.weight.data.empty()) {
            std::string name;
            Tensor t = read_tensor_entry(r, name);
            if (name != l.name + ".weight" || t.shape != l.weight.shape) {
                throw FormatError("checkpoint: tensor " + name + " does not match spec layer " + l.name);
            }
            l.weight = std::move(t);
        }
        if (l.has_bias()) {
            std::string name;
            Tensor t = read_tensor_entry(r, name);
            if (name != l.name + ".bias" || t.shape != l.bias.shape) {
                throw FormatError("checkpoint: tensor " + name + " does not match spec layer " + l.name);
            }
            l.bias = std::move(t);
        }
    }
    if (r.pos != bytes.size()) throw FormatError("checkpoint: trailing bytes");
    return net;
}

void save_checkpoint_file(const Network& net, const std::string& path) {
    const auto bytes = save_checkpoint(net);
    std::ofstream f(path, std::ios::binary);
    if (!f) throw FormatError("cannot open checkpoint file for writing: " + path);
    f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!f) throw FormatError("failed writing checkpoint file: " + path);
}

Network load_checkpoint_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw FormatError("cannot open checkpoint file: " + path);
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    return load_checkpoint(bytes);
}

std::size_t checkpoint_size(const NetworkSpec& spec) {
    // header: magic(6) + version(1) + family(1) + mode(1) + 3*u32 + entry count u32
    std::size_t n = 6 + 1 + 1 + 1 + 12 + 4;
    Network net = build(spec, 0);
    for (const Layer& l : net.layers) {
        if (!l.weight.data.empty()) {
            n += 4 + l.name.size() + 7 + 4 + 4 * l.weight.rank() + 4 * l.weight.numel();
        }
        if (l.has_bias()) {
            n += 4 + l.name.size() + 5 + 4 + 4 * l.bias.rank() + 4 * l.bias.numel();
        }
    }
    return n;
}

std::string family_name(Family f) { return f == Family::kDeep ? "deep" : "wide"; }
std::string mode_name(Mode m) { return m == Mode::kBinary ? "binary" : "multi"; }

Family family_from_name(const std::string& s) {
    if (s == "deep") return Family::kDeep;
    if (s == "wide") return Family::kWide;
    throw std::invalid_argument("unknown family: " + s + " (expected deep or wide)");
}

}  // namespace cnnaa
