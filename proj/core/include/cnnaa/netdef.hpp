#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "cnnaa/ops.hpp"
#include "cnnaa/rng.hpp"
#include "cnnaa/tensor.hpp"

namespace cnnaa {

enum class Family { kDeep, kWide };
enum class Mode { kBinary, kMulti };

/// Declarative description of one network: the family fixes channel widths
/// and layer counts, the input size and attribute count fix everything else.
struct NetworkSpec {
    Family family = Family::kDeep;
    Mode mode = Mode::kMulti;
    int input_h = 0;
    int input_w = 0;
    int num_attrs = 1;

    int embedding_dim() const { return family == Family::kDeep ? 32 : 128; }
    void validate() const;
};

enum class LayerKind : std::uint8_t {
    kConv = 0,   // conv + relu, output bias
    kPool = 1,   // maxpool 3x3 stride 2, no params
    kDense = 2,  // fully connected + relu, output bias
    kEmbed = 3,  // embedding FC + relu; bias applied on the input side
    kLogits = 4  // final linear map, no bias, no relu
};

struct Layer {
    LayerKind kind;
    std::string name;
    Tensor weight;  // empty for pool layers
    Tensor bias;    // empty when the layer has none
    bool has_bias() const { return !bias.data.empty(); }
};

struct Network {
    NetworkSpec spec;
    std::vector<Layer> layers;

    std::vector<Tensor*> trainable();
    std::vector<const Tensor*> trainable() const;
    std::size_t param_count() const;
};

/// Spatial size of the flattened activation entering the first FC layer.
/// Throws ShapeError when a pool stage underflows.
std::pair<int, int> pre_fc_spatial(const NetworkSpec& spec);

/// Instantiates a network with zero biases and fan-in scaled Gaussian weights;
/// deterministic for a fixed seed.
Network build(const NetworkSpec& spec, std::uint64_t seed);

/// Exact trainable-parameter count; equals the sum of tensor sizes in build().
std::size_t count_params(const NetworkSpec& spec);

struct ForwardResult {
    Tensor logits;     // [num_attrs x 2]
    Tensor embedding;  // [embedding_dim]
};

ForwardResult forward(const Network& net, const Tensor& image);

/// Per-layer activations kept for backprop: input to each layer and the
/// pre-relu values where a relu follows.
struct ForwardTrace {
    std::vector<Tensor> inputs;   // one per layer: the tensor fed to it
    std::vector<Tensor> pre;      // pre-relu (conv/dense/embed); biased input for embed
    Tensor logits;                // flat [2*num_attrs]
    Tensor embedding;
};

ForwardTrace forward_trace(const Network& net, const Tensor& image);

/// Gradients mirroring the trainable tensors of a network, in trainable() order.
struct NetworkGrads {
    std::vector<Tensor> tensors;

    static NetworkGrads zeros_like(const Network& net);
    void add_scaled(const NetworkGrads& other, double scale);
    void scale(double s);
    std::vector<const Tensor*> pointers() const;
};

/// Backprop from dL/dlogits (flat [2*num_attrs]) through the whole network,
/// accumulating into grads (which must be zeros_like-compatible).
void backward(const Network& net, const ForwardTrace& trace, const Tensor& dlogits,
              NetworkGrads& grads);

// Checkpoint container: magic "CNNAA1", version byte, serialized spec, then one
// entry per tensor: length-prefixed UTF-8 name, rank, dims, float payload, all
// little-endian 32-bit.
std::vector<std::uint8_t> save_checkpoint(const Network& net);
Network load_checkpoint(const std::vector<std::uint8_t>& bytes);
void save_checkpoint_file(const Network& net, const std::string& path);
Network load_checkpoint_file(const std::string& path);

/// Byte size a checkpoint of this spec occupies on disk.
std::size_t checkpoint_size(const NetworkSpec& spec);

std::string family_name(Family f);
std::string mode_name(Mode m);
Family family_from_name(const std::string& s);

}  // namespace cnnaa
