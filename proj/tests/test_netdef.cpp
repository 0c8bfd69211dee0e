#include <doctest.h>

#include <cmath>

#include "cnnaa/datapipe.hpp"
#include "cnnaa/netdef.hpp"
#include "cnnaa/ops.hpp"
#include "oracles.hpp"

using namespace cnnaa;

namespace {

struct PartCase {
    const char* name;
    int w, h, attrs;  // published sizes are width x height
    std::size_t deep_params;
    std::size_t wide_paper;  // published value; builder is paper - 128
};

// Published per-part sizes and counts. The wide rows carry a uniform +128 in
// the published table that the builder does not reproduce.
const PartCase kParts[] = {
    {"UpperHead", 128, 52, 15, 275360, 1825664},
    {"BothEyes", 115, 41, 10, 227936, 1447552},
    {"EyesNose", 90, 62, 16, 244704, 1580160},
    {"Nose", 40, 56, 7, 170400, 988032},
    {"NoseMouth", 55, 82, 15, 232352, 1481600},
    {"Mouth", 65, 38, 10, 164448, 939648},
    {"EyesNoseMouth", 115, 107, 21, 441632, 3154304},
    {"MouthChin", 128, 45, 15, 244640, 1579904},
    {"Ear", 62, 100, 14, 256864, 1677952},
    {"Eye", 53, 39, 10, 162400, 923264},
};

NetworkSpec spec_of(const PartCase& c, Family f) {
    NetworkSpec s;
    s.family = f;
    s.mode = Mode::kMulti;
    s.input_h = c.h;
    s.input_w = c.w;
    s.num_attrs = c.attrs;
    return s;
}

}  // namespace

TEST_CASE("deep part counts reproduce the published table exactly") {
    std::size_t total = 0;
    for (const PartCase& c : kParts) {
        CHECK_MESSAGE(count_params(spec_of(c, Family::kDeep)) == c.deep_params, c.name);
        total += count_params(spec_of(c, Family::kDeep));
    }
    CHECK(total == 2420736);  // the published "2.4M" ensemble
}

TEST_CASE("wide part counts land at published value minus 128, uniformly") {
    for (const PartCase& c : kParts) {
        CHECK_MESSAGE(count_params(spec_of(c, Family::kWide)) == c.wide_paper - 128, c.name);
    }
}

TEST_CASE("count_params equals the sum of built tensor sizes") {
    for (const PartCase& c : kParts) {
        for (Family f : {Family::kDeep, Family::kWide}) {
            const NetworkSpec spec = spec_of(c, f);
            const Network net = build(spec, 42);
            CHECK(net.param_count() == count_params(spec));
        }
    }
}

TEST_CASE("default part table matches the published windows and counts") {
    const PartTable table = default_part_table();
    REQUIRE(table.parts.size() == 10);
    for (const PartCase& c : kParts) {
        const PartDefinition& p = table.part(c.name);
        CHECK(p.window_h == c.h);
        CHECK(p.window_w == c.w);
        CHECK(p.attributes.size() == static_cast<std::size_t>(c.attrs));
        const NetworkSpec spec = part_network_spec(p, Family::kDeep);
        CHECK(count_params(spec) == c.deep_params);
    }
    // Mustache feeds exactly the three mouth regions
    int mustache_parts = 0;
    for (const auto& p : table.parts) {
        for (const auto& a : p.attributes) {
            if (a == "Mustache") ++mustache_parts;
        }
    }
    CHECK(mustache_parts == 3);
}

TEST_CASE("pre-FC spatial dims: deep 53x39 -> 5x4, wide 40x56 -> 3072") {
    NetworkSpec deep;
    deep.family = Family::kDeep;
    deep.input_h = 53;
    deep.input_w = 39;
    deep.num_attrs = 10;
    const auto [h, w] = pre_fc_spatial(deep);
    CHECK(h == 5);
    CHECK(w == 4);

    NetworkSpec wide;
    wide.family = Family::kWide;
    wide.input_h = 40;
    wide.input_w = 56;
    wide.num_attrs = 7;
    const auto [wh, ww] = pre_fc_spatial(wide);
    CHECK(wh * ww * 128 == 3072);
}

TEST_CASE("build is deterministic and rejects spatial underflow") {
    NetworkSpec spec;
    spec.family = Family::kDeep;
    spec.input_h = 20;
    spec.input_w = 20;
    spec.num_attrs = 2;
    const Network a = build(spec, 123);
    const Network b = build(spec, 123);
    REQUIRE(a.layers.size() == b.layers.size());
    for (std::size_t i = 0; i < a.layers.size(); ++i) {
        CHECK(a.layers[i].weight.data == b.layers[i].weight.data);
    }
    const Network c = build(spec, 124);
    CHECK(c.layers[0].weight.data != a.layers[0].weight.data);

    NetworkSpec tiny = spec;
    tiny.input_h = 10;  // 10 -> 4 -> 1: third pool underflows
    CHECK_THROWS_AS(build(tiny, 1), ShapeError);
}

TEST_CASE("zero image through a fresh net gives a zero embedding") {
    NetworkSpec spec;
    spec.family = Family::kDeep;
    spec.input_h = 20;
    spec.input_w = 20;
    spec.num_attrs = 3;
    const Network net = build(spec, 9);  // biases initialize to zero
    Tensor image({20, 20, 3});
    const ForwardResult r = forward(net, image);
    for (float v : r.embedding.data) CHECK(v == 0.0f);
    CHECK(r.logits.shape == std::vector<int>{3, 2});
    // per-attribute softmax rows normalize
    for (int a = 0; a < 3; ++a) {
        const double p1 = softmax2_p1(r.logits.at2(a, 0), r.logits.at2(a, 1));
        const double p0 = softmax2_p1(r.logits.at2(a, 1), r.logits.at2(a, 0));
        CHECK(p0 + p1 == doctest::Approx(1.0).epsilon(1e-9));
    }
}

TEST_CASE("forward matches the op-composition oracle") {
    NetworkSpec spec;
    spec.family = Family::kDeep;
    spec.input_h = 17;
    spec.input_w = 19;
    spec.num_attrs = 2;
    Network net = build(spec, 31);
    // give the biases some structure
    Rng rng(5);
    for (Layer& l : net.layers) {
        for (float& v : l.bias.data) v = static_cast<float>(rng.uniform(-0.1, 0.1));
    }

    Tensor image({17, 19, 3});
    oracles::fill_random(image, rng, 0.0, 1.0);

    // manual composition straight from the layer list
    Tensor act = image;
    Tensor embedding;
    for (const Layer& l : net.layers) {
        switch (l.kind) {
            case LayerKind::kConv: act = relu(conv2d(act, l.weight, l.bias)); break;
            case LayerKind::kPool: act = maxpool3x3s2(act); break;
            case LayerKind::kDense: {
                Tensor flat({static_cast<int>(act.numel())}, act.data);
                act = relu(dense(flat, l.weight, &l.bias));
                break;
            }
            case LayerKind::kEmbed: {
                Tensor biased = act;
                for (std::size_t i = 0; i < biased.data.size(); ++i) biased.data[i] += l.bias.data[i];
                act = relu(dense(biased, l.weight, nullptr));
                embedding = act;
                break;
            }
            case LayerKind::kLogits: act = dense(act, l.weight, nullptr); break;
        }
    }

    const ForwardResult r = forward(net, image);
    REQUIRE(act.numel() == r.logits.numel());
    for (std::size_t i = 0; i < act.data.size(); ++i) CHECK(r.logits.data[i] == act.data[i]);
    for (std::size_t i = 0; i < embedding.data.size(); ++i) {
        CHECK(r.embedding.data[i] == embedding.data[i]);
    }
}

TEST_CASE("checkpoint round-trip is bit exact") {
    NetworkSpec spec;
    spec.family = Family::kWide;
    spec.input_h = 17;
    spec.input_w = 17;
    spec.num_attrs = 4;
    const Network net = build(spec, 77);
    const auto bytes = save_checkpoint(net);
    const Network back = load_checkpoint(bytes);
    const auto bytes2 = save_checkpoint(back);
    CHECK(bytes == bytes2);
    CHECK(back.spec.input_h == 17);
    CHECK(back.spec.num_attrs == 4);
}

TEST_CASE("checkpoint rejects corrupt magic and truncation") {
    NetworkSpec spec;
    spec.family = Family::kDeep;
    spec.input_h = 17;
    spec.input_w = 17;
    spec.num_attrs = 1;
    spec.mode = Mode::kBinary;
    auto bytes = save_checkpoint(build(spec, 1));

    auto corrupt = bytes;
    corrupt[0] = 'X';
    CHECK_THROWS_AS(load_checkpoint(corrupt), FormatError);

    auto truncated = bytes;
    truncated.resize(truncated.size() / 2);
    CHECK_THROWS_AS(load_checkpoint(truncated), FormatError);

    auto trailing = bytes;
    trailing.push_back(0);
    CHECK_THROWS_AS(load_checkpoint(trailing), FormatError);
}

TEST_CASE("checkpoint size decomposes into header, metadata and payload") {
    // D-Mouth geometry
    NetworkSpec spec;
    spec.family = Family::kDeep;
    spec.input_h = 65;
    spec.input_w = 38;
    spec.num_attrs = 10;
    const Network net = build(spec, 3);
    const auto bytes = save_checkpoint(net);
    CHECK(bytes.size() == checkpoint_size(spec));

    // independent decomposition from the layer list
    std::size_t expected = 6 + 1 + 2 + 12 + 4;  // magic, version, family+mode, dims, entry count
    for (const Layer& l : net.layers) {
        if (!l.weight.data.empty()) {
            expected += 4 + (l.name + ".weight").size() + 4 + 4 * l.weight.rank() + 4 * l.weight.numel();
        }
        if (l.has_bias()) {
            expected += 4 + (l.name + ".bias").size() + 4 + 4 * l.bias.rank() + 4 * l.bias.numel();
        }
    }
    CHECK(bytes.size() == expected);
    // payload bytes dominated by 4 bytes per trainable parameter
    CHECK(bytes.size() > 4 * count_params(spec));
}
