#include <benchmark/benchmark.h>

#include "cnnaa/auth.hpp"
#include "cnnaa/discovery.hpp"
#include "cnnaa/netdef.hpp"
#include "cnnaa/ops.hpp"
#include "cnnaa/rng.hpp"

using namespace cnnaa;

namespace {

Tensor random_tensor(std::vector<int> shape, std::uint64_t seed) {
    Tensor t(std::move(shape));
    Rng rng(seed);
    for (float& v : t.data) v = static_cast<float>(rng.uniform(-1.0, 1.0));
    return t;
}

NetworkSpec eye_spec(Family family) {
    NetworkSpec spec;
    spec.family = family;
    spec.input_h = 39;
    spec.input_w = 53;
    spec.num_attrs = 10;
    return spec;
}

}  // namespace

static void BM_Conv2d5x5x32(benchmark::State& state) {
    const Tensor in = random_tensor({26, 19, 32}, 1);
    const Tensor k = random_tensor({5, 5, 32, 32}, 2);
    const Tensor b = random_tensor({32}, 3);
    for (auto _ : state) {
        benchmark::DoNotOptimize(conv2d(in, k, b));
    }
}
BENCHMARK(BM_Conv2d5x5x32);

static void BM_ForwardDeepEye(benchmark::State& state) {
    const Network net = build(eye_spec(Family::kDeep), 1);
    const Tensor img = random_tensor({39, 53, 3}, 4);
    for (auto _ : state) {
        benchmark::DoNotOptimize(forward(net, img));
    }
}
BENCHMARK(BM_ForwardDeepEye);

static void BM_ForwardWideEye(benchmark::State& state) {
    const Network net = build(eye_spec(Family::kWide), 1);
    const Tensor img = random_tensor({39, 53, 3}, 4);
    for (auto _ : state) {
        benchmark::DoNotOptimize(forward(net, img));
    }
}
BENCHMARK(BM_ForwardWideEye);

static void BM_OmpSparsity20(benchmark::State& state) {
    Rng rng(5);
    Eigen::MatrixXd atoms(32, 512);
    for (long j = 0; j < atoms.cols(); ++j) {
        for (long i = 0; i < atoms.rows(); ++i) atoms(i, j) = rng.gaussian();
        atoms.col(j).normalize();
    }
    Eigen::VectorXd signal(32);
    for (long i = 0; i < 32; ++i) signal[i] = rng.gaussian();
    signal.normalize();
    for (auto _ : state) {
        benchmark::DoNotOptimize(omp(atoms, signal, 20));
    }
}
BENCHMARK(BM_OmpSparsity20);

static void BM_RocEer(benchmark::State& state) {
    Rng rng(6);
    std::vector<double> gen, imp;
    for (int i = 0; i < 500; ++i) gen.push_back(rng.uniform(0.2, 1.0));
    for (int i = 0; i < 500; ++i) imp.push_back(rng.uniform(0.0, 0.8));
    for (auto _ : state) {
        benchmark::DoNotOptimize(roc_eer(gen, imp));
    }
}
BENCHMARK(BM_RocEer);

BENCHMARK_MAIN();
