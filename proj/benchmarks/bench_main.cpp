#include <benchmark/benchmark.h>

#include <vector>

#include "snnfaultlab/fault.hpp"
#include "snnfaultlab/rng.hpp"
#include "snnfaultlab/snn.hpp"

using namespace snnfaultlab;

namespace {

std::vector<std::uint8_t> synthetic_image(std::uint64_t seed) {
    std::vector<std::uint8_t> img(784, 0);
    Rng rng(seed);
    for (int k = 0; k < 140; ++k) img[rng.below(784)] = std::uint8_t(64 + rng.below(192));
    return img;
}

void BM_EncodePoisson(benchmark::State& state) {
    const auto img = synthetic_image(1);
    snn::EncodeParams enc;
    Rng rng(2);
    for (auto _ : state) {
        auto train = snn::encode_poisson(img, enc, rng);
        benchmark::DoNotOptimize(train.spikes.data());
    }
}
BENCHMARK(BM_EncodePoisson);

void BM_RunSampleInference(benchmark::State& state) {
    snn::NetworkConfig config;
    snn::Network net(config, 3);
    const auto img = synthetic_image(4);
    snn::EncodeParams enc;
    Rng rng(5);
    const auto train = snn::encode_poisson(img, enc, rng);
    const auto plan = fault::FaultPlan::identity(config.n_exc, config.n_inh);
    for (auto _ : state) {
        auto result = net.run_sample(train, plan, false);
        benchmark::DoNotOptimize(result.el_counts.data());
    }
}
BENCHMARK(BM_RunSampleInference);

void BM_RunSampleLearning(benchmark::State& state) {
    snn::NetworkConfig config;
    snn::Network net(config, 6);
    const auto img = synthetic_image(7);
    snn::EncodeParams enc;
    Rng rng(8);
    const auto train = snn::encode_poisson(img, enc, rng);
    const auto plan = fault::FaultPlan::identity(config.n_exc, config.n_inh);
    for (auto _ : state) {
        auto result = net.run_sample(train, plan, true);
        benchmark::DoNotOptimize(result.el_counts.data());
    }
}
BENCHMARK(BM_RunSampleLearning);

void BM_BuildFaultPlan(benchmark::State& state) {
    fault::AttackSpec spec;
    spec.kind = fault::AttackKind::GlobalVdd;
    spec.v_dd = 0.8;
    spec.seed = 9;
    for (auto _ : state) {
        auto plan = fault::build_fault_plan(spec, 100, 100);
        benchmark::DoNotOptimize(plan.psp_scale);
    }
}
BENCHMARK(BM_BuildFaultPlan);

}  // namespace

BENCHMARK_MAIN();
