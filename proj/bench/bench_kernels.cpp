#include "fes/campaign.hpp"
#include "fes/executor.hpp"
#include "fes/kernels.hpp"
#include "fes/zoo.hpp"

#include <benchmark/benchmark.h>

using namespace fes;

namespace {

template <bool Parallel>
void conv(benchmark::State& state)
{
    const auto c = static_cast<std::size_t>(state.range(0));
    Rng rng(1);
    auto in = zoo::random_tensor({c, 32, 32}, rng, -1, 1);
    auto w = zoo::random_tensor({c, c, 3, 3}, rng, -1, 1);
    for (auto _ : state) {
        auto out = Parallel ? kernels::conv2d(in, w, nullptr, 1, 1) : kernels::reference::conv2d(in, w, nullptr, 1, 1);
        benchmark::DoNotOptimize(out.data().data());
    }
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(c * c * 9 * 32 * 32));
}

template <bool Parallel>
void dense(benchmark::State& state)
{
    const auto n = static_cast<std::size_t>(state.range(0));
    Rng rng(2);
    auto in = zoo::random_tensor({1, n}, rng, -1, 1);
    auto w = zoo::random_tensor({n, n}, rng, -1, 1);
    for (auto _ : state) {
        auto out = Parallel ? kernels::dense(in, w, nullptr) : kernels::reference::dense(in, w, nullptr);
        benchmark::DoNotOptimize(out.data().data());
    }
}

void lenet_forward(benchmark::State& state)
{
    auto g = zoo::lenet5(1);
    InputMap in{{"image", zoo::random_input(g, 1)}};
    const auto backend = state.range(0) ? Backend::Parallel : Backend::Reference;
    for (auto _ : state)
        benchmark::DoNotOptimize(execute_outputs(g, in, backend));
}

void lenet_campaign(benchmark::State& state)
{
    auto g = zoo::lenet5(1);
    auto db = load_db(FES_DATA_DIR "/default_db.json");
    std::vector<InputMap> inputs{{{"image", zoo::random_input(g, 1)}}};
    CampaignConfig cfg;
    cfg.experiments = 1000;
    cfg.fallback = true;
    cfg.cache = state.range(0) != 0;
    cfg.input_files.push_back({{"", "unused"}});
    for (auto _ : state)
        benchmark::DoNotOptimize(run_campaign(cfg, g, db, inputs).report.totals.total());
    state.SetItemsProcessed(state.iterations() * 1000);
}

} // namespace

BENCHMARK(conv<false>)->Name("conv2d/reference")->Arg(8)->Arg(32);
BENCHMARK(conv<true>)->Name("conv2d/parallel")->Arg(8)->Arg(32);
BENCHMARK(dense<false>)->Name("dense/reference")->Arg(256)->Arg(1024);
BENCHMARK(dense<true>)->Name("dense/parallel")->Arg(256)->Arg(1024);
BENCHMARK(lenet_forward)->ArgName("parallel")->Arg(0)->Arg(1);
BENCHMARK(lenet_campaign)->ArgName("cache")->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
