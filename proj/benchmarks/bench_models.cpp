#include <benchmark/benchmark.h>

#include "slotcast/deepnets.hpp"
#include "slotcast/features.hpp"
#include "slotcast/market_data.hpp"
#include "slotcast/mars.hpp"
#include "slotcast/slotter.hpp"
#include "slotcast/trees.hpp"

namespace {

using namespace slotcast;

struct Fixture {
    std::vector<SlotBar> bars;
    Dataset train, test;
    Eigen::MatrixXd x;
    Eigen::VectorXd y_reg;
    Eigen::VectorXd y_cls;

    Fixture() {
        const TickSeries ticks = synth_ticks(7, 520, SynthParams{});
        bars = aggregate_slots(ticks, SlotConfig{});
        std::tie(train, test) = case_split(bars, CaseId::III, FeatureOptions{});
        x = predictor_matrix(train);
        const long n = static_cast<long>(train.size());
        y_reg = Eigen::Map<const Eigen::VectorXd>(train.target_reg.data(), n);
        y_cls.resize(n);
        for (long i = 0; i < n; ++i) y_cls[i] = train.target_cls[static_cast<std::size_t>(i)];
    }
};

const Fixture& fix() {
    static Fixture f;
    return f;
}

void BM_SlotAggregation(benchmark::State& state) {
    const TickSeries ticks = synth_ticks(7, 260, SynthParams{});
    for (auto _ : state) benchmark::DoNotOptimize(aggregate_slots(ticks, SlotConfig{}));
}
BENCHMARK(BM_SlotAggregation);

void BM_CartFit(benchmark::State& state) {
    const Fixture& f = fix();
    for (auto _ : state)
        benchmark::DoNotOptimize(
            CartTree::fit(f.x, f.y_cls, TreeTask::Classification, CartControls{}));
}
BENCHMARK(BM_CartFit);

void BM_RandomForest(benchmark::State& state) {
    const Fixture& f = fix();
    const int trees = static_cast<int>(state.range(0));
    for (auto _ : state)
        benchmark::DoNotOptimize(fit_random_forest(f.x, f.y_cls, TreeTask::Classification,
                                                   trees, 3, 11, CartControls{}));
}
BENCHMARK(BM_RandomForest)->Arg(25)->Arg(100);

void BM_MarsFit(benchmark::State& state) {
    const Fixture& f = fix();
    for (auto _ : state) benchmark::DoNotOptimize(fit_mars(f.x, f.y_reg, MarsControls{}));
}
BENCHMARK(BM_MarsFit);

void BM_LstmStep(benchmark::State& state) {
    const Fixture& f = fix();
    const auto records = to_sequence_records(f.bars);
    const int lookback = 4;
    std::vector<Eigen::MatrixXd> seqs;
    Eigen::VectorXd targets(64);
    for (int i = 0; i < 64; ++i) {
        Eigen::MatrixXd seq(lookback, 6);
        for (int t = 0; t < lookback; ++t) {
            const auto& r = records[static_cast<std::size_t>(i + t)];
            seq.row(t) << r.open, r.high, r.low, r.close, r.volume, r.index;
        }
        seqs.push_back(seq);
        targets[i] = records[static_cast<std::size_t>(i + lookback)].open;
    }
    LstmNet net(6, 50, 3);
    Eigen::VectorXd grad;
    for (auto _ : state) benchmark::DoNotOptimize(net.loss_grad(seqs, targets, true, grad));
}
BENCHMARK(BM_LstmStep);

} // namespace

BENCHMARK_MAIN();
