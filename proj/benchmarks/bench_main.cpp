#include <benchmark/benchmark.h>

#include <memory>
#include <vector>

#include "hiermap/objectives.hpp"
#include "hiermap/optimize.hpp"
#include "hiermap/sampling.hpp"

using namespace hiermap;

namespace {

SpectralPrior deblur_prior() {
    return SpectralPrior(LaplacianSpectrum::neumann_1d(), PriorFamily::WhittleMaternPlain,
                         {{"nu", 1.5}, {"sigma", 1.0}}, {"inv_ell"}, HyperDomain({0.05}, {20.0}));
}

std::shared_ptr<const Dataset> deblur_data(std::size_t n) {
    const ProblemSpec spec{deblur_prior(), ForwardSpectrum::deblurring(), NoiseRule::decay_in_n(5.0), n, {1.0},
                           Representation::Noncentred};
    return std::make_shared<const Dataset>(generate_data(spec, 1));
}

void BM_ObjectiveEvaluation(benchmark::State& state, ObjectiveKind kind) {
    const auto n = static_cast<std::size_t>(state.range(0));
    const Objective obj(ObjectiveSpec{.kind = kind, .prior = deblur_prior(), .dataset = deblur_data(n)});
    const std::vector<double> theta{1.3};
    for (auto _ : state) benchmark::DoNotOptimize(obj(theta));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK_CAPTURE(BM_ObjectiveEvaluation, centred, ObjectiveKind::CentredTruncated)->Range(16, 16384);
BENCHMARK_CAPTURE(BM_ObjectiveEvaluation, noncentred, ObjectiveKind::Noncentred)->Range(16, 16384);
BENCHMARK_CAPTURE(BM_ObjectiveEvaluation, empirical_bayes, ObjectiveKind::EmpiricalBayes)->Range(16, 16384);

void BM_FullPriorEvaluation(benchmark::State& state) {
    const auto prior = deblur_prior();
    auto sums = std::make_shared<const LogShiftSum>(prior.spectrum(), 100000);
    const Objective obj(ObjectiveSpec{.kind = ObjectiveKind::CentredFullPrior, .prior = prior,
                                      .dataset = deblur_data(1024), .nmax_full = 100000, .full_prior_sums = sums});
    const std::vector<double> theta{1.3};
    for (auto _ : state) benchmark::DoNotOptimize(obj(theta));
}
BENCHMARK(BM_FullPriorEvaluation);

void BM_LogShiftSumBuild(benchmark::State& state) {
    const auto prior = deblur_prior();
    for (auto _ : state) {
        LogShiftSum sums(prior.spectrum(), static_cast<std::size_t>(state.range(0)));
        benchmark::DoNotOptimize(&sums);
    }
}
BENCHMARK(BM_LogShiftSumBuild)->Arg(10000)->Arg(100000);

void BM_Minimize(benchmark::State& state, OptimizerMethod method) {
    const Objective obj(ObjectiveSpec{.kind = ObjectiveKind::CentredTruncated, .prior = deblur_prior(),
                                      .dataset = deblur_data(static_cast<std::size_t>(state.range(0)))});
    OptimizerConfig cfg;
    cfg.method = method;
    for (auto _ : state) benchmark::DoNotOptimize(minimize(obj, cfg));
}
BENCHMARK_CAPTURE(BM_Minimize, golden_section, OptimizerMethod::GoldenSection)->Arg(1024)->Arg(16384);
BENCHMARK_CAPTURE(BM_Minimize, grid_polish, OptimizerMethod::GridThenPolish)->Arg(1024)->Arg(16384);

void BM_ConditionalSampling(benchmark::State& state) {
    const auto prior = deblur_prior();
    const auto data = deblur_data(50);
    const std::vector<double> theta{1.0};
    for (auto _ : state) benchmark::DoNotOptimize(sample_conditional_posterior(prior, theta, *data, 200, 3));
}
BENCHMARK(BM_ConditionalSampling);

}  // namespace

BENCHMARK_MAIN();
