#include <benchmark/benchmark.h>

#include "kgalign/inference.hpp"
#include "kgalign/model.hpp"
#include "kgalign/paris.hpp"
#include "kgalign/synth.hpp"
#include "kgalign/trainer.hpp"

namespace {

using namespace kgalign;

KgPair fixture(std::size_t entities) {
  SynthSpec spec;
  spec.n_entities = entities;
  return generate(spec);
}

struct Prepared {
  KgPair pair;
  PairColumns columns;
  GraphInputs g1, g2;
  EmbeddingModel model;

  Prepared(std::size_t entities, std::size_t dim)
      : pair(fixture(entities)),
        columns(build_columns(pair.kg1, pair.kg2)),
        g1(prepare_inputs(pair.kg1, pair.features1, columns, 0)),
        g2(prepare_inputs(pair.kg2, pair.features2, columns, 1)),
        model(init_model({pair.features1.dim, dim, columns.relation_vocab, columns.attribute_vocab}, 1)) {}
};

void BM_GcnForward(benchmark::State& state) {
  const Prepared p(static_cast<std::size_t>(state.range(0)), 128);
  for (auto _ : state) {
    benchmark::DoNotOptimize(gcn_forward(p.g1.adjacency, p.g1.gcn_input, p.model.gcn));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_GcnForward)->Arg(200)->Arg(1000)->Unit(benchmark::kMillisecond);

void BM_EmbedAll(benchmark::State& state) {
  const Prepared p(static_cast<std::size_t>(state.range(0)), 128);
  for (auto _ : state) benchmark::DoNotOptimize(embed_all(p.g1, p.model));
}
BENCHMARK(BM_EmbedAll)->Arg(200)->Arg(1000)->Unit(benchmark::kMillisecond);

void BM_ParisIteration(benchmark::State& state) {
  const auto pair = fixture(static_cast<std::size_t>(state.range(0)));
  const auto stats1 = compute_functionalities(pair.kg1);
  const auto stats2 = compute_functionalities(pair.kg2);
  const ParisConfig config;
  auto start = lexical_seed(pair.kg1, pair.kg2, config);
  seed_relation_prior(start, pair.kg1, pair.kg2, config.initial_subsumption);
  for (auto _ : state) {
    auto next = update_entity_probabilities(start, pair.kg1, pair.kg2, stats1, stats2, nullptr, {}, config);
    benchmark::DoNotOptimize(update_relation_subsumption(next, pair.kg1, pair.kg2));
  }
}
BENCHMARK(BM_ParisIteration)->Arg(200)->Arg(2000)->Unit(benchmark::kMillisecond);

void BM_RunParis(benchmark::State& state) {
  const auto pair = fixture(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(run_paris(pair.kg1, pair.kg2, ParisConfig{}));
}
BENCHMARK(BM_RunParis)->Arg(200)->Arg(2000)->Unit(benchmark::kMillisecond);

void BM_Csls(benchmark::State& state) {
  const auto n = state.range(0);
  const Matrix a = normalized_rows(Matrix::Random(n, 640));
  const Matrix b = normalized_rows(Matrix::Random(n, 640));
  for (auto _ : state) benchmark::DoNotOptimize(align(csls_adjust(cosine_matrix(a, b), 10)));
}
BENCHMARK(BM_Csls)->Arg(200)->Arg(1000)->Unit(benchmark::kMillisecond);

void BM_LossAndGradients(benchmark::State& state) {
  const Prepared p(static_cast<std::size_t>(state.range(0)), static_cast<std::size_t>(state.range(1)));
  std::vector<EntityLink> seeds(p.pair.gold_links.begin(),
                                p.pair.gold_links.begin() + static_cast<std::ptrdiff_t>(p.pair.gold_links.size() / 2));
  const auto set = mine_hard_negatives(seeds, embed_all(p.g1, p.model).fused, embed_all(p.g2, p.model).fused, 5);
  for (auto _ : state) benchmark::DoNotOptimize(loss_and_gradients(p.model, p.g1, p.g2, set, 0.4));
}
BENCHMARK(BM_LossAndGradients)->Args({200, 32})->Args({200, 128})->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
