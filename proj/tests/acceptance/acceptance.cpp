// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fail.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

#include <spdlog/spdlog.h>

#include "fixtures.hpp"
#include "paris_oracle.hpp"
#include "kgalign/adjacency.hpp"
#include "kgalign/inference.hpp"
#include "kgalign/model.hpp"
#include "kgalign/paris.hpp"
#include "kgalign/pipeline.hpp"
#include "kgalign/synth.hpp"
#include "kgalign/trainer.hpp"

namespace {

using namespace kgalign;
using namespace kgalign::testing;
using Clock = std::chrono::steady_clock;

struct Outcome {
  bool pass;
  std::string detail;
};

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string describe(const char* format, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, format, args...);
  return buf;
}

double max_dense_diff(const SparsePairMap& got, const Dense& want, bool& keys_match) {
  double diff = 0.0;
  std::size_t nonzero = 0;
  for (std::size_t a = 0; a < want.size(); ++a) {
    for (std::size_t b = 0; b < want[a].size(); ++b) {
      if (want[a][b] != 0.0) ++nonzero;
      if ((want[a][b] != 0.0) != got.contains(static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(b))) {
        keys_match = false;
      }
      diff = std::max(diff, std::abs(got.get(static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(b)) - want[a][b]));
    }
  }
  if (nonzero != got.size()) keys_match = false;
  return diff;
}

KnowledgeGraph random_graph(std::mt19937_64& rng, const std::string& prefix) {
  std::uniform_int_distribution<int> n_ent(3, 8), n_rel(1, 3);
  const int m = n_ent(rng), r = n_rel(rng);
  std::uniform_int_distribution<int> ent(0, m - 1), rel(0, r - 1), n_triples(m, 3 * m);
  KnowledgeGraphBuilder b;
  for (int e = 0; e < m; ++e) {
    b.add_attribute(prefix + std::to_string(e), "note", "");
  }
  const int count = n_triples(rng);
  for (int i = 0; i < count; ++i) {
    b.add_relation(prefix + std::to_string(ent(rng)), "r" + std::to_string(rel(rng)),
                   prefix + std::to_string(ent(rng)));
  }
  return std::move(b).finish();
}

Outcome pr_oracle_equivalence() {
  const auto start = Clock::now();
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  double worst = 0.0;
  bool keys_ok = true;
  std::size_t entries = 0;
  const ParisConfig config;
  const FusionConfig fusion{0.6, true};
  for (int trial = 0; trial < 25; ++trial) {
    const auto kg1 = random_graph(rng, "a");
    const auto kg2 = random_graph(rng, "b");
    AlignmentState state;
    for (EntityId x = 0; x < kg1.num_entities(); ++x) {
      for (EntityId y = 0; y < kg2.num_entities(); ++y) {
        const double u = unit(rng);
        if (u < 0.35) state.ent_prob.set(x, y, 0.01 + 0.99 * unit(rng));
        if (u < 0.08) state.seeds.set(x, y, 0.9);
      }
    }
    for (RelationId r1 = 0; r1 < kg1.num_relations(); ++r1) {
      for (RelationId r2 = 0; r2 < kg2.num_relations(); ++r2) {
        state.sub12.set(r1, r2, unit(rng));
        state.sub21.set(r2, r1, unit(rng));
      }
    }
    const auto stats1 = compute_functionalities(kg1);
    const auto stats2 = compute_functionalities(kg2);

    // Odd trials fuse a similarity that is sometimes negative.
    std::vector<double> cos_table(kg1.num_entities() * kg2.num_entities());
    for (auto& c : cos_table) c = 2.0 * unit(rng) - 1.0;
    const SimilarityFn sim_fn = [&](EntityId a, EntityId b) {
      return cos_table[a * kg2.num_entities() + b];
    };
    const SimilarityFn* sim = trial % 2 == 1 ? &sim_fn : nullptr;

    const auto got = update_entity_probabilities(state, kg1, kg2, stats1, stats2, sim, fusion, config);
    const auto want = oracle_entities(state, kg1, kg2, sim, fusion, config);
    worst = std::max(worst, max_dense_diff(got.ent_prob, want, keys_ok));

    const auto sub = update_relation_subsumption(got, kg1, kg2);
    entries += got.ent_prob.size() + sub.sub12.size() + sub.sub21.size();
    const Dense ev = mutual_best(to_dense(got.ent_prob, kg1.num_entities(), kg2.num_entities()));
    worst = std::max(worst, max_dense_diff(sub.sub12, oracle_subsumption(kg1, kg2, ev), keys_ok));
    worst = std::max(worst, max_dense_diff(sub.sub21, oracle_subsumption(kg2, kg1, transpose(ev)), keys_ok));
  }
  const double elapsed = seconds_since(start);
  return {keys_ok && worst <= 1e-12 && elapsed < 10.0,
          describe("25 pairs, %zu stored entries, max abs diff %.3g, key sets %s, %.2fs", entries, worst,
              keys_ok ? "equal" : "DIFFER", elapsed)};
}

// ---------------------------------------------------------------------------

Outcome functionality_formula() {
  const auto start = Clock::now();
  std::mt19937_64 rng(99);
  KnowledgeGraphBuilder b;
  b.add_attribute("e0", "note", "");
  std::uniform_int_distribution<int> size(1, 30), ent(0, 24);
  for (int r = 0; r < 100; ++r) {
    const int n = size(rng);
    for (int i = 0; i < n; ++i) {
      b.add_relation("e" + std::to_string(ent(rng)), "rel" + std::to_string(r),
                     "e" + std::to_string(ent(rng)));
    }
  }
  const auto kg = std::move(b).finish();
  const auto stats = compute_functionalities(kg);
  std::size_t mismatches = 0;
  for (RelationId r = 0; r < kg.num_relations(); ++r) {
    if (stats.fun(r) != oracle_fun(kg, r, false) || stats.fun_inv(r) != oracle_fun(kg, r, true)) {
      ++mismatches;
    }
  }
  const double elapsed = seconds_since(start);
  return {mismatches == 0 && kg.num_relations() == 100 && elapsed < 1.0,
          describe("%zu relations, %zu mismatches, %.3fs", kg.num_relations(), mismatches, elapsed)};
}

// ---------------------------------------------------------------------------

Outcome gradient_check() {
  const auto start = Clock::now();
  SynthSpec spec;
  spec.n_entities = 20;
  spec.n_relations = 3;
  spec.n_attributes = 3;
  spec.avg_degree = 2.0;
  spec.images_per_entity = 2;
  spec.feature_dim = 6;
  spec.seed = 11;
  const auto pair = generate(spec);
  const auto columns = build_columns(pair.kg1, pair.kg2);
  const auto g1 = prepare_inputs(pair.kg1, pair.features1, columns, 0);
  const auto g2 = prepare_inputs(pair.kg2, pair.features2, columns, 1);

  ModelDims dims{spec.feature_dim, 8, columns.relation_vocab, columns.attribute_vocab};
  auto model = init_model(dims, 5);
  // Non-zero biases and logits so their gradients are exercised away from symmetry.
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> small(-0.3, 0.3);
  for (auto* b : {&model.rel_b, &model.attr_b, &model.name_b, &model.image_b, &model.modality_logits}) {
    for (Eigen::Index i = 0; i < b->size(); ++i) b->data()[i] = small(rng);
  }

  std::vector<EntityLink> seeds(pair.gold_links.begin(), pair.gold_links.begin() + 10);
  const auto b1 = embed_all(g1, model, nullptr);
  const auto b2 = embed_all(g2, model, nullptr);
  const auto set = mine_hard_negatives(seeds, b1.fused, b2.fused, 3);
  const double gamma = 0.4;
  const auto analytic = loss_and_gradients(model, g1, g2, set, gamma);

  // Coordinates: 10 from every tensor, then random ones over the whole model.
  struct Coord {
    std::size_t tensor;
    Eigen::Index index;
  };
  std::vector<Coord> coords;
  auto tensors = model.tensors();
  for (std::size_t t = 0; t < tensors.size(); ++t) {
    std::uniform_int_distribution<Eigen::Index> pick(0, tensors[t].value->size() - 1);
    for (int i = 0; i < 10; ++i) coords.push_back({t, pick(rng)});
  }
  std::uniform_int_distribution<std::size_t> pick_tensor(0, tensors.size() - 1);
  while (coords.size() < 150) {
    const auto t = pick_tensor(rng);
    std::uniform_int_distribution<Eigen::Index> pick(0, tensors[t].value->size() - 1);
    coords.push_back({t, pick(rng)});
  }

  const auto grads = analytic.grads.tensors();
  const double h = 1e-5;
  double worst = 0.0;
  std::string worst_name;
  std::size_t nonzero = 0;
  for (const auto& c : coords) {
    double& x = tensors[c.tensor].value->data()[c.index];
    const double saved = x;
    x = saved + h;
    const double up = total_loss(model, g1, g2, set, gamma);
    x = saved - h;
    const double down = total_loss(model, g1, g2, set, gamma);
    x = saved;
    const double numeric = (up - down) / (2.0 * h);
    const double exact = grads[c.tensor].value->data()[c.index];
    if (exact != 0.0) ++nonzero;
    const double rel = std::abs(exact - numeric) / std::max({std::abs(exact), std::abs(numeric), 1e-6});
    if (rel > worst) {
      worst = rel;
      worst_name = std::string(tensors[c.tensor].name);
    }
  }
  const double elapsed = seconds_since(start);
  return {worst < 1e-3 && coords.size() >= 100 && elapsed < 30.0,
          describe("%zu coords (%zu nonzero), loss %.4f, max rel err %.3g (%s), %.2fs", coords.size(),
              nonzero, analytic.loss, worst, worst_name.c_str(), elapsed)};
}

// ---------------------------------------------------------------------------

Matrix random_matrix(std::mt19937_64& rng, Eigen::Index rows, Eigen::Index cols, double scale = 1.0) {
  std::normal_distribution<double> g(0.0, scale);
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = g(rng);
  return m;
}

Outcome attention_properties() {
  std::mt19937_64 rng(123);
  std::uniform_int_distribution<int> dim(2, 8), count(1, 6);
  double sum_drift = 0.0, mean_drift = 0.0, singleton_drift = 0.0;
  int negative = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const int d = dim(rng), d_in = dim(rng), n = count(rng);
    const Matrix w = random_matrix(rng, d_in, d);
    const Matrix b = random_matrix(rng, 1, d);
    const Matrix images = random_matrix(rng, n, d_in);
    const RowVector structure = random_matrix(rng, 1, d, 2.0).row(0);

    Matrix projected = images * w;
    projected.rowwise() += b.row(0);
    const Vector a = attention_weights(structure, projected);
    sum_drift = std::max(sum_drift, std::abs(a.sum() - 1.0));
    negative += (a.array() < 0.0).count();

    const RowVector uniform = image_attention(RowVector::Zero(d), images, w, b);
    RowVector mean = projected.colwise().mean();
    mean.normalize();
    mean_drift = std::max(mean_drift, (uniform - mean).cwiseAbs().maxCoeff());

    const Matrix one = images.topRows(1);
    const RowVector s1 = image_attention(structure, one, w, b);
    const RowVector s2 = image_attention(-3.0 * structure + RowVector::Ones(d), one, w, b);
    const RowVector direct = projected.row(0).normalized();
    singleton_drift = std::max({singleton_drift, (s1 - s2).cwiseAbs().maxCoeff(),
                                (s1 - direct).cwiseAbs().maxCoeff()});
  }
  return {sum_drift <= 1e-9 && mean_drift <= 1e-9 && singleton_drift <= 1e-9 && negative == 0,
          describe("1000 instances, sum drift %.3g, mean-pool drift %.3g, singleton drift %.3g",
              sum_drift, mean_drift, singleton_drift)};
}

// ---------------------------------------------------------------------------

Outcome csls_sanity() {
  Matrix cos(2, 2);
  cos << 0.9, 0.1, 0.2, 0.8;
  const Matrix got = csls_adjust(cos, 1);
  Matrix want(2, 2);
  // r_T = (0.9, 0.8) per row, r_S = (0.9, 0.8) per column.
  want << 1.8 - 0.9 - 0.9, 0.2 - 0.9 - 0.8, 0.4 - 0.8 - 0.9, 1.6 - 0.8 - 0.8;
  const double worked = (got - want).cwiseAbs().maxCoeff();
  const auto csls_rows = align(got), cos_rows = align(cos);
  bool argmax_same = csls_rows.size() == cos_rows.size();
  for (std::size_t i = 0; argmax_same && i < csls_rows.size(); ++i) {
    argmax_same = csls_rows[i].target == cos_rows[i].target;
  }

  double uniform = 0.0;
  for (const double c : {-0.7, 0.0, 0.3, 0.37, 1.0}) {
    for (const Eigen::Index n : {2, 3, 4, 7}) {
      const Matrix u = Matrix::Constant(n, n, c);
      uniform = std::max(uniform, csls_adjust(u, static_cast<std::size_t>(n)).cwiseAbs().maxCoeff());
    }
  }
  return {worked <= 1e-12 && uniform == 0.0 && argmax_same,
          describe("2x2 max err %.3g (CSLS[0][1]=%.12g), uniform max |CSLS| %.3g", worked, got(0, 1),
              uniform)};
}

// ---------------------------------------------------------------------------

double final_hit1(const PipelineResult& result, const KgPair& pair, FinalSource source) {
  return evaluate_mappings(result.final_alignment(source), pair.gold_links, {1}).hit_at.at(1);
}

Outcome fusion_ablation() {
  const auto start = Clock::now();
  int identical = 0;
  std::string sizes;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    SynthSpec spec;
    spec.seed = seed;
    const auto pair = generate(spec);
    PipelineConfig config;
    config.fusion.alpha = 1.0;
    config.final_source = FinalSource::Pr;
    config.seed = seed;
    const auto result = run_pipeline(pair, config);
    const auto paris = run_paris_only(pair, config);
    const std::set<std::pair<EntityId, EntityId>> a = [&] {
      std::set<std::pair<EntityId, EntityId>> s;
      for (const auto& p : result.final_alignment(FinalSource::Pr)) s.emplace(p.source, p.target);
      return s;
    }();
    std::set<std::pair<EntityId, EntityId>> b;
    for (const auto& p : paris) b.emplace(p.source, p.target);
    if (a == b && result.final_alignment(FinalSource::Pr) == paris) ++identical;
    sizes += (sizes.empty() ? "" : "/") + std::to_string(a.size());
  }
  return {identical == 5, describe("%d/5 pairs identical (mapping counts %s), %.1fs", identical,
                              sizes.c_str(), seconds_since(start))};
}

Outcome end_to_end() {
  const auto start = Clock::now();
  SynthSpec spec;  // 200 entities, degree 4, overlap 0.3, sigma 0.1, 3 images
  const auto pair = generate(spec);
  PipelineConfig config;
  const auto result = run_pipeline(pair, config);
  const double hit = final_hit1(result, pair, config.final_source);
  const double step1 = result.step1_report->hit_at.at(1);
  const double elapsed = seconds_since(start);
  return {hit >= 0.90 && hit > step1 && elapsed < 300.0,
          describe("Hit@1 %.3f vs step-1 PARIS %.3f, %zu rounds, %.1fs", hit, step1, result.rounds.size(),
              elapsed)};
}

double pipeline_hit1(const KgPair& pair, std::uint64_t seed) {
  PipelineConfig config;
  config.seed = seed;
  const auto result = run_pipeline(pair, config);
  return final_hit1(result, pair, config.final_source);
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const auto n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

Outcome sparsity_trend() {
  const auto start = Clock::now();
  std::map<int, double> gain;
  std::string detail;
  for (const int degree : {2, 6}) {
    std::vector<double> gains;
    for (std::uint64_t seed = 1; seed <= 3; ++seed) {
      SynthSpec spec;
      spec.avg_degree = degree;
      spec.seed = seed;
      const auto pair = generate(spec);
      const double with = pipeline_hit1(pair, seed);
      const double without = pipeline_hit1(with_images_truncated(pair, 0), seed);
      gains.push_back(with - without);
      detail += describe(" d%d/s%llu:%.3f-%.3f", degree, static_cast<unsigned long long>(seed), with, without);
    }
    gain[degree] = median(gains);
  }
  return {gain[2] > gain[6], describe("median image gain sparse %.3f vs dense %.3f;%s, %.1fs", gain[2],
                                 gain[6], detail.c_str(), seconds_since(start))};
}

Outcome image_ablation() {
  const auto start = Clock::now();
  std::vector<double> medians;
  for (const std::size_t keep : {3u, 2u, 1u, 0u}) {
    std::vector<double> hits;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      SynthSpec spec;
      spec.seed = seed;
      hits.push_back(pipeline_hit1(with_images_truncated(generate(spec), keep), seed));
    }
    medians.push_back(median(hits));
  }
  bool monotone = true;
  for (std::size_t i = 1; i < medians.size(); ++i) monotone = monotone && medians[i] <= medians[i - 1];
  return {monotone, describe("median Hit@1 with 3/2/1/0 images: %.3f %.3f %.3f %.3f, %.1fs", medians[0],
                        medians[1], medians[2], medians[3], seconds_since(start))};
}

Outcome determinism() {
  const auto start = Clock::now();
  SynthSpec spec;
  spec.n_entities = 80;
  const auto pair = generate(spec);
  kgalign::testing::TempDir dir;
  std::array<std::string, 2> tsv, model;
  for (int run = 0; run < 2; ++run) {
    PipelineConfig config;
    const auto result = run_pipeline(pair, config);
    const auto tsv_path = dir / ("run" + std::to_string(run) + ".tsv");
    const auto model_path = dir / ("run" + std::to_string(run) + ".bin");
    write_scored_pairs(result.final_alignment(config.final_source), pair.kg1, pair.kg2, tsv_path);
    save_model(result.model, model_path);
    tsv[run] = kgalign::testing::read_bytes(tsv_path);
    model[run] = kgalign::testing::read_bytes(model_path);
  }
  const bool same = tsv[0] == tsv[1] && model[0] == model[1] && !tsv[0].empty() && !model[0].empty();
  return {same, describe("TSV %zu bytes %s, model %zu bytes %s, %.1fs", tsv[0].size(),
                    tsv[0] == tsv[1] ? "identical" : "DIFFER", model[0].size(),
                    model[0] == model[1] ? "identical" : "DIFFER", seconds_since(start))};
}

}  // namespace

int main() {
  spdlog::set_level(spdlog::level::warn);
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"pr_oracle_equivalence", pr_oracle_equivalence},
      {"functionality_formula", functionality_formula},
      {"gradient_check", gradient_check},
      {"attention_properties", attention_properties},
      {"csls_sanity", csls_sanity},
      {"fusion_ablation_identity", fusion_ablation},
      {"end_to_end_synthetic", end_to_end},
      {"sparsity_trend", sparsity_trend},
      {"image_count_ablation", image_ablation},
      {"determinism", determinism},
  };
  int failures = 0;
  for (const auto& [name, run] : criteria) {
    Outcome outcome{false, ""};
    try {
      outcome = run();
    } catch (const std::exception& e) {
      outcome = {false, std::string("exception: ") + e.what()};
    }
    std::printf("%s %s: %s\n", outcome.pass ? "PASS" : "FAIL", name.c_str(), outcome.detail.c_str());
    std::fflush(stdout);
    failures += outcome.pass ? 0 : 1;
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
