#include "kgalign/pipeline.hpp"

#include <chrono>
#include <cmath>
#include <string>

#include <spdlog/spdlog.h>

#include "kgalign/error.hpp"

namespace kgalign {

void validate(const PipelineConfig& config) {
  std::vector<std::string> problems;
  auto check = [&](bool ok, const char* what) {
    if (!ok) problems.emplace_back(what);
  };
  auto unit = [](double v) { return v >= 0.0 && v <= 1.0; };
  check(config.rounds >= 1, "rounds must be >= 1");
  check(unit(config.fusion.alpha), "alpha must lie in [0, 1]");
  check(config.train.gamma > 0.0, "gamma must be > 0");
  check(config.train.neg_k >= 1, "neg-k must be >= 1");
  check(config.train.lr > 0.0, "lr must be > 0");
  check(config.train.neg_refresh_every >= 1, "negative refresh interval must be >= 1");
  check(config.dim >= 1, "dim must be >= 1");
  check(std::isfinite(config.paris.threshold), "theta must be finite");
  check(unit(config.paris.seed_probability), "seed probability must lie in [0, 1]");
  check(unit(config.paris.pruning_floor), "pruning floor must lie in [0, 1]");
  check(unit(config.paris.initial_subsumption), "initial subsumption must lie in [0, 1]");
  check(config.paris.tolerance >= 0.0, "tolerance must be >= 0");
  check(!config.inference.use_csls || config.inference.csls_k >= 1, "csls-k must be >= 1");
  check(!config.eval_ks.empty(), "at least one Hit@k cut-off is required");
  for (auto k : config.eval_ks) check(k >= 1, "Hit@k cut-offs must be >= 1");
  if (problems.empty()) return;
  std::string message = "invalid configuration:";
  for (const auto& p : problems) message += "\n  - " + p;
  throw ConfigError(message);
}

Matrix inference_scores(const Matrix& fused1, const Matrix& fused2, const InferenceConfig& config) {
  Matrix cos = cosine_matrix(fused1, fused2);
  if (!config.use_csls) return cos;
  const auto limit = static_cast<std::size_t>(std::min(cos.rows(), cos.cols()));
  return csls_adjust(cos, std::min(config.csls_k, limit));
}

std::vector<ScoredPair> run_paris_only(const KgPair& pair, const PipelineConfig& config) {
  const auto state = run_paris(pair.kg1, pair.kg2, config.paris);
  return emit_mappings(state, config.paris.threshold);
}

namespace {

std::vector<EntityLink> as_links(const std::vector<ScoredPair>& mappings) {
  std::vector<EntityLink> links;
  links.reserve(mappings.size());
  for (const auto& m : mappings) links.push_back({m.source, m.target});
  return links;
}

}  // namespace

PipelineResult run_pipeline(const KgPair& pair, const PipelineConfig& config) {
  validate(config);
  pair.validate();
  const bool has_gold = !pair.gold_links.empty();

  const auto columns = build_columns(pair.kg1, pair.kg2);
  const auto g1 = prepare_inputs(pair.kg1, pair.features1, columns, 0);
  const auto g2 = prepare_inputs(pair.kg2, pair.features2, columns, 1);
  const ModelDims dims{pair.features1.dim, config.dim, columns.relation_vocab,
                       columns.attribute_vocab};

  PipelineResult result;
  auto state = run_paris(pair.kg1, pair.kg2, config.paris);
  auto mappings = emit_mappings(state, config.paris.threshold);
  result.step1_mappings = mappings;
  if (has_gold) result.step1_report = evaluate_mappings(mappings, pair.gold_links, config.eval_ks);
  spdlog::info("step 1: {} PR mappings", mappings.size());

  EmbeddingModel model = init_model(dims, config.seed);
  ModalityBundle bundle1, bundle2;
  for (std::size_t round = 1; round <= config.rounds; ++round) {
    const auto start = std::chrono::steady_clock::now();
    RoundRecord record;
    record.round = round;
    record.seed_mappings = mappings.size();

    if (round > 1 && !config.warm_start) model = init_model(dims, config.seed + round - 1);
    if (mappings.empty()) {
      spdlog::warn("round {}: no PR mappings to train on; using the untrained model for similarity",
                   round);
    } else {
      TrainConfig tc = config.train;
      tc.seed = config.seed + round - 1;
      auto trained = train(g1, g2, as_links(mappings), model, tc);
      model = std::move(trained.model);
      record.trained = true;
      record.final_loss = trained.best_loss;
      result.loss_trace = std::move(trained.trace);
    }

    bundle1 = embed_all(g1, model);
    bundle2 = embed_all(g2, model);
    const SimilarityFn sim = [&](EntityId a, EntityId b) {
      return bundle1.fused.row(a).dot(bundle2.fused.row(b));
    };
    auto next = run_paris(pair.kg1, pair.kg2, config.paris, &sim, config.fusion);
    auto next_mappings = emit_mappings(next, config.paris.threshold);
    record.pr_mappings = next_mappings.size();
    record.pr_change = max_probability_change(state.ent_prob, next.ent_prob);
    if (has_gold) {
      record.se_report = evaluate(inference_scores(bundle1.fused, bundle2.fused, config.inference),
                                  pair.gold_links, config.eval_ks);
      record.pr_report = evaluate_mappings(next_mappings, pair.gold_links, config.eval_ks);
    }
    record.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    spdlog::info("round {}: trained on {} seeds, loss {:.4f}, {} PR mappings, change {:.3g}", round,
                 record.seed_mappings, record.final_loss, record.pr_mappings, record.pr_change);
    result.rounds.push_back(std::move(record));

    state = std::move(next);
    mappings = std::move(next_mappings);
    if (result.rounds.back().pr_change < config.paris.tolerance && round < config.rounds) {
      spdlog::info("PR state unchanged across round {}; stopping early", round);
      result.early_exit = true;
      break;
    }
  }

  result.pr_mappings = std::move(mappings);
  result.se_alignment = align(inference_scores(bundle1.fused, bundle2.fused, config.inference));
  result.model = std::move(model);
  return result;
}

nlohmann::json PipelineResult::log_json() const {
  auto report = [](const std::optional<EvalReport>& r) -> nlohmann::json {
    return r ? r->to_json() : nlohmann::json(nullptr);
  };
  nlohmann::json rounds_json = nlohmann::json::array();
  for (const auto& r : rounds) {
    rounds_json.push_back({{"round", r.round},
                           {"seed_mappings", r.seed_mappings},
                           {"trained", r.trained},
                           {"final_loss", r.final_loss},
                           {"pr_mappings", r.pr_mappings},
                           {"pr_change", r.pr_change},
                           {"se_eval", report(r.se_report)},
                           {"pr_eval", report(r.pr_report)},
                           {"wall_seconds", r.wall_seconds}});
  }
  return {{"step1", {{"mappings", step1_mappings.size()}, {"eval", report(step1_report)}}},
          {"rounds", rounds_json},
          {"early_exit", early_exit}};
}

}  // namespace kgalign
