#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "kgalign/features.hpp"
#include "kgalign/inference.hpp"
#include "kgalign/model.hpp"
#include "kgalign/paris.hpp"
#include "kgalign/trainer.hpp"

namespace kgalign {

// Which stage produces the final alignment written by the CLI.
enum class FinalSource { Pr, Se };

struct InferenceConfig {
  bool use_csls = true;
  std::size_t csls_k = 10;
};

struct PipelineConfig {
  std::size_t rounds = 3;
  ParisConfig paris;
  FusionConfig fusion;
  std::size_t dim = 128;
  TrainConfig train;
  InferenceConfig inference;
  std::uint64_t seed = 42;
  bool warm_start = false;  // keep parameters across rounds instead of re-initializing
  FinalSource final_source = FinalSource::Se;
  std::vector<std::size_t> eval_ks = {1, 5};
};

// Throws ConfigError listing every invalid field.
void validate(const PipelineConfig& config);

struct RoundRecord {
  std::size_t round = 0;
  std::size_t seed_mappings = 0;
  bool trained = false;
  double final_loss = 0.0;
  std::size_t pr_mappings = 0;
  double pr_change = 0.0;  // max entity-probability change against the previous PR state
  std::optional<EvalReport> se_report;
  std::optional<EvalReport> pr_report;
  double wall_seconds = 0.0;
};

struct PipelineResult {
  std::vector<ScoredPair> step1_mappings;
  std::optional<EvalReport> step1_report;
  std::vector<ScoredPair> pr_mappings;   // emitted from the last PR state
  std::vector<ScoredPair> se_alignment;  // greedy search over the last embeddings
  std::vector<RoundRecord> rounds;
  bool early_exit = false;
  EmbeddingModel model;
  std::vector<std::pair<std::size_t, double>> loss_trace;  // last trained round

  const std::vector<ScoredPair>& final_alignment(FinalSource source) const {
    return source == FinalSource::Pr ? pr_mappings : se_alignment;
  }
  nlohmann::json log_json() const;
};

// Step 1 (PR alone), then per round: train the embedding model on the
// current PR mappings (Step 2) and re-run PR fused with embedding cosine
// similarity (Step 3).
PipelineResult run_pipeline(const KgPair& pair, const PipelineConfig& config);

// Cosine, optionally CSLS-adjusted, between the two fused embedding matrices.
Matrix inference_scores(const Matrix& fused1, const Matrix& fused2, const InferenceConfig& config);

// Step 1 alone.
std::vector<ScoredPair> run_paris_only(const KgPair& pair, const PipelineConfig& config);

}  // namespace kgalign
