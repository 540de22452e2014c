#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <utility>
#include <vector>

#include "kgalign/kg.hpp"
#include "kgalign/linalg.hpp"
#include "kgalign/model.hpp"

namespace kgalign {

enum class Optimizer { Sgd, Adam };

struct TrainConfig {
  double gamma = 0.4;
  std::size_t neg_k = 5;
  double lr = 1e-3;
  std::size_t epochs = 200;
  Optimizer optimizer = Optimizer::Adam;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::uint64_t seed = 42;
  std::size_t neg_refresh_every = 20;
};

// negatives[i] holds the pairs mined for positives[i].
struct TrainingSet {
  std::vector<EntityLink> positives;
  std::vector<std::vector<EntityLink>> negatives;
};

// For each positive (e1, e2): the K kg2 entities closest to e1 other than e2
// give (e1, x); the K kg1 entities closest to e2 other than e1 give (x, e2).
// Closest is highest cosine, ties to the smaller id. Pairs that are themselves
// positives are never returned.
TrainingSet mine_hard_negatives(const std::vector<EntityLink>& positives, const Matrix& fused1,
                                const Matrix& fused2, std::size_t k);

// Sum over positives of hinge(cos(neg) - cos(pos) + gamma) across that
// positive's negatives. Embedding rows are expected to be unit or zero, so the
// cosine is their dot product.
double margin_loss(const TrainingSet& set, const Matrix& fused1, const Matrix& fused2,
                   double gamma);

struct LossGradient {
  double loss = 0.0;
  Matrix d_fused1;
  Matrix d_fused2;
};

// Loss and its gradient with respect to both fused embedding matrices.
// Hinges exactly at zero contribute nothing.
LossGradient margin_loss_gradient(const TrainingSet& set, const Matrix& fused1,
                                  const Matrix& fused2, double gamma);

// Adds d(loss)/d(parameters) for one graph to `grads`, given dL/d(fused).
void accumulate_gradients(const EmbeddingModel& model, const GraphInputs& inputs,
                          const ModalityBundle& bundle, const ForwardTape& tape,
                          const Matrix& d_fused, EmbeddingModel& grads);

// Full forward and backward over both graphs for a fixed training set.
// Throws NumericError naming the first parameter with a non-finite gradient.
struct LossAndGradients {
  double loss = 0.0;
  EmbeddingModel grads;
};

LossAndGradients loss_and_gradients(const EmbeddingModel& model, const GraphInputs& g1,
                                    const GraphInputs& g2, const TrainingSet& set, double gamma);

double total_loss(const EmbeddingModel& model, const GraphInputs& g1, const GraphInputs& g2,
                  const TrainingSet& set, double gamma);

struct TrainResult {
  EmbeddingModel model;  // lowest-loss parameters seen
  double best_loss = 0.0;
  std::vector<std::pair<std::size_t, double>> trace;  // (epoch, loss)
};

// Full-batch training over seed mappings. Negatives are re-mined from the
// current embeddings every `neg_refresh_every` epochs.
TrainResult train(const GraphInputs& g1, const GraphInputs& g2,
                  const std::vector<EntityLink>& seeds, EmbeddingModel model,
                  const TrainConfig& config);

void write_loss_trace(const std::vector<std::pair<std::size_t, double>>& trace,
                      const std::filesystem::path& path);

}  // namespace kgalign
