#include "kgalign/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>
#include <unordered_set>

#include "kgalign/error.hpp"

namespace kgalign {

namespace {

std::uint64_t link_key(EntityId a, EntityId b) {
  return (static_cast<std::uint64_t>(a) << 32) | static_cast<std::uint64_t>(b);
}

// Indices of the k largest scores (ties to the smaller index), skipping `excluded`.
template <typename Scores, typename Excluded>
std::vector<EntityId> top_k(const Scores& scores, std::size_t k, Excluded&& excluded) {
  std::vector<EntityId> ids;
  ids.reserve(static_cast<std::size_t>(scores.size()));
  for (Eigen::Index j = 0; j < scores.size(); ++j) {
    if (!excluded(static_cast<EntityId>(j))) ids.push_back(static_cast<EntityId>(j));
  }
  const auto take = std::min(k, ids.size());
  std::partial_sort(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(take), ids.end(),
                    [&](EntityId a, EntityId b) {
                      if (scores[a] != scores[b]) return scores[a] > scores[b];
                      return a < b;
                    });
  ids.resize(take);
  return ids;
}

}  // namespace

TrainingSet mine_hard_negatives(const std::vector<EntityLink>& positives, const Matrix& fused1,
                                const Matrix& fused2, std::size_t k) {
  std::unordered_set<std::uint64_t> positive_keys;
  for (const auto& p : positives) positive_keys.insert(link_key(p.source, p.target));

  const Matrix sim = fused1 * fused2.transpose();
  TrainingSet set;
  set.positives = positives;
  set.negatives.reserve(positives.size());
  for (const auto& p : positives) {
    std::vector<EntityLink> negs;
    const auto row = sim.row(p.source);
    for (EntityId t : top_k(row, k, [&](EntityId j) {
           return j == p.target || positive_keys.count(link_key(p.source, j)) != 0;
         })) {
      negs.push_back({p.source, t});
    }
    const auto col = sim.col(p.target);
    for (EntityId s : top_k(col, k, [&](EntityId i) {
           return i == p.source || positive_keys.count(link_key(i, p.target)) != 0;
         })) {
      negs.push_back({s, p.target});
    }
    set.negatives.push_back(std::move(negs));
  }
  return set;
}

double margin_loss(const TrainingSet& set, const Matrix& fused1, const Matrix& fused2,
                   double gamma) {
  double loss = 0.0;
  for (std::size_t i = 0; i < set.positives.size(); ++i) {
    const auto& p = set.positives[i];
    const double pos = fused1.row(p.source).dot(fused2.row(p.target));
    for (const auto& n : set.negatives[i]) {
      const double hinge = fused1.row(n.source).dot(fused2.row(n.target)) - pos + gamma;
      if (hinge > 0.0) loss += hinge;
    }
  }
  return loss;
}

LossGradient margin_loss_gradient(const TrainingSet& set, const Matrix& fused1,
                                  const Matrix& fused2, double gamma) {
  LossGradient out;
  out.d_fused1 = Matrix::Zero(fused1.rows(), fused1.cols());
  out.d_fused2 = Matrix::Zero(fused2.rows(), fused2.cols());
  for (std::size_t i = 0; i < set.positives.size(); ++i) {
    const auto& p = set.positives[i];
    const double pos = fused1.row(p.source).dot(fused2.row(p.target));
    for (const auto& n : set.negatives[i]) {
      const double hinge = fused1.row(n.source).dot(fused2.row(n.target)) - pos + gamma;
      if (hinge <= 0.0) continue;
      out.loss += hinge;
      out.d_fused1.row(n.source) += fused2.row(n.target);
      out.d_fused2.row(n.target) += fused1.row(n.source);
      out.d_fused1.row(p.source) -= fused2.row(p.target);
      out.d_fused2.row(p.target) -= fused1.row(p.source);
    }
  }
  return out;
}

void accumulate_gradients(const EmbeddingModel& model, const GraphInputs& inputs,
                          const ModalityBundle& bundle, const ForwardTape& tape,
                          const Matrix& d_fused, EmbeddingModel& grads) {
  const auto m = static_cast<Eigen::Index>(inputs.num_entities());
  const auto d = static_cast<Eigen::Index>(model.dims.dim);

  Matrix d_fused_raw(m, d_fused.cols());
  for (Eigen::Index i = 0; i < m; ++i) {
    d_fused_raw.row(i) = normalize_backward(tape.fused_raw.row(i), bundle.fused.row(i),
                                            d_fused.row(i));
  }

  // Softmax-weighted concatenation.
  const RowVector& w = tape.modality_weights;
  std::array<Matrix, kModalities> d_part;
  RowVector d_w(static_cast<Eigen::Index>(kModalities));
  for (std::size_t k = 0; k < kModalities; ++k) {
    const auto ki = static_cast<Eigen::Index>(k);
    const auto block = d_fused_raw.middleCols(ki * d, d);
    d_part[k] = w[ki] * block;
    d_w[ki] = bundle.parts[k].cwiseProduct(block).sum();
  }
  grads.modality_logits.row(0) += (w.array() * (d_w.array() - w.dot(d_w))).matrix();

  auto unnormalize = [&](const Matrix& raw, const Matrix& out, const Matrix& d_out) {
    Matrix d_raw(raw.rows(), raw.cols());
    for (Eigen::Index i = 0; i < raw.rows(); ++i) {
      d_raw.row(i) = normalize_backward(raw.row(i), out.row(i), d_out.row(i));
    }
    return d_raw;
  };

  const Matrix& structure = bundle.part(Modality::Structure);
  Matrix d_structure = d_part[static_cast<std::size_t>(Modality::Structure)];

  // Structure-aware image attention.
  const Matrix d_pooled = unnormalize(tape.image_pooled, bundle.part(Modality::Image),
                                      d_part[static_cast<std::size_t>(Modality::Image)]);
  Matrix d_projected = Matrix::Zero(tape.image_projected.rows(), tape.image_projected.cols());
  for (Eigen::Index e = 0; e < m; ++e) {
    const auto begin = static_cast<Eigen::Index>(inputs.image_offsets[e]);
    const auto n = static_cast<Eigen::Index>(inputs.image_count(e));
    if (n == 0) continue;
    const auto proj = tape.image_projected.middleRows(begin, n);
    const auto a = tape.attention.segment(begin, n);
    const RowVector du = d_pooled.row(e);
    const Vector da = proj * du.transpose();
    const Vector ds = (a.array() * (da.array() - a.dot(da))).matrix();
    d_projected.middleRows(begin, n) = a * du + ds * structure.row(e);
    d_structure.row(e) += ds.transpose() * proj;
  }
  if (inputs.images.rows() > 0) {
    grads.image_w += inputs.images.transpose() * d_projected;
    grads.image_b.row(0) += d_projected.colwise().sum();
  }

  // Names: absent rows are constant zero, so they pass no gradient.
  Matrix d_name = unnormalize(tape.name_raw, bundle.part(Modality::Name),
                              d_part[static_cast<std::size_t>(Modality::Name)]);
  for (Eigen::Index e = 0; e < m; ++e) {
    if (!inputs.has_name[e]) d_name.row(e).setZero();
  }
  grads.name_w += inputs.names.transpose() * d_name;
  grads.name_b.row(0) += d_name.colwise().sum();

  const Matrix d_rel = unnormalize(tape.rel_raw, bundle.part(Modality::Relation),
                                   d_part[static_cast<std::size_t>(Modality::Relation)]);
  grads.rel_w += inputs.counts.relations.transpose() * d_rel;
  grads.rel_b.row(0) += d_rel.colwise().sum();

  const Matrix d_attr = unnormalize(tape.attr_raw, bundle.part(Modality::Attribute),
                                    d_part[static_cast<std::size_t>(Modality::Attribute)]);
  grads.attr_w += inputs.counts.attributes.transpose() * d_attr;
  grads.attr_b.row(0) += d_attr.colwise().sum();

  // GCN; the normalized adjacency is symmetric.
  const auto& adj = inputs.adjacency;
  const Matrix d_z3 = unnormalize(tape.z3, structure, d_structure);
  grads.gcn[2] += tape.ah2.transpose() * d_z3;
  Matrix d_z2 = adj * (d_z3 * model.gcn[2].transpose());
  d_z2 = d_z2.cwiseProduct((tape.z2.array() > 0.0).cast<double>().matrix());
  grads.gcn[1] += tape.ah1.transpose() * d_z2;
  Matrix d_z1 = adj * (d_z2 * model.gcn[1].transpose());
  d_z1 = d_z1.cwiseProduct((tape.z1.array() > 0.0).cast<double>().matrix());
  grads.gcn[0] += tape.ax.transpose() * d_z1;
}

LossAndGradients loss_and_gradients(const EmbeddingModel& model, const GraphInputs& g1,
                                    const GraphInputs& g2, const TrainingSet& set, double gamma) {
  ForwardTape tape1, tape2;
  const auto b1 = embed_all(g1, model, &tape1);
  const auto b2 = embed_all(g2, model, &tape2);
  const auto lg = margin_loss_gradient(set, b1.fused, b2.fused, gamma);
  LossAndGradients out{lg.loss, model.zeros_like()};
  accumulate_gradients(model, g1, b1, tape1, lg.d_fused1, out.grads);
  accumulate_gradients(model, g2, b2, tape2, lg.d_fused2, out.grads);
  for (const auto& t : out.grads.tensors()) {
    if (!t.value->allFinite()) {
      throw NumericError("non-finite gradient for parameter " + std::string(t.name));
    }
  }
  return out;
}

double total_loss(const EmbeddingModel& model, const GraphInputs& g1, const GraphInputs& g2,
                  const TrainingSet& set, double gamma) {
  const auto b1 = embed_all(g1, model);
  const auto b2 = embed_all(g2, model);
  return margin_loss(set, b1.fused, b2.fused, gamma);
}

TrainResult train(const GraphInputs& g1, const GraphInputs& g2,
                  const std::vector<EntityLink>& seeds, EmbeddingModel model,
                  const TrainConfig& config) {
  if (seeds.empty()) throw EmptySeedError("training requires at least one seed mapping");
  if (!(config.gamma > 0.0) || config.neg_k == 0 || !(config.lr > 0.0)) {
    throw ConfigError("train: gamma and lr must be positive and neg_k >= 1");
  }
  const std::size_t refresh = std::max<std::size_t>(1, config.neg_refresh_every);

  auto mine = [&](const EmbeddingModel& current) {
    const auto b1 = embed_all(g1, current);
    const auto b2 = embed_all(g2, current);
    return mine_hard_negatives(seeds, b1.fused, b2.fused, config.neg_k);
  };

  TrainResult result{model, std::numeric_limits<double>::infinity(), {}};
  if (config.epochs == 0) {
    result.best_loss = total_loss(model, g1, g2, mine(model), config.gamma);
    return result;
  }

  auto m1 = model.zeros_like();
  auto m2 = model.zeros_like();
  TrainingSet set;
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    if (epoch % refresh == 0) set = mine(model);
    auto lg = loss_and_gradients(model, g1, g2, set, config.gamma);
    result.trace.emplace_back(epoch, lg.loss);
    if (lg.loss < result.best_loss) {
      result.best_loss = lg.loss;
      result.model = model;
    }
    // Nothing can undercut a zero loss, so the returned model is final.
    if (result.best_loss == 0.0) return result;

    const double t = static_cast<double>(epoch + 1);
    const double c1 = 1.0 - std::pow(config.beta1, t);
    const double c2 = 1.0 - std::pow(config.beta2, t);
    auto params = model.tensors();
    auto grads = lg.grads.tensors();
    auto first = m1.tensors();
    auto second = m2.tensors();
    for (std::size_t i = 0; i < params.size(); ++i) {
      auto& p = *params[i].value;
      const auto& g = *grads[i].value;
      if (config.optimizer == Optimizer::Sgd) {
        p -= config.lr * g;
        continue;
      }
      auto& mv = *first[i].value;
      auto& vv = *second[i].value;
      mv = config.beta1 * mv + (1.0 - config.beta1) * g;
      vv = config.beta2 * vv + (1.0 - config.beta2) * g.cwiseProduct(g);
      p.array() -= config.lr * (mv.array() / c1) / ((vv.array() / c2).sqrt() + config.eps);
    }
  }
  const double final_loss = total_loss(model, g1, g2, set, config.gamma);
  result.trace.emplace_back(config.epochs, final_loss);
  if (final_loss < result.best_loss) {
    result.best_loss = final_loss;
    result.model = model;
  }
  return result;
}

void write_loss_trace(const std::vector<std::pair<std::size_t, double>>& trace,
                      const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out << "epoch,loss\n";
  char buf[64];
  for (const auto& [epoch, loss] : trace) {
    std::snprintf(buf, sizeof(buf), "%zu,%.10g\n", epoch, loss);
    out << buf;
  }
}

}  // namespace kgalign
