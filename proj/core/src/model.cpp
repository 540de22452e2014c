#include "kgalign/model.hpp"

#include <cmath>
#include <random>
#include <string>
#include <unordered_map>

#include "kgalign/adjacency.hpp"
#include "kgalign/error.hpp"
#include "kgalign/paris.hpp"

namespace kgalign {

std::vector<NamedTensor> EmbeddingModel::tensors() {
  return {{"gcn0", &gcn[0]},       {"gcn1", &gcn[1]},       {"gcn2", &gcn[2]},
          {"rel_w", &rel_w},       {"rel_b", &rel_b},       {"attr_w", &attr_w},
          {"attr_b", &attr_b},     {"name_w", &name_w},     {"name_b", &name_b},
          {"image_w", &image_w},   {"image_b", &image_b},   {"modality_logits", &modality_logits}};
}

std::vector<ConstNamedTensor> EmbeddingModel::tensors() const {
  std::vector<ConstNamedTensor> out;
  for (auto t : const_cast<EmbeddingModel*>(this)->tensors()) out.push_back({t.name, t.value});
  return out;
}

EmbeddingModel EmbeddingModel::zeros_like() const {
  EmbeddingModel z = *this;
  for (auto t : z.tensors()) t.value->setZero();
  return z;
}

std::size_t EmbeddingModel::parameter_count() const {
  std::size_t n = 0;
  for (auto t : tensors()) n += static_cast<std::size_t>(t.value->size());
  return n;
}

EmbeddingModel init_model(const ModelDims& dims, std::uint64_t seed) {
  if (dims.input_dim == 0 || dims.dim == 0 || dims.relation_vocab == 0 ||
      dims.attribute_vocab == 0) {
    throw DimensionError("model dimensions must be positive");
  }
  std::mt19937_64 rng(seed);
  auto glorot = [&](std::size_t fan_in, std::size_t fan_out) {
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    std::uniform_real_distribution<double> dist(-limit, limit);
    Matrix w(fan_in, fan_out);
    for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = dist(rng);
    return w;
  };
  const auto d = dims.dim;
  EmbeddingModel model;
  model.dims = dims;
  model.gcn[0] = glorot(dims.input_dim, d);
  model.gcn[1] = glorot(d, d);
  model.gcn[2] = glorot(d, d);
  model.rel_w = glorot(dims.relation_vocab, d);
  model.rel_b = Matrix::Zero(1, d);
  model.attr_w = glorot(dims.attribute_vocab, d);
  model.attr_b = Matrix::Zero(1, d);
  model.name_w = glorot(dims.input_dim, d);
  model.name_b = Matrix::Zero(1, d);
  model.image_w = glorot(dims.input_dim, d);
  model.image_b = Matrix::Zero(1, d);
  model.modality_logits = Matrix::Zero(1, kModalities);
  return model;
}

PairColumns build_columns(const KnowledgeGraph& kg1, const KnowledgeGraph& kg2) {
  PairColumns cols;
  std::unordered_map<std::string, std::size_t> relation_index, attribute_index;
  auto column = [](std::unordered_map<std::string, std::size_t>& index, const std::string& uri) {
    auto key = normalize_lexical(display_name(uri));
    auto [it, inserted] = index.emplace(std::move(key), index.size());
    return it->second;
  };
  const std::array<const KnowledgeGraph*, 2> graphs{&kg1, &kg2};
  for (std::size_t side = 0; side < 2; ++side) {
    for (const auto& uri : graphs[side]->relations.keys()) {
      cols.relation_column[side].push_back(column(relation_index, uri));
    }
    for (const auto& uri : graphs[side]->attributes.keys()) {
      cols.attribute_column[side].push_back(column(attribute_index, uri));
    }
  }
  cols.relation_vocab = relation_index.size();
  cols.attribute_vocab = attribute_index.size();
  return cols;
}

CountMatrices build_counts(const KnowledgeGraph& kg, const PairColumns& columns, std::size_t side) {
  const auto m = static_cast<Eigen::Index>(kg.num_entities());
  CountMatrices c;
  c.relations = Matrix::Zero(m, static_cast<Eigen::Index>(columns.relation_vocab));
  c.attributes = Matrix::Zero(m, static_cast<Eigen::Index>(columns.attribute_vocab));
  const auto& rel_col = columns.relation_column.at(side);
  const auto& attr_col = columns.attribute_column.at(side);
  for (const auto& t : kg.rel_triples) {
    const auto col = static_cast<Eigen::Index>(rel_col[t.relation]);
    c.relations(t.head, col) += 1.0;
    c.relations(t.tail, col) += 1.0;
  }
  for (const auto& t : kg.attr_triples) {
    c.attributes(t.entity, static_cast<Eigen::Index>(attr_col[t.attribute])) += 1.0;
  }
  c.relations = c.relations.array().log1p().matrix();
  c.attributes = c.attributes.array().log1p().matrix();
  return c;
}

GraphInputs prepare_inputs(const KnowledgeGraph& kg, const FeatureStore& features,
                           const PairColumns& columns, std::size_t side) {
  if (features.num_entities() != kg.num_entities()) {
    throw DimensionError("feature store has " + std::to_string(features.num_entities()) +
                         " entities, graph has " + std::to_string(kg.num_entities()));
  }
  const auto m = static_cast<Eigen::Index>(kg.num_entities());
  const auto dim = static_cast<Eigen::Index>(features.dim);
  GraphInputs in;
  in.adjacency = build_adjacency(kg);
  in.counts = build_counts(kg, columns, side);
  in.names = Matrix::Zero(m, dim);
  in.has_name.assign(kg.num_entities(), false);
  in.image_offsets.assign(kg.num_entities() + 1, 0);
  std::size_t total_images = 0;
  for (Eigen::Index e = 0; e < m; ++e) {
    if (const auto& v = features.name_vecs[e]) {
      in.names.row(e) = v->transpose();
      in.has_name[e] = true;
    }
    total_images += features.image_vecs[e].size();
    in.image_offsets[e + 1] = total_images;
  }
  in.images = Matrix::Zero(static_cast<Eigen::Index>(total_images), dim);
  for (Eigen::Index e = 0; e < m; ++e) {
    auto row = static_cast<Eigen::Index>(in.image_offsets[e]);
    for (const auto& v : features.image_vecs[e]) in.images.row(row++) = v.transpose();
  }
  in.gcn_input = in.names;
  return in;
}

namespace {

Matrix relu(const Matrix& m) { return m.cwiseMax(0.0); }

void require(bool ok, const std::string& what) {
  if (!ok) throw DimensionError(what);
}

// Runs the three propagation layers, recording intermediates when asked.
Matrix gcn_layers(const SparseMatrix& adj, const Matrix& input, const std::array<Matrix, 3>& w,
                  ForwardTape* tape) {
  require(adj.rows() == adj.cols() && adj.rows() == input.rows(),
          "gcn: adjacency is " + std::to_string(adj.rows()) + "x" + std::to_string(adj.cols()) +
              " but input has " + std::to_string(input.rows()) + " rows");
  require(input.cols() == w[0].rows(), "gcn: input width " + std::to_string(input.cols()) +
                                           " does not match layer 0 (" +
                                           std::to_string(w[0].rows()) + " rows)");
  require(w[0].cols() == w[1].rows() && w[1].cols() == w[2].rows(),
          "gcn: layer weight shapes do not chain");
  Matrix ax = adj * input;
  Matrix z1 = ax * w[0];
  Matrix h1 = relu(z1);
  Matrix ah1 = adj * h1;
  Matrix z2 = ah1 * w[1];
  Matrix h2 = relu(z2);
  Matrix ah2 = adj * h2;
  Matrix z3 = ah2 * w[2];
  Matrix out = normalized_rows(z3);
  if (tape != nullptr) {
    tape->ax = std::move(ax);
    tape->z1 = std::move(z1);
    tape->h1 = std::move(h1);
    tape->ah1 = std::move(ah1);
    tape->z2 = std::move(z2);
    tape->h2 = std::move(h2);
    tape->ah2 = std::move(ah2);
    tape->z3 = std::move(z3);
  }
  return out;
}

Matrix affine(const Matrix& x, const Matrix& w, const Matrix& b) {
  require(x.cols() == w.rows(), "affine: input width " + std::to_string(x.cols()) +
                                    " does not match weight rows " + std::to_string(w.rows()));
  require(b.rows() == 1 && b.cols() == w.cols(), "affine: bias shape does not match weight");
  Matrix y = x * w;
  y.rowwise() += b.row(0);
  return y;
}

}  // namespace

Matrix gcn_forward(const SparseMatrix& adjacency, const Matrix& input,
                   const std::array<Matrix, 3>& weights) {
  return gcn_layers(adjacency, input, weights, nullptr);
}

Matrix encode_counts(const Matrix& counts, const Matrix& w, const Matrix& b) {
  return normalized_rows(affine(counts, w, b));
}

RowVector softmax(const RowVector& logits) {
  if (logits.size() == 0) return logits;
  RowVector e = (logits.array() - logits.maxCoeff()).exp();
  return e / e.sum();
}

Vector attention_weights(const RowVector& structure_row, const Matrix& projected_images) {
  if (projected_images.rows() == 0) return Vector();
  require(projected_images.cols() == structure_row.size(),
          "attention: structure row and projected images differ in width");
  RowVector logits = (projected_images * structure_row.transpose()).transpose();
  return softmax(logits).transpose();
}

RowVector image_attention(const RowVector& structure_row, const Matrix& image_vecs,
                          const Matrix& w, const Matrix& b) {
  if (image_vecs.rows() == 0) return RowVector::Zero(w.cols());
  const Matrix projected = affine(image_vecs, w, b);
  const Vector a = attention_weights(structure_row, projected);
  RowVector pooled = a.transpose() * projected;
  const double n = pooled.norm();
  if (n > 0.0) pooled /= n;
  return pooled;
}

Matrix concat_weighted(const std::array<Matrix, kModalities>& parts,
                       const Matrix& modality_logits) {
  require(modality_logits.rows() == 1 &&
              modality_logits.cols() == static_cast<Eigen::Index>(kModalities),
          "fuse: expected 5 modality logits");
  const auto m = parts[0].rows();
  const auto d = parts[0].cols();
  for (const auto& p : parts) {
    require(p.rows() == m && p.cols() == d, "fuse: modality blocks differ in shape");
  }
  const RowVector w = softmax(modality_logits.row(0));
  Matrix fused(m, d * static_cast<Eigen::Index>(kModalities));
  for (std::size_t k = 0; k < kModalities; ++k) {
    fused.middleCols(static_cast<Eigen::Index>(k) * d, d) = w[static_cast<Eigen::Index>(k)] * parts[k];
  }
  return fused;
}

Matrix fuse(const std::array<Matrix, kModalities>& parts, const Matrix& modality_logits) {
  return normalized_rows(concat_weighted(parts, modality_logits));
}

ModalityBundle embed_all(const GraphInputs& inputs, const EmbeddingModel& model,
                         ForwardTape* tape) {
  const auto m = static_cast<Eigen::Index>(inputs.num_entities());
  const auto d = static_cast<Eigen::Index>(model.dims.dim);
  require(inputs.names.rows() == m && inputs.counts.relations.rows() == m &&
              inputs.counts.attributes.rows() == m,
          "embed_all: input row counts disagree");
  require(inputs.images.rows() == 0 || inputs.images.cols() == model.image_w.rows(),
          "embed_all: image width does not match image encoder");

  ModalityBundle bundle;
  auto& structure = bundle.part(Modality::Structure);
  structure = gcn_layers(inputs.adjacency, inputs.gcn_input, model.gcn, tape);

  Matrix rel_raw = affine(inputs.counts.relations, model.rel_w, model.rel_b);
  Matrix attr_raw = affine(inputs.counts.attributes, model.attr_w, model.attr_b);
  Matrix name_raw = affine(inputs.names, model.name_w, model.name_b);
  for (Eigen::Index e = 0; e < m; ++e) {
    if (!inputs.has_name[e]) name_raw.row(e).setZero();
  }
  bundle.part(Modality::Relation) = normalized_rows(rel_raw);
  bundle.part(Modality::Attribute) = normalized_rows(attr_raw);
  bundle.part(Modality::Name) = normalized_rows(name_raw);

  Matrix projected = inputs.images.rows() > 0 ? affine(inputs.images, model.image_w, model.image_b)
                                              : Matrix(0, d);
  Vector attention(projected.rows());
  Matrix pooled = Matrix::Zero(m, d);
  for (Eigen::Index e = 0; e < m; ++e) {
    const auto begin = static_cast<Eigen::Index>(inputs.image_offsets[e]);
    const auto n = static_cast<Eigen::Index>(inputs.image_count(e));
    if (n == 0) continue;
    const Vector a = attention_weights(structure.row(e), projected.middleRows(begin, n));
    attention.segment(begin, n) = a;
    pooled.row(e) = a.transpose() * projected.middleRows(begin, n);
  }
  bundle.part(Modality::Image) = normalized_rows(pooled);

  const RowVector weights = softmax(model.modality_logits.row(0));
  Matrix fused_raw = concat_weighted(bundle.parts, model.modality_logits);
  bundle.fused = normalized_rows(fused_raw);

  if (tape != nullptr) {
    tape->rel_raw = std::move(rel_raw);
    tape->attr_raw = std::move(attr_raw);
    tape->name_raw = std::move(name_raw);
    tape->image_projected = std::move(projected);
    tape->attention = std::move(attention);
    tape->image_pooled = std::move(pooled);
    tape->modality_weights = weights;
    tape->fused_raw = std::move(fused_raw);
  }
  return bundle;
}

}  // namespace kgalign
