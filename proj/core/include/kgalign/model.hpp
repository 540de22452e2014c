#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "kgalign/features.hpp"
#include "kgalign/kg.hpp"
#include "kgalign/linalg.hpp"

namespace kgalign {

inline constexpr std::size_t kModalities = 5;

// Block order inside the fused embedding.
enum class Modality : std::size_t { Structure = 0, Relation, Attribute, Name, Image };

struct ModelDims {
  std::size_t input_dim = 0;  // feature-vector dimension (name and image)
  std::size_t dim = 128;      // per-modality output dimension
  std::size_t relation_vocab = 0;
  std::size_t attribute_vocab = 0;

  bool operator==(const ModelDims&) const = default;
};

struct NamedTensor {
  std::string_view name;
  Matrix* value;
};

struct ConstNamedTensor {
  std::string_view name;
  const Matrix* value;
};

// Every trainable parameter. Biases and the modality logits are 1-row matrices.
struct EmbeddingModel {
  ModelDims dims;
  std::array<Matrix, 3> gcn;  // [input_dim x dim, dim x dim, dim x dim]
  Matrix rel_w, rel_b;        // relation_vocab x dim, 1 x dim
  Matrix attr_w, attr_b;      // attribute_vocab x dim, 1 x dim
  Matrix name_w, name_b;      // input_dim x dim, 1 x dim
  Matrix image_w, image_b;    // input_dim x dim, 1 x dim
  Matrix modality_logits;     // 1 x 5

  // Fixed order; this is also the serialization order.
  std::vector<NamedTensor> tensors();
  std::vector<ConstNamedTensor> tensors() const;

  // Same shapes, all zeros.
  EmbeddingModel zeros_like() const;

  std::size_t parameter_count() const;
};

// Glorot-uniform weights, zero biases and logits.
EmbeddingModel init_model(const ModelDims& dims, std::uint64_t seed);

// Little-endian binary file: magic "KGAEMB01", u32 version, u32 dims
// (input_dim, dim, relation_vocab, attribute_vocab), then every tensor in
// `tensors()` order as u32 rows, u32 cols, rows*cols float32 row-major.
void save_model(const EmbeddingModel& model, const std::filesystem::path& path);
EmbeddingModel load_model(const std::filesystem::path& path);

// Relation and attribute columns shared by both graphs: URIs with the same
// normalized local name map to the same column.
struct PairColumns {
  std::size_t relation_vocab = 0;
  std::size_t attribute_vocab = 0;
  std::array<std::vector<std::size_t>, 2> relation_column;   // per graph, per relation id
  std::array<std::vector<std::size_t>, 2> attribute_column;  // per graph, per attribute id
};

PairColumns build_columns(const KnowledgeGraph& kg1, const KnowledgeGraph& kg2);

// log(1 + count) per entity and column.
struct CountMatrices {
  Matrix relations;
  Matrix attributes;
};

CountMatrices build_counts(const KnowledgeGraph& kg, const PairColumns& columns, std::size_t side);

// Frozen per-graph inputs of the forward pass.
struct GraphInputs {
  SparseMatrix adjacency;
  Matrix gcn_input;  // name vectors, zero rows where absent
  CountMatrices counts;
  Matrix names;      // zero rows where absent
  std::vector<bool> has_name;
  Matrix images;                            // all image vectors stacked
  std::vector<std::size_t> image_offsets;  // entity i owns rows [off[i], off[i+1])

  std::size_t num_entities() const { return has_name.size(); }
  std::size_t image_count(std::size_t e) const { return image_offsets[e + 1] - image_offsets[e]; }
};

GraphInputs prepare_inputs(const KnowledgeGraph& kg, const FeatureStore& features,
                           const PairColumns& columns, std::size_t side);

struct ModalityBundle {
  std::array<Matrix, kModalities> parts;  // indexed by Modality
  Matrix fused;                           // rows of length 5 * dim

  const Matrix& part(Modality m) const { return parts[static_cast<std::size_t>(m)]; }
  Matrix& part(Modality m) { return parts[static_cast<std::size_t>(m)]; }
};

// Intermediates recorded by a forward pass for the backward pass.
struct ForwardTape {
  Matrix ax;              // A X
  Matrix z1, h1, ah1;     // layer 1 pre-activation, activation, A H1
  Matrix z2, h2, ah2;
  Matrix z3;              // unnormalized structure embedding
  Matrix rel_raw, attr_raw, name_raw;
  Matrix image_projected;  // W_I v + b_I for every stacked image
  Vector attention;        // softmax weight of every stacked image
  Matrix image_pooled;     // attention-weighted sum before normalization
  RowVector modality_weights;
  Matrix fused_raw;
};

// Three propagation layers, relu after the first two, rows unit-normalized.
Matrix gcn_forward(const SparseMatrix& adjacency, const Matrix& input,
                   const std::array<Matrix, 3>& weights);

// Row-wise affine map then unit normalization.
Matrix encode_counts(const Matrix& counts, const Matrix& w, const Matrix& b);

// Softmax over <structure_row, W_I v_i + b_I>, weighted sum of projections,
// unit-normalized. No images gives a zero vector.
RowVector image_attention(const RowVector& structure_row, const Matrix& image_vecs,
                          const Matrix& w, const Matrix& b);

// Attention weights alone, for inspection.
Vector attention_weights(const RowVector& structure_row, const Matrix& projected_images);

RowVector softmax(const RowVector& logits);

// Concatenation of softmax-weighted blocks, rows unit-normalized.
// Softmax-weighted concatenation in Modality order, before and after row
// normalization.
Matrix concat_weighted(const std::array<Matrix, kModalities>& parts,
                       const Matrix& modality_logits);
Matrix fuse(const std::array<Matrix, kModalities>& parts, const Matrix& modality_logits);

ModalityBundle embed_all(const GraphInputs& inputs, const EmbeddingModel& model,
                         ForwardTape* tape = nullptr);

}  // namespace kgalign
