#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>

#include "kgalign/features.hpp"

namespace kgalign {

struct SynthSpec {
  std::size_t n_entities = 200;
  std::size_t n_relations = 8;
  std::size_t n_attributes = 6;
  double avg_degree = 4.0;
  double name_overlap_ratio = 0.3;
  double feature_noise_sigma = 0.1;
  std::size_t images_per_entity = 3;
  std::size_t feature_dim = 32;
  std::uint64_t seed = 7;
  bool powerlaw = false;

  // Throws ConfigError.
  void validate() const;
};

// Builds an aligned pair: the second graph is an isomorphic, relabeled and
// reordered copy of the first. Entities in the overlap share names, literals
// and name-vector ground truth; all others get disjoint names and literals
// and an unrelated name vector. Image vectors always share ground truth.
KgPair generate(const SynthSpec& spec);

// Writes kg1/, kg2/ (rel_triples, attr_triples), features1.tsv,
// features2.tsv and ent_links under `dir`.
void write_fixture(const KgPair& pair, const std::filesystem::path& dir);

KgPair load_fixture(const std::filesystem::path& dir);

// Copy of the pair with each entity's image list truncated to `keep` images.
KgPair with_images_truncated(KgPair pair, std::size_t keep);

}  // namespace kgalign
