#pragma once

#include "kgalign/kg.hpp"
#include "kgalign/linalg.hpp"

namespace kgalign {

// D^{-1/2} (A + I) D^{-1/2} over the undirected 0/1 entity graph.
// Triples whose head equals their tail add nothing beyond the self-loop.
SparseMatrix build_adjacency(const KnowledgeGraph& kg);

}  // namespace kgalign
