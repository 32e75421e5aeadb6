#pragma once

#include <vector>

#include "cogkr/dataset.hpp"
#include "cogkr/knowledge_graph.hpp"

namespace cogkr {

// Synthetic one-shot tasks with planted composition rules.
//
// Entities come in `types` groups arranged on a ring. Base relation link_k
// is a partial bijection from group k to group k+1. Rule k is the clockwise
// walk link_k, link_{k+1}, ... starting at group k, with length
// rule_hops[k % rule_hops.size()]. The heads of each rule are split into
// `relations_per_rule` disjoint task relations cw<h>_<k>_<part>. Valid and
// test relations each leave a sibling of the same rule in train, so one-shot
// means recognizing the rule from a single pair. No task relation is the
// inverse of another. Noise relations add random distractor edges.
struct SynthSpec {
  std::size_t types = 6;
  std::size_t entities_per_type = 34;
  double density = 1.0;  // fraction of a group carrying its link edge
  std::vector<std::size_t> rule_hops = {2, 3};
  std::size_t relations_per_rule = 2;
  std::size_t max_pairs = 0;  // cap per task relation; 0 = no cap
  std::size_t noise_relations = 2;
  std::size_t distractors = 4;  // noise out-edges per entity
  std::size_t valid_relations = 2;
  std::size_t test_relations = 2;
  std::uint64_t seed = 1;

  void validate() const;
};

// One witness path for a task triple: entities h, x_1, ..., t joined by the
// listed base relations.
struct Witness {
  SplitKind split = SplitKind::train;
  std::size_t relation = 0;  // index into the split section
  std::size_t pair = 0;      // index into the relation's pairs
  std::vector<EntityId> path;
  std::vector<RelationId> relations;
};

struct SynthDataset {
  KnowledgeGraph kg;  // background only (links + noise); every entity registered
  TaskSplit split;    // relations carry no graph ids
  std::vector<Witness> witnesses;
};

SynthDataset generate(const SynthSpec& spec);

}  // namespace cogkr
