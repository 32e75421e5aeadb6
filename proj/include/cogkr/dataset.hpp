#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "cogkr/knowledge_graph.hpp"

namespace cogkr {

enum class SplitKind { train, valid, test };

const char* split_name(SplitKind kind);
SplitKind parse_split(std::string_view name);

// One task relation D_r: its entity pairs and the designated one-shot support.
struct TaskRelation {
  std::string name;
  // Set when the relation's triples live in the background graph (train
  // tasks are merged), or when eval relations were registered on request.
  std::optional<RelationId> kg_relation;
  std::vector<EntityPair> pairs;
  std::size_t support_index = 0;

  const EntityPair& support() const { return pairs.at(support_index); }
};

struct TaskSplit {
  std::vector<Triple> background;
  std::vector<TaskRelation> train;
  std::vector<TaskRelation> valid;
  std::vector<TaskRelation> test;

  const std::vector<TaskRelation>& section(SplitKind kind) const;
  std::vector<TaskRelation>& section(SplitKind kind);
};

struct Dataset {
  KnowledgeGraph kg;
  TaskSplit split;
};

struct DatasetOptions {
  // Train-task triples join the background graph.
  bool merge_train = true;
  // Give valid/test relations relation ids (with no edges) so their support
  // edge can be layered into evaluation views.
  bool register_eval_relations = false;
};

// Manifest (JSON):
//   {"format": "cogkr-task-split", "version": 1,
//    "background": "background.tsv",
//    "splits": {"train": {"file": "...", "relations": [...], "support": {"rel": 0}},
//               "valid": {...}, "test": {...}}}
// Task files use the triple TSV format; a relation's pairs keep file order and
// "support" indexes into them (required for valid/test).
Dataset load_dataset(const std::filesystem::path& manifest, const DatasetOptions& options = {});

// Writes background + task TSVs, vocab dumps and the manifest into `dir`.
void write_dataset(const std::filesystem::path& dir, const KnowledgeGraph& names, const TaskSplit& split);

}  // namespace cogkr
