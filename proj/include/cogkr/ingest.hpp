#pragma once

#include <filesystem>
#include <vector>

#include "cogkr/dataset.hpp"

namespace cogkr {

// Converts a one-shot benchmark laid out as
//   <background triple TSV>, train_tasks.json, dev_tasks.json, test_tasks.json
// (each JSON maps relation name -> [[head, relation, tail], ...]) into a task
// split. The first triple of every valid/test relation is its support.
struct IngestOptions {
  // Drop valid/test queries whose head-tail distance in the background graph
  // (train tasks merged) is >= max_distance. 0 disables the filter.
  std::size_t max_distance = 0;
};

struct IngestSummary {
  std::size_t entities = 0, background_triples = 0;
  std::size_t queries_before = 0, queries_after = 0;
  std::size_t relations_dropped = 0;  // eval relations left without a query
  double removed_fraction = 0;
};

struct Ingested {
  KnowledgeGraph kg;  // background + train tasks, every entity registered
  TaskSplit split;
  IngestSummary summary;
};

Ingested ingest_one_shot(const std::filesystem::path& background, const std::filesystem::path& tasks_dir,
                         const IngestOptions& options);

}  // namespace cogkr
