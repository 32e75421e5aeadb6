#pragma once

#include <filesystem>
#include <optional>

#include "cogkr/config.hpp"
#include "cogkr/knowledge_graph.hpp"
#include "cogkr/parameters.hpp"

namespace cogkr {

// A checkpoint directory holds
//   params.bin       parameter snapshot
//   config.cfg       resolved run config
//   checkpoint.json  {"vocab_hash", "scalar_bits", "step", "val_mrr"}
//   entities.tsv, relations.tsv
struct CheckpointMeta {
  std::uint64_t vocab_hash = 0;
  std::size_t scalar_bits = sizeof(Scalar) * 8;
  std::size_t step = 0;
  std::optional<double> val_mrr;
};

void save_checkpoint(const std::filesystem::path& dir, const ParameterStore& params, const RunConfig& config,
                     const KnowledgeGraph& kg, const CheckpointMeta& meta);

struct Checkpoint {
  ParameterStore params;
  CheckpointMeta meta;
  std::filesystem::path config_path;
};

Checkpoint load_checkpoint(const std::filesystem::path& dir);

// Raises DataError unless the checkpoint was written against `kg`'s
// vocabularies.
void check_vocabulary(const CheckpointMeta& meta, const KnowledgeGraph& kg);

// Copies entity / relation tables from a snapshot into `params` (shapes must
// match).
void import_embeddings(ParameterStore& params, const ParameterStore& source);

}  // namespace cogkr
