#include "cogkr/checkpoint.hpp"

#include <cstdio>
#include <fstream>

#include <json.hpp>

#include "cogkr/errors.hpp"

namespace cogkr {

namespace {

std::string hex(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& dir, const ParameterStore& params, const RunConfig& config,
                     const KnowledgeGraph& kg, const CheckpointMeta& meta) {
  std::filesystem::create_directories(dir);
  save_snapshot(params, dir / "params.bin");
  write_settings(dir / "config.cfg", config, run_options());
  nlohmann::json j = {{"vocab_hash", hex(meta.vocab_hash)},
                      {"scalar_bits", meta.scalar_bits},
                      {"step", meta.step},
                      {"val_mrr", nullptr}};
  if (meta.val_mrr) j["val_mrr"] = *meta.val_mrr;
  std::ofstream out(dir / "checkpoint.json", std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot open for writing: " + (dir / "checkpoint.json").string());
  out << j.dump(2) << '\n';
  write_entity_vocab(dir / "entities.tsv", kg);
  write_relation_vocab(dir / "relations.tsv", kg);
}

Checkpoint load_checkpoint(const std::filesystem::path& dir) {
  Checkpoint c;
  std::ifstream in(dir / "checkpoint.json");
  if (!in) throw DataError("not a checkpoint directory (no checkpoint.json): " + dir.string());
  try {
    const auto j = nlohmann::json::parse(in);
    c.meta.vocab_hash = std::stoull(j.at("vocab_hash").get<std::string>(), nullptr, 16);
    c.meta.scalar_bits = j.at("scalar_bits").get<std::size_t>();
    c.meta.step = j.at("step").get<std::size_t>();
    if (!j.at("val_mrr").is_null()) c.meta.val_mrr = j.at("val_mrr").get<double>();
  } catch (const std::exception& e) {
    throw DataError("malformed checkpoint.json in " + dir.string() + ": " + e.what());
  }
  c.params = load_snapshot(dir / "params.bin");
  c.config_path = dir / "config.cfg";
  return c;
}

void check_vocabulary(const CheckpointMeta& meta, const KnowledgeGraph& kg) {
  const std::uint64_t h = vocabulary_hash(kg);
  if (h != meta.vocab_hash)
    throw DataError("checkpoint vocabulary hash " + hex(meta.vocab_hash) + " does not match dataset hash " + hex(h));
}

void import_embeddings(ParameterStore& params, const ParameterStore& source) {
  for (const char* name : {"entity_embedding", "relation_embedding"}) {
    const Tensor& from = source[source.require(name)].value;
    Tensor& to = params[params.require(name)].value;
    if (!from.same_shape(to))
      throw DataError(std::string("pretrained ") + name + " has shape " + from.shape_string() + ", model expects " +
                      to.shape_string());
    to = from;
  }
}

}  // namespace cogkr
