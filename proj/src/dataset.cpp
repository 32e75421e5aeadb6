#include "cogkr/dataset.hpp"

#include <fstream>
#include <map>

#include <json.hpp>

#include "cogkr/errors.hpp"

namespace cogkr {

using json = nlohmann::json;

const char* split_name(SplitKind kind) {
  switch (kind) {
    case SplitKind::train: return "train";
    case SplitKind::valid: return "valid";
    case SplitKind::test: return "test";
  }
  return "?";
}

SplitKind parse_split(std::string_view name) {
  if (name == "train") return SplitKind::train;
  if (name == "valid" || name == "dev") return SplitKind::valid;
  if (name == "test") return SplitKind::test;
  throw ConfigError("unknown split: " + std::string(name));
}

const std::vector<TaskRelation>& TaskSplit::section(SplitKind kind) const {
  switch (kind) {
    case SplitKind::train: return train;
    case SplitKind::valid: return valid;
    case SplitKind::test: return test;
  }
  return train;
}

std::vector<TaskRelation>& TaskSplit::section(SplitKind kind) {
  return const_cast<std::vector<TaskRelation>&>(std::as_const(*this).section(kind));
}

namespace {

struct NamedTriple {
  std::string head, relation, tail;
};

std::vector<NamedTriple> read_named_triples(const std::filesystem::path& path) {
  // Reuse the strict parser; a throwaway builder gives us the names back.
  KnowledgeGraph::Builder scratch;
  std::vector<Triple> ids;
  read_triples(path, scratch, &ids);
  std::vector<NamedTriple> out;
  out.reserve(ids.size());
  for (const Triple& t : ids)
    out.push_back({scratch.entities().name(t.head), scratch.relations().name(t.relation), scratch.entities().name(t.tail)});
  return out;
}

struct SectionSpec {
  std::filesystem::path file;
  std::vector<std::string> relations;
  std::map<std::string, std::size_t> support;
};

SectionSpec parse_section(const json& splits, const char* key, const std::filesystem::path& root, bool required_support) {
  SectionSpec spec;
  if (!splits.contains(key)) throw DataError(std::string("manifest missing split: ") + key);
  const json& s = splits.at(key);
  spec.file = root / s.at("file").get<std::string>();
  spec.relations = s.at("relations").get<std::vector<std::string>>();
  if (s.contains("support")) spec.support = s.at("support").get<std::map<std::string, std::size_t>>();
  if (required_support) {
    for (const auto& r : spec.relations)
      if (!spec.support.contains(r)) throw DataError(std::string("manifest: no support index for ") + key + " relation " + r);
  }
  return spec;
}

}  // namespace

Dataset load_dataset(const std::filesystem::path& manifest_path, const DatasetOptions& options) {
  std::ifstream in(manifest_path);
  if (!in) throw DataError("cannot open manifest: " + manifest_path.string());
  json manifest;
  try {
    manifest = json::parse(in);
  } catch (const json::exception& e) {
    throw DataError("manifest is not valid JSON: " + std::string(e.what()));
  }
  const auto root = manifest_path.parent_path();

  SectionSpec sections[3];
  std::vector<NamedTriple> task_triples[3];
  KnowledgeGraph::Builder builder;
  TaskSplit split;
  try {
    if (manifest.value("format", "") != "cogkr-task-split") throw DataError("manifest format tag missing");
    read_triples(root / manifest.at("background").get<std::string>(), builder, &split.background);
    const json& splits = manifest.at("splits");
    sections[0] = parse_section(splits, "train", root, false);
    sections[1] = parse_section(splits, "valid", root, true);
    sections[2] = parse_section(splits, "test", root, true);
  } catch (const json::exception& e) {
    throw DataError("malformed manifest: " + std::string(e.what()));
  }
  const std::size_t background_relations = builder.relations().size();

  for (int s = 0; s < 3; ++s) {
    task_triples[s] = read_named_triples(sections[s].file);
    const bool as_edges = s == 0 && options.merge_train;
    for (const auto& t : task_triples[s]) {
      if (as_edges) {
        builder.add_triple(t.head, t.relation, t.tail);
      } else {
        builder.add_entity(t.head);
        builder.add_entity(t.tail);
      }
    }
    if (s > 0) {
      for (const auto& r : sections[s].relations) {
        if (auto id = builder.relations().find(r); id && *id < background_relations)
          throw DataError("evaluation relation also appears in the background graph: " + r);
        if (options.register_eval_relations) builder.add_relation(r);
      }
    }
  }

  Dataset ds;
  ds.kg = builder.build();
  for (int s = 0; s < 3; ++s) {
    auto& out = split.section(static_cast<SplitKind>(s));
    std::map<std::string, std::size_t> slot;
    for (const auto& name : sections[s].relations) {
      if (slot.contains(name)) throw DataError("relation listed twice in manifest: " + name);
      slot[name] = out.size();
      TaskRelation rel;
      rel.name = name;
      if (auto id = ds.kg.base_relations().find(name); id && (s == 0 ? options.merge_train : options.register_eval_relations))
        rel.kg_relation = *id;
      out.push_back(std::move(rel));
    }
    for (const auto& t : task_triples[s]) {
      auto it = slot.find(t.relation);
      if (it == slot.end())
        throw DataError(sections[s].file.string() + ": relation not listed in manifest: " + t.relation);
      const EntityId h = *ds.kg.entities().find(t.head);
      const EntityId tl = *ds.kg.entities().find(t.tail);
      out[it->second].pairs.push_back({h, tl});
    }
    for (auto& rel : out) {
      if (rel.pairs.size() < 2)
        throw DataError("task relation needs at least 2 triples: " + rel.name);
      if (auto it = sections[s].support.find(rel.name); it != sections[s].support.end()) rel.support_index = it->second;
      if (rel.support_index >= rel.pairs.size())
        throw DataError("support index out of range for " + rel.name);
    }
  }
  ds.split = std::move(split);
  return ds;
}

void write_dataset(const std::filesystem::path& dir, const KnowledgeGraph& kg, const TaskSplit& split) {
  std::filesystem::create_directories(dir);
  write_triples(dir / "background.tsv", kg, split.background);

  json splits = json::object();
  for (SplitKind kind : {SplitKind::train, SplitKind::valid, SplitKind::test}) {
    const std::string file = std::string(split_name(kind)) + "_tasks.tsv";
    std::ofstream out(dir / file, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot open for writing: " + (dir / file).string());
    json relations = json::array();
    json support = json::object();
    for (const auto& rel : split.section(kind)) {
      relations.push_back(rel.name);
      support[rel.name] = rel.support_index;
      for (const auto& p : rel.pairs)
        out << kg.entity_name(p.head) << '\t' << rel.name << '\t' << kg.entity_name(p.tail) << '\n';
    }
    splits[split_name(kind)] = {{"file", file}, {"relations", relations}, {"support", support}};
  }

  json manifest = {{"format", "cogkr-task-split"}, {"version", 1}, {"background", "background.tsv"}, {"splits", splits}};
  std::ofstream out(dir / "manifest.json", std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot open for writing: " + (dir / "manifest.json").string());
  out << manifest.dump(2) << '\n';
  write_entity_vocab(dir / "entities.tsv", kg);
  write_relation_vocab(dir / "relations.tsv", kg);
}

}  // namespace cogkr
