#include "cogkr/ingest.hpp"

#include <array>
#include <fstream>
#include <map>

#include <json.hpp>

#include "cogkr/errors.hpp"

namespace cogkr {

namespace {

struct NamedTask {
  std::string relation;
  std::vector<std::array<std::string, 3>> triples;
};

std::vector<NamedTask> read_tasks(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open task file: " + path.string());
  std::vector<NamedTask> out;
  try {
    // ordered_json keeps the file's relation order.
    const auto j = nlohmann::ordered_json::parse(in);
    for (const auto& [rel, list] : j.items()) {
      NamedTask task{rel, {}};
      for (const auto& t : list) task.triples.push_back(t.get<std::array<std::string, 3>>());
      out.push_back(std::move(task));
    }
  } catch (const nlohmann::json::exception& e) {
    throw DataError(path.string() + ": " + e.what());
  }
  return out;
}

}  // namespace

Ingested ingest_one_shot(const std::filesystem::path& background, const std::filesystem::path& tasks_dir,
                         const IngestOptions& options) {
  KnowledgeGraph::Builder builder;
  std::vector<Triple> background_ids;
  read_triples(background, builder, &background_ids);
  const std::size_t background_relations = builder.relations().size();

  const char* files[3] = {"train_tasks.json", "dev_tasks.json", "test_tasks.json"};
  std::vector<NamedTask> tasks[3];
  for (int s = 0; s < 3; ++s) tasks[s] = read_tasks(tasks_dir / files[s]);
  for (const auto& task : tasks[0])
    for (const auto& t : task.triples) builder.add_triple(t[0], task.relation, t[2]);
  for (int s = 1; s < 3; ++s) {
    for (const auto& task : tasks[s]) {
      if (auto id = builder.relations().find(task.relation); id && *id < background_relations)
        throw DataError("evaluation relation also appears in the background graph: " + task.relation);
      for (const auto& t : task.triples) {
        builder.add_entity(t[0]);
        builder.add_entity(t[2]);
      }
    }
  }

  Ingested out;
  out.kg = builder.build();
  out.split.background = background_ids;
  const GraphView view(out.kg);
  std::size_t removed = 0;
  for (int s = 0; s < 3; ++s) {
    auto& section = out.split.section(static_cast<SplitKind>(s));
    for (const auto& task : tasks[s]) {
      TaskRelation rel;
      rel.name = task.relation;
      if (s == 0) rel.kg_relation = out.kg.base_relations().find(task.relation);
      for (const auto& t : task.triples)
        rel.pairs.push_back({*out.kg.entities().find(t[0]), *out.kg.entities().find(t[2])});
      if (s > 0) {
        out.summary.queries_before += rel.pairs.size() - 1;
        if (options.max_distance > 0 && rel.pairs.size() > 1) {
          const std::vector<EntityPair> queries(rel.pairs.begin() + 1, rel.pairs.end());
          auto kept = filter_eval_pairs(view, queries, options.max_distance);
          removed += queries.size() - kept.retained.size();
          rel.pairs.resize(1);
          rel.pairs.insert(rel.pairs.end(), kept.retained.begin(), kept.retained.end());
        }
        out.summary.queries_after += rel.pairs.size() - 1;
      }
      if (rel.pairs.size() < 2) {
        ++out.summary.relations_dropped;
        continue;
      }
      section.push_back(std::move(rel));
    }
  }
  out.summary.entities = out.kg.num_entities();
  out.summary.background_triples = background_ids.size();
  if (out.summary.queries_before)
    out.summary.removed_fraction = static_cast<double>(removed) / static_cast<double>(out.summary.queries_before);
  return out;
}

}  // namespace cogkr
