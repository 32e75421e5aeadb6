// Command-line entry point: generate / ingest / pretrain / train / evaluate /
// explain. Exit codes: 0 success, 1 usage or config error, 2 data error,
// 3 numeric failure.

#include <cstdio>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "cogkr/checkpoint.hpp"
#include "cogkr/config.hpp"
#include "cogkr/errors.hpp"
#include "cogkr/explain.hpp"
#include "cogkr/ingest.hpp"
#include "cogkr/taskgen.hpp"
#include "cogkr/trainer.hpp"

namespace fs = std::filesystem;
using namespace cogkr;

namespace {

enum Exit { ok = 0, usage = 1, data = 2, numeric = 3 };

// Options shared by the run subcommands.
struct Common {
  std::string config;
  std::vector<std::string> sets;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> threads;
  std::string dataset;
  std::string out;

  void attach(CLI::App* app, bool needs_out = true) {
    app->add_option("--config", config, "key = value config file");
    app->add_option("--set", sets, "override one setting, KEY=VALUE (repeatable)");
    app->add_option("--seed", seed, "master seed");
    app->add_option("--threads", threads, "worker threads");
    app->add_option("--dataset", dataset, "task-split manifest (overrides the config)");
    auto* o = app->add_option("--out", out, "output directory");
    if (needs_out) o->required();
  }

  Settings overrides() const {
    Settings s;
    for (const auto& kv : sets) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) throw ConfigError("--set expects KEY=VALUE, got '" + kv + "'");
      s[kv.substr(0, eq)] = kv.substr(eq + 1);
    }
    if (seed) s["seed"] = std::to_string(*seed);
    if (threads) s["threads"] = std::to_string(*threads);
    if (!dataset.empty()) s["dataset"] = dataset;
    return s;
  }

  RunConfig resolve(const fs::path* fallback_file = nullptr, Settings extra = {}) const {
    Settings s = overrides();
    s.insert(extra.begin(), extra.end());
    const fs::path file = config;
    return resolve_run_config(config.empty() ? fallback_file : &file, s);
  }
};

Dataset load_run_dataset(const RunConfig& c) {
  if (c.dataset.empty()) throw ConfigError("no dataset given (set `dataset` or pass --dataset)");
  return load_dataset(c.dataset, c.data);
}

void start_run(const fs::path& out, const RunConfig& c) {
  fs::create_directories(out);
  write_settings(out / "run.cfg", c, run_options());
}

int cmd_generate(const std::string& spec_file, const std::vector<std::string>& sets, std::optional<std::uint64_t> seed,
                 const fs::path& out) {
  Settings s;
  for (const auto& kv : sets) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw ConfigError("--set expects KEY=VALUE, got '" + kv + "'");
    s[kv.substr(0, eq)] = kv.substr(eq + 1);
  }
  if (seed) s["seed"] = std::to_string(*seed);
  const fs::path file = spec_file;
  const SynthSpec spec = resolve_synth_spec(spec_file.empty() ? nullptr : &file, s);
  fs::create_directories(out);
  write_settings(out / "spec.cfg", spec, synth_options());

  const SynthDataset ds = generate(spec);
  write_dataset(out, ds.kg, ds.split);
  std::ofstream w(out / "witnesses.tsv", std::ios::binary | std::ios::trunc);
  w << "split\trelation\thead\ttail\tpath\n";
  for (const auto& wit : ds.witnesses) {
    const auto& rel = ds.split.section(wit.split)[wit.relation];
    w << split_name(wit.split) << '\t' << rel.name << '\t' << ds.kg.entity_name(wit.path.front()) << '\t'
      << ds.kg.entity_name(wit.path.back()) << '\t';
    for (std::size_t i = 0; i < wit.path.size(); ++i) {
      if (i) w << ' ' << ds.kg.relation_name(wit.relations[i - 1]) << ' ';
      w << ds.kg.entity_name(wit.path[i]);
    }
    w << '\n';
  }
  std::printf("generated %zu entities, %zu background triples, %zu/%zu/%zu task relations -> %s\n",
              ds.kg.num_entities(), ds.split.background.size(), ds.split.train.size(), ds.split.valid.size(),
              ds.split.test.size(), out.string().c_str());
  return ok;
}

int cmd_ingest(const fs::path& background, const fs::path& tasks, std::size_t max_distance, const fs::path& out) {
  fs::create_directories(out);
  {
    std::ofstream cfg(out / "ingest.cfg", std::ios::binary | std::ios::trunc);
    cfg << "background = " << background.string() << "\ntasks_dir = " << tasks.string()
        << "\nmax_distance = " << max_distance << '\n';
  }
  IngestOptions options;
  options.max_distance = max_distance;
  const Ingested in = ingest_one_shot(background, tasks, options);
  write_dataset(out, in.kg, in.split);
  std::printf("%zu entities, %zu background triples; eval queries %zu -> %zu (%.1f%% removed), %zu relations dropped\n",
              in.summary.entities, in.summary.background_triples, in.summary.queries_before, in.summary.queries_after,
              100 * in.summary.removed_fraction, in.summary.relations_dropped);
  return ok;
}

int cmd_pretrain(const Common& common) {
  const RunConfig c = common.resolve();
  const fs::path out = common.out;
  start_run(out, c);
  const Dataset ds = load_run_dataset(c);
  auto [entities, relations] = pretrain_distmult(ds.kg, c.model.embedding_dim, c.distmult);
  ParameterStore store;
  store.add("entity_embedding", std::move(entities), ParamGroup::embedding, true);
  store.add("relation_embedding", std::move(relations), ParamGroup::embedding, true);
  save_snapshot(store, out / "embeddings.bin");
  std::printf("wrote %s\n", (out / "embeddings.bin").string().c_str());
  return ok;
}

int cmd_train(const Common& common, std::optional<std::size_t> steps) {
  Settings extra;
  if (steps) extra["train.max_steps"] = std::to_string(*steps);
  const RunConfig c = common.resolve(nullptr, extra);
  const fs::path out = common.out;
  start_run(out, c);
  const Dataset ds = load_run_dataset(c);

  ParameterStore params;
  Rng init(derive_seed(c.seed, "init"));
  const ModelLayout model = ModelLayout::create(params, ds.kg.num_entities(), ds.kg.num_relations(), c.model, init);
  if (!c.pretrained.empty()) import_embeddings(params, load_snapshot(c.pretrained));

  std::ofstream log(out / "train_log.ndjson", std::ios::binary | std::ios::trunc);
  TrainHooks hooks;
  hooks.on_record = [&](const TrainRecord& r) {
    log << to_json(r).dump() << '\n' << std::flush;
    if (r.val_mrr) std::printf("step %zu  reward %.3f  val MRR %.4f\n", r.step, r.mean_reward, *r.val_mrr);
  };
  const TrainResult result = train(params, model, ds, c.train, hooks);

  CheckpointMeta meta;
  meta.vocab_hash = vocabulary_hash(ds.kg);
  meta.step = result.best_step;
  meta.val_mrr = result.best_val_mrr;
  save_checkpoint(out / "best", params, c, ds.kg, meta);
  ParameterStore last = params;
  last.restore_values(result.final_values);
  meta.step = result.steps;
  meta.val_mrr = result.log.empty() ? std::nullopt : result.log.back().val_mrr;
  save_checkpoint(out / "final", last, c, ds.kg, meta);
  std::printf("trained %zu steps; best val MRR %.4f at step %zu%s\n", result.steps,
              result.best_val_mrr.value_or(0.0), result.best_step, result.stopped_early ? " (early stop)" : "");
  return ok;
}

struct Loaded {
  RunConfig config;
  Dataset data;
  Checkpoint checkpoint;
  ModelLayout model;
};

Loaded load_for_inference(const Common& common, const fs::path& checkpoint_dir) {
  Loaded l;
  l.checkpoint = load_checkpoint(checkpoint_dir);
  l.config = common.resolve(&l.checkpoint.config_path);
  l.data = load_run_dataset(l.config);
  check_vocabulary(l.checkpoint.meta, l.data.kg);
  l.model = ModelLayout::bind(l.checkpoint.params);
  return l;
}

int cmd_evaluate(const Common& common, const fs::path& checkpoint_dir, const std::string& split) {
  Loaded l = load_for_inference(common, checkpoint_dir);
  const fs::path out = common.out;
  start_run(out, l.config);
  const SplitKind kind = parse_split(split);
  const MetricsReport report =
      evaluate(l.checkpoint.params, l.model, l.data.kg, l.data.split.section(kind), l.config.eval);
  nlohmann::json j = report_to_json(report);
  j["split"] = split_name(kind);
  {
    std::ofstream f(out / "report.json", std::ios::binary | std::ios::trunc);
    f << j.dump(2) << '\n';
  }
  const std::string text = format_report(report);
  {
    std::ofstream f(out / "report.txt", std::ios::binary | std::ios::trunc);
    f << text;
  }
  {
    std::ofstream f(out / "queries.csv", std::ios::binary | std::ios::trunc);
    write_query_csv(f, report, l.data.kg);
  }
  std::cout << text;
  return ok;
}

struct ExplainArgs {
  std::string relation, support_head, support_tail, query_head, answer;
  std::size_t top = 10;
};

EntityId entity_by_name(const KnowledgeGraph& kg, const std::string& name) {
  if (auto id = kg.entities().find(name)) return *id;
  throw DataError("unknown entity: " + name);
}

int cmd_explain(const Common& common, const fs::path& checkpoint_dir, const ExplainArgs& a) {
  Loaded l = load_for_inference(common, checkpoint_dir);
  const fs::path out = common.out;
  start_run(out, l.config);
  const KnowledgeGraph& kg = l.data.kg;

  Episode ep;
  ep.support = {entity_by_name(kg, a.support_head), entity_by_name(kg, a.support_tail)};
  ep.query.head = entity_by_name(kg, a.query_head);
  if (!a.answer.empty()) ep.query.tail = entity_by_name(kg, a.answer);
  TaskRelation rel;
  if (!a.relation.empty()) {
    bool found = false;
    for (SplitKind k : {SplitKind::train, SplitKind::valid, SplitKind::test})
      for (const auto& r : l.data.split.section(k))
        if (r.name == a.relation) {
          rel = r;
          found = true;
        }
    if (!found) {
      rel.name = a.relation;
      rel.kg_relation = kg.find_relation(a.relation);
      if (!rel.kg_relation) throw DataError("unknown relation: " + a.relation);
    }
  }
  ep.mask = leakage_mask(kg, rel, ep.support, a.answer.empty() ? ep.support : ep.query);
  const GraphView view = episode_view(kg, rel, ep, l.config.eval.add_support_edge);

  Rng rng(derive_seed(l.config.seed, "explain"));
  const Rollout ro = rollout(l.checkpoint.params, l.model, view, ep.support, ep.query.head, l.config.eval.reasoner, rng);
  for (bool pruned : {false, true}) {
    std::ofstream f(out / (pruned ? "graph_pruned.dot" : "graph.dot"), std::ios::binary | std::ios::trunc);
    write_dot(f, ro, kg, ro.answer, pruned);
  }
  std::printf("cognitive graph: %zu nodes, %zu edges\n", ro.graph.size(), ro.graph.edges.size());
  std::printf("%-4s %-32s %12s %10s\n", "rank", "entity", "score", "q");
  std::size_t rank = 1;
  for (const auto& r : ranked_answers(ro, a.top))
    std::printf("%-4zu %-32s %12.5g %10.4f\n", rank++, kg.entity_name(r.entity).c_str(), static_cast<double>(r.score),
                static_cast<double>(r.probability));
  if (!a.answer.empty()) {
    const auto rk = rank_answer(ro, ep.query.tail);
    std::printf("answer %s: %s\n", a.answer.c_str(), rk ? ("rank " + std::to_string(*rk)).c_str() : "not in graph");
  }
  return ok;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"One-shot knowledge-graph reasoning with cognitive graphs"};
  app.require_subcommand(1);

  auto* gen = app.add_subcommand("generate", "write a synthetic planted-rule dataset");
  std::string spec_file;
  std::vector<std::string> gen_sets;
  std::optional<std::uint64_t> gen_seed;
  std::string gen_out;
  gen->add_option("--spec", spec_file, "key = value generator spec");
  gen->add_option("--set", gen_sets, "override one spec key, KEY=VALUE (repeatable)");
  gen->add_option("--seed", gen_seed, "generation seed");
  gen->add_option("--out", gen_out, "output dataset directory")->required();

  auto* ing = app.add_subcommand("ingest", "convert a one-shot benchmark (JSON task files) into a task split");
  std::string ing_background, ing_tasks, ing_out;
  std::size_t max_distance = 0;
  ing->add_option("--background", ing_background, "background triple TSV")->required();
  ing->add_option("--tasks-dir", ing_tasks, "directory with train/dev/test_tasks.json")->required();
  ing->add_option("--max-distance", max_distance, "drop eval queries at distance >= N (0 = keep all)");
  ing->add_option("--out", ing_out, "output dataset directory")->required();

  Common pre_c, train_c, eval_c, explain_c;
  auto* pre = app.add_subcommand("pretrain", "DistMult embedding pretraining");
  pre_c.attach(pre);

  auto* tr = app.add_subcommand("train", "train a model");
  train_c.attach(tr);
  std::optional<std::size_t> steps;
  tr->add_option("--steps", steps, "optimizer steps (train.max_steps)");

  auto* ev = app.add_subcommand("evaluate", "evaluate a checkpoint");
  eval_c.attach(ev);
  std::string eval_ckpt, split = "test";
  ev->add_option("--checkpoint", eval_ckpt, "checkpoint directory")->required();
  ev->add_option("--split", split, "train | valid | test");

  auto* ex = app.add_subcommand("explain", "export the cognitive graph of one query as DOT");
  explain_c.attach(ex);
  std::string ex_ckpt;
  ExplainArgs ea;
  ex->add_option("--checkpoint", ex_ckpt, "checkpoint directory")->required();
  ex->add_option("--relation", ea.relation, "task relation name (used to mask leaking edges)");
  ex->add_option("--support-head", ea.support_head, "support pair head")->required();
  ex->add_option("--support-tail", ea.support_tail, "support pair tail")->required();
  ex->add_option("--query-head", ea.query_head, "query head")->required();
  ex->add_option("--answer", ea.answer, "known answer, reported with its rank");
  ex->add_option("--top", ea.top, "entities to list");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? ok : usage;
  }

  try {
    if (*gen) return cmd_generate(spec_file, gen_sets, gen_seed, gen_out);
    if (*ing) return cmd_ingest(ing_background, ing_tasks, max_distance, ing_out);
    if (*pre) return cmd_pretrain(pre_c);
    if (*tr) return cmd_train(train_c, steps);
    if (*ev) return cmd_evaluate(eval_c, eval_ckpt, split);
    if (*ex) return cmd_explain(explain_c, ex_ckpt, ea);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return usage;
  } catch (const NumericError& e) {
    std::fprintf(stderr, "numeric failure: %s\n", e.what());
    return numeric;
  } catch (const DataError& e) {
    std::fprintf(stderr, "data error: %s\n", e.what());
    return data;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return data;
  }
  return usage;
}
