#include <doctest.h>

#include <algorithm>
#include <set>

#include "cogkr/dataset.hpp"
#include "cogkr/episode.hpp"
#include "cogkr/errors.hpp"
#include "cogkr/reasoner.hpp"
#include "helpers.hpp"

using namespace cogkr;
using namespace testing;

namespace {

// Random graph with `n` entities and `m` triples over `r` relations.
KnowledgeGraph random_kg(std::size_t n, std::size_t m, std::size_t r, std::uint64_t seed) {
  Rng rng(seed);
  KnowledgeGraph::Builder b;
  for (std::size_t i = 0; i < n; ++i) b.add_entity("e" + std::to_string(i));
  for (std::size_t i = 0; i < r; ++i) b.add_relation("r" + std::to_string(i));
  for (std::size_t i = 0; i < m; ++i) {
    const auto h = static_cast<EntityId>(uniform_index(rng, n));
    const auto t = static_cast<EntityId>(uniform_index(rng, n));
    b.add_triple({h, static_cast<RelationId>(uniform_index(rng, r)), t});
  }
  return b.build();
}

constexpr std::size_t kInf = std::numeric_limits<std::size_t>::max();

// All-pairs hop counts by Floyd-Warshall over the undirected skeleton.
std::vector<std::vector<std::size_t>> all_pairs(const KnowledgeGraph& kg) {
  const std::size_t n = kg.num_entities();
  std::vector<std::vector<std::size_t>> d(n, std::vector<std::size_t>(n, kInf));
  for (std::size_t i = 0; i < n; ++i) d[i][i] = 0;
  for (const Triple& t : kg.triples()) {
    if (t.head == t.tail) continue;
    d[t.head][t.tail] = d[t.tail][t.head] = 1;
  }
  for (std::size_t k = 0; k < n; ++k)
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        if (d[i][k] != kInf && d[k][j] != kInf) d[i][j] = std::min(d[i][j], d[i][k] + d[k][j]);
  return d;
}

}  // namespace

TEST_SUITE("kg-store") {
  TEST_CASE("loading assigns ids by first appearance and closes under inversion") {
    const auto dir = temp_dir("kg_load");
    write_file(dir / "kg.tsv", "b\tlikes\ta\na\tknows\tc\nb\tlikes\ta\n\nc\tlikes\tb\n");
    const KnowledgeGraph kg = load_triples(dir / "kg.tsv");
    CHECK(kg.num_entities() == 3);
    CHECK(kg.entity_name(0) == "b");
    CHECK(kg.entity_name(1) == "a");
    CHECK(kg.entity_name(2) == "c");
    CHECK(kg.num_base_relations() == 2);
    CHECK(kg.num_relations() == 4);
    CHECK(kg.relation_name(0) == "likes");
    CHECK(kg.relation_name(2) == "likes_inv");
    CHECK(kg.triple_count() == 3);
    CHECK(kg.duplicates_dropped() == 1);

    // Inverse closure and sortedness by full scan.
    std::size_t edges = 0;
    for (EntityId e = 0; e < kg.num_entities(); ++e) {
      const auto adj = kg.adjacency(e);
      CHECK(std::is_sorted(adj.begin(), adj.end()));
      CHECK(std::adjacent_find(adj.begin(), adj.end()) == adj.end());
      for (const Edge& x : adj) {
        CHECK(kg.has_edge(x.target, kg.inverse(x.relation), e));
        ++edges;
      }
      CHECK(kg.outgoing_edges(e).size() == kg.out_degree(e));
    }
    CHECK(edges == 2 * kg.triple_count());
    CHECK(kg.edge_count() == edges);
  }

  TEST_CASE("malformed triple files name the offending line") {
    const auto dir = temp_dir("kg_bad");
    write_file(dir / "bad.tsv", "a\tr\tb\na\tr\n");
    try {
      load_triples(dir / "bad.tsv");
      FAIL("expected DataError");
    } catch (const DataError& e) {
      CHECK(std::string(e.what()).find(":2") != std::string::npos);
    }
    CHECK_THROWS_AS(load_triples(dir / "missing.tsv"), DataError);
  }

  TEST_CASE("loading is idempotent and writing is byte-deterministic") {
    const auto dir = temp_dir("kg_idem");
    const KnowledgeGraph kg = random_kg(40, 150, 3, 1);
    const auto triples = kg.triples();
    write_triples(dir / "a.tsv", kg, triples);
    const KnowledgeGraph x = load_triples(dir / "a.tsv");
    const KnowledgeGraph y = load_triples(dir / "a.tsv");
    CHECK(x.entities().names() == y.entities().names());
    CHECK(vocabulary_hash(x) == vocabulary_hash(y));
    for (EntityId e = 0; e < x.num_entities(); ++e) {
      const auto ax = x.adjacency(e), ay = y.adjacency(e);
      CHECK(std::equal(ax.begin(), ax.end(), ay.begin(), ay.end()));
    }
    write_triples(dir / "b.tsv", x, x.triples());
    write_triples(dir / "c.tsv", y, y.triples());
    CHECK(read_file(dir / "b.tsv") == read_file(dir / "c.tsv"));
    write_entity_vocab(dir / "e.tsv", x);
    CHECK(read_file(dir / "e.tsv").rfind(x.entity_name(0) + "\t0\n", 0) == 0);
  }

  TEST_CASE("vocabulary hash changes with the vocabulary") {
    const auto a = make_kg({{"x", "r", "y"}});
    const auto b = make_kg({{"y", "r", "x"}});
    const auto c = make_kg({{"x", "s", "y"}});
    CHECK(vocabulary_hash(a) != vocabulary_hash(b));
    CHECK(vocabulary_hash(a) != vocabulary_hash(c));
    CHECK(vocabulary_hash(a) == vocabulary_hash(make_kg({{"x", "r", "y"}})));
  }

  TEST_CASE("degree cap keeps the first edges of the sorted adjacency") {
    KnowledgeGraph::Builder b;
    b.add_entity("hub");
    Rng rng(4);
    // 300 distinct edges inserted in scrambled order over two relations.
    std::vector<int> order(300);
    for (int i = 0; i < 300; ++i) order[i] = i;
    std::shuffle(order.begin(), order.end(), rng);
    for (int i : order) b.add_triple("hub", i % 2 ? "odd" : "even", "leaf" + std::to_string(i));
    const KnowledgeGraph kg = b.build();
    const EntityId hub = ent(kg, "hub");
    const ReasonerConfig defaults;
    CHECK(defaults.degree_cap == 256);
    const auto capped = kg.outgoing_edges(hub, defaults.degree_cap);
    REQUIRE(capped.size() == 256);
    auto full = std::vector<Edge>(kg.adjacency(hub).begin(), kg.adjacency(hub).end());
    CHECK(full.size() == 300);
    std::sort(full.begin(), full.end(), [](const Edge& x, const Edge& y) {
      return std::pair(x.relation, x.target) < std::pair(y.relation, y.target);
    });
    CHECK(std::equal(capped.begin(), capped.end(), full.begin()));
    CHECK(kg.outgoing_edges(hub, 1000).size() == 300);
    CHECK_THROWS_AS(kg.outgoing_edges(hub, 0), DataError);
  }

  TEST_CASE("shortest distance examples") {
    const auto kg = make_kg({{"a", "r", "b"}, {"b", "r", "c"}, {"x", "r", "y"}});
    const GraphView v(kg);
    CHECK(shortest_distance(v, ent(kg, "a"), ent(kg, "a"), 0) == 0u);
    CHECK(shortest_distance(v, ent(kg, "a"), ent(kg, "c"), 4) == 2u);
    CHECK(shortest_distance(v, ent(kg, "c"), ent(kg, "a"), 4) == 2u);
    CHECK(!shortest_distance(v, ent(kg, "a"), ent(kg, "c"), 1));
    CHECK(!shortest_distance(v, ent(kg, "a"), ent(kg, "y"), 10));
  }

  TEST_CASE("shortest distance agrees with an all-pairs oracle on random graphs") {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      const KnowledgeGraph kg = random_kg(50, 60, 3, seed);
      const GraphView v(kg);
      const auto oracle = all_pairs(kg);
      for (EntityId a = 0; a < 50; ++a)
        for (EntityId b = 0; b < 50; ++b) {
          const auto got = shortest_distance(v, a, b, 6);
          const std::size_t want = oracle[a][b];
          if (want <= 6) {
            REQUIRE(got.has_value());
            CHECK(*got == want);
          } else {
            CHECK(!got.has_value());
          }
          CHECK(got == shortest_distance(v, b, a, 6));
        }
    }
  }

  TEST_CASE("filter_eval_pairs examples") {
    const auto kg = make_kg({{"a", "r", "b"}, {"b", "r", "c"}, {"c", "s", "d"}, {"x", "r", "y"}});
    const GraphView v(kg);
    const EntityPair ab{ent(kg, "a"), ent(kg, "b")}, cd{ent(kg, "c"), ent(kg, "d")};
    const EntityPair ay{ent(kg, "a"), ent(kg, "y")}, ad{ent(kg, "a"), ent(kg, "d")};

    const std::vector<EntityPair> adjacent{ab, cd};
    const auto all = filter_eval_pairs(v, adjacent, 5);
    CHECK(all.removed_fraction == 0.0);
    CHECK(all.retained == adjacent);

    const std::vector<EntityPair> mixed{ab, ay, ad, cd};
    const auto f = filter_eval_pairs(v, mixed, 3);  // keeps distance <= 2
    CHECK(f.retained == std::vector<EntityPair>{ab, cd});
    CHECK(f.removed_fraction == 0.5);
    CHECK(filter_eval_pairs(v, mixed, 4).retained.size() == 3);
    CHECK_THROWS_AS(filter_eval_pairs(v, mixed, 0), ConfigError);
  }

  TEST_CASE("masking hides an edge and its inverse without touching the graph") {
    const auto kg = make_kg({{"a", "r", "b"}});
    const EntityId a = ent(kg, "a"), b = ent(kg, "b");
    const GraphView plain = mask_edges(kg, {});
    CHECK(plain.outgoing_edges(a) == kg.outgoing_edges(a));
    CHECK(plain.outgoing_edges(b) == kg.outgoing_edges(b));

    const std::vector<Triple> forbid{{a, rel(kg, "r"), b}};
    const GraphView masked = mask_edges(kg, forbid);
    CHECK(masked.outgoing_edges(a).empty());
    CHECK(masked.outgoing_edges(b).empty());
    CHECK(!masked.has_edge(a, rel(kg, "r"), b));
    CHECK(kg.out_degree(a) == 1);
    CHECK(!shortest_distance(masked, a, b, 4));
  }

  TEST_CASE("masked edges do not use up the degree cap") {
    const auto kg = make_kg({{"h", "r", "a"}, {"h", "r", "b"}, {"h", "r", "c"}});
    const std::vector<Triple> forbid{{ent(kg, "h"), rel(kg, "r"), ent(kg, "a")}};
    const GraphView v(kg, forbid);
    const auto edges = v.outgoing_edges(ent(kg, "h"), 2);
    REQUIRE(edges.size() == 2);
    CHECK(edges[0].target == ent(kg, "b"));
    CHECK(edges[1].target == ent(kg, "c"));
  }

  TEST_CASE("a masked query edge still leaves the two-hop detour reachable") {
    // h -r-> t directly, plus the detour h -a-> x -b-> t.
    const auto kg = make_kg({{"h", "r", "t"}, {"h", "a", "x"}, {"x", "b", "t"}});
    const EntityId h = ent(kg, "h"), t = ent(kg, "t"), x = ent(kg, "x");
    const std::vector<Triple> forbid{{h, rel(kg, "r"), t}};
    const GraphView view(kg, forbid);
    const Model m = make_model(kg, 4, 4);
    ReasonerConfig cfg;
    cfg.action_budget = 2;

    // Enumerate every action sequence with n = 2 draws per expansion.
    std::set<std::vector<GraphEdge>> graphs;
    double reach = 0;
    std::vector<std::size_t> prefix;
    for (;;) {
      double prob = 1;
      std::size_t depth = 0;
      std::vector<std::size_t> widths;
      ScriptedActions script([&](const ExpansionRecord& rec, std::size_t budget) {
        std::vector<std::size_t> draws;
        for (std::size_t k = 0; k < budget; ++k, ++depth) {
          if (depth == prefix.size()) prefix.push_back(0);
          widths.push_back(rec.probabilities.size());
          draws.push_back(prefix[depth]);
          prob *= rec.probabilities[prefix[depth]];
        }
        return draws;
      });
      const Rollout ro = rollout(m.params, m.layout, view, {h, x}, h, cfg, script);
      for (const GraphEdge& e : ro.graph.edges) {
        const EntityId src = ro.graph.nodes[e.source], dst = ro.graph.nodes[e.target];
        CHECK(!(src == h && dst == t && e.relation == rel(kg, "r")));
        CHECK(!(src == t && dst == h));
        CHECK(kg.has_edge(src, e.relation, dst));
      }
      graphs.insert(ro.graph.edges);
      if (ro.graph.contains(t)) reach += prob;
      // Advance the odometer over the recorded branching widths.
      prefix.resize(depth);
      std::size_t i = depth;
      while (i > 0 && prefix[i - 1] + 1 == widths[i - 1]) --i;
      if (i == 0) break;
      ++prefix[i - 1];
      prefix.resize(i);
    }
    CHECK(graphs.size() > 1);
    CHECK(reach > 0);
    CHECK(reach < 1);
  }

  TEST_CASE("datasets round-trip through the manifest") {
    const auto dir = temp_dir("dataset");
    KnowledgeGraph::Builder b;
    b.add_triple("a", "bg", "b");
    b.add_triple("b", "bg", "c");
    b.add_triple("c", "bg", "d");
    const KnowledgeGraph names = b.build();
    TaskSplit split;
    split.background = names.triples();
    const auto id = [&](const char* n) { return ent(names, n); };
    split.train.push_back({"tr", std::nullopt, {{id("a"), id("c")}, {id("b"), id("d")}}, 0});
    split.valid.push_back({"va", std::nullopt, {{id("a"), id("d")}, {id("b"), id("a")}}, 1});
    split.test.push_back({"te", std::nullopt, {{id("d"), id("a")}, {id("c"), id("a")}, {id("a"), id("a")}}, 0});
    write_dataset(dir, names, split);

    const Dataset ds = load_dataset(dir / "manifest.json");
    CHECK(ds.split.train.size() == 1);
    CHECK(ds.split.valid.size() == 1);
    CHECK(ds.split.test.size() == 1);
    CHECK(ds.split.valid[0].support_index == 1);
    CHECK(ds.split.test[0].pairs.size() == 3);
    // Train triples are merged and carry a graph relation; eval ones are not.
    REQUIRE(ds.split.train[0].kg_relation);
    CHECK(ds.kg.has_edge(ent(ds.kg, "a"), *ds.split.train[0].kg_relation, ent(ds.kg, "c")));
    CHECK(!ds.split.valid[0].kg_relation);
    CHECK(!ds.kg.find_relation("va"));

    DatasetOptions opt;
    opt.merge_train = false;
    opt.register_eval_relations = true;
    const Dataset sep = load_dataset(dir / "manifest.json", opt);
    CHECK(sep.kg.triple_count() == 3);
    CHECK(sep.split.valid[0].kg_relation.has_value());

    // Writing the loaded dataset again reproduces the files.
    const auto dir2 = temp_dir("dataset2");
    write_dataset(dir2, ds.kg, ds.split);
    for (const char* f : {"manifest.json", "valid_tasks.tsv", "test_tasks.tsv", "train_tasks.tsv"})
      CHECK(read_file(dir / f) == read_file(dir2 / f));
  }

  TEST_CASE("manifests that leak or are malformed are rejected") {
    const auto dir = temp_dir("dataset_bad");
    write_file(dir / "manifest.json", "{ not json");
    CHECK_THROWS_AS(load_dataset(dir / "manifest.json"), DataError);
    CHECK_THROWS_AS(load_dataset(dir / "nope.json"), DataError);

    write_file(dir / "bg.tsv", "a\tleak\tb\nb\tbg\tc\n");
    write_file(dir / "tasks.tsv", "a\tleak\tb\nb\tleak\tc\n");
    write_file(dir / "manifest.json", R"({"format": "cogkr-task-split", "version": 1, "background": "bg.tsv",
      "splits": {"train": {"file": "tasks.tsv", "relations": [], "support": {}},
                 "valid": {"file": "tasks.tsv", "relations": ["leak"], "support": {"leak": 0}},
                 "test": {"file": "tasks.tsv", "relations": [], "support": {}}}})");
    CHECK_THROWS_AS(load_dataset(dir / "manifest.json"), DataError);
  }

  TEST_CASE("episode masks cover the query and support edges of merged relations") {
    const auto kg = make_kg({{"a", "r", "b"}, {"c", "r", "d"}, {"a", "s", "c"}});
    TaskRelation tr{"r", rel(kg, "r"), {{ent(kg, "a"), ent(kg, "b")}, {ent(kg, "c"), ent(kg, "d")}}, 0};
    Episode ep;
    ep.support = tr.pairs[0];
    ep.query = tr.pairs[1];
    ep.mask = leakage_mask(kg, tr, ep.support, ep.query);
    const GraphView v = episode_view(kg, tr, ep);
    CHECK(!v.has_edge(ent(kg, "a"), rel(kg, "r"), ent(kg, "b")));
    CHECK(!v.has_edge(ent(kg, "d"), kg.inverse(rel(kg, "r")), ent(kg, "c")));
    CHECK(v.has_edge(ent(kg, "a"), rel(kg, "s"), ent(kg, "c")));

    // Relations without graph edges need no mask.
    TaskRelation ev{"q", std::nullopt, tr.pairs, 0};
    CHECK(leakage_mask(kg, ev, ep.support, ep.query).empty());
  }
}
