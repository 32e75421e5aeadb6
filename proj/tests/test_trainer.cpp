#include <doctest.h>

#include <map>
#include <set>

#include "cogkr/errors.hpp"
#include "cogkr/episode.hpp"
#include "cogkr/evaluator.hpp"
#include "cogkr/grad_check.hpp"
#include "cogkr/trainer.hpp"
#include "helpers.hpp"

using namespace cogkr;
using namespace testing;

namespace {

// Two groups linked by `link`; the task relation "via" connects a_i to c_i
// through b_i. A third, disconnected group gives unreachable queries.
Dataset toy_dataset(std::size_t n = 6) {
  KnowledgeGraph::Builder b;
  for (std::size_t i = 0; i < n; ++i) {
    const auto s = std::to_string(i);
    b.add_triple("a" + s, "link", "b" + s);
    b.add_triple("b" + s, "next", "c" + s);
    b.add_triple("b" + s, "noise", "a" + std::to_string((i + 1) % n));
  }
  for (std::size_t i = 0; i < n; ++i) b.add_entity("z" + std::to_string(i));
  Dataset ds;
  ds.split.background = b.build().triples();
  const RelationId via = b.add_relation("via");
  TaskRelation train{"via", via, {}, 0};
  for (std::size_t i = 0; i < n; ++i) {
    const auto s = std::to_string(i);
    const EntityPair p{*b.entities().find("a" + s), *b.entities().find("c" + s)};
    train.pairs.push_back(p);
    b.add_triple({p.head, via, p.tail});
  }
  TaskRelation valid{"via_valid", std::nullopt, {}, 0};
  for (std::size_t i = 0; i < n; ++i) {
    const auto s = std::to_string(i);
    valid.pairs.push_back({*b.entities().find("a" + s), *b.entities().find("c" + s)});
  }
  ds.kg = b.build();
  ds.split.train.push_back(train);
  ds.split.valid.push_back(valid);
  return ds;
}

TrainConfig small_config() {
  TrainConfig cfg;
  cfg.batch_size = 4;
  cfg.reasoner.degree_cap = 8;
  cfg.reasoner.node_cap = 12;
  cfg.reasoner.action_budget = 3;
  cfg.max_steps = 6;
  cfg.eval_every = 2;
  cfg.patience = 0;
  cfg.seed = 5;
  cfg.adam.lr_embedding = 1e-2;
  cfg.adam.lr_other = 1e-2;
  return cfg;
}

}  // namespace

TEST_SUITE("trainer") {
  TEST_CASE("a relation with two pairs gives them in either order") {
    Dataset ds = toy_dataset();
    std::vector<TaskRelation> section{{"two", std::nullopt, {{0, 1}, {2, 3}}, 0}};
    std::set<std::pair<EntityPair, EntityPair>> seen;
    Rng rng(1);
    for (int i = 0; i < 200; ++i) {
      const Episode ep = sample_episode(ds.kg, section, rng);
      CHECK(ep.relation == 0);
      CHECK(ep.support != ep.query);
      seen.insert({ep.support, ep.query});
    }
    CHECK(seen.size() == 2);
  }

  TEST_CASE("relations are sampled uniformly and single-pair relations are skipped") {
    Dataset ds = toy_dataset();
    std::vector<TaskRelation> section{{"r0", std::nullopt, {{0, 1}, {2, 3}}, 0},
                                      {"single", std::nullopt, {{4, 5}}, 0},
                                      {"r2", std::nullopt, {{0, 2}, {1, 3}, {4, 6}, {5, 7}}, 0},
                                      {"r3", std::nullopt, {{1, 1}, {2, 2}, {3, 3}}, 0}};
    constexpr std::size_t N = 100000;
    std::map<std::size_t, double> counts;
    Rng rng(2);
    for (std::size_t i = 0; i < N; ++i) counts[sample_episode(ds.kg, section, rng).relation] += 1;
    CHECK(counts.count(1) == 0);
    const double p = 1.0 / 3, se = std::sqrt(p * (1 - p) / N);
    for (std::size_t r : {0u, 2u, 3u}) CHECK(std::abs(counts[r] / N - p) <= 4 * se);

    std::vector<TaskRelation> hopeless{{"single", std::nullopt, {{4, 5}}, 0}};
    CHECK_THROWS_AS(sample_episode(ds.kg, hopeless, rng), DataError);
  }

  TEST_CASE("episode masks contain the query edge and its inverse") {
    Dataset ds = toy_dataset();
    Rng rng(3);
    const auto& rel = ds.split.train[0];
    for (int i = 0; i < 50; ++i) {
      const Episode ep = sample_episode(ds.kg, ds.split.train, rng);
      const Triple q{ep.query.head, *rel.kg_relation, ep.query.tail};
      const Triple qi{ep.query.tail, ds.kg.inverse(*rel.kg_relation), ep.query.head};
      CHECK(std::find(ep.mask.begin(), ep.mask.end(), q) != ep.mask.end());
      const GraphView v = episode_view(ds.kg, rel, ep);
      CHECK(!v.has_edge(q.head, q.relation, q.tail));
      CHECK(!v.has_edge(qi.head, qi.relation, qi.tail));
      CHECK(!v.has_edge(ep.support.head, *rel.kg_relation, ep.support.tail));
    }
  }

  TEST_CASE("an unreached answer contributes exactly zero gradient") {
    Dataset ds = toy_dataset();
    Model m = make_model(ds.kg, 4, 4);
    TaskRelation rel{"far", std::nullopt, {{ent(ds.kg, "a0"), ent(ds.kg, "c0")}, {ent(ds.kg, "a1"), ent(ds.kg, "z3")}}, 0};
    Episode ep{0, rel.pairs[0], rel.pairs[1], {}};
    GradBuffer g(m.params);
    for (std::uint64_t s = 0; s < 20; ++s) {
      Rng rng(s);
      const EpisodeResult r = episode_gradients(m.params, m.layout, ds.kg, rel, ep, {}, rng, g);
      CHECK(!r.reward);
      CHECK(!r.log_q);
      CHECK(r.loss == 0);
    }
    CHECK(g.all_zero());
  }

  TEST_CASE("the frozen episode loss passes a 1e-4 gradient check on every tensor") {
    Dataset ds = toy_dataset();
    for (PredictionHead head : {PredictionHead::linear, PredictionHead::gated}) {
      CAPTURE(to_string(head));
      Model m = make_model(ds.kg, 4, 5, head);
      randomize(m.params, 19);
      const auto& rel = ds.split.train[0];
      ReasonerConfig cfg;
      cfg.degree_cap = 8;
      cfg.node_cap = 12;
      cfg.action_budget = 4;
      // Find an episode whose rollout reaches the answer so both terms are live.
      std::optional<std::pair<Episode, std::vector<ExpansionRecord>>> live;
      for (std::uint64_t s = 0; s < 200 && !live; ++s) {
        Rng rng(s);
        const Episode ep = sample_episode(ds.kg, ds.split.train, rng);
        const GraphView view = episode_view(ds.kg, rel, ep);
        const Rollout ro = rollout(m.params, m.layout, view, ep.support, ep.query.head, cfg, rng);
        if (ro.graph.contains(ep.query.tail) && ro.graph.size() > 3) live.emplace(ep, ro.actions);
      }
      REQUIRE(live);
      const auto& [ep, draws] = *live;
      const GraphView view = episode_view(ds.kg, rel, ep);
      ScalarObjective f = [&](const ParameterStore& p, GradBuffer* g) {
        return frozen_episode_loss(p, m.layout, view, ep, cfg, draws, g);
      };
      GradBuffer touched(m.params);
      CHECK(f(m.params, &touched) > 0);
      Rng pick(7);
      const auto coords = sample_coordinates(m.params, touched, 10, pick);
      CHECK(coords.size() >= 100);
      std::set<ParamId> spanned;
      for (const auto& c : coords) spanned.insert(c.param);
      CHECK(spanned.size() == m.params.size());
      const auto r = grad_check(f, m.params, coords);
      CHECK(r.max_relative_error <= 1e-4);
    }
  }

  TEST_CASE("the batch gradient is the mean of the episode gradients") {
    Dataset ds = toy_dataset();
    Model m = make_model(ds.kg, 4, 4);
    randomize(m.params, 5);
    TrainConfig cfg = small_config();
    cfg.batch_size = 2;
    bool any_signal = false;
    for (std::size_t step = 1; step <= 4; ++step) {
      m.params.zero_grad();
      batch_gradients(m.params, m.layout, ds, cfg, step);
      const auto batch = [&] {
        std::vector<Tensor> g;
        for (const auto& p : m.params) g.push_back(p.grad);
        return g;
      }();
      for (const auto& g : batch)
        for (Scalar v : g.data()) any_signal |= v != 0;
      // Episode i of the step replayed on its own, batch size 1 each.
      m.params.zero_grad();
      for (std::size_t i = 0; i < 2; ++i) {
        Rng rng(derive_seed(cfg.seed, "episode", step, i));
        const Episode ep = sample_episode(ds.kg, ds.split.train, rng);
        GradBuffer g(m.params);
        episode_gradients(m.params, m.layout, ds.kg, ds.split.train[ep.relation], ep, cfg.reasoner, rng, g);
        g.accumulate_into(m.params, 1);
      }
      for (ParamId id = 0; id < m.params.size(); ++id)
        for (std::size_t k = 0; k < batch[id].size(); ++k)
          CHECK(batch[id][k] == doctest::Approx(0.5 * m.params[id].grad[k]).epsilon(1e-12));

      // Parallel episodes give bitwise the same batch gradient.
      m.params.zero_grad();
      TrainConfig threaded = cfg;
      threaded.threads = 2;
      batch_gradients(m.params, m.layout, ds, threaded, step);
      for (ParamId id = 0; id < m.params.size(); ++id) CHECK(m.params[id].grad == batch[id]);
    }
    CHECK(any_signal);
  }

  TEST_CASE("zero learning rates leave the parameters untouched") {
    Dataset ds = toy_dataset();
    Model m = make_model(ds.kg, 4, 4);
    const auto before = m.params.snapshot_values();
    TrainConfig cfg = small_config();
    cfg.adam.lr_embedding = 0;
    cfg.adam.lr_other = 0;
    const TrainResult r = train(m.params, m.layout, ds, cfg);
    CHECK(r.steps == 6);
    CHECK(m.params.snapshot_values() == before);
    CHECK(r.final_values == before);
  }

  TEST_CASE("batches without reward and without decay change nothing") {
    Dataset ds = toy_dataset();
    // Every training answer sits in the disconnected group.
    auto& rel = ds.split.train[0];
    rel.kg_relation.reset();
    for (std::size_t i = 0; i < rel.pairs.size(); ++i) rel.pairs[i].tail = ent(ds.kg, ("z" + std::to_string(i)).c_str());
    Model m = make_model(ds.kg, 4, 4);
    const auto before = m.params.snapshot_values();
    TrainConfig cfg = small_config();
    cfg.adam.weight_decay = 0;
    const TrainResult r = train(m.params, m.layout, ds, cfg);
    for (const auto& rec : r.log) CHECK(rec.mean_reward == 0);
    CHECK(r.final_values == before);
  }

  TEST_CASE("training is reproducible and returns the best validation snapshot") {
    Dataset ds = toy_dataset();
    TrainConfig cfg = small_config();
    cfg.max_steps = 12;
    cfg.eval_every = 3;
    Model a = make_model(ds.kg, 4, 4), b = make_model(ds.kg, 4, 4);
    std::vector<TrainRecord> streamed;
    TrainHooks hooks;
    hooks.on_record = [&](const TrainRecord& r) { streamed.push_back(r); };
    const TrainResult ra = train(a.params, a.layout, ds, cfg, hooks);
    const TrainResult rb = train(b.params, b.layout, ds, cfg);
    CHECK(a.params.snapshot_values() == b.params.snapshot_values());
    CHECK(ra.final_values == rb.final_values);
    CHECK(streamed.size() == ra.log.size());
    CHECK(ra.log.size() == 13);

    double best = -1;
    for (const auto& rec : ra.log)
      if (rec.val_mrr) best = std::max(best, *rec.val_mrr);
    REQUIRE(ra.best_val_mrr);
    CHECK(*ra.best_val_mrr == best);
    // Re-validating the returned parameters reproduces the best score.
    EvalConfig eval;
    eval.reasoner = cfg.reasoner;
    eval.buckets = false;
    eval.seed = derive_seed(cfg.seed, "validation");
    CHECK(evaluate(a.params, a.layout, ds.kg, ds.split.valid, eval).overall.mrr == best);

    const auto j = to_json(ra.log[3]);
    for (const char* key : {"step", "mean_reward", "mean_logq", "val_MRR", "wallclock"}) CHECK(j.contains(key));
    CHECK(j["val_MRR"].is_number());
    CHECK(to_json(ra.log[1])["val_MRR"].is_null());
  }

  TEST_CASE("patience stops training after stale validations") {
    Dataset ds = toy_dataset();
    TrainConfig cfg = small_config();
    cfg.adam.lr_embedding = 0;
    cfg.adam.lr_other = 0;
    cfg.max_steps = 50;
    cfg.eval_every = 1;
    cfg.patience = 2;
    Model m = make_model(ds.kg, 4, 4);
    const TrainResult r = train(m.params, m.layout, ds, cfg);
    CHECK(r.stopped_early);
    CHECK(r.steps == 2);
    CHECK(r.best_step == 0);
  }

  TEST_CASE("diverged parameters abort with a numeric error") {
    Dataset ds = toy_dataset();
    Model m = make_model(ds.kg, 4, 4);
    m.params[m.layout.w_2].value[0] = std::numeric_limits<Scalar>::quiet_NaN();
    TrainConfig cfg = small_config();
    CHECK_THROWS_AS(train(m.params, m.layout, ds, cfg), NumericError);
  }

  TEST_CASE("invalid training settings are rejected") {
    TrainConfig cfg;
    cfg.batch_size = 0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = {};
    cfg.reasoner.action_budget = 0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = {};
    cfg.baseline_decay = 1;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
  }

  TEST_CASE("documented training defaults") {
    const TrainConfig cfg;
    CHECK(cfg.batch_size == 32);
    CHECK(cfg.adam.weight_decay == 1e-4);
    CHECK(cfg.reasoner.degree_cap == 256);
    CHECK(cfg.reasoner.node_cap == 128);
    CHECK(cfg.reasoner.action_budget == 5);
    CHECK(!cfg.baseline);
    CHECK(cfg.grad_clip == 0);
  }

  TEST_CASE("DistMult score with an all-ones relation is the squared norm") {
    const std::vector<Scalar> h{0.3, -1.2, 2.0}, ones{1, 1, 1};
    CHECK(distmult_score(h, ones, h) == doctest::Approx(0.09 + 1.44 + 4.0).epsilon(1e-14));
  }

  TEST_CASE("DistMult loss gradient passes a 1e-5 finite-difference check") {
    Rng rng(8);
    Tensor E = Tensor::matrix(6, 4), R = Tensor::matrix(2, 4);
    for (auto& v : E.data()) v = uniform(rng, -1, 1);
    for (auto& v : R.data()) v = uniform(rng, -1, 1);
    const Triple pos{1, 0, 3};
    const std::vector<EntityId> neg{4, 0, 4};
    Tensor gE = Tensor::matrix(6, 4), gR = Tensor::matrix(2, 4);
    distmult_loss(E, R, pos, neg, &gE, &gR);
    const double eps = 1e-5;
    double worst = 0;
    for (Tensor* t : {&E, &R}) {
      Tensor& g = t == &E ? gE : gR;
      for (std::size_t i = 0; i < t->size(); ++i) {
        const Scalar saved = (*t)[i];
        (*t)[i] = saved + eps;
        const double up = distmult_loss(E, R, pos, neg, nullptr, nullptr);
        (*t)[i] = saved - eps;
        const double down = distmult_loss(E, R, pos, neg, nullptr, nullptr);
        (*t)[i] = saved;
        worst = std::max(worst, static_cast<double>(relative_error(g[i], (up - down) / (2 * eps))));
      }
    }
    CHECK(worst <= 1e-5);
    // Untouched entities get no gradient.
    for (Scalar v : gE.row(2)) CHECK(v == 0);
  }

  TEST_CASE("DistMult pretraining separates true triples from corrupted ones") {
    // 20 entities, one deterministic relation i -> i + 1 (mod 20).
    KnowledgeGraph::Builder b;
    for (int i = 0; i < 20; ++i) b.add_triple("e" + std::to_string(i), "next", "e" + std::to_string((i + 1) % 20));
    const KnowledgeGraph kg = b.build();
    DistMultConfig cfg;
    cfg.epochs = 200;
    cfg.negatives = 2;
    cfg.seed = 3;
    const auto [E, R] = pretrain_distmult(kg, 8, cfg);
    CHECK(E.rows() == 20);
    CHECK(R.rows() == 2);
    CHECK(vec_of(Tensor::from(std::vector<Scalar>(R.row(0).begin(), R.row(0).end()))) == row_of(R, 1));
    double pos = 0, neg = 0;
    std::size_t n_neg = 0;
    for (const Triple& t : kg.triples()) {
      pos += distmult_score(E.row(t.head), R.row(t.relation), E.row(t.tail));
      for (EntityId c = 0; c < 20; ++c) {
        if (c == t.tail) continue;
        neg += distmult_score(E.row(t.head), R.row(t.relation), E.row(c));
        ++n_neg;
      }
    }
    pos /= static_cast<double>(kg.triple_count());
    neg /= static_cast<double>(n_neg);
    CHECK(pos - neg > 0);

    // Same seed, same tables.
    const auto again = pretrain_distmult(kg, 8, cfg);
    CHECK(again.first == E);
  }
}
