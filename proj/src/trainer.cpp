#include "cogkr/trainer.hpp"

#include <chrono>
#include <cmath>

#include "cogkr/errors.hpp"
#include "cogkr/parallel.hpp"
#include "cogkr/summary.hpp"

namespace cogkr {

void TrainConfig::validate() const {
  reasoner.validate();
  if (batch_size < 1) throw ConfigError("batch size must be >= 1");
  if (eval_every < 1) throw ConfigError("eval_every must be >= 1");
  if (threads < 1) throw ConfigError("threads must be >= 1");
  if (adam.lr_embedding < 0 || adam.lr_other < 0 || adam.weight_decay < 0)
    throw ConfigError("learning rates and weight decay must be non-negative");
  if (baseline_decay < 0 || baseline_decay >= 1) throw ConfigError("baseline decay must be in [0, 1)");
  if (grad_clip < 0) throw ConfigError("gradient clip must be non-negative");
}

namespace {

// Shared by the sampled and the frozen path.
EpisodeResult run_episode(const ParameterStore& params, const ModelLayout& model, const GraphView& view,
                          const Episode& episode, const ReasonerConfig& config, ActionSource& actions,
                          GradBuffer* grads, Scalar baseline) {
  Tape tape(params);
  const NodeId omega = summarize_pair(tape, model, view, episode.support, config.degree_cap);
  Reasoner reasoner(tape, model, view, config, omega);
  reasoner.init_graph(episode.query.head);
  reasoner.run(actions);
  const auto prediction = reasoner.predict();

  EpisodeResult out;
  out.nodes = reasoner.graph().size();
  const NodeId log_pi = *reasoner.log_pi();
  out.log_pi = tape.scalar(log_pi);
  const auto answer = reasoner.graph().find(episode.query.tail);
  out.reward = answer.has_value();

  std::optional<NodeId> loss;
  if (out.reward) {
    const std::size_t pick = *answer;
    const NodeId log_q = tape.log_softmax_pick(prediction.scores, {&pick, 1});
    out.log_q = tape.scalar(log_q);
    loss = tape.add(tape.scale(log_pi, -(1 - baseline)), tape.scale(log_q, -1));
  } else if (baseline != 0) {
    loss = tape.scale(log_pi, baseline);
  }
  if (loss) {
    out.loss = tape.scalar(*loss);
    if (!std::isfinite(out.loss)) throw NumericError("non-finite episode loss");
    if (grads) tape.backward(*loss, *grads);
  }
  return out;
}

}  // namespace

EpisodeResult episode_gradients(const ParameterStore& params, const ModelLayout& model, const KnowledgeGraph& kg,
                                const TaskRelation& relation, const Episode& episode, const ReasonerConfig& config,
                                Rng& rng, GradBuffer& grads, Scalar baseline) {
  const GraphView view = episode_view(kg, relation, episode);
  SampledActions actions(rng);
  return run_episode(params, model, view, episode, config, actions, &grads, baseline);
}

Scalar frozen_episode_loss(const ParameterStore& params, const ModelLayout& model, const GraphView& view,
                           const Episode& episode, const ReasonerConfig& config,
                           const std::vector<ExpansionRecord>& draws, GradBuffer* grads) {
  ReplayActions actions(draws);
  return run_episode(params, model, view, episode, config, actions, grads, 0).loss;
}

nlohmann::json to_json(const TrainRecord& record) {
  nlohmann::json j = {{"step", record.step},
                      {"mean_reward", record.mean_reward},
                      {"mean_logq", record.mean_logq},
                      {"val_MRR", nullptr},
                      {"wallclock", record.wallclock}};
  if (record.val_mrr) j["val_MRR"] = *record.val_mrr;
  return j;
}

std::vector<EpisodeResult> batch_gradients(ParameterStore& params, const ModelLayout& model, const Dataset& data,
                                           const TrainConfig& config, std::size_t step, Scalar baseline) {
  const auto& section = data.split.train;
  std::vector<GradBuffer> buffers;
  buffers.reserve(config.batch_size);
  for (std::size_t i = 0; i < config.batch_size; ++i) buffers.emplace_back(params);
  std::vector<EpisodeResult> outcomes(config.batch_size);
  parallel_for(config.batch_size, config.threads, [&](std::size_t i) {
    Rng rng(derive_seed(config.seed, "episode", step, i));
    const Episode ep = sample_episode(data.kg, section, rng);
    outcomes[i] = episode_gradients(params, model, data.kg, section[ep.relation], ep, config.reasoner, rng,
                                    buffers[i], baseline);
  });
  const Scalar scale = Scalar(1) / static_cast<Scalar>(config.batch_size);
  for (const auto& buf : buffers) buf.accumulate_into(params, scale);
  return outcomes;
}

TrainResult train(ParameterStore& params, const ModelLayout& model, const Dataset& data, const TrainConfig& config,
                  const TrainHooks& hooks) {
  config.validate();
  const auto start = std::chrono::steady_clock::now();
  const auto elapsed = [&] { return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count(); };

  EvalConfig eval;
  eval.reasoner = config.reasoner;
  eval.buckets = false;
  eval.max_queries = config.eval_max_queries;
  eval.seed = derive_seed(config.seed, "validation");
  eval.threads = config.threads;
  const bool can_validate = !data.split.valid.empty();

  TrainResult result;
  std::vector<Tensor> best;
  std::size_t stale = 0;
  const auto validate = [&](TrainRecord& rec) {
    if (!can_validate) return;
    rec.val_mrr = evaluate(params, model, data.kg, data.split.valid, eval).overall.mrr;
    if (!result.best_val_mrr || *rec.val_mrr > *result.best_val_mrr) {
      result.best_val_mrr = rec.val_mrr;
      result.best_step = rec.step;
      best = params.snapshot_values();
      stale = 0;
    } else {
      ++stale;
    }
  };
  const auto emit = [&](TrainRecord rec) {
    rec.wallclock = elapsed();
    if (hooks.on_record) hooks.on_record(rec);
    result.log.push_back(rec);
  };

  {
    TrainRecord rec;
    validate(rec);
    emit(rec);
  }

  Scalar baseline = 0;

  for (std::size_t step = 1; step <= config.max_steps; ++step) {
    const auto outcomes = batch_gradients(params, model, data, config, step, config.baseline ? baseline : 0);

    TrainRecord rec;
    rec.step = step;
    std::size_t reached = 0;
    for (const auto& o : outcomes) {
      rec.mean_reward += o.reward;
      if (o.log_q) {
        rec.mean_logq += *o.log_q;
        ++reached;
      }
    }
    rec.mean_reward /= static_cast<double>(config.batch_size);
    if (reached) rec.mean_logq /= static_cast<double>(reached);
    for (const auto& p : params)
      if (!p.grad.all_finite()) throw NumericError("non-finite gradient in " + p.name + " at step " + std::to_string(step));
    if (config.baseline)
      baseline = config.baseline_decay * baseline + (1 - config.baseline_decay) * static_cast<Scalar>(rec.mean_reward);
    if (config.grad_clip > 0) clip_grad_norm(params, config.grad_clip);
    adam_step(params, config.adam);
    for (const auto& p : params)
      if (!p.value.all_finite()) throw NumericError("parameters diverged in " + p.name + " at step " + std::to_string(step));

    result.steps = step;
    const bool last = step == config.max_steps;
    if (step % config.eval_every == 0 || last) validate(rec);
    emit(rec);
    if (config.patience && stale >= config.patience) {
      result.stopped_early = !last;
      break;
    }
  }
  result.final_values = params.snapshot_values();
  if (!best.empty()) params.restore_values(best);
  return result;
}

// ---- DistMult pretraining ----

Scalar distmult_score(std::span<const Scalar> h, std::span<const Scalar> r, std::span<const Scalar> t) {
  Scalar s = 0;
  for (std::size_t k = 0; k < h.size(); ++k) s += h[k] * r[k] * t[k];
  return s;
}

namespace {

// -log sigmoid(sign * s), and d/ds of it.
std::pair<Scalar, Scalar> logistic(Scalar s, Scalar sign) {
  const Scalar z = sign * s;
  const Scalar loss = z > 0 ? std::log1p(std::exp(-z)) : -z + std::log1p(std::exp(z));
  return {loss, -sign * kernels::sigmoid(-z)};
}

template <class EntityGrad, class RelationGrad>
Scalar distmult_terms(const Tensor& entities, const Tensor& relations, const Triple& positive,
                      std::span<const EntityId> negative_tails, EntityGrad&& on_entity, RelationGrad&& on_relation) {
  const auto h = entities.row(positive.head);
  const auto r = relations.row(positive.relation);
  const std::size_t dim = h.size();
  std::vector<Scalar> gh(dim), gr(dim), gt(dim);
  Scalar total = 0;
  const auto term = [&](EntityId tail, Scalar sign) {
    const auto t = entities.row(tail);
    const auto [loss, dl] = logistic(distmult_score(h, r, t), sign);
    total += loss;
    for (std::size_t k = 0; k < dim; ++k) {
      gh[k] += dl * r[k] * t[k];
      gr[k] += dl * h[k] * t[k];
      gt[k] = dl * h[k] * r[k];
    }
    on_entity(tail, std::span<const Scalar>(gt));
  };
  term(positive.tail, 1);
  for (EntityId n : negative_tails) term(n, -1);
  on_entity(positive.head, std::span<const Scalar>(gh));
  on_relation(positive.relation, std::span<const Scalar>(gr));
  return total;
}

}  // namespace

Scalar distmult_loss(const Tensor& entities, const Tensor& relations, const Triple& positive,
                     std::span<const EntityId> negative_tails, Tensor* entity_grad, Tensor* relation_grad) {
  const auto add_row = [](Tensor* g, std::size_t row, std::span<const Scalar> v) {
    if (!g) return;
    auto dst = g->row(row);
    for (std::size_t k = 0; k < v.size(); ++k) dst[k] += v[k];
  };
  return distmult_terms(
      entities, relations, positive, negative_tails,
      [&](std::size_t row, std::span<const Scalar> v) { add_row(entity_grad, row, v); },
      [&](std::size_t row, std::span<const Scalar> v) { add_row(relation_grad, row, v); });
}

std::pair<Tensor, Tensor> pretrain_distmult(const KnowledgeGraph& kg, std::size_t dim, const DistMultConfig& config) {
  if (dim == 0) throw ConfigError("embedding dimension must be positive");
  const std::size_t n_ent = kg.num_entities(), n_rel = kg.num_base_relations();
  Rng rng(derive_seed(config.seed, "distmult"));
  Tensor ent = Tensor::matrix(n_ent, dim), rel = Tensor::matrix(n_rel, dim);
  for (auto& v : ent.data()) v = static_cast<Scalar>(uniform(rng, -0.1, 0.1));
  for (auto& v : rel.data()) v = static_cast<Scalar>(uniform(rng, -0.1, 0.1));
  Tensor ent_acc = Tensor::matrix(n_ent, dim), rel_acc = Tensor::matrix(n_rel, dim);

  const auto adagrad = [&](Tensor& table, Tensor& acc, std::size_t row, std::span<const Scalar> g) {
    auto v = table.row(row);
    auto a = acc.row(row);
    for (std::size_t k = 0; k < dim; ++k) {
      a[k] += g[k] * g[k];
      v[k] -= config.learning_rate * g[k] / (std::sqrt(a[k]) + Scalar(1e-10));
    }
  };

  std::vector<Triple> triples = kg.triples();
  std::vector<EntityId> negatives(config.negatives);
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    std::shuffle(triples.begin(), triples.end(), rng);
    for (const Triple& t : triples) {
      for (auto& n : negatives) n = static_cast<EntityId>(uniform_index(rng, n_ent));
      // Rows are updated after all terms are read, so one triple is one step.
      std::vector<std::pair<std::size_t, std::vector<Scalar>>> eg;
      std::vector<Scalar> rg;
      distmult_terms(
          ent, rel, t, negatives,
          [&](std::size_t row, std::span<const Scalar> v) { eg.emplace_back(row, std::vector<Scalar>(v.begin(), v.end())); },
          [&](std::size_t, std::span<const Scalar> v) { rg.assign(v.begin(), v.end()); });
      for (const auto& [row, g] : eg) adagrad(ent, ent_acc, row, g);
      adagrad(rel, rel_acc, t.relation, rg);
    }
  }

  Tensor full = Tensor::matrix(2 * n_rel, dim);
  for (std::size_t r = 0; r < n_rel; ++r) {
    std::copy(rel.row(r).begin(), rel.row(r).end(), full.row(r).begin());
    std::copy(rel.row(r).begin(), rel.row(r).end(), full.row(r + n_rel).begin());
  }
  return {std::move(ent), std::move(full)};
}

}  // namespace cogkr
