#pragma once

#include <functional>
#include <iosfwd>
#include <optional>
#include <vector>

#include <json.hpp>

#include "cogkr/dataset.hpp"
#include "cogkr/episode.hpp"
#include "cogkr/evaluator.hpp"
#include "cogkr/model.hpp"
#include "cogkr/parameters.hpp"
#include "cogkr/reasoner.hpp"

namespace cogkr {

struct TrainConfig {
  std::size_t batch_size = 32;
  AdamConfig adam;
  ReasonerConfig reasoner;
  std::size_t max_steps = 2000;
  std::size_t eval_every = 100;
  std::size_t patience = 10;        // validations without improvement; 0 = never stop early
  std::size_t eval_max_queries = 0;  // 0 = every validation query
  std::uint64_t seed = 1;
  std::size_t threads = 1;
  bool baseline = false;  // moving-average reward baseline
  Scalar baseline_decay = 0.9;
  Scalar grad_clip = 0;  // global-norm clip; 0 = off

  void validate() const;
};

struct EpisodeResult {
  bool reward = false;  // answer reached by the rollout
  std::optional<Scalar> log_q;
  Scalar log_pi = 0;
  Scalar loss = 0;
  std::size_t nodes = 0;
};

// Runs summary + rollout for one episode and adds the gradient of
//   L = -(r - b) log pi - I(answer in graph) log q(answer)
// into `grads`. With r = 0 and no baseline, nothing is accumulated.
EpisodeResult episode_gradients(const ParameterStore& params, const ModelLayout& model, const KnowledgeGraph& kg,
                                const TaskRelation& relation, const Episode& episode, const ReasonerConfig& config,
                                Rng& rng, GradBuffer& grads, Scalar baseline = 0);

// Same loss with the rollout's draws fixed, as a pure function of the
// parameters. Used to check the analytic gradient against finite differences.
Scalar frozen_episode_loss(const ParameterStore& params, const ModelLayout& model, const GraphView& view,
                           const Episode& episode, const ReasonerConfig& config,
                           const std::vector<ExpansionRecord>& draws, GradBuffer* grads);

// Gradients of the `config.batch_size` episodes of optimizer step `step`,
// averaged into the store's gradient accumulators. Episode i draws from
// derive_seed(config.seed, "episode", step, i).
std::vector<EpisodeResult> batch_gradients(ParameterStore& params, const ModelLayout& model, const Dataset& data,
                                           const TrainConfig& config, std::size_t step, Scalar baseline = 0);

struct TrainRecord {
  std::size_t step = 0;
  double mean_reward = 0;
  double mean_logq = 0;  // over episodes whose answer was reached
  std::optional<double> val_mrr;
  double wallclock = 0;
};

nlohmann::json to_json(const TrainRecord& record);

struct TrainResult {
  std::size_t steps = 0;
  std::optional<double> best_val_mrr;
  std::size_t best_step = 0;
  bool stopped_early = false;
  std::vector<TrainRecord> log;
  std::vector<Tensor> final_values;  // parameters after the last step
};

struct TrainHooks {
  // Called with every record as it is produced.
  std::function<void(const TrainRecord&)> on_record;
};

// Trains `params` in place. Validation runs every eval_every steps (and at
// step 0); on return `params` hold the snapshot with the best validation MRR.
TrainResult train(ParameterStore& params, const ModelLayout& model, const Dataset& data, const TrainConfig& config,
                  const TrainHooks& hooks = {});

struct DistMultConfig {
  std::size_t epochs = 10;
  std::size_t negatives = 1;
  Scalar learning_rate = 0.1;  // Adagrad
  std::uint64_t seed = 1;
};

// Logistic loss of one true triple against corrupted-tail negatives, with
// score <h, r, t> = sum_k h_k r_k t_k.
Scalar distmult_score(std::span<const Scalar> h, std::span<const Scalar> r, std::span<const Scalar> t);
Scalar distmult_loss(const Tensor& entities, const Tensor& relations, const Triple& positive,
                     std::span<const EntityId> negative_tails, Tensor* entity_grad, Tensor* relation_grad);

// Trains entity and base-relation tables on the graph's triples with
// per-triple sparse Adagrad, then fills inverse relation rows with copies of
// their base rows (the score is symmetric in head and tail). Returns
// (entity table, relation table with 2R rows).
std::pair<Tensor, Tensor> pretrain_distmult(const KnowledgeGraph& kg, std::size_t dim, const DistMultConfig& config);

}  // namespace cogkr
