#include "cogkr/reasoner.hpp"

#include <algorithm>
#include <array>

#include "cogkr/errors.hpp"
#include "cogkr/summary.hpp"

namespace cogkr {

const char* to_string(FrontierOrder order) { return order == FrontierOrder::fifo ? "fifo" : "priority"; }

FrontierOrder parse_frontier_order(std::string_view name) {
  if (name == "fifo") return FrontierOrder::fifo;
  if (name == "priority") return FrontierOrder::priority;
  throw ConfigError("unknown frontier order: " + std::string(name));
}

void ReasonerConfig::validate() const {
  if (degree_cap < 1) throw ConfigError("degree cap must be >= 1");
  if (node_cap < 1) throw ConfigError("node cap must be >= 1");
  if (action_budget < 1) throw ConfigError("action budget must be >= 1");
}

std::optional<std::size_t> CognitiveGraph::find(EntityId e) const {
  auto it = index.find(e);
  if (it == index.end()) return std::nullopt;
  return it->second;
}

std::size_t CognitiveGraph::expanded_count() const {
  return static_cast<std::size_t>(std::count(explored.begin(), explored.end(), true));
}

std::optional<Scalar> Rollout::score_of(EntityId e) const {
  if (auto i = graph.find(e)) return scores[*i];
  return std::nullopt;
}

std::vector<std::size_t> sample_actions(std::span<const Scalar> p, std::size_t n, Rng& rng) {
  std::vector<std::size_t> draws(n);
  for (auto& d : draws) d = sample_categorical(p, rng);
  return draws;
}

std::vector<std::size_t> SampledActions::choose(const ExpansionRecord& scored, std::size_t budget) {
  return sample_actions(scored.probabilities.data(), budget, *rng_);
}

std::vector<std::size_t> ReplayActions::choose(const ExpansionRecord& scored, std::size_t) {
  if (step_ >= log_->size()) throw std::logic_error("replay ran past the recorded rollout");
  const ExpansionRecord& rec = (*log_)[step_++];
  if (rec.node != scored.node || rec.candidates != scored.candidates)
    throw std::logic_error("replay diverged from the recorded rollout");
  return rec.draws;
}

Reasoner::Reasoner(Tape& tape, const ModelLayout& model, const GraphView& view, const ReasonerConfig& config,
                   NodeId summary)
    : tape_(&tape), model_(&model), view_(&view), config_(config), summary_(summary) {
  config_.validate();
  zero_hidden_ = tape.constant(Tensor::vector(model.dims.hidden_dim));
}

std::size_t Reasoner::add_node(EntityId e) {
  const std::size_t i = graph_.nodes.size();
  graph_.nodes.push_back(e);
  graph_.index.emplace(e, i);
  graph_.ingoing.emplace_back();
  graph_.hidden.emplace_back();
  graph_.explored.push_back(false);
  graph_.frontier.push_back(i);
  hidden_nodes_.push_back(0);
  return i;
}

void Reasoner::init_graph(EntityId query_head) {
  if (query_head >= view_->graph().num_entities()) throw std::out_of_range("query head out of range");
  graph_ = {};
  hidden_nodes_.clear();
  log_.clear();
  log_pi_.reset();
  scored_candidates_ = 0;
  add_node(query_head);
  update_hidden(0);
}

NodeId Reasoner::update_hidden(std::size_t node) {
  Tape& t = *tape_;
  const ModelLayout& m = *model_;
  NodeId pre = t.add(t.matvec(t.param(m.w_4), t.lookup(m.entity_emb, graph_.nodes[node])), t.param(m.b_4));
  const auto& in = graph_.ingoing[node];
  if (!in.empty()) {
    std::vector<NodeId> terms;
    terms.reserve(in.size());
    for (std::size_t id : in) {
      const GraphEdge& e = graph_.edges[id];
      const std::array<NodeId, 2> parts{t.lookup(m.relation_emb, e.relation), hidden_nodes_[e.source]};
      terms.push_back(t.matvec(t.param(m.w_3), t.concat(parts)));
    }
    pre = t.add(pre, t.mean_rows(t.stack_rows(terms)));
  }
  const NodeId x = t.sigmoid(pre);
  hidden_nodes_[node] = x;
  graph_.hidden[node] = t.value(x);
  return x;
}

Reasoner::Scored Reasoner::score_actions(std::size_t node) {
  if (node >= graph_.size()) throw std::out_of_range("node index out of range");
  if (graph_.explored[node]) throw std::logic_error("node already explored");
  Tape& t = *tape_;
  const ModelLayout& m = *model_;
  Scored out;
  out.record.node = node;
  out.record.candidates = view_->outgoing_edges(graph_.nodes[node], config_.degree_cap);

  std::vector<NodeId> rows;
  rows.reserve(out.record.candidates.size() + 1);
  for (const Edge& c : out.record.candidates) {
    const auto known = graph_.find(c.target);
    const std::array<NodeId, 3> parts{t.lookup(m.entity_emb, c.target), t.lookup(m.relation_emb, c.relation),
                                      known ? hidden_nodes_[*known] : zero_hidden_};
    rows.push_back(t.concat(parts));
  }
  rows.push_back(t.param(m.no_action));
  const NodeId a = t.sigmoid(t.matmat(t.stack_rows(rows), t.param(m.w_1)));
  const std::array<NodeId, 2> state{hidden_nodes_[node], summary_};
  const NodeId s = t.sigmoid(t.matvec(t.param(m.w_2), t.concat(state)));
  out.logits = t.matvec(a, s);
  out.record.probabilities = kernels::softmax(t.value(out.logits));
  scored_candidates_ += rows.size();
  return out;
}

void Reasoner::apply_actions(Scored& scored, std::vector<std::size_t> draws) {
  ExpansionRecord& rec = scored.record;
  const std::size_t width = rec.candidates.size() + 1;
  for (std::size_t d : draws)
    if (d >= width) throw std::out_of_range("drawn action index out of range");
  rec.draws = std::move(draws);

  const NodeId lp = tape_->log_softmax_pick(scored.logits, rec.draws);
  log_pi_ = log_pi_ ? tape_->add(*log_pi_, lp) : lp;

  std::vector<std::size_t> chosen(rec.draws);
  std::sort(chosen.begin(), chosen.end());
  chosen.erase(std::unique(chosen.begin(), chosen.end()), chosen.end());

  std::vector<std::size_t> changed;
  for (std::size_t c : chosen) {
    if (c == rec.no_action_index()) continue;
    const Edge& edge = rec.candidates[c];
    std::size_t target;
    if (auto known = graph_.find(edge.target)) {
      target = *known;
    } else if (graph_.size() < config_.node_cap) {
      target = add_node(edge.target);
    } else {
      continue;  // no room for a new node, so the edge is dropped too
    }
    graph_.ingoing[target].push_back(graph_.edges.size());
    graph_.edges.push_back({rec.node, edge.relation, target});
    changed.push_back(target);
  }
  std::sort(changed.begin(), changed.end());
  changed.erase(std::unique(changed.begin(), changed.end()), changed.end());
  for (std::size_t n : changed) update_hidden(n);

  graph_.explored[rec.node] = true;
  log_.push_back(rec);
}

NodeId Reasoner::score_node(std::size_t node) {
  Tape& t = *tape_;
  const std::array<NodeId, 2> parts{hidden_nodes_[node], summary_};
  const NodeId z = t.matvec(t.param(model_->w_p), t.concat(parts));
  return model_->dims.head == PredictionHead::linear ? z : t.sum(t.sigmoid(z));
}

std::size_t Reasoner::pop_frontier() {
  auto best = graph_.frontier.begin();
  if (config_.frontier == FrontierOrder::priority && graph_.frontier.size() > 1) {
    // Scored off the tape: ordering is a sampling decision, not a gradient path.
    const Tensor& w = tape_->params()[model_->w_p].value;
    const Tensor& omega = tape_->value(summary_);
    Scalar best_score = 0;
    for (auto it = graph_.frontier.begin(); it != graph_.frontier.end(); ++it) {
      const std::array<const Tensor*, 2> parts{&graph_.hidden[*it], &omega};
      const Tensor z = kernels::matvec(w, kernels::concat(parts));
      Scalar f = 0;
      if (model_->dims.head == PredictionHead::linear) {
        f = z[0];
      } else {
        for (Scalar v : z.data()) f += kernels::sigmoid(v);
      }
      if (it == graph_.frontier.begin() || f > best_score) {
        best = it;
        best_score = f;
      }
    }
  }
  const std::size_t node = *best;
  graph_.frontier.erase(best);
  return node;
}

void Reasoner::run(ActionSource& actions) {
  while (!graph_.frontier.empty()) {
    const std::size_t node = pop_frontier();
    Scored scored = score_actions(node);
    apply_actions(scored, actions.choose(scored.record, config_.action_budget));
  }
}

Reasoner::Prediction Reasoner::predict() {
  std::vector<NodeId> per_node;
  per_node.reserve(graph_.size());
  for (std::size_t i = 0; i < graph_.size(); ++i) per_node.push_back(score_node(i));
  Prediction out;
  out.scores = tape_->concat(per_node);
  out.distribution = kernels::softmax(tape_->value(out.scores));
  const Tensor& f = tape_->value(out.scores);
  std::size_t best = 0;
  for (std::size_t i = 1; i < graph_.size(); ++i) {
    if (f[i] > f[best] || (f[i] == f[best] && graph_.nodes[i] < graph_.nodes[best])) best = i;
  }
  out.answer = graph_.nodes[best];
  return out;
}

Rollout Reasoner::finish(const Prediction& prediction) && {
  Rollout r;
  r.graph = std::move(graph_);
  r.actions = std::move(log_);
  r.scores = tape_->value(prediction.scores);
  r.distribution = prediction.distribution;
  r.answer = prediction.answer;
  r.log_pi = log_pi_ ? tape_->scalar(*log_pi_) : 0;
  r.scored_candidates = scored_candidates_;
  return r;
}

Rollout rollout(const ParameterStore& params, const ModelLayout& model, const GraphView& view, EntityPair support,
                EntityId query_head, const ReasonerConfig& config, ActionSource& actions) {
  Tape tape(params);
  const NodeId omega = summarize_pair(tape, model, view, support, config.degree_cap);
  Reasoner reasoner(tape, model, view, config, omega);
  reasoner.init_graph(query_head);
  reasoner.run(actions);
  const auto prediction = reasoner.predict();
  return std::move(reasoner).finish(prediction);
}

Rollout rollout(const ParameterStore& params, const ModelLayout& model, const GraphView& view, EntityPair support,
                EntityId query_head, const ReasonerConfig& config, Rng& rng) {
  SampledActions actions(rng);
  return rollout(params, model, view, support, query_head, config, actions);
}

}  // namespace cogkr
