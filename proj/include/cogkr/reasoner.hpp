#pragma once

#include <deque>
#include <functional>
#include <optional>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "cogkr/knowledge_graph.hpp"
#include "cogkr/model.hpp"
#include "cogkr/random.hpp"
#include "cogkr/tape.hpp"

namespace cogkr {

enum class FrontierOrder {
  fifo,      // breadth-first queue
  priority,  // highest current answer score first (experimental)
};

const char* to_string(FrontierOrder order);
FrontierOrder parse_frontier_order(std::string_view name);

struct ReasonerConfig {
  std::size_t degree_cap = 256;   // eta: outgoing edges considered per entity
  std::size_t node_cap = 128;     // lambda: max nodes in the cognitive graph
  std::size_t action_budget = 5;  // n: draws per expansion
  FrontierOrder frontier = FrontierOrder::fifo;

  void validate() const;
};

struct GraphEdge {
  std::size_t source = 0;  // node index
  RelationId relation = 0;
  std::size_t target = 0;  // node index
  auto operator<=>(const GraphEdge&) const = default;
};

// Gamma = (V, E, X) for one query. Nodes are indexed in insertion order;
// node 0 is the query head.
struct CognitiveGraph {
  std::vector<EntityId> nodes;
  std::unordered_map<EntityId, std::size_t> index;
  std::vector<GraphEdge> edges;
  std::vector<std::vector<std::size_t>> ingoing;  // edge ids per node
  std::vector<Tensor> hidden;
  std::deque<std::size_t> frontier;
  std::vector<bool> explored;

  std::size_t size() const { return nodes.size(); }
  bool contains(EntityId e) const { return index.contains(e); }
  std::optional<std::size_t> find(EntityId e) const;
  std::size_t expanded_count() const;
};

// One call of score + sample + apply. The no-action entry is index
// candidates.size() of `probabilities`.
struct ExpansionRecord {
  std::size_t node = 0;
  std::vector<Edge> candidates;
  Tensor probabilities;
  std::vector<std::size_t> draws;

  std::size_t no_action_index() const { return candidates.size(); }
};

struct Rollout {
  CognitiveGraph graph;
  std::vector<ExpansionRecord> actions;
  Tensor scores;        // f per node, node order
  Tensor distribution;  // q = softmax(scores)
  EntityId answer = 0;  // argmax of q, ties to the smallest entity id
  Scalar log_pi = 0;    // sum of log p over every logged draw
  std::size_t scored_candidates = 0;

  // Score of entity e, if it is in the graph.
  std::optional<Scalar> score_of(EntityId e) const;
};

// Decides which candidates to draw at each expansion.
class ActionSource {
 public:
  virtual ~ActionSource() = default;
  virtual std::vector<std::size_t> choose(const ExpansionRecord& scored, std::size_t budget) = 0;
};

// Multinomial(n, p) with replacement.
class SampledActions : public ActionSource {
 public:
  explicit SampledActions(Rng& rng) : rng_(&rng) {}
  std::vector<std::size_t> choose(const ExpansionRecord& scored, std::size_t budget) override;

 private:
  Rng* rng_;
};

// Replays the draws of a recorded rollout, so the graph is a deterministic
// function of the parameters (for gradient checks).
class ReplayActions : public ActionSource {
 public:
  explicit ReplayActions(const std::vector<ExpansionRecord>& log) : log_(&log) {}
  std::vector<std::size_t> choose(const ExpansionRecord& scored, std::size_t budget) override;

 private:
  const std::vector<ExpansionRecord>* log_;
  std::size_t step_ = 0;
};

class ScriptedActions : public ActionSource {
 public:
  using Fn = std::function<std::vector<std::size_t>(const ExpansionRecord&, std::size_t)>;
  explicit ScriptedActions(Fn fn) : fn_(std::move(fn)) {}
  std::vector<std::size_t> choose(const ExpansionRecord& scored, std::size_t budget) override {
    return fn_(scored, budget);
  }

 private:
  Fn fn_;
};

std::vector<std::size_t> sample_actions(std::span<const Scalar> p, std::size_t n, Rng& rng);

// Builds one cognitive graph on a tape. Every step is exposed so tests can
// drive it by hand; run() does the whole loop.
class Reasoner {
 public:
  Reasoner(Tape& tape, const ModelLayout& model, const GraphView& view, const ReasonerConfig& config,
           NodeId summary);

  void init_graph(EntityId query_head);

  struct Scored {
    ExpansionRecord record;
    NodeId logits = 0;
  };
  Scored score_actions(std::size_t node);
  // Adds edges for the distinct drawn candidates, recomputes X of every node
  // whose ingoing set changed, marks `node` explored, and adds the draws to
  // log pi.
  void apply_actions(Scored& scored, std::vector<std::size_t> draws);
  NodeId update_hidden(std::size_t node);
  // Pops frontier nodes until it is empty.
  void run(ActionSource& actions);

  struct Prediction {
    NodeId scores = 0;  // f per node
    Tensor distribution;
    EntityId answer = 0;
  };
  Prediction predict();

  const CognitiveGraph& graph() const { return graph_; }
  const std::vector<ExpansionRecord>& log() const { return log_; }
  // Sum of log p over all logged draws; nullopt before any expansion.
  std::optional<NodeId> log_pi() const { return log_pi_; }
  NodeId hidden_node(std::size_t node) const { return hidden_nodes_[node]; }
  std::size_t scored_candidates() const { return scored_candidates_; }

  Rollout finish(const Prediction& prediction) &&;

 private:
  std::size_t add_node(EntityId e);
  NodeId score_node(std::size_t node);
  std::size_t pop_frontier();

  Tape* tape_;
  const ModelLayout* model_;
  const GraphView* view_;
  ReasonerConfig config_;
  NodeId summary_;
  NodeId zero_hidden_ = 0;
  CognitiveGraph graph_;
  std::vector<NodeId> hidden_nodes_;
  std::vector<ExpansionRecord> log_;
  std::optional<NodeId> log_pi_;
  std::size_t scored_candidates_ = 0;
};

// Summary of `support` + full rollout from `query_head`, on a private tape.
Rollout rollout(const ParameterStore& params, const ModelLayout& model, const GraphView& view, EntityPair support,
                EntityId query_head, const ReasonerConfig& config, ActionSource& actions);
Rollout rollout(const ParameterStore& params, const ModelLayout& model, const GraphView& view, EntityPair support,
                EntityId query_head, const ReasonerConfig& config, Rng& rng);

}  // namespace cogkr
