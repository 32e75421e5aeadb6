#include <doctest.h>

#include <cctype>
#include <map>
#include <set>
#include <sstream>

#include "cogkr/explain.hpp"
#include "cogkr/random.hpp"
#include "helpers.hpp"

using namespace cogkr;
using namespace testing;

namespace {

// Recursive-descent checker for the DOT subset we emit:
//   graph  := 'digraph' id '{' stmt* '}'
//   stmt   := (id '=' id | id attrs? | id '->' id attrs?) ';'?
//   attrs  := '[' (id '=' id (',' | ';')?)* ']'
// Throws std::runtime_error on the first syntax error.
class DotChecker {
 public:
  explicit DotChecker(std::string text) : s_(std::move(text)) {}

  std::set<std::string> nodes;
  std::vector<std::pair<std::string, std::string>> edges;
  std::map<std::string, std::string> last_attrs;  // node id -> its attribute text

  void parse() {
    if (word() != "digraph") fail("expected digraph");
    id();
    expect('{');
    while (peek() != '}') stmt();
    expect('}');
    skip();
    if (i_ != s_.size()) fail("trailing input");
  }

 private:
  std::string s_;
  std::size_t i_ = 0;

  [[noreturn]] void fail(const std::string& what) {
    throw std::runtime_error(what + " at offset " + std::to_string(i_));
  }
  void skip() {
    while (i_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[i_]))) ++i_;
  }
  char peek() {
    skip();
    if (i_ >= s_.size()) fail("unexpected end");
    return s_[i_];
  }
  void expect(char c) {
    if (peek() != c) fail(std::string("expected '") + c + "'");
    ++i_;
  }
  std::string word() {
    skip();
    const std::size_t b = i_;
    while (i_ < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[i_])) || s_[i_] == '_' || s_[i_] == '.')) ++i_;
    if (b == i_) fail("expected identifier");
    return s_.substr(b, i_ - b);
  }
  std::string id() {
    if (peek() != '"') return word();
    ++i_;
    std::string out;
    while (true) {
      if (i_ >= s_.size()) fail("unterminated string");
      const char c = s_[i_++];
      if (c == '"') return out;
      if (c == '\n') fail("raw newline in string");
      if (c == '\\') {
        if (i_ >= s_.size()) fail("dangling escape");
        out += s_[i_++];
        continue;
      }
      out += c;
    }
  }
  std::string attrs() {
    std::string out;
    expect('[');
    while (peek() != ']') {
      const std::string k = id();
      expect('=');
      out += k + "=" + id() + ";";
      if (peek() == ',' || peek() == ';') ++i_;
    }
    expect(']');
    return out;
  }
  void stmt() {
    const std::string a = id();
    if (peek() == '=') {
      ++i_;
      id();
    } else if (peek() == '-') {
      ++i_;
      if (i_ >= s_.size() || s_[i_] != '>') fail("expected ->");
      ++i_;
      const std::string b = id();
      edges.emplace_back(a, b);
      if (peek() == '[') attrs();
    } else if (a != "node" && a != "edge" && a != "graph") {
      nodes.insert(a);
      last_attrs[a] = peek() == '[' ? attrs() : "";
    } else if (peek() == '[') {
      attrs();
    }
    if (peek() == ';') ++i_;
  }
};

DotChecker check_dot(const Rollout& r, const KnowledgeGraph& kg, EntityId answer, bool pruned) {
  std::ostringstream out;
  write_dot(out, r, kg, answer, pruned);
  DotChecker c(out.str());
  REQUIRE_NOTHROW(c.parse());
  for (const auto& [a, b] : c.edges) {
    CHECK(c.nodes.count(a) == 1);
    CHECK(c.nodes.count(b) == 1);
  }
  return c;
}

// Hand-built graph: 0 -> 1 -> 3, 0 -> 2, 2 -> 4, 4 -> 3, 1 -> 5.
Rollout hand_graph(const KnowledgeGraph& kg) {
  Rollout r;
  const char* names[] = {"h", "a", "b", "t", "c", "dead"};
  for (std::size_t i = 0; i < 6; ++i) {
    r.graph.nodes.push_back(ent(kg, names[i]));
    r.graph.index.emplace(r.graph.nodes.back(), i);
  }
  const RelationId x = rel(kg, "x");
  for (auto [s, t] : std::vector<std::pair<std::size_t, std::size_t>>{{0, 1}, {1, 3}, {0, 2}, {2, 4}, {4, 3}, {1, 5}})
    r.graph.edges.push_back({s, x, t});
  r.scores = Tensor::from({0.1, 0.3, 0.2, 0.9, 0.0, 0.3});
  r.distribution = Tensor::from({0.1, 0.15, 0.15, 0.4, 0.05, 0.15});
  return r;
}

}  // namespace

TEST_SUITE("explain") {
  TEST_CASE("quoting") {
    CHECK(dot_quote("plain") == "\"plain\"");
    CHECK(dot_quote("a\"b\\c") == "\"a\\\"b\\\\c\"");
    CHECK(dot_quote("two\nlines") == "\"two\\nlines\"");
  }

  TEST_CASE("path nodes on a hand-built graph") {
    const auto kg = make_kg({{"h", "x", "a"}}, {"b", "t", "c", "dead", "away"});
    const Rollout r = hand_graph(kg);
    CHECK(path_nodes(r.graph, ent(kg, "t")) == std::vector<std::size_t>{0, 1, 2, 3, 4});
    CHECK(path_nodes(r.graph, ent(kg, "dead")) == std::vector<std::size_t>{0, 1, 5});
    CHECK(path_nodes(r.graph, ent(kg, "h")) == std::vector<std::size_t>{0});
    CHECK(path_nodes(r.graph, ent(kg, "away")).empty());

    const DotChecker full = check_dot(r, kg, ent(kg, "t"), false);
    CHECK(full.nodes.size() == 6);
    CHECK(full.edges.size() == 6);
    CHECK(full.last_attrs.at("n0").find("shape=box") != std::string::npos);
    CHECK(full.last_attrs.at("n3").find("shape=doublecircle") != std::string::npos);
    CHECK(full.last_attrs.at("n5").find("shape=ellipse") != std::string::npos);
    const DotChecker pruned = check_dot(r, kg, ent(kg, "t"), true);
    CHECK(pruned.nodes == std::set<std::string>{"n0", "n1", "n2", "n3", "n4"});
    CHECK(pruned.edges.size() == 5);

    // Unreached answer: the pruned view keeps only the head.
    const DotChecker lonely = check_dot(r, kg, ent(kg, "away"), true);
    CHECK(lonely.nodes == std::set<std::string>{"n0"});
    CHECK(lonely.edges.empty());
  }

  TEST_CASE("ranked answers") {
    const auto kg = make_kg({{"h", "x", "a"}}, {"b", "t", "c", "dead"});
    const Rollout r = hand_graph(kg);
    const auto top = ranked_answers(r, 3);
    REQUIRE(top.size() == 3);
    CHECK(top[0].entity == ent(kg, "t"));
    // a and dead tie at 0.3; the smaller id comes first.
    CHECK(top[1].entity == std::min(ent(kg, "a"), ent(kg, "dead")));
    CHECK(top[2].entity == std::max(ent(kg, "a"), ent(kg, "dead")));
    CHECK(top[0].probability == doctest::Approx(0.4));
    CHECK(ranked_answers(r, 100).size() == 6);
  }

  TEST_CASE("real rollouts give well-formed full and pruned graphs") {
    Rng g(9);
    KnowledgeGraph::Builder b;
    for (int i = 0; i < 120; ++i)
      b.add_triple("e" + std::to_string(uniform_index(g, 25)), "r \"" + std::to_string(uniform_index(g, 3)) + "\"",
                   "e" + std::to_string(uniform_index(g, 25)));
    b.add_entity("isolated");
    const KnowledgeGraph kg = b.build();
    Model m = make_model(kg, 4, 4);
    randomize(m.params, 3);
    const GraphView view(kg);
    ReasonerConfig cfg;
    cfg.node_cap = 12;
    for (int q = 0; q < 10; ++q) {
      const EntityId head = static_cast<EntityId>(uniform_index(g, 25));
      Rng rng(derive_seed(5, "explain test", static_cast<std::uint64_t>(q)));
      const Rollout r = rollout(m.params, m.layout, view, {0, 1}, head, cfg, rng);
      for (std::size_t i = 0; i < r.graph.size(); ++i) {
        const EntityId answer = r.graph.nodes[i];
        const DotChecker full = check_dot(r, kg, answer, false);
        const DotChecker pruned = check_dot(r, kg, answer, true);
        CHECK(full.nodes.size() == r.graph.size());
        CHECK(full.edges.size() == r.graph.edges.size());
        CHECK(pruned.nodes.count("n0") == 1);
        CHECK(pruned.nodes.count("n" + std::to_string(i)) == 1);
        for (const auto& n : pruned.nodes) CHECK(full.nodes.count(n) == 1);
        CHECK(pruned.edges.size() <= full.edges.size());
      }
    }
    const Rollout alone = [&] {
      Rng rng(1);
      return rollout(m.params, m.layout, view, {0, 1}, *kg.entities().find("isolated"), cfg, rng);
    }();
    CHECK(alone.graph.size() == 1);
    const DotChecker c = check_dot(alone, kg, alone.graph.nodes[0], true);
    CHECK(c.nodes.size() == 1);
    CHECK(c.edges.empty());
  }

  TEST_CASE("output is deterministic") {
    const auto kg = make_kg({{"h", "x", "a"}}, {"b", "t", "c", "dead"});
    const Rollout r = hand_graph(kg);
    std::ostringstream a, b;
    write_dot(a, r, kg, ent(kg, "t"), true);
    write_dot(b, r, kg, ent(kg, "t"), true);
    CHECK(a.str() == b.str());
  }
}
