#include "cogkr/taskgen.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "cogkr/errors.hpp"
#include "cogkr/random.hpp"

namespace cogkr {

void SynthSpec::validate() const {
  if (types < 3) throw ConfigError("taskgen: need at least 3 entity groups");
  if (entities_per_type < 2) throw ConfigError("taskgen: need at least 2 entities per group");
  if (!(density > 0 && density <= 1)) throw ConfigError("taskgen: density must be in (0, 1]");
  if (rule_hops.empty()) throw ConfigError("taskgen: no walk lengths given");
  for (std::size_t h : rule_hops)
    if (h < 1 || h >= types) throw ConfigError("taskgen: walk length must be in [1, types)");
  if (relations_per_rule < 1) throw ConfigError("taskgen: need at least one relation per rule");
  if (distractors > 0 && noise_relations == 0) throw ConfigError("taskgen: distractors need a noise relation");
  if (distractors >= types * entities_per_type) throw ConfigError("taskgen: too many distractors per entity");
  if (valid_relations + test_relations > 0 && relations_per_rule < 2)
    throw ConfigError("taskgen: evaluation relations need a sibling in train (relations_per_rule >= 2)");
  if (valid_relations + test_relations > types) throw ConfigError("taskgen: more evaluation relations than rules");
}

SynthDataset generate(const SynthSpec& spec) {
  spec.validate();
  const std::size_t m = spec.entities_per_type, groups = spec.types;
  KnowledgeGraph::Builder builder;
  const auto entity = [m](std::size_t group, std::size_t i) { return static_cast<EntityId>(group * m + i); };
  for (std::size_t g = 0; g < groups; ++g)
    for (std::size_t i = 0; i < m; ++i) builder.add_entity("g" + std::to_string(g) + "_e" + std::to_string(i));
  std::vector<RelationId> link(groups), noise(spec.noise_relations);
  for (std::size_t g = 0; g < groups; ++g) link[g] = builder.add_relation("link_" + std::to_string(g));
  for (std::size_t i = 0; i < spec.noise_relations; ++i) noise[i] = builder.add_relation("noise_" + std::to_string(i));

  // next[g][i]: image of entity i of group g under link_g, or -1.
  std::vector<std::vector<long>> next(groups, std::vector<long>(m, -1));
  std::vector<Triple> background;
  const std::size_t carriers = std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(spec.density * m)));
  for (std::size_t g = 0; g < groups; ++g) {
    Rng rng(derive_seed(spec.seed, "taskgen.link", g));
    std::vector<std::size_t> src(m), dst(m);
    for (std::size_t i = 0; i < m; ++i) src[i] = dst[i] = i;
    std::shuffle(src.begin(), src.end(), rng);
    std::shuffle(dst.begin(), dst.end(), rng);
    src.resize(carriers);
    std::sort(src.begin(), src.end());
    for (std::size_t j = 0; j < carriers; ++j) {
      next[g][src[j]] = static_cast<long>(dst[j]);
      background.push_back({entity(g, src[j]), link[g], entity((g + 1) % groups, dst[j])});
    }
  }

  const std::size_t n_entities = groups * m;
  for (EntityId e = 0; e < n_entities; ++e) {
    Rng rng(derive_seed(spec.seed, "taskgen.noise", e));
    std::set<std::pair<RelationId, EntityId>> taken;
    while (taken.size() < spec.distractors) {
      const auto target = static_cast<EntityId>(uniform_index(rng, n_entities));
      if (target == e) continue;
      const RelationId r = noise[uniform_index(rng, noise.size())];
      if (taken.emplace(r, target).second) background.push_back({e, r, target});
    }
  }
  for (const Triple& t : background) builder.add_triple(t);

  // Walks per rule, split into task relations over disjoint heads.
  struct Planted {
    TaskRelation rel;
    std::size_t rule;
    std::vector<Witness> witnesses;
  };
  std::vector<Planted> planted;
  std::vector<std::size_t> rule_length(groups);
  for (std::size_t g = 0; g < groups; ++g) {
    const std::size_t h = rule_length[g] = spec.rule_hops[g % spec.rule_hops.size()];
    std::vector<Witness> walks;
    for (std::size_t i = 0; i < m; ++i) {
      Witness w;
      w.path.push_back(entity(g, i));
      long cur = static_cast<long>(i);
      for (std::size_t s = 0; s < h && cur >= 0; ++s) {
        const std::size_t at = (g + s) % groups;
        cur = next[at][static_cast<std::size_t>(cur)];
        if (cur >= 0) {
          w.path.push_back(entity((at + 1) % groups, static_cast<std::size_t>(cur)));
          w.relations.push_back(link[at]);
        }
      }
      if (cur >= 0) walks.push_back(std::move(w));
    }
    Rng rng(derive_seed(spec.seed, "taskgen.pairs", g));
    std::shuffle(walks.begin(), walks.end(), rng);
    const std::size_t parts = spec.relations_per_rule;
    for (std::size_t part = 0; part < parts; ++part) {
      Planted p;
      p.rule = g;
      p.rel.name = "cw" + std::to_string(h) + "_" + std::to_string(g) + "_" + std::to_string(part);
      const std::size_t lo = walks.size() * part / parts, hi = walks.size() * (part + 1) / parts;
      p.witnesses.assign(walks.begin() + static_cast<long>(lo), walks.begin() + static_cast<long>(hi));
      if (spec.max_pairs && p.witnesses.size() > spec.max_pairs) p.witnesses.resize(spec.max_pairs);
      if (p.witnesses.size() < 2)
        throw DataError("taskgen: relation " + p.rel.name + " has fewer than 2 triples; raise density or group size");
      for (const auto& w : p.witnesses) p.rel.pairs.push_back({w.path.front(), w.path.back()});
      p.rel.support_index = 0;
      planted.push_back(std::move(p));
    }
  }

  // Evaluation rules are drawn round-robin over walk lengths; each gives its
  // last relation to valid or test (alternating whole rounds) and keeps the
  // rest in train.
  Rng split_rng(derive_seed(spec.seed, "taskgen.split"));
  std::vector<std::vector<std::size_t>> pools;
  for (std::size_t h : spec.rule_hops) {
    if (std::any_of(pools.begin(), pools.end(), [&](const auto& pool) { return rule_length[pool.front()] == h; }))
      continue;
    std::vector<std::size_t> pool;
    for (std::size_t g = 0; g < groups; ++g)
      if (rule_length[g] == h) pool.push_back(g);
    std::shuffle(pool.begin(), pool.end(), split_rng);
    pools.push_back(std::move(pool));
  }
  std::vector<std::size_t> eligible;
  for (std::size_t round = 0; eligible.size() < groups; ++round)
    for (const auto& pool : pools)
      if (round < pool.size()) eligible.push_back(pool[round]);
  std::vector<std::size_t> valid_ids, test_ids;
  for (std::size_t j = 0; valid_ids.size() + test_ids.size() < spec.valid_relations + spec.test_relations; ++j) {
    const std::size_t last = eligible[j] * spec.relations_per_rule + spec.relations_per_rule - 1;
    const bool valid_full = valid_ids.size() == spec.valid_relations;
    const bool test_full = test_ids.size() == spec.test_relations;
    const bool prefer_valid = (j / pools.size()) % 2 == 0;
    (!valid_full && (prefer_valid || test_full) ? valid_ids : test_ids).push_back(last);
  }

  std::vector<SplitKind> assign(planted.size(), SplitKind::train);
  std::vector<std::size_t> order;
  for (std::size_t i : valid_ids) assign[i] = SplitKind::valid;
  for (std::size_t i : test_ids) assign[i] = SplitKind::test;
  // Eval sections list relations in draw order, train in generation order.
  order.insert(order.end(), valid_ids.begin(), valid_ids.end());
  order.insert(order.end(), test_ids.begin(), test_ids.end());
  for (std::size_t i = 0; i < planted.size(); ++i)
    if (assign[i] == SplitKind::train) order.push_back(i);

  SynthDataset out;
  out.kg = builder.build();
  out.split.background = background;
  std::sort(out.split.background.begin(), out.split.background.end());
  for (std::size_t i : order) {
    auto& section = out.split.section(assign[i]);
    for (std::size_t p = 0; p < planted[i].witnesses.size(); ++p) {
      Witness w = planted[i].witnesses[p];
      w.split = assign[i];
      w.relation = section.size();
      w.pair = p;
      out.witnesses.push_back(std::move(w));
    }
    section.push_back(std::move(planted[i].rel));
  }
  return out;
}

}  // namespace cogkr
