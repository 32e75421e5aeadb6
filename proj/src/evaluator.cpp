#include "cogkr/evaluator.hpp"

#include <algorithm>
#include <cstdio>
#include <ostream>
#include <sstream>

#include "cogkr/episode.hpp"
#include "cogkr/parallel.hpp"

namespace cogkr {

std::optional<std::size_t> rank_answer(const Rollout& rollout, EntityId answer, const std::vector<EntityId>* candidates,
                                       const std::vector<EntityId>* filtered) {
  const auto in = [](const std::vector<EntityId>* set, EntityId e) {
    return set && std::find(set->begin(), set->end(), e) != set->end();
  };
  const auto target = rollout.graph.find(answer);
  if (!target || (candidates && !in(candidates, answer))) return std::nullopt;
  const Scalar f = rollout.scores[*target];
  std::size_t rank = 1;
  for (std::size_t i = 0; i < rollout.graph.size(); ++i) {
    const EntityId e = rollout.graph.nodes[i];
    if (e == answer || (candidates && !in(candidates, e)) || in(filtered, e)) continue;
    const Scalar g = rollout.scores[i];
    if (g > f || (g == f && e < answer)) ++rank;
  }
  return rank;
}

const char* bucket_label(std::size_t bucket) {
  static const char* labels[] = {"1", "2", "3", "4", ">=5"};
  return bucket < kBucketCount ? labels[bucket] : "-";
}

std::size_t distance_bucket(std::optional<std::size_t> distance) {
  if (!distance || *distance >= 5) return 4;
  return *distance <= 1 ? 0 : *distance - 1;
}

void MetricsAccumulator::add_to(Sums& s, std::optional<std::size_t> rank) {
  ++s.n;
  if (!rank) {
    ++s.absent;
    return;
  }
  s.rr += 1.0 / static_cast<double>(*rank);
  s.h1 += *rank <= 1;
  s.h5 += *rank <= 5;
  s.h10 += *rank <= 10;
}

void MetricsAccumulator::add(std::optional<std::size_t> rank, std::size_t bucket) {
  add_to(total_, rank);
  if (bucket < kBucketCount) add_to(per_bucket_[bucket], rank);
}

bool MetricsAccumulator::any_bucket() const {
  return std::any_of(per_bucket_.begin(), per_bucket_.end(), [](const Sums& s) { return s.n > 0; });
}

Metrics MetricsAccumulator::finish(const Sums& s) {
  Metrics m;
  m.n_queries = s.n;
  if (s.n == 0) return m;
  const double n = static_cast<double>(s.n);
  m.hits1 = static_cast<double>(s.h1) / n;
  m.hits5 = static_cast<double>(s.h5) / n;
  m.hits10 = static_cast<double>(s.h10) / n;
  m.mrr = s.rr / n;
  m.absent_fraction = static_cast<double>(s.absent) / n;
  return m;
}

MetricsReport make_report(const std::vector<QueryResult>& queries) {
  MetricsAccumulator acc;
  for (const auto& q : queries) acc.add(q.rank, q.bucket);
  MetricsReport report;
  report.overall = acc.overall();
  report.has_buckets = acc.any_bucket();
  for (std::size_t b = 0; b < kBucketCount; ++b) report.buckets[b] = acc.bucket(b);
  report.queries = queries;
  return report;
}

MetricsReport evaluate(const ParameterStore& params, const ModelLayout& model, const KnowledgeGraph& kg,
                       const std::vector<TaskRelation>& section, const EvalConfig& config) {
  struct Job {
    std::size_t relation, support, query;
  };
  std::vector<Job> jobs;
  for (std::size_t r = 0; r < section.size(); ++r) {
    for (std::size_t q = 0; q < section[r].pairs.size(); ++q) {
      if (q == section[r].support_index) continue;
      jobs.push_back({r, section[r].support_index, q});
    }
  }
  if (config.max_queries && jobs.size() > config.max_queries) jobs.resize(config.max_queries);

  std::vector<QueryResult> results(jobs.size());
  parallel_for(jobs.size(), config.threads, [&](std::size_t i) {
    const Job& job = jobs[i];
    const TaskRelation& rel = section[job.relation];
    Episode ep;
    ep.relation = job.relation;
    ep.support = rel.pairs[job.support];
    ep.query = rel.pairs[job.query];
    ep.mask = leakage_mask(kg, rel, ep.support, ep.query);
    const GraphView view = episode_view(kg, rel, ep, config.add_support_edge);

    Rng rng(derive_seed(config.seed, "eval", job.relation, job.query));
    const Rollout ro = rollout(params, model, view, ep.support, ep.query.head, config.reasoner, rng);

    std::vector<EntityId> others;
    if (config.ranking == RankingMode::filtered) {
      for (const EntityPair& p : rel.pairs)
        if (p.head == ep.query.head && p.tail != ep.query.tail) others.push_back(p.tail);
    }
    QueryResult& out = results[i];
    out.relation = rel.name;
    out.head = ep.query.head;
    out.tail = ep.query.tail;
    out.rank = rank_answer(ro, ep.query.tail, nullptr, others.empty() ? nullptr : &others);
    if (config.buckets)
      out.bucket = distance_bucket(shortest_distance(view, ep.query.head, ep.query.tail, config.distance_horizon));
  });
  return make_report(results);
}

namespace {

nlohmann::json metrics_json(const Metrics& m) {
  return {{"n_queries", m.n_queries}, {"hits@1", m.hits1}, {"hits@5", m.hits5},    {"hits@10", m.hits10},
          {"mrr", m.mrr},             {"absent_fraction", m.absent_fraction}};
}

}  // namespace

nlohmann::json report_to_json(const MetricsReport& report) {
  nlohmann::json j = metrics_json(report.overall);
  if (report.has_buckets) {
    nlohmann::json b = nlohmann::json::object();
    for (std::size_t i = 0; i < kBucketCount; ++i) b[bucket_label(i)] = metrics_json(report.buckets[i]);
    j["by_distance"] = b;
  }
  return j;
}

std::string format_report(const MetricsReport& report) {
  std::ostringstream out;
  char line[160];
  std::snprintf(line, sizeof line, "%-8s %8s %8s %8s %8s %8s %8s\n", "bucket", "queries", "hits@1", "hits@5",
                "hits@10", "mrr", "absent");
  out << line;
  const auto row = [&](const char* label, const Metrics& m) {
    std::snprintf(line, sizeof line, "%-8s %8zu %8.4f %8.4f %8.4f %8.4f %8.4f\n", label, m.n_queries, m.hits1,
                  m.hits5, m.hits10, m.mrr, m.absent_fraction);
    out << line;
  };
  row("all", report.overall);
  if (report.has_buckets)
    for (std::size_t i = 0; i < kBucketCount; ++i) row(bucket_label(i), report.buckets[i]);
  return out.str();
}

void write_query_csv(std::ostream& out, const MetricsReport& report, const KnowledgeGraph& kg) {
  const auto quote = [](const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string q = "\"";
    for (char c : s) {
      if (c == '"') q += '"';
      q += c;
    }
    return q + '"';
  };
  out << "relation,head,tail,rank,bucket\n";
  for (const auto& q : report.queries) {
    out << quote(q.relation) << ',' << quote(kg.entity_name(q.head)) << ',' << quote(kg.entity_name(q.tail)) << ','
        << (q.rank ? std::to_string(*q.rank) : std::string("absent")) << ',' << bucket_label(q.bucket) << '\n';
  }
}

}  // namespace cogkr
