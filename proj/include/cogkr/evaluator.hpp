#pragma once

#include <array>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "cogkr/dataset.hpp"
#include "cogkr/model.hpp"
#include "cogkr/reasoner.hpp"

namespace cogkr {

// 1-based rank of `answer` among the rollout's nodes by descending score,
// ties to the smaller entity id. Only nodes in `candidates` (when given)
// compete, and nodes in `filtered` (other known answers) are skipped.
// nullopt when the answer is not a rankable node.
std::optional<std::size_t> rank_answer(const Rollout& rollout, EntityId answer,
                                       const std::vector<EntityId>* candidates = nullptr,
                                       const std::vector<EntityId>* filtered = nullptr);

// Shortest-path buckets: "1" (distance 0 or 1), "2", "3", "4", ">=5" (or
// unreachable within 4 hops).
inline constexpr std::size_t kBucketCount = 5;
inline constexpr std::size_t kNoBucket = kBucketCount;
const char* bucket_label(std::size_t bucket);
std::size_t distance_bucket(std::optional<std::size_t> distance);

struct Metrics {
  std::size_t n_queries = 0;
  double hits1 = 0, hits5 = 0, hits10 = 0, mrr = 0;
  double absent_fraction = 0;
};

struct QueryResult {
  std::string relation;
  EntityId head = 0;
  EntityId tail = 0;
  std::optional<std::size_t> rank;
  std::size_t bucket = kNoBucket;
};

struct MetricsReport {
  Metrics overall;
  std::array<Metrics, kBucketCount> buckets{};
  bool has_buckets = false;
  std::vector<QueryResult> queries;
};

// Order-free accumulation of ranks into a report.
class MetricsAccumulator {
 public:
  void add(std::optional<std::size_t> rank, std::size_t bucket = kNoBucket);
  Metrics overall() const { return finish(total_); }
  Metrics bucket(std::size_t b) const { return finish(per_bucket_.at(b)); }
  bool any_bucket() const;

 private:
  struct Sums {
    std::size_t n = 0, absent = 0, h1 = 0, h5 = 0, h10 = 0;
    double rr = 0;
  };
  static void add_to(Sums& s, std::optional<std::size_t> rank);
  static Metrics finish(const Sums& s);

  Sums total_;
  std::array<Sums, kBucketCount> per_bucket_{};
};

MetricsReport make_report(const std::vector<QueryResult>& queries);

enum class RankingMode { raw, filtered };

struct EvalConfig {
  ReasonerConfig reasoner;
  RankingMode ranking = RankingMode::raw;
  bool add_support_edge = false;
  bool buckets = true;
  std::size_t distance_horizon = 4;
  std::size_t max_queries = 0;  // 0 = all
  std::uint64_t seed = 0;
  std::size_t threads = 1;
};

// One seeded rollout per query of every relation of `section`; the support
// pair of each relation is its designated one.
MetricsReport evaluate(const ParameterStore& params, const ModelLayout& model, const KnowledgeGraph& kg,
                       const std::vector<TaskRelation>& section, const EvalConfig& config);

nlohmann::json report_to_json(const MetricsReport& report);
std::string format_report(const MetricsReport& report);
void write_query_csv(std::ostream& out, const MetricsReport& report, const KnowledgeGraph& kg);

}  // namespace cogkr
