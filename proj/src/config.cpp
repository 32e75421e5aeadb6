#include "cogkr/config.hpp"

#include <cctype>
#include <charconv>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "cogkr/errors.hpp"

namespace cogkr {

namespace {

std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

template <class N>
N parse_number(const std::string& key, const std::string& text) {
  N value{};
  const char* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end) throw ConfigError("bad value for " + key + ": '" + text + "'");
  return value;
}

std::size_t parse_size(const std::string& key, const std::string& text) {
  return parse_number<std::size_t>(key, text);
}

double parse_real(const std::string& key, const std::string& text) { return parse_number<double>(key, text); }

bool parse_bool(const std::string& key, const std::string& text) {
  if (text == "true" || text == "1" || text == "yes" || text == "on") return true;
  if (text == "false" || text == "0" || text == "no" || text == "off") return false;
  throw ConfigError("bad boolean for " + key + ": '" + text + "'");
}

std::vector<std::size_t> parse_size_list(const std::string& key, const std::string& text) {
  std::vector<std::size_t> out;
  std::stringstream ss(text);
  for (std::string item; std::getline(ss, item, ',');) out.push_back(parse_size(key, trim(item)));
  if (out.empty()) throw ConfigError("empty list for " + key);
  return out;
}

std::string fmt(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}
std::string fmt(std::size_t v) { return std::to_string(v); }
std::string fmt(bool v) { return v ? "true" : "false"; }

template <class T>
Option<T> size_opt(std::string key, std::string help, std::size_t T::*field) {
  return {key, std::move(help), [field](const T& t) { return fmt(t.*field); },
          [field, key](T& t, const std::string& v) { t.*field = parse_size(key, v); }};
}

// Options over a nested member reached through an accessor.
template <class T, class Get, class Set>
Option<T> opt(std::string key, std::string help, Get get, Set set) {
  return {std::move(key), std::move(help), std::move(get), std::move(set)};
}

}  // namespace

Settings parse_settings(std::istream& in, const std::string& origin) {
  Settings out;
  std::string line;
  for (std::size_t no = 1; std::getline(in, line); ++no) {
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) throw ConfigError(origin + ":" + std::to_string(no) + ": expected key = value");
    const std::string key = trim(t.substr(0, eq));
    if (key.empty()) throw ConfigError(origin + ":" + std::to_string(no) + ": empty key");
    out[key] = trim(t.substr(eq + 1));
  }
  return out;
}

Settings read_settings(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open config file: " + path.string());
  return parse_settings(in, path.string());
}

std::string env_name(const std::string& key) {
  std::string out = kEnvPrefix;
  for (char c : key) out += c == '.' ? '_' : static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return out;
}

void RunConfig::sync() {
  train.seed = seed;
  train.threads = threads;
  distmult.seed = seed;
  eval.reasoner = train.reasoner;
  eval.seed = derive_seed(seed, "evaluate");
  eval.threads = threads;
}

const std::vector<Option<RunConfig>>& run_options() {
  using R = RunConfig;
  static const std::vector<Option<R>> options = [] {
    std::vector<Option<R>> o;
    o.push_back(opt<R>(
        "seed", "master seed for every random stream", [](const R& c) { return std::to_string(c.seed); },
        [](R& c, const std::string& v) { c.seed = parse_number<std::uint64_t>("seed", v); }));
    o.push_back(size_opt<R>("threads", "worker threads for batches and evaluation", &R::threads));
    o.push_back(opt<R>(
        "dataset", "task-split manifest", [](const R& c) { return c.dataset; },
        [](R& c, const std::string& v) { c.dataset = v; }));
    o.push_back(opt<R>(
        "pretrained", "embedding snapshot written by `pretrain`", [](const R& c) { return c.pretrained; },
        [](R& c, const std::string& v) { c.pretrained = v; }));
    const auto flag = [&](std::string key, std::string help, bool& (*ref)(R&)) {
      o.push_back(opt<R>(
          key, std::move(help), [ref](const R& c) { return fmt(ref(const_cast<R&>(c))); },
          [ref, key](R& c, const std::string& v) { ref(c) = parse_bool(key, v); }));
    };
    const auto size = [&](std::string key, std::string help, std::size_t& (*ref)(R&)) {
      o.push_back(opt<R>(
          key, std::move(help), [ref](const R& c) { return fmt(ref(const_cast<R&>(c))); },
          [ref, key](R& c, const std::string& v) { ref(c) = parse_size(key, v); }));
    };
    const auto real = [&](std::string key, std::string help, Scalar& (*ref)(R&)) {
      o.push_back(opt<R>(
          key, std::move(help), [ref](const R& c) { return fmt(static_cast<double>(ref(const_cast<R&>(c)))); },
          [ref, key](R& c, const std::string& v) { ref(c) = static_cast<Scalar>(parse_real(key, v)); }));
    };
    flag("data.merge_train", "merge train-task triples into the background graph",
         [](R& c) -> bool& { return c.data.merge_train; });
    flag("data.register_eval_relations", "give valid/test relations graph ids (needed for eval.add_support_edge)",
         [](R& c) -> bool& { return c.data.register_eval_relations; });
    size("model.embedding_dim", "entity / relation embedding width", [](R& c) -> std::size_t& {
      return c.model.embedding_dim;
    });
    size("model.hidden_dim", "hidden width d", [](R& c) -> std::size_t& { return c.model.hidden_dim; });
    o.push_back(opt<R>(
        "model.head", "answer score: linear | gated", [](const R& c) { return std::string(to_string(c.model.head)); },
        [](R& c, const std::string& v) { c.model.head = parse_prediction_head(v); }));
    size("reasoner.degree_cap", "eta, outgoing edges considered per entity", [](R& c) -> std::size_t& {
      return c.train.reasoner.degree_cap;
    });
    size("reasoner.node_cap", "lambda, max cognitive-graph nodes", [](R& c) -> std::size_t& {
      return c.train.reasoner.node_cap;
    });
    size("reasoner.action_budget", "n, draws per expansion", [](R& c) -> std::size_t& {
      return c.train.reasoner.action_budget;
    });
    o.push_back(opt<R>(
        "reasoner.frontier", "frontier order: fifo | priority",
        [](const R& c) { return std::string(to_string(c.train.reasoner.frontier)); },
        [](R& c, const std::string& v) { c.train.reasoner.frontier = parse_frontier_order(v); }));
    size("train.batch_size", "episodes per optimizer step", [](R& c) -> std::size_t& { return c.train.batch_size; });
    real("train.lr_embedding", "Adam learning rate for embeddings", [](R& c) -> Scalar& {
      return c.train.adam.lr_embedding;
    });
    real("train.lr_other", "Adam learning rate for all other parameters", [](R& c) -> Scalar& {
      return c.train.adam.lr_other;
    });
    real("train.weight_decay", "L2 coefficient added to gradients", [](R& c) -> Scalar& {
      return c.train.adam.weight_decay;
    });
    real("train.adam_beta1", "Adam first-moment decay", [](R& c) -> Scalar& { return c.train.adam.beta1; });
    real("train.adam_beta2", "Adam second-moment decay", [](R& c) -> Scalar& { return c.train.adam.beta2; });
    real("train.adam_epsilon", "Adam denominator epsilon", [](R& c) -> Scalar& { return c.train.adam.epsilon; });
    size("train.max_steps", "optimizer steps", [](R& c) -> std::size_t& { return c.train.max_steps; });
    size("train.eval_every", "steps between validations", [](R& c) -> std::size_t& { return c.train.eval_every; });
    size("train.patience", "validations without improvement before stopping (0 = off)", [](R& c) -> std::size_t& {
      return c.train.patience;
    });
    size("train.eval_max_queries", "cap on validation queries (0 = all)", [](R& c) -> std::size_t& {
      return c.train.eval_max_queries;
    });
    flag("train.baseline", "subtract a moving-average reward baseline", [](R& c) -> bool& {
      return c.train.baseline;
    });
    real("train.baseline_decay", "decay of the reward baseline", [](R& c) -> Scalar& {
      return c.train.baseline_decay;
    });
    real("train.grad_clip", "global gradient-norm clip (0 = off)", [](R& c) -> Scalar& { return c.train.grad_clip; });
    size("pretrain.epochs", "DistMult epochs", [](R& c) -> std::size_t& { return c.distmult.epochs; });
    size("pretrain.negatives", "corrupted tails per triple", [](R& c) -> std::size_t& {
      return c.distmult.negatives;
    });
    real("pretrain.learning_rate", "DistMult Adagrad learning rate", [](R& c) -> Scalar& {
      return c.distmult.learning_rate;
    });
    o.push_back(opt<R>(
        "eval.ranking", "raw | filtered",
        [](const R& c) { return std::string(c.eval.ranking == RankingMode::raw ? "raw" : "filtered"); },
        [](R& c, const std::string& v) {
          if (v == "raw") {
            c.eval.ranking = RankingMode::raw;
          } else if (v == "filtered") {
            c.eval.ranking = RankingMode::filtered;
          } else {
            throw ConfigError("bad value for eval.ranking: '" + v + "'");
          }
        }));
    flag("eval.add_support_edge", "layer each eval relation's support edge into the graph", [](R& c) -> bool& {
      return c.eval.add_support_edge;
    });
    flag("eval.buckets", "stratify metrics by shortest-path length", [](R& c) -> bool& { return c.eval.buckets; });
    size("eval.distance_horizon", "BFS horizon for the distance buckets", [](R& c) -> std::size_t& {
      return c.eval.distance_horizon;
    });
    size("eval.max_queries", "cap on evaluated queries (0 = all)", [](R& c) -> std::size_t& {
      return c.eval.max_queries;
    });
    o.push_back(opt<R>(
        "scalar_bits", "floating-point width of this build (read-only)",
        [](const R& c) { return std::to_string(c.scalar_bits); },
        [](R& c, const std::string& v) {
          const std::size_t bits = parse_size("scalar_bits", v);
          if (bits != sizeof(Scalar) * 8)
            throw ConfigError("config asks for " + v + "-bit floats but this build uses " +
                              std::to_string(sizeof(Scalar) * 8));
          c.scalar_bits = bits;
        }));
    return o;
  }();
  return options;
}

const std::vector<Option<SynthSpec>>& synth_options() {
  using S = SynthSpec;
  static const std::vector<Option<S>> options = [] {
    std::vector<Option<S>> o;
    o.push_back(size_opt<S>("types", "entity groups on the ring (= link relations)", &S::types));
    o.push_back(size_opt<S>("entities_per_type", "entities per group", &S::entities_per_type));
    o.push_back(opt<S>(
        "density", "fraction of a group carrying its link edge", [](const S& s) { return fmt(s.density); },
        [](S& s, const std::string& v) { s.density = parse_real("density", v); }));
    o.push_back(opt<S>(
        "rule_hops", "walk length per rule, cycled over start groups",
        [](const S& s) {
          std::string out;
          for (std::size_t i = 0; i < s.rule_hops.size(); ++i) out += (i ? "," : "") + std::to_string(s.rule_hops[i]);
          return out;
        },
        [](S& s, const std::string& v) { s.rule_hops = parse_size_list("rule_hops", v); }));
    o.push_back(size_opt<S>("relations_per_rule", "task relations per rule (disjoint heads)", &S::relations_per_rule));
    o.push_back(size_opt<S>("max_pairs", "cap on pairs per task relation (0 = none)", &S::max_pairs));
    o.push_back(size_opt<S>("noise_relations", "relations used for distractor edges", &S::noise_relations));
    o.push_back(size_opt<S>("distractors", "distractor out-edges per entity", &S::distractors));
    o.push_back(size_opt<S>("valid_relations", "validation task relations", &S::valid_relations));
    o.push_back(size_opt<S>("test_relations", "test task relations", &S::test_relations));
    o.push_back(opt<S>(
        "seed", "generation seed", [](const S& s) { return std::to_string(s.seed); },
        [](S& s, const std::string& v) { s.seed = parse_number<std::uint64_t>("seed", v); }));
    return o;
  }();
  return options;
}

template <class T>
void apply_settings(T& target, const std::vector<Option<T>>& options, const Settings& settings) {
  for (const auto& [key, value] : settings) {
    auto it = std::find_if(options.begin(), options.end(), [&](const Option<T>& o) { return o.key == key; });
    if (it == options.end()) throw ConfigError("unknown config key: " + key);
    it->set(target, value);
  }
}

namespace {

template <class T>
T resolve(const std::vector<Option<T>>& options, const std::filesystem::path* file, const Settings& overrides) {
  T value{};
  if (file) apply_settings(value, options, read_settings(*file));
  Settings env;
  for (const auto& o : options)
    if (const char* v = std::getenv(env_name(o.key).c_str())) env[o.key] = v;
  apply_settings(value, options, env);
  apply_settings(value, options, overrides);
  return value;
}

}  // namespace

RunConfig resolve_run_config(const std::filesystem::path* file, const Settings& overrides) {
  RunConfig c = resolve(run_options(), file, overrides);
  c.sync();
  c.train.validate();
  return c;
}

SynthSpec resolve_synth_spec(const std::filesystem::path* file, const Settings& overrides) {
  SynthSpec s = resolve(synth_options(), file, overrides);
  s.validate();
  return s;
}

template <class T>
void write_settings(std::ostream& out, const T& value, const std::vector<Option<T>>& options) {
  for (const auto& o : options) out << "# " << o.help << '\n' << o.key << " = " << o.get(value) << '\n';
}

template <class T>
void write_settings(const std::filesystem::path& path, const T& value, const std::vector<Option<T>>& options) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot open for writing: " + path.string());
  write_settings(out, value, options);
}

template void apply_settings(RunConfig&, const std::vector<Option<RunConfig>>&, const Settings&);
template void apply_settings(SynthSpec&, const std::vector<Option<SynthSpec>>&, const Settings&);
template void write_settings(std::ostream&, const RunConfig&, const std::vector<Option<RunConfig>>&);
template void write_settings(std::ostream&, const SynthSpec&, const std::vector<Option<SynthSpec>>&);
template void write_settings(const std::filesystem::path&, const RunConfig&, const std::vector<Option<RunConfig>>&);
template void write_settings(const std::filesystem::path&, const SynthSpec&, const std::vector<Option<SynthSpec>>&);

}  // namespace cogkr
