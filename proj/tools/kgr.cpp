// Command-line front end: one binary, five subcommands (train, evaluate,
// rank, estimate-confidence, generate-synthetic). Every command takes one
// --seed, writes into a fresh per-run directory, and leaves a manifest with
// content hashes of its inputs. Exit codes: 0 ok, 1 config error, 2 data
// error, 3 numerical failure.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "kgr/beam.hpp"
#include "kgr/checkpoint.hpp"
#include "kgr/config.hpp"
#include "kgr/errors.hpp"
#include "kgr/eval.hpp"
#include "kgr/graph.hpp"
#include "kgr/hash.hpp"
#include "kgr/io.hpp"
#include "kgr/manifest.hpp"
#include "kgr/parallel.hpp"
#include "kgr/policy.hpp"
#include "kgr/rules.hpp"
#include "kgr/split.hpp"
#include "kgr/synthetic.hpp"
#include "kgr/training.hpp"
#include "kgr/version.hpp"

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

struct CommonArgs {
  std::string config_path;
  std::string graph_path;
  std::string types_path;
  std::string rules_path;
  std::string split_path;
  std::string checkpoint_path;
  std::string mode = "full";
  std::string out_root = "runs";
  std::string run_name;
  std::uint64_t seed = 0;
  bool seed_given = false;
  int threads = kgr::default_threads();
  // subcommand extras
  std::string source_entity;  // rank
  long samples = 10000;       // estimate-confidence
};

std::string short_hash(const std::string& text) { return kgr::hex64(kgr::fnv1a(text)).substr(8); }

std::string timestamp_utc() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y%m%d-%H%M%S", &tm);
  return buf;
}

// runs/<name>; default name = command-timestamp-hash. Existing directories
// are never reused — rerunning with the same --run-name is an error.
fs::path make_run_dir(const CommonArgs& a, const std::string& command) {
  std::string name = a.run_name;
  if (name.empty()) {
    name = command + "-" + timestamp_utc() + "-" +
           short_hash(command + "|" + std::to_string(a.seed) + "|" + a.graph_path + "|" +
                      a.config_path + "|" + a.checkpoint_path);
  }
  fs::path root(a.out_root);
  fs::create_directories(root);
  fs::path dir = root / name;
  if (fs::exists(dir)) {
    throw kgr::ConfigError("run directory already exists: " + dir.string());
  }
  fs::create_directory(dir);
  return dir;
}

void print_stats(const kgr::KnowledgeGraph& kg, const std::string& head_relation) {
  const kgr::GraphStats s = kg.stats(head_relation);
  std::cout << "entities = " << s.entities << "\n"
            << "edges = " << s.edges << "\n"
            << "relations = " << s.relations << "\n"
            << "types = " << s.types << "\n"
            << head_relation << "_edges = " << s.treats_edges << "\n"
            << "duplicates_dropped = " << kg.load_stats().duplicates_dropped << "\n";
  for (const auto& [type, n] : s.entities_per_type) {
    std::cout << "entities." << type << " = " << n << "\n";
  }
  for (const auto& [rel, n] : s.edges_per_relation) {
    std::cout << "edges." << rel << " = " << n << "\n";
  }
}

std::map<std::string, std::string> snapshot_config(const kgr::RunConfig& rc) {
  using kgr::format_double;
  std::map<std::string, std::string> m;
  m["embed_dim"] = std::to_string(rc.policy.embed_dim);
  m["hidden_size"] = std::to_string(rc.policy.hidden_size);
  m["mlp_size"] = std::to_string(rc.policy.mlp_size);
  m["encoder_layers"] = std::to_string(rc.policy.encoder_layers);
  m["learning_rate"] = format_double(rc.trainer.learning_rate);
  m["rollouts_per_query"] = std::to_string(rc.trainer.rollouts_per_query);
  m["batch_queries"] = std::to_string(rc.trainer.batch_queries);
  m["total_updates"] = std::to_string(rc.trainer.total_updates);
  m["entropy_beta"] = format_double(rc.trainer.entropy_beta);
  m["baseline_decay"] = format_double(rc.trainer.baseline_decay);
  m["max_path_length"] = std::to_string(rc.trainer.max_path_length);
  m["lambda"] = format_double(rc.trainer.lambda);
  m["seed"] = std::to_string(rc.trainer.seed);
  m["beam_width"] = std::to_string(rc.beam_width);
  m["aggregate"] = kgr::to_string(rc.aggregation);
  m["query_relation"] = rc.query_relation;
  m["target_type"] = rc.target_type;
  return m;
}

kgr::RunConfig load_run_config(const CommonArgs& a) {
  kgr::RunConfig rc =
      a.config_path.empty() ? kgr::RunConfig::defaults() : kgr::RunConfig::from_file(a.config_path);
  if (a.seed_given) rc.trainer.seed = a.seed;
  return rc;
}

kgr::RelationId query_relation_id(const kgr::KnowledgeGraph& kg, const std::string& name) {
  auto id = kg.vocab().relation_id(name);
  if (!id) throw kgr::DataError("query relation '" + name + "' does not occur in the graph");
  return *id;
}

kgr::TypeId target_type_id(const kgr::KnowledgeGraph& kg, const std::string& name) {
  auto id = kg.vocab().type_id(name);
  if (!id) throw kgr::DataError("target type '" + name + "' does not occur in the graph");
  return *id;
}

// Rules are parsed against the augmented vocabulary (bodies may use r^-1
// labels). Empty path means "no rules" and yields an empty set.
kgr::RuleSet load_rules(const kgr::KnowledgeGraph& kg, const std::string& path) {
  if (path.empty()) return kgr::RuleSet{};
  return kgr::parse_rules_file(path, kg.vocab());
}

void check_rules_against(const kgr::RuleSet& rules, kgr::RelationId query_rel,
                         int max_path_length) {
  if (rules.empty()) return;
  if (rules.head_relation != query_rel) {
    throw kgr::ConfigError("rule head relation differs from the configured query relation");
  }
  if (rules.max_body_length() > static_cast<std::size_t>(max_path_length)) {
    throw kgr::ConfigError("a rule body is longer than max_path_length");
  }
}

int cmd_train(const CommonArgs& a) {
  kgr::RunConfig rc = load_run_config(a);
  if (rc.trainer.lambda > 0.0 && a.rules_path.empty()) {
    throw kgr::ConfigError("lambda > 0 requires --rules");
  }

  kgr::KnowledgeGraph kg = kgr::load_graph(a.graph_path, a.types_path);
  print_stats(kg, rc.query_relation);
  kg.add_inverse_relations();

  kgr::RuleSet rules = load_rules(kg, a.rules_path);
  if (rc.trainer.lambda > 0.0 && rules.empty()) {
    throw kgr::ConfigError("lambda = " + kgr::format_double(rc.trainer.lambda) +
                           " but the rule file contains no rules");
  }
  const kgr::RelationId query_rel = query_relation_id(kg, rc.query_relation);
  check_rules_against(rules, query_rel, rc.trainer.max_path_length);

  kgr::QuerySplit split = kgr::read_split(a.split_path, kg.vocab());
  const fs::path run_dir = make_run_dir(a, "train");

  kgr::PolicyNetwork net = kgr::PolicyNetwork::init(
      rc.policy, kg.entity_count(), kg.relation_count(), kg.vocab().fingerprint(),
      kgr::derive_seed(rc.trainer.seed, kgr::fnv1a("init")));

  std::ofstream log_os(run_dir / "train_log.jsonl", std::ios::binary);
  if (!log_os) throw kgr::DataError("cannot write training log in " + run_dir.string());
  const int print_every = std::max(1, rc.trainer.total_updates / 20);
  kgr::train(kg, rules, split.train, query_rel, rc.trainer, net, a.threads,
             [&](const kgr::TrainLogRecord& r) {
               ordered_json j;
               j["step"] = r.step;
               j["mean_reward"] = r.mean_reward;
               j["hit_fraction"] = r.hit_fraction;
               j["rule_match_fraction"] = r.rule_match_fraction;
               j["loss"] = r.loss;
               j["wall_time_ms"] = r.wall_time_ms;
               log_os << j.dump() << "\n";
               if (r.step % print_every == 0 || r.step == rc.trainer.total_updates) {
                 std::cout << "step " << r.step << "  reward " << r.mean_reward << "  hits "
                           << r.hit_fraction << "  rule " << r.rule_match_fraction << "  loss "
                           << r.loss << "\n";
               }
             });
  log_os.close();
  kgr::save_checkpoint(net, (run_dir / "checkpoint.kgr").string());

  kgr::RunManifest man;
  man.command = "train";
  man.seed = rc.trainer.seed;
  man.config = snapshot_config(rc);
  if (!a.config_path.empty()) man.add_input("config", a.config_path);
  man.add_input("graph", a.graph_path);
  man.add_input("types", a.types_path);
  if (!a.rules_path.empty()) man.add_input("rules", a.rules_path);
  man.add_input("split", a.split_path);
  man.outputs = {"checkpoint.kgr", "train_log.jsonl"};
  man.checkpoint = "checkpoint.kgr";
  man.write((run_dir / "manifest.json").string());
  std::cout << "run_dir = " << run_dir.string() << "\n";
  return 0;
}

void write_report_files(const fs::path& run_dir, const kgr::EvaluationReport& report,
                        const kgr::KnowledgeGraph& kg) {
  using kgr::format_double;
  std::ofstream txt(run_dir / "report.txt", std::ios::binary);
  txt << "mode = " << report.mode << "\n"
      << "seed = " << report.seed << "\n"
      << "checkpoint = " << report.checkpoint_hash << "\n"
      << "queries = " << report.per_query.size() << "\n"
      << "hits@1 = " << format_double(report.hits1) << "\n"
      << "hits@3 = " << format_double(report.hits3) << "\n"
      << "hits@10 = " << format_double(report.hits10) << "\n"
      << "mrr = " << format_double(report.mrr) << "\n";

  ordered_json j;
  j["mode"] = report.mode;
  j["seed"] = report.seed;
  j["checkpoint"] = report.checkpoint_hash;
  j["queries"] = report.per_query.size();
  j["hits@1"] = report.hits1;
  j["hits@3"] = report.hits3;
  j["hits@10"] = report.hits10;
  j["mrr"] = report.mrr;
  auto& pq = j["per_query"] = ordered_json::array();
  for (const auto& r : report.per_query) {
    ordered_json e;
    e["compound"] = kg.vocab().entity_name(r.query.source);
    e["disease"] = kg.vocab().entity_name(r.query.target);
    e["filtered_rank"] = r.filtered_rank;
    pq.push_back(e);
  }
  std::ofstream js(run_dir / "report.json", std::ios::binary);
  js << j.dump(2) << "\n";

  std::ofstream csv(run_dir / "metrics.csv", std::ios::binary);
  csv << "metric,value\n"
      << "hits@1," << format_double(report.hits1) << "\n"
      << "hits@3," << format_double(report.hits3) << "\n"
      << "hits@10," << format_double(report.hits10) << "\n"
      << "mrr," << format_double(report.mrr) << "\n";
}

int cmd_evaluate(const CommonArgs& a) {
  kgr::RunConfig rc = load_run_config(a);
  const kgr::RankingMode mode = kgr::parse_ranking_mode(a.mode);
  if (mode == kgr::RankingMode::pruned && a.rules_path.empty()) {
    throw kgr::ConfigError("pruned mode requires --rules");
  }

  kgr::KnowledgeGraph kg = kgr::load_graph(a.graph_path, a.types_path);
  print_stats(kg, rc.query_relation);
  kg.add_inverse_relations();

  kgr::PolicyNetwork net = kgr::load_checkpoint(a.checkpoint_path, kg.vocab().fingerprint());
  kgr::RuleSet rules = load_rules(kg, a.rules_path);
  if (mode == kgr::RankingMode::pruned && rules.empty()) {
    throw kgr::ConfigError("pruned mode requires a non-empty rule set");
  }
  const kgr::RelationId query_rel = query_relation_id(kg, rc.query_relation);
  check_rules_against(rules, query_rel, rc.trainer.max_path_length);
  const kgr::TypeId target_type = target_type_id(kg, rc.target_type);

  kgr::QuerySplit split = kgr::read_split(a.split_path, kg.vocab());
  if (split.test.empty()) throw kgr::EmptyQuerySet("split has no test queries");

  // Filtered protocol: every known true pair, regardless of split, is
  // removed from a query's candidates (except the query's own target).
  std::set<std::pair<kgr::EntityId, kgr::EntityId>> known;
  for (const kgr::Triple& t : kg.triples()) {
    if (t.rel == query_rel) known.insert({t.head, t.tail});
  }
  for (const kgr::Query& q : split.all()) known.insert({q.source, q.target});

  const kgr::BeamConfig bc{rc.beam_width, rc.trainer.max_path_length};
  std::vector<kgr::QueryRanking> rankings(split.test.size());
  kgr::parallel_for(split.test.size(), a.threads, [&](std::size_t i) {
    const kgr::Query& q = split.test[i];
    auto beams = kgr::beam_search(kg, net, q.source, bc,
                                  kgr::Triple{q.source, query_rel, q.target});
    rankings[i] =
        kgr::QueryRanking{q, kgr::rank_targets(kg, beams, rules, mode, target_type, rc.aggregation)};
  });

  kgr::EvaluationReport report = kgr::evaluate(rankings, split.test, known);
  report.mode = kgr::to_string(mode);
  report.seed = a.seed;
  report.checkpoint_hash = kgr::hex64(kgr::hash_file(a.checkpoint_path));

  const fs::path run_dir = make_run_dir(a, "evaluate");
  // One block per test query, rank restarting at 1; column layout
  // query_compound, rank, candidate, score, best supporting path.
  std::ofstream tsv(run_dir / "rankings.tsv", std::ios::binary);
  for (const kgr::QueryRanking& qr : rankings) {
    std::size_t pos = 0;
    for (const kgr::RankedCandidate& c : qr.candidates.items) {
      ++pos;
      tsv << kg.vocab().entity_name(qr.query.source) << '\t' << pos << '\t'
          << kg.vocab().entity_name(c.entity) << '\t' << kgr::format_double(c.score) << '\t'
          << kgr::format_instance_path(kg, c.best_path) << '\n';
    }
  }
  tsv.close();
  write_report_files(run_dir, report, kg);

  std::cout << "mode = " << report.mode << "\n"
            << "queries = " << report.per_query.size() << "\n"
            << "hits@1 = " << kgr::format_double(report.hits1) << "\n"
            << "hits@3 = " << kgr::format_double(report.hits3) << "\n"
            << "hits@10 = " << kgr::format_double(report.hits10) << "\n"
            << "mrr = " << kgr::format_double(report.mrr) << "\n";

  kgr::RunManifest man;
  man.command = "evaluate";
  man.seed = a.seed;
  man.config = snapshot_config(rc);
  if (!a.config_path.empty()) man.add_input("config", a.config_path);
  man.add_input("graph", a.graph_path);
  man.add_input("types", a.types_path);
  if (!a.rules_path.empty()) man.add_input("rules", a.rules_path);
  man.add_input("split", a.split_path);
  man.add_input("checkpoint", a.checkpoint_path);
  man.outputs = {"rankings.tsv", "report.txt", "report.json", "metrics.csv"};
  man.checkpoint = a.checkpoint_path;
  man.write((run_dir / "manifest.json").string());
  std::cout << "run_dir = " << run_dir.string() << "\n";
  return 0;
}

// Open-ended inference for one compound: no mask, no metrics; existing
// head edges are flagged in a `known` column instead of being filtered.
int cmd_rank(const CommonArgs& a) {
  kgr::RunConfig rc = load_run_config(a);
  const kgr::RankingMode mode = kgr::parse_ranking_mode(a.mode);
  if (mode == kgr::RankingMode::pruned && a.rules_path.empty()) {
    throw kgr::ConfigError("pruned mode requires --rules");
  }

  kgr::KnowledgeGraph kg = kgr::load_graph(a.graph_path, a.types_path);
  print_stats(kg, rc.query_relation);
  kg.add_inverse_relations();

  kgr::PolicyNetwork net = kgr::load_checkpoint(a.checkpoint_path, kg.vocab().fingerprint());
  kgr::RuleSet rules = load_rules(kg, a.rules_path);
  if (mode == kgr::RankingMode::pruned && rules.empty()) {
    throw kgr::ConfigError("pruned mode requires a non-empty rule set");
  }
  const kgr::RelationId query_rel = query_relation_id(kg, rc.query_relation);
  check_rules_against(rules, query_rel, rc.trainer.max_path_length);
  const kgr::TypeId target_type = target_type_id(kg, rc.target_type);

  auto source = kg.vocab().entity_id(a.source_entity);
  if (!source) throw kgr::DataError("source entity '" + a.source_entity + "' is not in the graph");

  const kgr::BeamConfig bc{rc.beam_width, rc.trainer.max_path_length};
  auto beams = kgr::beam_search(kg, net, *source, bc);
  kgr::RankedCandidates ranked = kgr::rank_targets(kg, beams, rules, mode, target_type,
                                                   rc.aggregation);

  const fs::path run_dir = make_run_dir(a, "rank");
  std::ofstream tsv(run_dir / "rankings.tsv", std::ios::binary);
  std::size_t pos = 0;
  for (const kgr::RankedCandidate& c : ranked.items) {
    ++pos;
    tsv << a.source_entity << '\t' << pos << '\t' << kg.vocab().entity_name(c.entity) << '\t'
        << kgr::format_double(c.score) << '\t' << kgr::format_instance_path(kg, c.best_path)
        << '\n';
  }
  tsv.close();
  std::cout << "candidates = " << ranked.items.size() << "\n";

  kgr::RunManifest man;
  man.command = "rank";
  man.seed = a.seed;
  man.config = snapshot_config(rc);
  if (!a.config_path.empty()) man.add_input("config", a.config_path);
  man.add_input("graph", a.graph_path);
  man.add_input("types", a.types_path);
  if (!a.rules_path.empty()) man.add_input("rules", a.rules_path);
  man.add_input("checkpoint", a.checkpoint_path);
  man.outputs = {"rankings.tsv"};
  man.checkpoint = a.checkpoint_path;
  man.write((run_dir / "manifest.json").string());
  std::cout << "run_dir = " << run_dir.string() << "\n";
  return 0;
}

int cmd_estimate_confidence(const CommonArgs& a) {
  kgr::KnowledgeGraph kg = kgr::load_graph(a.graph_path, a.types_path);
  print_stats(kg, "treats");
  kg.add_inverse_relations();

  kgr::RuleSet rules = kgr::parse_rules_file(a.rules_path, kg.vocab());
  if (rules.empty()) throw kgr::ConfigError("rule file contains no rules");
  if (a.samples < 1) throw kgr::ConfigError("--samples must be >= 1");

  kgr::RuleSet estimated = rules;
  for (std::size_t i = 0; i < rules.rules.size(); ++i) {
    try {
      estimated.rules[i].score = kgr::estimate_confidence(
          kg, rules.rules[i], static_cast<std::size_t>(a.samples),
          kgr::derive_seed(a.seed, kgr::fnv1a("confidence"), static_cast<std::uint64_t>(i)));
    } catch (const kgr::UnrealizableBody&) {
      throw kgr::UnrealizableBody("rule body has no instance path: " +
                                  kgr::format_metapath(kg.vocab(), rules.rules[i].body));
    }
    std::cout << kgr::format_double(estimated.rules[i].score) << "  "
              << kgr::format_metapath(kg.vocab(), rules.rules[i].body) << "\n";
  }

  const fs::path run_dir = make_run_dir(a, "estimate-confidence");
  std::ofstream os(run_dir / "rules_estimated.txt", std::ios::binary);
  os << kgr::serialize_rules(estimated, kg.vocab());
  os.close();

  kgr::RunManifest man;
  man.command = "estimate-confidence";
  man.seed = a.seed;
  man.config = {{"samples", std::to_string(a.samples)},
                {"seed", std::to_string(a.seed)}};
  man.add_input("graph", a.graph_path);
  man.add_input("types", a.types_path);
  man.add_input("rules", a.rules_path);
  man.outputs = {"rules_estimated.txt"};
  man.write((run_dir / "manifest.json").string());
  std::cout << "run_dir = " << run_dir.string() << "\n";
  return 0;
}

std::map<std::string, std::string> snapshot_synthetic(const kgr::SyntheticGraphConfig& c) {
  std::map<std::string, std::string> m;
  std::string types;
  for (const auto& [name, n] : c.type_counts) {
    if (!types.empty()) types += ' ';
    types += name + ":" + std::to_string(n);
  }
  m["types"] = types;
  std::string rels;
  for (const auto& r : c.relations) {
    if (!rels.empty()) rels += ' ';
    rels += r.name + ":" + r.source_type + ":" + r.target_type + ":" + std::to_string(r.out_degree);
  }
  m["relations"] = rels;
  std::string body = c.body_types[0];
  for (std::size_t i = 0; i < c.body_relations.size(); ++i) {
    body += " -[" + c.body_relations[i] + "]-> " + c.body_types[i + 1];
  }
  m["body"] = body;
  m["head_relation"] = c.head_relation;
  m["generation_probability"] = kgr::format_double(c.generation_probability);
  m["max_path_length"] = std::to_string(c.max_path_length);
  m["seed"] = std::to_string(c.seed);
  return m;
}

int cmd_generate_synthetic(const CommonArgs& a) {
  kgr::SyntheticGraphConfig sc;
  if (a.config_path.empty()) {
    sc = kgr::SyntheticGraphConfig::defaults();
  } else {
    kgr::KeyValueConfig kv = kgr::KeyValueConfig::parse_file(a.config_path);
    sc = kgr::parse_synthetic_config(kv);
  }
  if (a.seed_given) sc.seed = a.seed;

  kgr::SyntheticGraph sg = kgr::generate_synthetic(sc);
  print_stats(sg.kg, sc.head_relation);
  std::cout << "planted_pairs = " << sg.planted_pairs.size() << "\n"
            << "body_paths = " << sg.body_path_count << "\n"
            << "planted_confidence = " << kgr::format_double(sg.planted_rule.score) << "\n";

  const fs::path run_dir = make_run_dir(a, "generate-synthetic");
  const kgr::Vocabulary& vocab = sg.kg.vocab();

  std::ofstream graph_os(run_dir / "graph.tsv", std::ios::binary);
  for (const kgr::Triple& t : sg.kg.triples()) {
    graph_os << vocab.entity_name(t.head) << '\t' << vocab.relation_name(t.rel) << '\t'
             << vocab.entity_name(t.tail) << '\n';
  }
  graph_os.close();

  std::ofstream types_os(run_dir / "types.tsv", std::ios::binary);
  for (kgr::EntityId e = 0; e < static_cast<kgr::EntityId>(sg.kg.entity_count()); ++e) {
    types_os << vocab.entity_name(e) << '\t' << vocab.type_name(sg.kg.entity_type(e)) << '\n';
  }
  types_os.close();

  std::ofstream rules_os(run_dir / "rules.txt", std::ios::binary);
  rules_os << kgr::serialize_rules(kgr::planted_rule_set(sg), vocab);
  rules_os.close();

  std::vector<kgr::Query> pairs;
  pairs.reserve(sg.planted_pairs.size());
  for (const auto& [c, d] : sg.planted_pairs) pairs.push_back(kgr::Query{c, d});
  kgr::QuerySplit split = kgr::make_split(pairs, sc.seed);
  kgr::write_split(split, vocab, (run_dir / "split.tsv").string());

  kgr::RunManifest man;
  man.command = "generate-synthetic";
  man.seed = sc.seed;
  man.config = snapshot_synthetic(sc);
  if (!a.config_path.empty()) man.add_input("config", a.config_path);
  man.outputs = {"graph.tsv", "types.tsv", "rules.txt", "split.tsv"};
  man.write((run_dir / "manifest.json").string());
  std::cout << "run_dir = " << run_dir.string() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Policy-guided knowledge-graph walker: training, ranking, evaluation"};
  app.set_version_flag("--version", std::string(kgr::kVersionTag));
  app.require_subcommand(1);
  CommonArgs a;

  auto add_common = [&](CLI::App* cmd, bool wants_graph) {
    if (wants_graph) {
      cmd->add_option("--graph", a.graph_path, "triples TSV: head<TAB>relation<TAB>tail")
          ->required();
      cmd->add_option("--types", a.types_path, "entity-type TSV: entity<TAB>type")->required();
    }
    cmd->add_option("--out", a.out_root, "output root directory (default: runs)");
    cmd->add_option("--run-name", a.run_name, "fixed run-directory name (default: derived)");
    auto* seed = cmd->add_option("--seed", a.seed, "master seed for all randomness");
    cmd->parse_complete_callback([&, seed] { a.seed_given = seed->count() > 0; });
    cmd->add_option("--threads", a.threads, "worker threads (default: cores)");
  };

  CLI::App* train = app.add_subcommand("train", "train the walk policy with rule-shaped reward");
  add_common(train, true);
  train->add_option("--config", a.config_path, "flat key = value run configuration");
  train->add_option("--rules", a.rules_path, "scored metapath rules (required when lambda > 0)");
  train->add_option("--split", a.split_path, "query split TSV")->required();

  CLI::App* evaluate = app.add_subcommand("evaluate", "beam-search link-prediction metrics");
  add_common(evaluate, true);
  evaluate->add_option("--config", a.config_path, "flat key = value run configuration");
  evaluate->add_option("--rules", a.rules_path, "scored metapath rules (required for pruned mode)");
  evaluate->add_option("--split", a.split_path, "query split TSV")->required();
  evaluate->add_option("--checkpoint", a.checkpoint_path, "trained policy checkpoint")->required();
  evaluate->add_option("--mode", a.mode, "ranking mode: full | pruned");

  CLI::App* rank = app.add_subcommand("rank", "rank candidate targets for one source entity");
  add_common(rank, true);
  rank->add_option("--config", a.config_path, "flat key = value run configuration");
  rank->add_option("--rules", a.rules_path, "scored metapath rules (required for pruned mode)");
  rank->add_option("--checkpoint", a.checkpoint_path, "trained policy checkpoint")->required();
  rank->add_option("--mode", a.mode, "ranking mode: full | pruned");
  rank->add_option("--source", a.source_entity, "source entity name")->required();

  CLI::App* estimate =
      app.add_subcommand("estimate-confidence", "re-estimate rule scores by path sampling");
  add_common(estimate, true);
  estimate->add_option("--rules", a.rules_path, "rule file to re-score")->required();
  estimate->add_option("--samples", a.samples, "accepted body samples per rule (default 10000)");

  CLI::App* generate =
      app.add_subcommand("generate-synthetic", "emit a seeded synthetic graph with a planted rule");
  add_common(generate, false);
  generate->add_option("--config", a.config_path, "generator configuration (defaults when absent)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;  // flag/usage problems are config errors
  }

  try {
    if (train->parsed()) return cmd_train(a);
    if (evaluate->parsed()) return cmd_evaluate(a);
    if (rank->parsed()) return cmd_rank(a);
    if (estimate->parsed()) return cmd_estimate_confidence(a);
    if (generate->parsed()) return cmd_generate_synthetic(a);
  } catch (const kgr::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const kgr::DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 2;
  } catch (const kgr::NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
