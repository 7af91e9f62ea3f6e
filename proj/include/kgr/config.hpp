#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "kgr/eval.hpp"
#include "kgr/io.hpp"
#include "kgr/policy.hpp"
#include "kgr/training.hpp"

namespace kgr {

// Flat `key = value` document; '#' starts a comment. Every key has a
// default, unknown keys are a hard error.
class KeyValueConfig {
 public:
  static KeyValueConfig parse_lines(const std::vector<std::string>& lines,
                                    const std::string& source = "<config>") {
    KeyValueConfig cfg;
    cfg.source_ = source;
    std::size_t lineno = 0;
    for (const std::string& raw : lines) {
      ++lineno;
      std::string_view line = trim(raw);
      if (auto hash = line.find('#'); hash != std::string_view::npos) {
        line = trim(line.substr(0, hash));
      }
      if (line.empty()) continue;
      const auto eq = line.find('=');
      if (eq == std::string_view::npos) {
        throw ConfigError(source + ":" + std::to_string(lineno) + ": expected 'key = value'");
      }
      const std::string key(trim(line.substr(0, eq)));
      const std::string value(trim(line.substr(eq + 1)));
      if (key.empty() || value.empty()) {
        throw ConfigError(source + ":" + std::to_string(lineno) + ": empty key or value");
      }
      if (cfg.values_.count(key)) {
        throw ConfigError(source + ":" + std::to_string(lineno) + ": duplicate key '" + key + "'");
      }
      cfg.values_[key] = value;
    }
    return cfg;
  }

  static KeyValueConfig parse_file(const std::string& path) {
    return parse_lines(read_lines(path), path);
  }

  double get_double(const std::string& key, double dflt) {
    auto it = values_.find(key);
    if (it == values_.end()) return dflt;
    consumed_.insert(key);
    return parse_double(it->second, source_ + " key '" + key + "'");
  }

  long get_long(const std::string& key, long dflt) {
    auto it = values_.find(key);
    if (it == values_.end()) return dflt;
    consumed_.insert(key);
    return parse_long(it->second, source_ + " key '" + key + "'");
  }

  std::string get_string(const std::string& key, const std::string& dflt) {
    auto it = values_.find(key);
    if (it == values_.end()) return dflt;
    consumed_.insert(key);
    return it->second;
  }

  // Call after all known keys have been read.
  void reject_unknown_keys() const {
    for (const auto& [key, value] : values_) {
      if (!consumed_.count(key)) {
        throw ConfigError(source_ + ": unknown key '" + key + "'");
      }
    }
  }

  const std::map<std::string, std::string>& raw() const { return values_; }

 private:
  std::string source_;
  std::map<std::string, std::string> values_;
  std::set<std::string> consumed_;
};

// Everything a training or evaluation run needs from one config file.
struct RunConfig {
  PolicyConfig policy;
  TrainerConfig trainer;
  int beam_width = 100;
  Aggregation aggregation = Aggregation::max;
  std::string query_relation = "treats";
  std::string target_type = "Disease";

  static RunConfig defaults() { return RunConfig{}; }

  static RunConfig from_file(const std::string& path) {
    KeyValueConfig kv = KeyValueConfig::parse_file(path);
    return from_kv(kv);
  }

  static RunConfig from_kv(KeyValueConfig& kv) {
    RunConfig rc;
    rc.policy.embed_dim = static_cast<int>(kv.get_long("embed_dim", rc.policy.embed_dim));
    rc.policy.hidden_size = static_cast<int>(kv.get_long("hidden_size", rc.policy.hidden_size));
    rc.policy.mlp_size = static_cast<int>(kv.get_long("mlp_size", rc.policy.mlp_size));
    rc.policy.encoder_layers =
        static_cast<int>(kv.get_long("encoder_layers", rc.policy.encoder_layers));
    rc.trainer.learning_rate = kv.get_double("learning_rate", rc.trainer.learning_rate);
    rc.trainer.rollouts_per_query =
        static_cast<int>(kv.get_long("rollouts_per_query", rc.trainer.rollouts_per_query));
    rc.trainer.batch_queries =
        static_cast<int>(kv.get_long("batch_queries", rc.trainer.batch_queries));
    rc.trainer.total_updates =
        static_cast<int>(kv.get_long("total_updates", rc.trainer.total_updates));
    rc.trainer.entropy_beta = kv.get_double("entropy_beta", rc.trainer.entropy_beta);
    rc.trainer.baseline_decay = kv.get_double("baseline_decay", rc.trainer.baseline_decay);
    rc.trainer.max_path_length =
        static_cast<int>(kv.get_long("max_path_length", rc.trainer.max_path_length));
    rc.trainer.lambda = kv.get_double("lambda", rc.trainer.lambda);
    rc.trainer.seed = static_cast<std::uint64_t>(kv.get_long("seed", 0));
    rc.beam_width = static_cast<int>(kv.get_long("beam_width", rc.beam_width));
    rc.aggregation = parse_aggregation(kv.get_string("aggregate", to_string(rc.aggregation)));
    rc.query_relation = kv.get_string("query_relation", rc.query_relation);
    rc.target_type = kv.get_string("target_type", rc.target_type);
    kv.reject_unknown_keys();
    rc.policy.validate();
    rc.trainer.validate();
    return rc;
  }
};

}  // namespace kgr
