#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "kgr/parallel.hpp"
#include "kgr/policy.hpp"
#include "kgr/rules.hpp"

namespace kgr {

// Terminal reward: 0 unless the walk ends at the query disease, otherwise
// 1 + lambda * sum of the scores of every rule whose body equals the walk's
// metapath. With pairwise-distinct bodies at most one term is nonzero;
// lambda = 0 reduces to the plain reach-the-target reward.
inline double compute_reward(const Trajectory& traj, const RuleSet& rules, double lambda,
                             const KnowledgeGraph& kg) {
  if (traj.entities.back() != traj.target) return 0.0;
  double bonus = 0.0;
  const Metapath projected = metapath_of(kg, to_instance_path(traj));
  for (const Rule& r : rules.rules) {
    if (projected == r.body) bonus += r.score;
  }
  return 1.0 + lambda * bonus;
}

struct TrainerConfig {
  double learning_rate = 1e-3;
  int rollouts_per_query = 40;
  int batch_queries = 8;
  int total_updates = 1000;
  double entropy_beta = 0.02;
  double baseline_decay = 0.95;
  int max_path_length = 3;  // T
  double lambda = 1.0;
  std::uint64_t seed = 0;

  void validate() const {
    if (learning_rate <= 0) throw ConfigError("learning_rate must be positive");
    if (rollouts_per_query < 1) throw ConfigError("rollouts_per_query must be >= 1");
    if (batch_queries < 1) throw ConfigError("batch_queries must be >= 1");
    if (total_updates < 0) throw ConfigError("total_updates must be >= 0");
    if (entropy_beta < 0) throw ConfigError("entropy_beta must be >= 0");
    if (baseline_decay < 0 || baseline_decay >= 1) {
      throw ConfigError("baseline_decay must lie in [0, 1)");
    }
    if (max_path_length < 1) throw ConfigError("max_path_length must be >= 1");
    if (lambda < 0) throw ConfigError("lambda must be >= 0");
  }
};

// Exponential moving average of batch mean reward; variance reduction only,
// the gradient stays unbiased.
struct Baseline {
  double value = 0.0;
  double decay = 0.95;

  void observe(double batch_mean_reward) {
    value = decay * value + (1.0 - decay) * batch_mean_reward;
  }
};

struct AdamState {
  PolicyParams m, v;
  long step = 0;
  double beta1 = 0.9, beta2 = 0.999, epsilon = 1e-8;

  static AdamState init(const PolicyNetwork& net) {
    AdamState s;
    s.m = net.zeros_like();
    s.v = net.zeros_like();
    return s;
  }
};

// REINFORCE loss over a fixed batch:
//   (1/N) sum_i [ -advantage_i * sum_t log pi(A_t) - beta * sum_t H(d_t) ]
// Evaluated by replaying each trajectory under the current parameters, so
// finite differences of this function check the analytic gradients below.
inline double reinforce_loss(const PolicyNetwork& net, const std::vector<Trajectory>& batch,
                             const std::vector<double>& advantages, double beta,
                             PolicyParams* grads = nullptr) {
  if (batch.empty()) throw LogicError("empty trajectory batch");
  const double inv_n = 1.0 / static_cast<double>(batch.size());
  double loss = 0.0;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const Trajectory& traj = batch[i];
    const double adv = advantages[i];
    const std::vector<StepCache> caches = net.replay(traj);
    double logp_sum = 0.0, entropy_sum = 0.0;
    for (std::size_t t = 0; t < traj.length(); ++t) {
      logp_sum += caches[t].log_probs[traj.chosen[t]];
      entropy_sum += caches[t].entropy;
    }
    loss += inv_n * (-adv * logp_sum - beta * entropy_sum);
    if (grads) {
      std::vector<VectorXd> dlogits(traj.length());
      for (std::size_t t = 0; t < traj.length(); ++t) {
        const VectorXd& p = caches[t].probs;
        const VectorXd& lp = caches[t].log_probs;
        VectorXd dz = (adv * inv_n) * p;
        dz[traj.chosen[t]] -= adv * inv_n;
        if (beta != 0.0) {
          dz += (beta * inv_n) *
                p.cwiseProduct((lp.array() + caches[t].entropy).matrix());
        }
        dlogits[t] = std::move(dz);
      }
      net.backward(traj, caches, dlogits, *grads);
    }
  }
  return loss;
}

// One gradient step on the Monte-Carlo REINFORCE objective. Trajectories must
// have been rolled out under the network's current parameter version.
inline double reinforce_update(PolicyNetwork& net, const std::vector<Trajectory>& batch,
                               Baseline& baseline, AdamState& adam, const TrainerConfig& cfg) {
  for (const Trajectory& t : batch) {
    if (t.param_version != net.version()) {
      throw StaleTrajectory("trajectory was sampled under parameter version " +
                            std::to_string(t.param_version) + ", network is at " +
                            std::to_string(net.version()));
    }
  }
  std::vector<double> advantages(batch.size());
  double mean_reward = 0.0;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    advantages[i] = batch[i].reward - baseline.value;
    mean_reward += batch[i].reward;
  }
  mean_reward /= static_cast<double>(batch.size());

  PolicyParams grads = net.zeros_like();
  const double loss = reinforce_loss(net, batch, advantages, cfg.entropy_beta, &grads);
  if (!grads.all_finite() || !std::isfinite(loss)) {
    throw NumericalError("non-finite gradient in update");
  }

  adam.step += 1;
  const double bc1 = 1.0 - std::pow(adam.beta1, static_cast<double>(adam.step));
  const double bc2 = 1.0 - std::pow(adam.beta2, static_cast<double>(adam.step));
  PolicyParams& p = net.params();
  auto step_tensor = [&](MatrixXd& theta, MatrixXd& m, MatrixXd& v, const MatrixXd& g) {
    m = adam.beta1 * m + (1.0 - adam.beta1) * g;
    v = adam.beta2 * v + (1.0 - adam.beta2) * g.cwiseProduct(g);
    theta.array() -= cfg.learning_rate * (m.array() / bc1) /
                     ((v.array() / bc2).sqrt() + adam.epsilon);
  };
  step_tensor(p.entity_embed, adam.m.entity_embed, adam.v.entity_embed, grads.entity_embed);
  step_tensor(p.relation_embed, adam.m.relation_embed, adam.v.relation_embed,
              grads.relation_embed);
  for (std::size_t l = 0; l < p.layers.size(); ++l) {
    step_tensor(p.layers[l].w_x, adam.m.layers[l].w_x, adam.v.layers[l].w_x, grads.layers[l].w_x);
    step_tensor(p.layers[l].w_h, adam.m.layers[l].w_h, adam.v.layers[l].w_h, grads.layers[l].w_h);
    step_tensor(p.layers[l].b, adam.m.layers[l].b, adam.v.layers[l].b, grads.layers[l].b);
  }
  step_tensor(p.w1, adam.m.w1, adam.v.w1, grads.w1);
  step_tensor(p.w2, adam.m.w2, adam.v.w2, grads.w2);
  if (!p.all_finite()) throw NumericalError("non-finite parameter after update");

  baseline.observe(mean_reward);
  net.bump_version();
  return loss;
}

struct TrainLogRecord {
  int step = 0;
  double mean_reward = 0.0;
  double hit_fraction = 0.0;
  double rule_match_fraction = 0.0;  // among rollouts that reached the target
  double loss = 0.0;
  double wall_time_ms = 0.0;
};

struct Query {
  EntityId source;  // compound
  EntityId target;  // disease
};

// Full REINFORCE training: per update, sample a query batch uniformly, roll
// out `rollouts_per_query` masked walks per query, assign rewards, and step.
// Rollouts get per-trajectory derived seeds so results do not depend on the
// thread count.
inline std::vector<TrainLogRecord> train(
    const KnowledgeGraph& kg, const RuleSet& rules, const std::vector<Query>& train_queries,
    RelationId query_relation, TrainerConfig cfg, PolicyNetwork& net, int threads = 1,
    const std::function<void(const TrainLogRecord&)>& on_record = nullptr) {
  cfg.validate();
  if (train_queries.empty()) throw EmptyQuerySet("no training queries");
  if (!rules.empty() && rules.max_body_length() > static_cast<std::size_t>(cfg.max_path_length)) {
    throw ConfigError("max_path_length shorter than the longest rule body");
  }
  Rng sampler(derive_seed(cfg.seed, fnv1a("query-sampling")));
  std::vector<TrainLogRecord> log;
  log.reserve(static_cast<std::size_t>(cfg.total_updates));
  const auto t0 = std::chrono::steady_clock::now();
  Baseline baseline;
  baseline.decay = cfg.baseline_decay;
  AdamState adam = AdamState::init(net);

  const std::size_t batch_size =
      static_cast<std::size_t>(cfg.batch_queries) * static_cast<std::size_t>(cfg.rollouts_per_query);
  for (int step = 1; step <= cfg.total_updates; ++step) {
    std::vector<Query> queries(static_cast<std::size_t>(cfg.batch_queries));
    for (auto& q : queries) q = train_queries[sampler.uniform_index(train_queries.size())];

    std::vector<Trajectory> batch(batch_size);
    parallel_for(batch_size, threads, [&](std::size_t idx) {
      const Query& q = queries[idx / static_cast<std::size_t>(cfg.rollouts_per_query)];
      Rng rng(derive_seed(cfg.seed, fnv1a("rollout"), static_cast<std::uint64_t>(step), idx));
      const Triple mask{q.source, query_relation, q.target};
      batch[idx] = rollout(kg, net, q.source, cfg.max_path_length, mask, rng);
      batch[idx].target = q.target;
      batch[idx].reward = compute_reward(batch[idx], rules, cfg.lambda, kg);
    });

    TrainLogRecord rec;
    rec.step = step;
    std::size_t hits = 0, rule_hits = 0;
    for (const Trajectory& t : batch) {
      rec.mean_reward += t.reward;
      if (t.entities.back() == t.target) {
        ++hits;
        const Metapath projected = metapath_of(kg, to_instance_path(t));
        for (const Rule& r : rules.rules) {
          if (projected == r.body) {
            ++rule_hits;
            break;
          }
        }
      }
    }
    rec.mean_reward /= static_cast<double>(batch.size());
    rec.hit_fraction = static_cast<double>(hits) / static_cast<double>(batch.size());
    rec.rule_match_fraction = hits == 0 ? 0.0 : static_cast<double>(rule_hits) / static_cast<double>(hits);
    rec.loss = reinforce_update(net, batch, baseline, adam, cfg);
    rec.wall_time_ms = std::chrono::duration<double, std::milli>(
                           std::chrono::steady_clock::now() - t0)
                           .count();
    if (on_record) on_record(rec);
    log.push_back(rec);
  }
  return log;
}

}  // namespace kgr
