#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <limits>

#include "kgr/training.hpp"
#include "helpers.hpp"

using namespace kgr;

namespace {

KnowledgeGraph reward_graph() {
  std::vector<std::array<std::string, 3>> triples = {
      {"Sorafenib", "resembles", "Regorafenib"},
      {"Regorafenib", "resembles", "Sorafenib"},
      {"Regorafenib", "treats", "LiverCancer"},
      {"Sorafenib", "treats", "LiverCancer"},
      {"Sorafenib", "binds", "BRAF"},
      {"BRAF", "expressed_in", "LiverCancer"},
  };
  std::vector<std::array<std::string, 2>> types = {{"Sorafenib", "Compound"},
                                                   {"Regorafenib", "Compound"},
                                                   {"LiverCancer", "Disease"},
                                                   {"BRAF", "Gene"}};
  return KnowledgeGraph::build(triples, types);
}

RuleSet reward_rules(const KnowledgeGraph& kg) {
  return parse_rules(
      {
          "HEAD Compound treats Disease",
          "SCORE=0.446 Compound -[resembles]-> Compound -[treats]-> Disease",
          "SCORE=0.184 Compound -[binds]-> Gene -[expressed_in]-> Disease",
      },
      kg.vocab());
}

KnowledgeGraph playground() {
  std::vector<std::array<std::string, 3>> triples = {
      {"C0", "go", "A"}, {"C0", "go", "B"}, {"C0", "hop", "A"},
      {"A", "go", "B"},  {"B", "hop", "C0"}, {"A", "hop", "C0"},
  };
  std::vector<std::array<std::string, 2>> types = {
      {"C0", "Node"}, {"A", "Node"}, {"B", "Node"}, {"I", "Node"}};
  return KnowledgeGraph::build(triples, types);
}

PolicyConfig tiny_cfg() {
  PolicyConfig cfg;
  cfg.embed_dim = 3;
  cfg.hidden_size = 4;
  cfg.mlp_size = 4;
  cfg.encoder_layers = 2;
  return cfg;
}

// Test-local reward recomputation: drop stay steps, compare the typed
// relation sequence of the walk against each rule body, sum matching scores.
double oracle_reward(const KnowledgeGraph& kg, const Trajectory& t, const RuleSet& rules,
                     double lambda) {
  if (t.entities.back() != t.target) return 0.0;
  std::vector<RelationId> rels;
  std::vector<TypeId> types{kg.entity_type(t.entities[0])};
  for (std::size_t i = 0; i < t.rels.size(); ++i) {
    if (t.rels[i] == kg.stay_relation()) continue;
    rels.push_back(t.rels[i]);
    types.push_back(kg.entity_type(t.entities[i + 1]));
  }
  double bonus = 0.0;
  for (const Rule& r : rules.rules) {
    if (r.body.rels == rels && r.body.types == types) bonus += r.score;
  }
  return 1.0 + lambda * bonus;
}

Trajectory make_traj(const KnowledgeGraph& kg, std::vector<std::string> names,
                     std::vector<std::string> rels, const std::string& target) {
  Trajectory t;
  for (const auto& n : names) t.entities.push_back(kg.vocab().entity_id(n).value());
  for (const auto& r : rels) {
    t.rels.push_back(r == "stay" ? kg.stay_relation() : kg.vocab().relation_id(r).value());
  }
  t.source = t.entities.front();
  t.target = kg.vocab().entity_id(target).value();
  return t;
}

}  // namespace

TEST_CASE("terminal reward composes hit indicator and rule bonus") {
  KnowledgeGraph kg = reward_graph();
  RuleSet rules = reward_rules(kg);

  Trajectory miss = make_traj(kg, {"Sorafenib", "Regorafenib", "Sorafenib"},
                              {"resembles", "resembles"}, "LiverCancer");
  CHECK(compute_reward(miss, rules, 0.0, kg) == 0.0);
  CHECK(compute_reward(miss, rules, 1.0, kg) == 0.0);
  CHECK(compute_reward(miss, rules, 7.5, kg) == 0.0);

  Trajectory ruled = make_traj(kg, {"Sorafenib", "Regorafenib", "LiverCancer"},
                               {"resembles", "treats"}, "LiverCancer");
  CHECK(compute_reward(ruled, rules, 0.0, kg) == 1.0);
  CHECK(compute_reward(ruled, rules, 1.0, kg) == 1.446);
  CHECK(compute_reward(ruled, rules, 2.0, kg) == 1.0 + 2.0 * 0.446);

  Trajectory ruled2 = make_traj(kg, {"Sorafenib", "BRAF", "LiverCancer"},
                                {"binds", "expressed_in"}, "LiverCancer");
  CHECK(compute_reward(ruled2, rules, 1.0, kg) == 1.184);

  // stay padding does not spoil the match
  Trajectory padded = make_traj(kg, {"Sorafenib", "Regorafenib", "Regorafenib", "LiverCancer"},
                                {"resembles", "stay", "treats"}, "LiverCancer");
  CHECK(compute_reward(padded, rules, 1.0, kg) == 1.446);

  // a hit whose metapath matches no rule earns the plain reward
  Trajectory plain = make_traj(kg, {"Sorafenib", "LiverCancer"}, {"treats"}, "LiverCancer");
  CHECK(compute_reward(plain, rules, 1.0, kg) == 1.0);

  // bound: R <= 1 + lambda * max rule score for single-match rule sets
  for (double lambda : {0.0, 0.5, 1.0, 3.0}) {
    for (const Trajectory* t : {&miss, &ruled, &ruled2, &padded, &plain}) {
      CHECK(compute_reward(*t, rules, lambda, kg) <= 1.0 + lambda * 0.446);
    }
  }
}

TEST_CASE("reward agrees exactly with an independent recomputation on sampled walks") {
  KnowledgeGraph kg = reward_graph();
  RuleSet rules = reward_rules(kg);
  PolicyNetwork net = PolicyNetwork::init(tiny_cfg(), kg.entity_count(), kg.relation_count(),
                                          kg.vocab().fingerprint(), 3);
  const EntityId src = kg.vocab().entity_id("Sorafenib").value();
  const EntityId dst = kg.vocab().entity_id("LiverCancer").value();
  for (int i = 0; i < 500; ++i) {
    Rng rng(derive_seed(21, fnv1a("rollout"), 0, static_cast<std::uint64_t>(i)));
    Trajectory t = rollout(kg, net, src, 3, std::nullopt, rng);
    t.target = dst;
    for (double lambda : {0.0, 1.0, 2.5}) {
      CHECK(compute_reward(t, rules, lambda, kg) == oracle_reward(kg, t, rules, lambda));
    }
  }
}

TEST_CASE("zero advantage and zero entropy weight leave the parameters untouched") {
  KnowledgeGraph kg = playground();
  PolicyNetwork net = PolicyNetwork::init(tiny_cfg(), kg.entity_count(), kg.relation_count(),
                                          kg.vocab().fingerprint(), 5);
  const EntityId src = kg.vocab().entity_id("C0").value();
  std::vector<Trajectory> batch;
  for (int i = 0; i < 4; ++i) {
    Rng rng(derive_seed(1, fnv1a("rollout"), 1, static_cast<std::uint64_t>(i)));
    Trajectory t = rollout(kg, net, src, 3, std::nullopt, rng);
    t.target = src;
    t.reward = 0.5;  // identical rewards
    batch.push_back(std::move(t));
  }
  Baseline baseline;
  baseline.value = 0.5;  // advantage = reward - baseline = 0
  AdamState adam = AdamState::init(net);
  TrainerConfig cfg;
  cfg.entropy_beta = 0.0;

  MatrixXd w1_before = net.params().w1;
  MatrixXd emb_before = net.params().entity_embed;
  const double loss = reinforce_update(net, batch, baseline, adam, cfg);
  CHECK(loss == 0.0);
  CHECK(net.params().w1 == w1_before);
  CHECK(net.params().entity_embed == emb_before);
  CHECK(net.version() == 1);
  // the baseline still tracks the batch mean
  CHECK(baseline.value == Catch::Approx(0.95 * 0.5 + 0.05 * 0.5));
}

TEST_CASE("baseline is an exponential moving average of batch mean reward") {
  Baseline b;
  b.decay = 0.9;
  b.observe(1.0);
  CHECK(b.value == Catch::Approx(0.1).epsilon(1e-12));
  b.observe(1.0);
  CHECK(b.value == Catch::Approx(0.19).epsilon(1e-12));
  b.observe(0.0);
  CHECK(b.value == Catch::Approx(0.171).epsilon(1e-12));
}

TEST_CASE("reinforce on a one-step bandit raises the rewarded action's probability") {
  KnowledgeGraph kg = playground();
  PolicyNetwork net = PolicyNetwork::init(tiny_cfg(), kg.entity_count(), kg.relation_count(),
                                          kg.vocab().fingerprint(), 7);
  const EntityId src = kg.vocab().entity_id("C0").value();
  const EntityId tgt = kg.vocab().entity_id("A").value();
  // query relation that never coincides with an existing (src, rel, tgt) edge,
  // so masking removes nothing
  const RelationId hop = kg.vocab().relation_id("hop").value();

  auto prob_reach_tgt = [&](const PolicyNetwork& n) {
    AgentState st = n.encode_history(n.initial_state(src));
    auto dist = n.action_distribution(n.hidden_top(st), kg.available_actions(src, std::nullopt));
    double p = 0.0;
    for (std::size_t j = 0; j < dist.actions.size(); ++j) {
      if (dist.actions[j].target == tgt) p += dist.probs[static_cast<Eigen::Index>(j)];
    }
    return p;
  };
  const double before = prob_reach_tgt(net);

  TrainerConfig cfg;
  cfg.learning_rate = 0.01;
  cfg.rollouts_per_query = 8;
  cfg.batch_queries = 1;
  cfg.total_updates = 50;
  cfg.entropy_beta = 0.0;
  cfg.max_path_length = 1;
  cfg.lambda = 0.0;
  cfg.seed = 13;
  auto log = train(kg, RuleSet{}, {Query{src, tgt}}, hop, cfg, net);
  REQUIRE(log.size() == 50);
  const double after = prob_reach_tgt(net);
  INFO("P(reach target) " << before << " -> " << after);
  CHECK(after > before);
  CHECK(after > 0.75);
  // mean reward equals hit fraction when lambda is zero
  for (const auto& rec : log) {
    CHECK(rec.mean_reward == Catch::Approx(rec.hit_fraction).margin(1e-12));
  }
}

TEST_CASE("analytic gradients match central finite differences on every tensor") {
  KnowledgeGraph kg = playground();
  PolicyNetwork net = PolicyNetwork::init(tiny_cfg(), kg.entity_count(), kg.relation_count(),
                                          kg.vocab().fingerprint(), 11);
  const EntityId c0 = kg.vocab().entity_id("C0").value();
  const EntityId a = kg.vocab().entity_id("A").value();

  std::vector<Trajectory> batch;
  for (int i = 0; i < 8; ++i) {
    Rng rng(derive_seed(4, fnv1a("rollout"), 2, static_cast<std::uint64_t>(i)));
    batch.push_back(rollout(kg, net, i % 2 == 0 ? c0 : a, 3, std::nullopt, rng));
  }
  const std::vector<double> advantages = {1.5, -0.5, 0.8, -1.2, 0.3, 2.0, -0.9, 0.6};

  for (double beta : {0.0, 0.02}) {
    PolicyParams grads = net.zeros_like();
    reinforce_loss(net, batch, advantages, beta, &grads);

    const double eps = 1e-5;
    double worst = 0.0;
    std::string worst_at;
    std::vector<std::pair<std::string, MatrixXd*>> analytic;
    grads.for_each_tensor(
        [&](const std::string& name, MatrixXd& g) { analytic.emplace_back(name, &g); });
    std::size_t ti = 0;
    net.params().for_each_tensor([&](const std::string& name, MatrixXd& theta) {
      const MatrixXd& g = *analytic[ti].second;
      REQUIRE(analytic[ti].first == name);
      for (Eigen::Index r = 0; r < theta.rows(); ++r) {
        for (Eigen::Index cidx = 0; cidx < theta.cols(); ++cidx) {
          const double saved = theta(r, cidx);
          theta(r, cidx) = saved + eps;
          const double up = reinforce_loss(net, batch, advantages, beta);
          theta(r, cidx) = saved - eps;
          const double down = reinforce_loss(net, batch, advantages, beta);
          theta(r, cidx) = saved;
          const double fd = (up - down) / (2.0 * eps);
          const double denom = std::max({std::abs(fd), std::abs(g(r, cidx)), 1e-6});
          const double rel = std::abs(fd - g(r, cidx)) / denom;
          if (rel > worst) {
            worst = rel;
            worst_at = name + "(" + std::to_string(r) + "," + std::to_string(cidx) + ")";
          }
        }
      }
      ++ti;
    });
    INFO("beta=" << beta << " worst relative error " << worst << " at " << worst_at);
    CHECK(worst <= 1e-4);
  }
}

TEST_CASE("updates refuse trajectories sampled under old parameters") {
  KnowledgeGraph kg = playground();
  PolicyNetwork net = PolicyNetwork::init(tiny_cfg(), kg.entity_count(), kg.relation_count(),
                                          kg.vocab().fingerprint(), 19);
  const EntityId src = kg.vocab().entity_id("C0").value();
  Rng rng(2);
  Trajectory t = rollout(kg, net, src, 2, std::nullopt, rng);
  t.target = src;
  net.bump_version();
  Baseline baseline;
  AdamState adam = AdamState::init(net);
  CHECK_THROWS_AS(reinforce_update(net, {t}, baseline, adam, TrainerConfig{}), StaleTrajectory);
}

TEST_CASE("a poisoned parameter surfaces as a numerical error, not garbage output") {
  KnowledgeGraph kg = playground();
  PolicyNetwork net = PolicyNetwork::init(tiny_cfg(), kg.entity_count(), kg.relation_count(),
                                          kg.vocab().fingerprint(), 29);
  const EntityId src = kg.vocab().entity_id("C0").value();
  Rng rng(4);
  Trajectory t = rollout(kg, net, src, 2, std::nullopt, rng);
  t.target = src;
  t.reward = 1.0;
  net.params().w1(0, 0) = std::numeric_limits<double>::quiet_NaN();
  Baseline baseline;
  AdamState adam = AdamState::init(net);
  CHECK_THROWS_AS(reinforce_update(net, {t}, baseline, adam, TrainerConfig{}), NumericalError);
}

TEST_CASE("training twice from the same seed produces identical logs and parameters") {
  KnowledgeGraph kg = playground();
  const EntityId src = kg.vocab().entity_id("C0").value();
  const EntityId tgt = kg.vocab().entity_id("A").value();
  const RelationId hop = kg.vocab().relation_id("hop").value();
  TrainerConfig cfg;
  cfg.rollouts_per_query = 4;
  cfg.batch_queries = 2;
  cfg.total_updates = 12;
  cfg.max_path_length = 2;
  cfg.lambda = 0.0;
  cfg.seed = 31;

  auto run = [&](int threads) {
    PolicyNetwork net = PolicyNetwork::init(tiny_cfg(), kg.entity_count(), kg.relation_count(),
                                            kg.vocab().fingerprint(), 31);
    auto log = train(kg, RuleSet{}, {Query{src, tgt}, Query{tgt, src}}, hop, cfg, net, threads);
    return std::pair{log, net.params().entity_embed};
  };
  auto [log1, emb1] = run(1);
  auto [log2, emb2] = run(1);
  auto [log4, emb4] = run(4);

  REQUIRE(log1.size() == log2.size());
  for (std::size_t i = 0; i < log1.size(); ++i) {
    CHECK(log1[i].step == log2[i].step);
    CHECK(log1[i].mean_reward == log2[i].mean_reward);
    CHECK(log1[i].hit_fraction == log2[i].hit_fraction);
    CHECK(log1[i].rule_match_fraction == log2[i].rule_match_fraction);
    CHECK(log1[i].loss == log2[i].loss);
    // results must not depend on the worker count either
    CHECK(log1[i].loss == log4[i].loss);
    CHECK(log1[i].mean_reward == log4[i].mean_reward);
  }
  CHECK(emb1 == emb2);
  CHECK(emb1 == emb4);
}

TEST_CASE("trainer rejects impossible configurations") {
  KnowledgeGraph kg = playground();
  PolicyNetwork net = PolicyNetwork::init(tiny_cfg(), kg.entity_count(), kg.relation_count(),
                                          kg.vocab().fingerprint(), 37);
  const RelationId hop = kg.vocab().relation_id("hop").value();
  TrainerConfig cfg;
  cfg.total_updates = 1;
  CHECK_THROWS_AS(train(kg, RuleSet{}, {}, hop, cfg, net), EmptyQuerySet);

  TrainerConfig bad = cfg;
  bad.learning_rate = 0.0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = cfg;
  bad.baseline_decay = 1.0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = cfg;
  bad.entropy_beta = -0.1;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = cfg;
  bad.lambda = -1.0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);

  // rule body longer than the walk budget can never fire
  KnowledgeGraph rg = reward_graph();
  PolicyNetwork rnet = PolicyNetwork::init(tiny_cfg(), rg.entity_count(), rg.relation_count(),
                                           rg.vocab().fingerprint(), 41);
  RuleSet rules = reward_rules(rg);
  TrainerConfig short_cfg;
  short_cfg.max_path_length = 1;
  short_cfg.total_updates = 1;
  const EntityId s = rg.vocab().entity_id("Sorafenib").value();
  const EntityId d = rg.vocab().entity_id("LiverCancer").value();
  const RelationId treats = rg.vocab().relation_id("treats").value();
  CHECK_THROWS_AS(train(rg, rules, {Query{s, d}}, treats, short_cfg, rnet), ConfigError);
}

TEST_CASE("a run without rule shaping still logs the rule-match column") {
  KnowledgeGraph kg = reward_graph();
  PolicyNetwork net = PolicyNetwork::init(tiny_cfg(), kg.entity_count(), kg.relation_count(),
                                          kg.vocab().fingerprint(), 43);
  const EntityId s = kg.vocab().entity_id("Sorafenib").value();
  const EntityId d = kg.vocab().entity_id("LiverCancer").value();
  const RelationId treats = kg.vocab().relation_id("treats").value();
  TrainerConfig cfg;
  cfg.lambda = 0.0;
  cfg.total_updates = 5;
  cfg.rollouts_per_query = 4;
  cfg.batch_queries = 1;
  cfg.seed = 3;
  int callbacks = 0;
  auto log = train(kg, reward_rules(kg), {Query{s, d}}, treats, cfg, net, 1,
                   [&](const TrainLogRecord& r) {
                     ++callbacks;
                     CHECK(r.rule_match_fraction >= 0.0);
                     CHECK(r.rule_match_fraction <= 1.0);
                     CHECK(r.wall_time_ms >= 0.0);
                   });
  CHECK(callbacks == 5);
  CHECK(log.size() == 5);
}
