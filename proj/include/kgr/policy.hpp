#pragma once

#include <Eigen/Core>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "kgr/graph.hpp"
#include "kgr/rng.hpp"
#include "kgr/rules.hpp"

namespace kgr {

using Eigen::MatrixXd;
using Eigen::VectorXd;

struct PolicyConfig {
  int embed_dim = 64;      // d: entity and relation embedding width
  int hidden_size = 128;   // h: recurrent hidden width
  int mlp_size = 128;      // width of the projection between the encoder and action scores
  int encoder_layers = 2;  // stacked recurrent layers

  void validate() const {
    if (embed_dim <= 0 || hidden_size <= 0 || mlp_size <= 0 || encoder_layers <= 0) {
      throw InvalidDimension("policy dimensions must be positive");
    }
  }
};

// Gate rows are stacked [input; forget; cell; output], each hidden_size tall.
struct LstmLayer {
  MatrixXd w_x;  // 4h x in
  MatrixXd w_h;  // 4h x h
  MatrixXd b;    // 4h x 1
};

struct PolicyParams {
  MatrixXd entity_embed;    // |E| x d
  MatrixXd relation_embed;  // (|R|+1) x d; last row is STAY
  std::vector<LstmLayer> layers;
  MatrixXd w1;  // mlp x h
  MatrixXd w2;  // 2d x mlp

  template <typename F>
  void for_each_tensor(F&& f) {
    f("entity_embed", entity_embed);
    f("relation_embed", relation_embed);
    for (std::size_t l = 0; l < layers.size(); ++l) {
      const std::string p = "lstm" + std::to_string(l);
      f(p + ".w_x", layers[l].w_x);
      f(p + ".w_h", layers[l].w_h);
      f(p + ".b", layers[l].b);
    }
    f("w1", w1);
    f("w2", w2);
  }

  template <typename F>
  void for_each_tensor(F&& f) const {
    const_cast<PolicyParams*>(this)->for_each_tensor(
        [&](const std::string& name, MatrixXd& m) { f(name, std::as_const(m)); });
  }

  void set_zero() {
    for_each_tensor([](const std::string&, MatrixXd& m) { m.setZero(); });
  }

  bool all_finite() const {
    bool ok = true;
    for_each_tensor([&](const std::string&, const MatrixXd& m) { ok = ok && m.allFinite(); });
    return ok;
  }
};

// Recurrent state, one (h, c) pair per layer.
struct LstmState {
  std::vector<VectorXd> h, c;
};

// Per-rollout observable state. The query target is deliberately absent: the
// policy only ever sees (current entity, source entity) plus its own history.
struct AgentState {
  EntityId current = -1;
  EntityId source = -1;
  int step = 0;                       // transitions taken so far
  std::optional<Action> last_action;  // empty before the first transition
  LstmState lstm;
  bool encoded = false;  // true once the hidden state covers this step
};

struct ActionDistribution {
  std::vector<Action> actions;
  VectorXd probs;
  VectorXd log_probs;
};

// One sampled T-step walk plus everything needed to replay it exactly:
// the admissible action set and chosen index at every step.
struct Trajectory {
  EntityId source = -1;
  EntityId target = -1;  // e_d; used only by the reward, never by the policy
  std::vector<EntityId> entities;              // T+1
  std::vector<RelationId> rels;                // T
  std::vector<double> log_probs;               // T
  std::vector<std::vector<Action>> action_sets;  // T
  std::vector<int> chosen;                     // T
  std::optional<Triple> mask;
  double reward = 0.0;
  std::uint64_t param_version = 0;

  std::size_t length() const { return rels.size(); }
};

inline InstancePath to_instance_path(const Trajectory& t) {
  return InstancePath{t.entities, t.rels};
}

inline AgentState apply_action(const AgentState& s, const Action& a);

// Forward activations for one step, kept for backpropagation through time.
struct StepCache {
  struct LayerCache {
    VectorXd x, h_prev, c_prev;
    VectorXd i, f, g, o, c, h, tanh_c;
  };
  std::vector<LayerCache> layers;
  VectorXd pre_mlp;  // w1 * h_top, before the rectifier
  VectorXd mlp;      // rectified
  VectorXd proj;     // w2 * mlp, width 2d
  VectorXd probs, log_probs;
  double entropy = 0.0;
};

class PolicyNetwork {
 public:
  static PolicyNetwork init(const PolicyConfig& cfg, std::size_t entity_count,
                            std::size_t relation_count, std::uint64_t vocab_fingerprint,
                            std::uint64_t seed) {
    cfg.validate();
    if (entity_count == 0 || relation_count == 0) {
      throw InvalidDimension("policy requires a non-empty vocabulary");
    }
    PolicyNetwork net;
    net.cfg_ = cfg;
    net.entity_count_ = entity_count;
    net.relation_count_ = relation_count;
    net.vocab_fingerprint_ = vocab_fingerprint;
    const int d = cfg.embed_dim, h = cfg.hidden_size, m = cfg.mlp_size;
    Rng rng(seed);
    net.params_.entity_embed = MatrixXd(entity_count, d);
    net.params_.relation_embed = MatrixXd(relation_count + 1, d);  // + STAY
    fill_uniform(net.params_.entity_embed, 1.0 / std::sqrt(d), rng);
    fill_uniform(net.params_.relation_embed, 1.0 / std::sqrt(d), rng);
    int in = 3 * d;  // [prev relation; current entity; source entity]
    for (int l = 0; l < cfg.encoder_layers; ++l) {
      LstmLayer layer;
      layer.w_x = MatrixXd(4 * h, in);
      layer.w_h = MatrixXd(4 * h, h);
      layer.b = MatrixXd::Zero(4 * h, 1);
      fill_uniform(layer.w_x, 1.0 / std::sqrt(in), rng);
      fill_uniform(layer.w_h, 1.0 / std::sqrt(h), rng);
      layer.b.block(h, 0, h, 1).setOnes();  // forget gate bias
      net.params_.layers.push_back(std::move(layer));
      in = h;
    }
    net.params_.w1 = MatrixXd(m, h);
    net.params_.w2 = MatrixXd(2 * d, m);
    fill_uniform(net.params_.w1, 1.0 / std::sqrt(h), rng);
    fill_uniform(net.params_.w2, 1.0 / std::sqrt(m), rng);
    return net;
  }

  const PolicyConfig& config() const { return cfg_; }
  std::size_t entity_count() const { return entity_count_; }
  std::size_t relation_count() const { return relation_count_; }
  std::uint64_t vocab_fingerprint() const { return vocab_fingerprint_; }
  std::uint64_t version() const { return version_; }
  void bump_version() { ++version_; }

  PolicyParams& params() { return params_; }
  const PolicyParams& params() const { return params_; }

  PolicyParams zeros_like() const {
    PolicyParams z;
    z.entity_embed = MatrixXd::Zero(params_.entity_embed.rows(), params_.entity_embed.cols());
    z.relation_embed =
        MatrixXd::Zero(params_.relation_embed.rows(), params_.relation_embed.cols());
    for (const LstmLayer& l : params_.layers) {
      z.layers.push_back(LstmLayer{MatrixXd::Zero(l.w_x.rows(), l.w_x.cols()),
                                   MatrixXd::Zero(l.w_h.rows(), l.w_h.cols()),
                                   MatrixXd::Zero(l.b.rows(), 1)});
    }
    z.w1 = MatrixXd::Zero(params_.w1.rows(), params_.w1.cols());
    z.w2 = MatrixXd::Zero(params_.w2.rows(), params_.w2.cols());
    return z;
  }

  AgentState initial_state(EntityId source) const {
    AgentState s;
    s.current = source;
    s.source = source;
    s.step = 0;
    s.lstm.h.assign(params_.layers.size(), VectorXd::Zero(cfg_.hidden_size));
    s.lstm.c.assign(params_.layers.size(), VectorXd::Zero(cfg_.hidden_size));
    return s;
  }

  // Advances the recurrent encoder by one step. The input is the previous
  // action embedding [r_{t-1}; e_t] (the 2d zero vector before the first
  // transition) concatenated with the source compound embedding. Pure:
  // identical (params, state) always yield the identical successor.
  AgentState encode_history(const AgentState& state, StepCache* cache = nullptr) const {
    check_dims(state);
    AgentState next = state;
    const VectorXd x = build_input(state);
    VectorXd layer_in = x;
    for (std::size_t l = 0; l < params_.layers.size(); ++l) {
      StepCache::LayerCache* lc = nullptr;
      if (cache) {
        cache->layers.emplace_back();
        lc = &cache->layers.back();
      }
      lstm_cell(params_.layers[l], layer_in, state.lstm.h[l], state.lstm.c[l], next.lstm.h[l],
                next.lstm.c[l], lc);
      layer_in = next.lstm.h[l];
    }
    next.encoded = true;
    return next;
  }

  const VectorXd& hidden_top(const AgentState& s) const {
    if (!s.encoded) throw LogicError("agent state has no encoded hidden state yet");
    return s.lstm.h.back();
  }

  // d_t = softmax(A_t (w2 relu(w1 h_t))) with max-subtraction stabilization.
  ActionDistribution action_distribution(const VectorXd& h_top,
                                         std::vector<Action> actions,
                                         StepCache* cache = nullptr) const {
    if (actions.empty()) throw EmptyActionSet("no admissible actions");
    if (h_top.size() != cfg_.hidden_size) {
      throw DimensionMismatch("hidden state width does not match the encoder");
    }
    const int d = cfg_.embed_dim;
    VectorXd pre = params_.w1 * h_top;
    VectorXd act = pre.cwiseMax(0.0);
    VectorXd proj = params_.w2 * act;  // 2d
    const auto n = static_cast<Eigen::Index>(actions.size());
    VectorXd logits(n);
    for (Eigen::Index j = 0; j < n; ++j) {
      const Action& a = actions[static_cast<std::size_t>(j)];
      logits[j] = params_.relation_embed.row(a.rel).dot(proj.head(d)) +
                  params_.entity_embed.row(a.target).dot(proj.tail(d));
    }
    const double mx = logits.maxCoeff();
    VectorXd shifted = logits.array() - mx;
    const double lse = std::log(shifted.array().exp().sum());
    ActionDistribution dist;
    dist.log_probs = shifted.array() - lse;
    dist.probs = dist.log_probs.array().exp();
    dist.actions = std::move(actions);
    if (cache) {
      cache->pre_mlp = std::move(pre);
      cache->mlp = std::move(act);
      cache->proj = std::move(proj);
      cache->probs = dist.probs;
      cache->log_probs = dist.log_probs;
      cache->entropy = entropy_of(dist.probs, dist.log_probs);
    }
    return dist;
  }

  // Replays a recorded trajectory under the current parameters and returns
  // the per-step activations. Shared by the loss, its gradients, and the
  // finite-difference tests, so all of them differentiate the same function.
  std::vector<StepCache> replay(const Trajectory& traj) const {
    std::vector<StepCache> caches(traj.length());
    AgentState st = initial_state(traj.source);
    for (std::size_t t = 0; t < traj.length(); ++t) {
      st = encode_history(st, &caches[t]);
      action_distribution(hidden_top(st), traj.action_sets[t], &caches[t]);
      st = apply_action(st, traj.action_sets[t][static_cast<std::size_t>(traj.chosen[t])]);
    }
    return caches;
  }

  // Accumulates parameter gradients for one trajectory, given dL/dlogits at
  // every step. Reverse-mode over the unrolled computation graph.
  void backward(const Trajectory& traj, const std::vector<StepCache>& caches,
                const std::vector<VectorXd>& dlogits, PolicyParams& grad) const {
    const int d = cfg_.embed_dim;
    const int h = cfg_.hidden_size;
    const std::size_t layers = params_.layers.size();
    const std::size_t steps = traj.length();
    std::vector<VectorXd> dh_carry(layers, VectorXd::Zero(h));
    std::vector<VectorXd> dc_carry(layers, VectorXd::Zero(h));
    for (std::size_t t = steps; t-- > 0;) {
      const StepCache& sc = caches[t];
      const auto& actions = traj.action_sets[t];
      const VectorXd& dz = dlogits[t];
      // logits -> action matrix rows and the shared projection vector
      VectorXd dproj = VectorXd::Zero(2 * d);
      for (std::size_t j = 0; j < actions.size(); ++j) {
        const double g = dz[static_cast<Eigen::Index>(j)];
        if (g == 0.0) continue;
        const Action& a = actions[j];
        dproj.head(d) += g * params_.relation_embed.row(a.rel).transpose();
        dproj.tail(d) += g * params_.entity_embed.row(a.target).transpose();
        grad.relation_embed.row(a.rel) += g * sc.proj.head(d).transpose();
        grad.entity_embed.row(a.target) += g * sc.proj.tail(d).transpose();
      }
      // projection -> rectifier -> hidden
      grad.w2 += dproj * sc.mlp.transpose();
      VectorXd dmlp = params_.w2.transpose() * dproj;
      VectorXd dpre =
          dmlp.cwiseProduct((sc.pre_mlp.array() > 0.0).cast<double>().matrix());
      grad.w1 += dpre * sc.layers.back().h.transpose();
      VectorXd dh_top = params_.w1.transpose() * dpre;
      // recurrent layers, top down
      VectorXd dx_above;
      for (std::size_t l = layers; l-- > 0;) {
        const StepCache::LayerCache& lc = sc.layers[l];
        VectorXd dh = dh_carry[l];
        dh += (l == layers - 1) ? dh_top : dx_above;
        VectorXd dc = dc_carry[l];
        VectorXd do_ = dh.cwiseProduct(lc.tanh_c);
        dc += dh.cwiseProduct(lc.o)
                  .cwiseProduct((1.0 - lc.tanh_c.array().square()).matrix());
        VectorXd di = dc.cwiseProduct(lc.g);
        VectorXd dg = dc.cwiseProduct(lc.i);
        VectorXd df = dc.cwiseProduct(lc.c_prev);
        dc_carry[l] = dc.cwiseProduct(lc.f);
        VectorXd dgates(4 * h);
        dgates.segment(0, h) = di.cwiseProduct(lc.i).cwiseProduct((1.0 - lc.i.array()).matrix());
        dgates.segment(h, h) = df.cwiseProduct(lc.f).cwiseProduct((1.0 - lc.f.array()).matrix());
        dgates.segment(2 * h, h) = dg.cwiseProduct((1.0 - lc.g.array().square()).matrix());
        dgates.segment(3 * h, h) =
            do_.cwiseProduct(lc.o).cwiseProduct((1.0 - lc.o.array()).matrix());
        grad.layers[l].w_x += dgates * lc.x.transpose();
        grad.layers[l].w_h += dgates * lc.h_prev.transpose();
        grad.layers[l].b += dgates;
        dh_carry[l] = params_.layers[l].w_h.transpose() * dgates;
        dx_above = params_.layers[l].w_x.transpose() * dgates;
      }
      // dx_above is now the gradient w.r.t. the step input [a_{t-1}; e_c]
      if (t > 0) {
        grad.relation_embed.row(traj.rels[t - 1]) += dx_above.head(d).transpose();
        grad.entity_embed.row(traj.entities[t]) += dx_above.segment(d, d).transpose();
      }
      grad.entity_embed.row(traj.source) += dx_above.tail(d).transpose();
    }
  }

  static double entropy_of(const VectorXd& probs, const VectorXd& log_probs) {
    return -probs.dot(log_probs);
  }

 private:
  static void fill_uniform(MatrixXd& m, double limit, Rng& rng) {
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      for (Eigen::Index c = 0; c < m.cols(); ++c) {
        m(r, c) = rng.uniform(-limit, limit);
      }
    }
  }

  void check_dims(const AgentState& s) const {
    if (s.lstm.h.size() != params_.layers.size() ||
        (!s.lstm.h.empty() && s.lstm.h[0].size() != cfg_.hidden_size)) {
      throw DimensionMismatch("agent state does not match the encoder configuration");
    }
    if (s.current < 0 || static_cast<std::size_t>(s.current) >= entity_count_) {
      throw UnknownEntity("agent state entity outside the embedding table");
    }
  }

  VectorXd build_input(const AgentState& s) const {
    const int d = cfg_.embed_dim;
    VectorXd x = VectorXd::Zero(3 * d);
    if (s.last_action) {
      x.head(d) = params_.relation_embed.row(s.last_action->rel).transpose();
      x.segment(d, d) = params_.entity_embed.row(s.current).transpose();
    }
    x.tail(d) = params_.entity_embed.row(s.source).transpose();
    return x;
  }

  void lstm_cell(const LstmLayer& layer, const VectorXd& x, const VectorXd& h_prev,
                 const VectorXd& c_prev, VectorXd& h_out, VectorXd& c_out,
                 StepCache::LayerCache* lc) const {
    const int h = cfg_.hidden_size;
    VectorXd z = layer.w_x * x + layer.w_h * h_prev + layer.b.col(0);
    VectorXd i = sigmoid(z.segment(0, h));
    VectorXd f = sigmoid(z.segment(h, h));
    VectorXd g = z.segment(2 * h, h).array().tanh();
    VectorXd o = sigmoid(z.segment(3 * h, h));
    c_out = f.cwiseProduct(c_prev) + i.cwiseProduct(g);
    VectorXd tanh_c = c_out.array().tanh();
    h_out = o.cwiseProduct(tanh_c);
    if (lc) {
      lc->x = x;
      lc->h_prev = h_prev;
      lc->c_prev = c_prev;
      lc->i = std::move(i);
      lc->f = std::move(f);
      lc->g = std::move(g);
      lc->o = std::move(o);
      lc->c = c_out;
      lc->h = h_out;
      lc->tanh_c = std::move(tanh_c);
    }
  }

  static VectorXd sigmoid(const VectorXd& v) {
    return (1.0 / (1.0 + (-v.array()).exp())).matrix();
  }

  PolicyConfig cfg_;
  std::size_t entity_count_ = 0;
  std::size_t relation_count_ = 0;
  std::uint64_t vocab_fingerprint_ = 0;
  std::uint64_t version_ = 0;
  PolicyParams params_;
};

inline AgentState apply_action(const AgentState& s, const Action& a) {
  AgentState next = s;
  next.current = a.target;
  next.last_action = a;
  next.step = s.step + 1;
  next.encoded = false;
  return next;
}

// Draws an index from the distribution and returns the action with its log
// probability. Cumulative walk over the normalized probabilities.
inline std::pair<int, double> sample_index(const ActionDistribution& dist, Rng& rng) {
  const double u = rng.uniform();
  double acc = 0.0;
  const auto n = dist.probs.size();
  for (Eigen::Index j = 0; j < n; ++j) {
    acc += dist.probs[j];
    if (u < acc) return {static_cast<int>(j), dist.log_probs[j]};
  }
  return {static_cast<int>(n - 1), dist.log_probs[n - 1]};
}

inline std::pair<Action, double> sample_action(const ActionDistribution& dist, Rng& rng) {
  auto [idx, lp] = sample_index(dist, rng);
  return {dist.actions[static_cast<std::size_t>(idx)], lp};
}

// Rolls out exactly T sampled transitions from the source compound. The
// query edge (and its inverse) can be masked so 1-hop answers never leak.
inline Trajectory rollout(const KnowledgeGraph& kg, const PolicyNetwork& net, EntityId source,
                          int steps, std::optional<Triple> mask, Rng& rng) {
  if (steps < 1) throw LogicError("rollout needs at least one step");
  kg.entity_type(source);  // validates the id
  Trajectory traj;
  traj.source = source;
  traj.mask = mask;
  traj.param_version = net.version();
  traj.entities.push_back(source);
  AgentState st = net.initial_state(source);
  for (int t = 0; t < steps; ++t) {
    st = net.encode_history(st);
    auto dist = net.action_distribution(net.hidden_top(st), kg.available_actions(st.current, mask));
    auto [idx, lp] = sample_index(dist, rng);
    const Action a = dist.actions[static_cast<std::size_t>(idx)];
    traj.rels.push_back(a.rel);
    traj.entities.push_back(a.target);
    traj.log_probs.push_back(lp);
    traj.chosen.push_back(idx);
    traj.action_sets.push_back(std::move(dist.actions));
    st = apply_action(st, a);
  }
  return traj;
}

}  // namespace kgr
