#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "flexcoord/environment.hpp"
#include "flexcoord/mixer.hpp"
#include "flexcoord/neural.hpp"
#include "flexcoord/profiles.hpp"

namespace flexcoord {

using ActionTriple = std::array<double, 3>; // (battery, heating, consumption)

struct Transition {
    std::vector<std::vector<double>> obs;      // per agent
    std::vector<ActionTriple> actions;         // per agent
    double reward = 0.0;
    std::vector<std::vector<double>> next_obs; // per agent
    std::vector<double> state, next_state;     // global
    bool done = false;
    bool demonstrator = false;
};

class ReplayBuffer {
public:
    explicit ReplayBuffer(std::size_t capacity);
    void push(Transition t);
    std::size_t size() const { return items_.size(); }
    std::size_t capacity() const { return capacity_; }
    long inserted() const { return inserted_; }
    const Transition& sample(std::mt19937_64& rng) const;

private:
    std::size_t capacity_;
    long inserted_ = 0;
    std::vector<Transition> items_;
};

// ---------------------------------------------------------------- tabular --

// Per-agent action-value grid over (observation bin, action-triple bin).
class QTable {
public:
    // obs_edges: ascending inner edges (size = n_obs_bins - 1), typically
    // equal-frequency quantiles of the scenario's grid cost coefficient
    QTable(std::vector<double> obs_edges, int bins_per_axis);

    int n_obs_bins() const { return static_cast<int>(obs_edges_.size()) + 1; }
    int n_action_bins() const { return bins_per_axis_ * bins_per_axis_ * bins_per_axis_; }
    int obs_bin(double obs) const;
    int action_bin(const ActionTriple& a) const; // nearest bin per axis
    ActionTriple action_of_bin(int bin) const;   // bin centres
    double q(int obs_bin, int action_bin) const;
    double max_q(int obs_bin) const;
    int argmax(int obs_bin) const; // lowest index wins ties
    long visits(int obs_bin, int action_bin) const;
    void apply(int obs_bin, int action_bin, double delta, double rate);

    void dump(std::ostream& out) const; // bin edges + grid, plain text

private:
    std::vector<double> obs_edges_;
    int bins_per_axis_;
    std::vector<double> q_;
    std::vector<long> visits_;
};

enum class IqlMode { Plain, Marginal, Demonstrator };

struct IqlTransition {
    double obs = 0.0, next_obs = 0.0;
    ActionTriple action{};
    double reward = 0.0;          // team reward
    double marginal_reward = 0.0; // reward minus default-action reward
    bool terminal = false;
};

struct IqlUpdateParams {
    double alpha = 0.1;
    double beta = 0.02; // used for negative temporal-difference errors
    bool hysteretic = false;
    double gamma = 0.99;
};

// Writes exactly one cell: (binned obs, binned action). Plain mode bootstraps
// the team reward, Marginal the difference reward; Demonstrator applies the
// same rule to a demonstrator transition (callers choose Plain/Marginal
// semantics with the marginal flag on the transition values they pass).
void iql_update(QTable& table, const IqlTransition& tr, IqlMode mode, const IqlUpdateParams& p);

// ---------------------------------------------------------------- methods --

enum class Method { Facmac, FacmacSupervised, Iql, IqlMarginal, IqlOpt, IqlOptMarginal };

std::optional<Method> method_from_string(const std::string& name);
const char* to_string(Method m);
bool method_uses_demonstrations(Method m);
bool method_is_tabular(Method m);

struct FacmacConfig {
    bool conv_actor = true;
    bool shared_actor = true;
    int conv_channels = 8;
    int actor_hidden = 64;
    int critic_hidden = 64;
    int mixer_hidden = 32;
    double lr_actor = 1e-4;
    double lr_critic = 1e-3;
    double gamma = 0.99;
    double tau = 0.01;
    bool hysteretic = true;
    double hysteresis_ratio = 0.25; // beta/alpha gradient scale for negative TD errors
    double supervised_weight = 1.0; // C
    int batch_size = 32;
    std::size_t buffer_capacity = 50000;
    int updates_per_episode = 24;
    double sigma_start = 0.3;
    double sigma_end = 0.05; // linear decay over the first half of training
    double demo_fraction = 0.5;
};

struct IqlConfig {
    int obs_bins = 10;
    int action_bins = 5;
    double alpha = 0.1;
    double beta = 0.02;
    bool hysteretic = false;
    double gamma = 0.99;
    double eps_start = 0.5;
    double eps_end = 0.05; // linear decay over the first half of training
};

// Actor/critic/mixer parameters with target copies (shared actor by default).
struct FacmacPolicy {
    FacmacConfig cfg;
    int n_agents = 0, obs_dim = 0, state_dim = 0;
    std::vector<Network> actors; // size 1 when shared
    std::vector<Network> critics;
    MixingNetwork mixer;
    std::vector<Network> target_actors;
    std::vector<Network> target_critics;
    MixingNetwork target_mixer;
    std::vector<AdamState> actor_opts;
    std::vector<AdamState> critic_opts;
    AdamState mixer_opt;

    FacmacPolicy() = default;
    FacmacPolicy(const FacmacConfig& cfg, int n_agents, int obs_dim, int state_dim,
                 std::uint64_t seed);

    const Network& actor(int agent) const { return actors[cfg.shared_actor ? 0 : agent]; }
    const Network& target_actor(int agent) const {
        return target_actors[cfg.shared_actor ? 0 : agent];
    }
    ActionTriple act(const std::vector<double>& obs, int agent) const;
    void soft_update_targets();
};

// Deterministic actor output plus clipped Gaussian exploration noise.
ActionTriple select_action(const Network& actor, const std::vector<double>& obs, double sigma,
                           std::mt19937_64& rng);

// Gradients of the squared-TD loss (terminal targets cut the bootstrap)
// through mixer and critics. Negative-TD samples have their gradient scaled
// by hysteresis_ratio when hysteretic is on. Returns the plain mean squared
// TD error. Gradient buffers must be pre-sized and are accumulated into.
double critic_gradients(const FacmacPolicy& policy, const std::vector<const Transition*>& batch,
                        std::vector<std::vector<double>>& critic_grads,
                        std::vector<double>& mixer_grad);

// Gradients of -mean(Q_tot(o, mu(o), s)) w.r.t. the actor parameters, plus
// the supervised imitation term on demonstrator items when weight > 0.
void actor_gradients(const FacmacPolicy& policy, const std::vector<const Transition*>& batch,
                     double supervised_weight, std::vector<std::vector<double>>& actor_grads);

// One optimiser step each. critic_update returns the pre-update loss.
double critic_update(FacmacPolicy& policy, const std::vector<const Transition*>& batch);
void actor_update(FacmacPolicy& policy, const std::vector<const Transition*>& batch,
                  double supervised_weight);

// C * sum over items and agents of |a_demo - mu(o)|^2, with actor gradients
// accumulated into grad (which must match the shared actor parameter size).
double supervised_penalty(const FacmacPolicy& policy, const std::vector<const Transition*>& items,
                          double weight, std::vector<std::vector<double>>& actor_grads);

struct IqlPolicy {
    IqlConfig cfg;
    std::vector<QTable> tables; // per agent
    ActionTriple greedy(int agent, double obs) const;
};

// ------------------------------------------------------------------ train --

struct TrainConfig {
    Method method = Method::Facmac;
    int episodes = 500;
    int eval_every = 50;
    int n_eval_days = 1; // evaluation uses the scenario's last days
    std::uint64_t seed = 1;
    FacmacConfig facmac;
    IqlConfig iql;
    EnvOptions env_options;

    void check() const; // throws std::invalid_argument on bad settings
};

struct CurvePoint {
    int episode = 0;
    double eval_cost_per_day = 0.0;
    double savings_per_home_month = 0.0;
    double wall_seconds = 0.0;
};

struct PolicySet {
    Method method = Method::Facmac;
    std::shared_ptr<FacmacPolicy> facmac; // one of the two is set
    std::shared_ptr<IqlPolicy> iql;
};

struct TrainResult {
    PolicySet policy;
    std::vector<CurvePoint> curve;
    double train_seconds = 0.0; // wall clock of the training loop only
    double baseline_cost_per_day = 0.0;
};

// Episodic loop: sample a training day, roll out with exploration, store or
// tabulate transitions (plus demonstrator data for the optimisation-informed
// methods), update, and evaluate greedily on the held-out days every
// eval_every episodes.
TrainResult train(const ScenarioData& scenario, const TrainConfig& config);

// Deterministic evaluation rollout; returns the cost of the day.
double evaluate_policy_day(const PolicySet& policy, const ScenarioData& scenario, int day,
                           EnvOptions options = {});

std::vector<int> training_days(const ScenarioData& scenario, int n_eval_days);
std::vector<int> evaluation_days(const ScenarioData& scenario, int n_eval_days);

} // namespace flexcoord
