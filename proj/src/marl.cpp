#include "flexcoord/marl.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ostream>

#include "flexcoord/oracle.hpp"
#include "flexcoord/util.hpp"

namespace flexcoord {

namespace {
constexpr double kDaysPerMonth = 365.25 / 12.0;

constexpr double axis_low(int axis) { return axis == 0 ? -1.0 : 0.0; }
constexpr double axis_high(int) { return 1.0; }
} // namespace

// ------------------------------------------------------------------ buffer --

ReplayBuffer::ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
    if (capacity == 0) throw std::invalid_argument("ReplayBuffer: capacity must be positive");
    items_.reserve(std::min<std::size_t>(capacity, 4096));
}

void ReplayBuffer::push(Transition t) {
    if (items_.size() < capacity_) {
        items_.push_back(std::move(t));
    } else {
        items_[static_cast<std::size_t>(inserted_) % capacity_] = std::move(t);
    }
    ++inserted_;
}

const Transition& ReplayBuffer::sample(std::mt19937_64& rng) const {
    if (items_.empty()) throw std::logic_error("ReplayBuffer::sample: empty buffer");
    std::uniform_int_distribution<std::size_t> pick(0, items_.size() - 1);
    return items_[pick(rng)];
}

// ----------------------------------------------------------------- q-table --

QTable::QTable(std::vector<double> obs_edges, int bins_per_axis)
    : obs_edges_(std::move(obs_edges)), bins_per_axis_(bins_per_axis) {
    if (bins_per_axis_ < 1) throw std::invalid_argument("QTable: need at least one action bin");
    if (!std::is_sorted(obs_edges_.begin(), obs_edges_.end()))
        throw std::invalid_argument("QTable: observation bin edges must be ascending");
    q_.assign(static_cast<std::size_t>(n_obs_bins()) * n_action_bins(), 0.0);
    visits_.assign(q_.size(), 0);
}

int QTable::obs_bin(double obs) const {
    return static_cast<int>(std::upper_bound(obs_edges_.begin(), obs_edges_.end(), obs) -
                            obs_edges_.begin());
}

int QTable::action_bin(const ActionTriple& a) const {
    int bin = 0;
    for (int axis = 0; axis < 3; ++axis) {
        const double width = (axis_high(axis) - axis_low(axis)) / bins_per_axis_;
        int k = static_cast<int>((a[axis] - axis_low(axis)) / width);
        k = std::clamp(k, 0, bins_per_axis_ - 1);
        bin = bin * bins_per_axis_ + k;
    }
    return bin;
}

ActionTriple QTable::action_of_bin(int bin) const {
    ActionTriple a{};
    for (int axis = 2; axis >= 0; --axis) {
        const int k = bin % bins_per_axis_;
        bin /= bins_per_axis_;
        const double width = (axis_high(axis) - axis_low(axis)) / bins_per_axis_;
        a[axis] = axis_low(axis) + (k + 0.5) * width;
    }
    return a;
}

double QTable::q(int obs_bin, int action_bin) const {
    return q_[static_cast<std::size_t>(obs_bin) * n_action_bins() + action_bin];
}

double QTable::max_q(int obs_bin) const { return q(obs_bin, argmax(obs_bin)); }

int QTable::argmax(int obs_bin) const {
    const double* row = q_.data() + static_cast<std::size_t>(obs_bin) * n_action_bins();
    int best = 0;
    for (int a = 1; a < n_action_bins(); ++a)
        if (row[a] > row[best]) best = a;
    return best;
}

long QTable::visits(int obs_bin, int action_bin) const {
    return visits_[static_cast<std::size_t>(obs_bin) * n_action_bins() + action_bin];
}

void QTable::apply(int obs_bin, int action_bin, double delta, double rate) {
    const std::size_t cell = static_cast<std::size_t>(obs_bin) * n_action_bins() + action_bin;
    q_[cell] += rate * delta;
    ++visits_[cell];
}

void QTable::dump(std::ostream& out) const {
    out << "qtable v1\n" << obs_edges_.size() << " " << bins_per_axis_ << "\n";
    for (double e : obs_edges_) out << format_double(e) << "\n";
    for (double v : q_) out << format_double(v) << "\n";
}

void iql_update(QTable& table, const IqlTransition& tr, IqlMode mode, const IqlUpdateParams& p) {
    const int sb = table.obs_bin(tr.obs);
    const int ab = table.action_bin(tr.action);
    const double signal = mode == IqlMode::Marginal ? tr.marginal_reward : tr.reward;
    const double bootstrap = tr.terminal ? 0.0 : p.gamma * table.max_q(table.obs_bin(tr.next_obs));
    const double delta = signal + bootstrap - table.q(sb, ab);
    const double rate = (!p.hysteretic || delta > 0.0) ? p.alpha : p.beta;
    table.apply(sb, ab, delta, rate);
}

// ----------------------------------------------------------------- methods --

std::optional<Method> method_from_string(const std::string& name) {
    if (name == "facmac") return Method::Facmac;
    if (name == "facmac+supervised") return Method::FacmacSupervised;
    if (name == "iql") return Method::Iql;
    if (name == "iql+marginal") return Method::IqlMarginal;
    if (name == "iql+opt") return Method::IqlOpt;
    if (name == "iql+opt+marginal") return Method::IqlOptMarginal;
    return std::nullopt;
}

const char* to_string(Method m) {
    switch (m) {
        case Method::Facmac: return "facmac";
        case Method::FacmacSupervised: return "facmac+supervised";
        case Method::Iql: return "iql";
        case Method::IqlMarginal: return "iql+marginal";
        case Method::IqlOpt: return "iql+opt";
        case Method::IqlOptMarginal: return "iql+opt+marginal";
    }
    return "?";
}

bool method_uses_demonstrations(Method m) {
    return m == Method::FacmacSupervised || m == Method::IqlOpt || m == Method::IqlOptMarginal;
}

bool method_is_tabular(Method m) {
    return m == Method::Iql || m == Method::IqlMarginal || m == Method::IqlOpt ||
           m == Method::IqlOptMarginal;
}

// ------------------------------------------------------------------ facmac --

namespace {

NetworkSpec actor_spec(const FacmacConfig& cfg, int obs_dim) {
    NetworkSpec spec;
    if (cfg.conv_actor) {
        spec.layers.push_back(conv1d(1, cfg.conv_channels, obs_dim, Activation::Relu));
        spec.layers.push_back(dense(cfg.conv_channels * obs_dim, cfg.actor_hidden, Activation::Relu));
    } else {
        spec.layers.push_back(dense(obs_dim, cfg.actor_hidden, Activation::Relu));
    }
    spec.layers.push_back(dense(cfg.actor_hidden, cfg.actor_hidden, Activation::Relu));
    spec.layers.push_back(
        dense_heads(cfg.actor_hidden, {Activation::Tanh, Activation::Sigmoid, Activation::Sigmoid}));
    return spec;
}

NetworkSpec critic_spec(const FacmacConfig& cfg, int obs_dim) {
    return NetworkSpec{{dense(obs_dim + 3, cfg.critic_hidden, Activation::Relu),
                        dense(cfg.critic_hidden, 1, Activation::Linear)}};
}

std::vector<double> critic_input(const std::vector<double>& obs, const ActionTriple& a) {
    std::vector<double> in = obs;
    in.insert(in.end(), a.begin(), a.end());
    return in;
}

} // namespace

FacmacPolicy::FacmacPolicy(const FacmacConfig& config, int agents, int obs, int state,
                           std::uint64_t seed)
    : cfg(config), n_agents(agents), obs_dim(obs), state_dim(state) {
    const int n_actor_nets = cfg.shared_actor ? 1 : agents;
    for (int k = 0; k < n_actor_nets; ++k)
        actors.emplace_back(actor_spec(cfg, obs), derive_seed(seed, "actor" + std::to_string(k)));
    for (int i = 0; i < agents; ++i)
        critics.emplace_back(critic_spec(cfg, obs), derive_seed(seed, "critic" + std::to_string(i)));
    mixer = MixingNetwork(agents, state, cfg.mixer_hidden, derive_seed(seed, "mixer"));
    target_actors = actors;
    target_critics = critics;
    target_mixer = mixer;
    for (int k = 0; k < n_actor_nets; ++k)
        actor_opts.emplace_back(actors[k].params().size(), cfg.lr_actor);
    for (int i = 0; i < agents; ++i)
        critic_opts.emplace_back(critics[i].params().size(), cfg.lr_critic);
    mixer_opt = AdamState(mixer.params().size(), cfg.lr_critic);
}

ActionTriple FacmacPolicy::act(const std::vector<double>& obs, int agent) const {
    const auto y = actor(agent).forward(obs);
    return {y[0], y[1], y[2]};
}

void FacmacPolicy::soft_update_targets() {
    for (std::size_t k = 0; k < actors.size(); ++k)
        soft_update(target_actors[k].params(), actors[k].params(), cfg.tau);
    for (std::size_t i = 0; i < critics.size(); ++i)
        soft_update(target_critics[i].params(), critics[i].params(), cfg.tau);
    soft_update(target_mixer.params(), mixer.params(), cfg.tau);
}

ActionTriple select_action(const Network& actor, const std::vector<double>& obs, double sigma,
                           std::mt19937_64& rng) {
    if (sigma < 0.0) throw std::invalid_argument("select_action: negative noise scale");
    const auto y = actor.forward(obs);
    ActionTriple a{y[0], y[1], y[2]};
    if (sigma > 0.0) {
        std::normal_distribution<double> noise(0.0, sigma);
        for (int axis = 0; axis < 3; ++axis)
            a[axis] = std::clamp(a[axis] + noise(rng), axis_low(axis), axis_high(axis));
    }
    return a;
}

double critic_gradients(const FacmacPolicy& policy, const std::vector<const Transition*>& batch,
                        std::vector<std::vector<double>>& critic_grads,
                        std::vector<double>& mixer_grad) {
    if (batch.empty()) throw std::invalid_argument("critic_gradients: empty batch");
    const int n = policy.n_agents;
    const double inv_b = 1.0 / static_cast<double>(batch.size());

    double loss = 0.0;
    std::vector<double> q(n), q_next(n);
    for (const Transition* tr : batch) {
        double y = tr->reward;
        if (!tr->done) {
            for (int i = 0; i < n; ++i) {
                const auto a_next = policy.target_actor(i).forward(tr->next_obs[i]);
                q_next[i] = policy.target_critics[i]
                                .forward(critic_input(tr->next_obs[i], {a_next[0], a_next[1], a_next[2]}))[0];
            }
            y += policy.cfg.gamma * policy.target_mixer.forward(q_next, tr->next_state);
        }

        std::vector<Network::Cache> caches(n);
        for (int i = 0; i < n; ++i)
            q[i] = policy.critics[i].forward(critic_input(tr->obs[i], tr->actions[i]), &caches[i])[0];
        MixingNetwork::Cache mix_cache;
        const double q_tot = policy.mixer.forward(q, tr->state, &mix_cache);

        const double delta = y - q_tot;
        loss += delta * delta * inv_b;
        double d = -2.0 * delta * inv_b;
        if (policy.cfg.hysteretic && delta < 0.0) d *= policy.cfg.hysteresis_ratio;
        const auto dq = policy.mixer.backward(mix_cache, d, mixer_grad);
        for (int i = 0; i < n; ++i) policy.critics[i].backward(caches[i], {dq[i]}, critic_grads[i]);
    }
    return loss;
}

double critic_update(FacmacPolicy& policy, const std::vector<const Transition*>& batch) {
    const int n = policy.n_agents;
    std::vector<std::vector<double>> critic_grads(n);
    for (int i = 0; i < n; ++i) critic_grads[i].assign(policy.critics[i].params().size(), 0.0);
    std::vector<double> mixer_grad(policy.mixer.params().size(), 0.0);
    const double loss = critic_gradients(policy, batch, critic_grads, mixer_grad);
    for (int i = 0; i < n; ++i)
        policy.critic_opts[i].apply(policy.critics[i].params(), critic_grads[i]);
    policy.mixer_opt.apply(policy.mixer.params(), mixer_grad);
    return loss;
}

double supervised_penalty(const FacmacPolicy& policy, const std::vector<const Transition*>& items,
                          double weight, std::vector<std::vector<double>>& actor_grads) {
    double penalty = 0.0;
    if (weight == 0.0) return 0.0;
    for (const Transition* tr : items) {
        for (int i = 0; i < policy.n_agents; ++i) {
            Network::Cache cache;
            const auto y = policy.actor(i).forward(tr->obs[i], &cache);
            std::vector<double> dy(3);
            for (int axis = 0; axis < 3; ++axis) {
                const double diff = y[axis] - tr->actions[i][axis];
                penalty += weight * diff * diff;
                dy[axis] = 2.0 * weight * diff;
            }
            policy.actor(i).backward(cache, dy,
                                     actor_grads[policy.cfg.shared_actor ? 0 : i]);
        }
    }
    return penalty;
}

void actor_gradients(const FacmacPolicy& policy, const std::vector<const Transition*>& batch,
                     double supervised_weight, std::vector<std::vector<double>>& actor_grads) {
    if (batch.empty()) throw std::invalid_argument("actor_gradients: empty batch");
    const int n = policy.n_agents;
    const double inv_b = 1.0 / static_cast<double>(batch.size());

    // gradient sinks for the frozen critic/mixer parameters
    std::vector<std::vector<double>> critic_sink(n);
    for (int i = 0; i < n; ++i) critic_sink[i].assign(policy.critics[i].params().size(), 0.0);
    std::vector<double> mixer_sink(policy.mixer.params().size(), 0.0);

    std::vector<double> q(n);
    std::vector<const Transition*> demo_items;
    for (const Transition* tr : batch) {
        std::vector<Network::Cache> actor_caches(n);
        std::vector<Network::Cache> critic_caches(n);
        std::vector<ActionTriple> mu(n);
        for (int i = 0; i < n; ++i) {
            const auto y = policy.actor(i).forward(tr->obs[i], &actor_caches[i]);
            mu[i] = {y[0], y[1], y[2]};
            q[i] = policy.critics[i].forward(critic_input(tr->obs[i], mu[i]), &critic_caches[i])[0];
        }
        MixingNetwork::Cache mix_cache;
        policy.mixer.forward(q, tr->state, &mix_cache);
        // ascend Q_tot: minimize -mean(Q_tot)
        const auto dq = policy.mixer.backward(mix_cache, -inv_b, mixer_sink);
        for (int i = 0; i < n; ++i) {
            const auto dinput =
                policy.critics[i].backward(critic_caches[i], {dq[i]}, critic_sink[i]);
            const std::vector<double> da(dinput.end() - 3, dinput.end());
            policy.actor(i).backward(actor_caches[i], da,
                                     actor_grads[policy.cfg.shared_actor ? 0 : i]);
        }
        if (tr->demonstrator && supervised_weight > 0.0) demo_items.push_back(tr);
    }
    supervised_penalty(policy, demo_items, supervised_weight * inv_b, actor_grads);
}

void actor_update(FacmacPolicy& policy, const std::vector<const Transition*>& batch,
                  double supervised_weight) {
    std::vector<std::vector<double>> actor_grads(policy.actors.size());
    for (std::size_t k = 0; k < policy.actors.size(); ++k)
        actor_grads[k].assign(policy.actors[k].params().size(), 0.0);
    actor_gradients(policy, batch, supervised_weight, actor_grads);
    for (std::size_t k = 0; k < policy.actors.size(); ++k)
        policy.actor_opts[k].apply(policy.actors[k].params(), actor_grads[k]);
}

ActionTriple IqlPolicy::greedy(int agent, double obs) const {
    const QTable& t = tables[agent];
    return t.action_of_bin(t.argmax(t.obs_bin(obs)));
}

// ------------------------------------------------------------------- train --

void TrainConfig::check() const {
    if (episodes < 0) throw std::invalid_argument("episodes must be >= 0");
    if (eval_every < 1) throw std::invalid_argument("eval_every must be >= 1");
    if (n_eval_days < 1) throw std::invalid_argument("n_eval_days must be >= 1");
    if (facmac.batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
    if (facmac.buffer_capacity < static_cast<std::size_t>(facmac.batch_size))
        throw std::invalid_argument("buffer capacity below batch size");
    if (facmac.gamma < 0.0 || facmac.gamma >= 1.0 || iql.gamma < 0.0 || iql.gamma >= 1.0)
        throw std::invalid_argument("gamma must lie in [0, 1)");
    if (facmac.tau <= 0.0 || facmac.tau > 1.0) throw std::invalid_argument("tau must lie in (0, 1]");
    if (facmac.sigma_start < 0.0 || facmac.sigma_end < 0.0)
        throw std::invalid_argument("noise scales must be non-negative");
    if (facmac.hysteresis_ratio <= 0.0 || facmac.hysteresis_ratio > 1.0)
        throw std::invalid_argument("hysteresis ratio must lie in (0, 1]");
    if (facmac.demo_fraction < 0.0 || facmac.demo_fraction > 1.0)
        throw std::invalid_argument("demo fraction must lie in [0, 1]");
    if (iql.obs_bins < 1 || iql.action_bins < 1)
        throw std::invalid_argument("table sizes must be positive");
    if (iql.alpha <= 0.0 || iql.alpha > 1.0 || iql.beta <= 0.0 || iql.beta > 1.0)
        throw std::invalid_argument("learning rates must lie in (0, 1]");
    if (iql.eps_start < 0.0 || iql.eps_start > 1.0 || iql.eps_end < 0.0 || iql.eps_end > 1.0)
        throw std::invalid_argument("exploration rates must lie in [0, 1]");
}

std::vector<int> evaluation_days(const ScenarioData& sc, int n_eval_days) {
    const int k = std::min(n_eval_days, sc.n_days);
    std::vector<int> days;
    for (int d = sc.n_days - k; d < sc.n_days; ++d) days.push_back(d);
    return days;
}

std::vector<int> training_days(const ScenarioData& sc, int n_eval_days) {
    const int k = std::min(n_eval_days, sc.n_days);
    std::vector<int> days;
    for (int d = 0; d < sc.n_days - k; ++d) days.push_back(d);
    if (days.empty()) // single-block scenario: train and evaluate on the same days
        for (int d = 0; d < sc.n_days; ++d) days.push_back(d);
    return days;
}

namespace {

struct DayEnvs {
    const ScenarioData* sc;
    EnvOptions options;
    std::vector<std::unique_ptr<Environment>> envs;

    DayEnvs(const ScenarioData& s, EnvOptions o) : sc(&s), options(o), envs(s.n_days) {}
    const Environment& at(int day) {
        if (!envs[day]) envs[day] = std::make_unique<Environment>(*sc, day, options);
        return *envs[day];
    }
};

double schedule(double start, double end, int episode, int total) {
    const int half = std::max(total / 2, 1);
    const double frac = std::min(1.0, static_cast<double>(episode) / half);
    return start + (end - start) * frac;
}

JointAction to_joint(const std::vector<ActionTriple>& per_agent) {
    JointAction a;
    const int n = static_cast<int>(per_agent.size());
    a.battery.resize(n);
    a.heating.resize(n);
    a.consumption.resize(n);
    for (int i = 0; i < n; ++i) {
        a.battery[i] = per_agent[i][0];
        a.heating[i] = per_agent[i][1];
        a.consumption[i] = per_agent[i][2];
    }
    return a;
}

double eval_cost(const PolicySet& policy, DayEnvs& envs, const std::vector<int>& days) {
    double total = 0.0;
    for (int day : days) total += evaluate_policy_day(policy, *envs.sc, day, envs.options);
    return total / static_cast<double>(days.size());
}

// Demonstrator data for one day: actions plus the per-step quantities needed
// for tabular updates.
struct DayDemo {
    Demonstration demo;
    std::vector<double> rewards;            // per step
    std::vector<std::vector<double>> marginals; // per step, per agent (when requested)
};

DayDemo prepare_day_demo(const ScenarioData& sc, const Environment& env, int day,
                         bool with_marginals, EnvOptions options) {
    DayDemo out;
    auto day_lp = build_day_lp(sc, day, options);
    auto sol = solve_day_lp(day_lp, sc);
    if (sol.status != LpStatus::Optimal)
        throw std::runtime_error(std::string("day optimisation failed: ") + to_string(sol.status) +
                                 " " + sol.message);
    out.demo = extract_demonstrations(day_lp, sol, sc, options);
    EnvState state = env.reset();
    for (int t = 0; t < sc.horizon; ++t) {
        if (with_marginals) {
            std::vector<double> m(sc.n_homes);
            for (int i = 0; i < sc.n_homes; ++i)
                m[i] = marginal_reward(env, state, out.demo.actions[t], i);
            out.marginals.push_back(std::move(m));
        }
        out.rewards.push_back(env.step(state, out.demo.actions[t]).reward);
    }
    return out;
}

} // namespace

double evaluate_policy_day(const PolicySet& policy, const ScenarioData& sc, int day,
                           EnvOptions options) {
    Environment env(sc, day, options);
    EnvState state = env.reset();
    const int n = sc.n_homes;
    double cost = 0.0;
    for (int t = 0; t < sc.horizon; ++t) {
        std::vector<ActionTriple> acts(n);
        for (int i = 0; i < n; ++i) {
            if (policy.method == Method::Facmac || policy.method == Method::FacmacSupervised) {
                acts[i] = policy.facmac->act(env.observe(state, i, ObservationMode::Window), i);
            } else {
                acts[i] = policy.iql->greedy(i, env.observe(state, i, ObservationMode::Scalar)[0]);
            }
        }
        cost -= env.step(state, to_joint(acts)).reward;
    }
    return cost;
}

TrainResult train(const ScenarioData& sc, const TrainConfig& config) {
    config.check();
    const int n = sc.n_homes;
    const int T = sc.horizon;
    const bool tabular = method_is_tabular(config.method);
    const bool demos = method_uses_demonstrations(config.method);
    const bool marginal =
        config.method == Method::IqlMarginal || config.method == Method::IqlOptMarginal;

    DayEnvs envs(sc, config.env_options);
    const auto train_days = training_days(sc, config.n_eval_days);
    const auto eval_days = evaluation_days(sc, config.n_eval_days);

    TrainResult result;
    result.policy.method = config.method;
    double baseline_total = 0.0;
    for (int day : eval_days) baseline_total += baseline_rollout(sc, day, config.env_options);
    result.baseline_cost_per_day = baseline_total / static_cast<double>(eval_days.size());

    auto explore_rng = make_rng(config.seed, "explore");
    auto update_rng = make_rng(config.seed, "updates");
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    // epoch-style day schedule: every training day is visited equally often
    // (shuffled cycling), which also pins the per-episode optimisation work
    // of the demonstrator methods
    std::vector<int> day_order = train_days;
    std::shuffle(day_order.begin(), day_order.end(), explore_rng);

    // policy construction
    if (tabular) {
        // equal-frequency observation bins fitted on the training days
        std::vector<double> samples;
        for (int day : train_days)
            for (int t = 0; t < T; ++t)
                samples.push_back(sc.grid.grid_cost_coeff[day * T + t]);
        std::sort(samples.begin(), samples.end());
        std::vector<double> edges;
        for (int k = 1; k < config.iql.obs_bins; ++k)
            edges.push_back(samples[samples.size() * k / config.iql.obs_bins]);
        result.policy.iql = std::make_shared<IqlPolicy>();
        result.policy.iql->cfg = config.iql;
        for (int i = 0; i < n; ++i)
            result.policy.iql->tables.emplace_back(edges, config.iql.action_bins);
    } else {
        const int obs_dim =
            kObservationWindow + (config.env_options.observe_local_state ? 3 : 0);
        result.policy.facmac = std::make_shared<FacmacPolicy>(
            config.facmac, n, obs_dim, kObservationWindow + 3 * n + 1,
            derive_seed(config.seed, "policy"));
    }

    ReplayBuffer explore_buffer(config.facmac.buffer_capacity);
    ReplayBuffer demo_buffer(config.facmac.buffer_capacity);
    std::vector<std::optional<DayDemo>> day_demos(sc.n_days);
    std::vector<bool> demo_pushed(sc.n_days, false);

    const auto t_start = std::chrono::steady_clock::now();
    auto elapsed = [&] {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    };
    auto emit_curve_point = [&](int episode) {
        CurvePoint p;
        p.episode = episode;
        p.eval_cost_per_day = eval_cost(result.policy, envs, eval_days);
        p.savings_per_home_month =
            (result.baseline_cost_per_day - p.eval_cost_per_day) * kDaysPerMonth / n;
        p.wall_seconds = elapsed();
        result.curve.push_back(p);
    };

    const IqlUpdateParams iql_params{config.iql.alpha, config.iql.beta, config.iql.hysteretic,
                                     config.iql.gamma};

    for (int ep = 0; ep < config.episodes; ++ep) {
        const std::size_t slot = ep % day_order.size();
        if (slot == 0 && ep > 0) std::shuffle(day_order.begin(), day_order.end(), explore_rng);
        const int day = day_order[slot];
        const Environment& env = envs.at(day);

        if (demos && !day_demos[day])
            day_demos[day] = prepare_day_demo(sc, env, day, marginal, config.env_options);

        EnvState state = env.reset();
        if (tabular) {
            const double eps =
                schedule(config.iql.eps_start, config.iql.eps_end, ep, config.episodes);
            for (int t = 0; t < T; ++t) {
                const double obs = env.observe(state, 0, ObservationMode::Scalar)[0];
                std::vector<ActionTriple> acts(n);
                for (int i = 0; i < n; ++i) {
                    if (unit(explore_rng) < eps) {
                        for (int axis = 0; axis < 3; ++axis) {
                            std::uniform_real_distribution<double> range(axis_low(axis),
                                                                         axis_high(axis));
                            acts[i][axis] = range(explore_rng);
                        }
                    } else {
                        acts[i] = result.policy.iql->greedy(i, obs);
                    }
                }
                const JointAction joint = to_joint(acts);
                std::vector<double> margs(n, 0.0);
                if (marginal)
                    for (int i = 0; i < n; ++i) margs[i] = marginal_reward(env, state, joint, i);
                const StepOutcome out = env.step(state, joint);
                const bool done = env.done(state);
                const double next_obs = env.observe(state, 0, ObservationMode::Scalar)[0];
                for (int i = 0; i < n; ++i) {
                    IqlTransition tr{obs, next_obs, acts[i], out.reward, margs[i], done};
                    iql_update(result.policy.iql->tables[i], tr,
                               marginal ? IqlMode::Marginal : IqlMode::Plain, iql_params);
                }
            }
            if (demos) { // one demonstrator pass per episode alongside the greedy pass
                const DayDemo& dd = *day_demos[day];
                EnvState replay = env.reset();
                for (int t = 0; t < T; ++t) {
                    const double obs = env.observe(replay, 0, ObservationMode::Scalar)[0];
                    const JointAction& joint = dd.demo.actions[t];
                    env.step(replay, joint);
                    const bool done = env.done(replay);
                    const double next_obs = env.observe(replay, 0, ObservationMode::Scalar)[0];
                    for (int i = 0; i < n; ++i) {
                        IqlTransition tr{obs, next_obs,
                                         ActionTriple{joint.battery[i], joint.heating[i],
                                                      joint.consumption[i]},
                                         dd.rewards[t], marginal ? dd.marginals[t][i] : 0.0, done};
                        iql_update(result.policy.iql->tables[i], tr,
                                   marginal ? IqlMode::Marginal : IqlMode::Demonstrator,
                                   iql_params);
                    }
                }
            }
        } else {
            FacmacPolicy& pol = *result.policy.facmac;
            const double sigma =
                schedule(config.facmac.sigma_start, config.facmac.sigma_end, ep, config.episodes);
            for (int t = 0; t < T; ++t) {
                Transition tr;
                tr.obs.resize(n);
                tr.actions.resize(n);
                tr.state = env.global_state(state);
                for (int i = 0; i < n; ++i) {
                    tr.obs[i] = env.observe(state, i, ObservationMode::Window);
                    tr.actions[i] = select_action(pol.actor(i), tr.obs[i], sigma, explore_rng);
                }
                const StepOutcome out = env.step(state, to_joint(tr.actions));
                tr.reward = out.reward;
                tr.done = env.done(state);
                tr.next_state = env.global_state(state);
                tr.next_obs.resize(n);
                for (int i = 0; i < n; ++i)
                    tr.next_obs[i] = env.observe(state, i, ObservationMode::Window);
                explore_buffer.push(std::move(tr));
            }
            if (demos && !demo_pushed[day]) { // store each day's demonstrator episode once
                demo_pushed[day] = true;
                const DayDemo& dd = *day_demos[day];
                EnvState replay = env.reset();
                for (int t = 0; t < T; ++t) {
                    Transition tr;
                    tr.demonstrator = true;
                    tr.obs.resize(n);
                    tr.actions.resize(n);
                    tr.state = env.global_state(replay);
                    for (int i = 0; i < n; ++i) {
                        tr.obs[i] = env.observe(replay, i, ObservationMode::Window);
                        tr.actions[i] = {dd.demo.actions[t].battery[i], dd.demo.actions[t].heating[i],
                                         dd.demo.actions[t].consumption[i]};
                    }
                    env.step(replay, dd.demo.actions[t]);
                    tr.reward = dd.rewards[t];
                    tr.done = env.done(replay);
                    tr.next_state = env.global_state(replay);
                    tr.next_obs.resize(n);
                    for (int i = 0; i < n; ++i)
                        tr.next_obs[i] = env.observe(replay, i, ObservationMode::Window);
                    demo_buffer.push(std::move(tr));
                }
            }
            if (explore_buffer.size() >= static_cast<std::size_t>(config.facmac.batch_size)) {
                for (int u = 0; u < config.facmac.updates_per_episode; ++u) {
                    std::vector<const Transition*> batch;
                    batch.reserve(config.facmac.batch_size);
                    const bool mix = demos && demo_buffer.size() > 0;
                    const int n_demo =
                        mix ? static_cast<int>(config.facmac.batch_size * config.facmac.demo_fraction)
                            : 0;
                    for (int b = 0; b < config.facmac.batch_size; ++b)
                        batch.push_back(b < n_demo ? &demo_buffer.sample(update_rng)
                                                   : &explore_buffer.sample(update_rng));
                    critic_update(pol, batch);
                    actor_update(pol, batch,
                                 config.method == Method::FacmacSupervised
                                     ? config.facmac.supervised_weight
                                     : 0.0);
                    pol.soft_update_targets();
                }
            }
        }

        if ((ep + 1) % config.eval_every == 0 || ep + 1 == config.episodes) emit_curve_point(ep + 1);
    }
    if (config.episodes == 0) emit_curve_point(0);
    result.train_seconds = elapsed();
    return result;
}

} // namespace flexcoord
