#pragma once

#include <cstdint>
#include <vector>

namespace flexcoord {

// State-conditioned monotonic combination of per-agent utilities:
//   Q_tot = w2(s)' f(w1(s)' q + b1(s)) + v(s)
// with w1, w2 made non-negative through absolute values of hypernetwork
// outputs and f a rectifier, so dQ_tot/dq_i >= 0 for every state.
class MixingNetwork {
public:
    MixingNetwork() = default;
    MixingNetwork(int n_agents, int state_dim, int hidden, std::uint64_t seed);

    int n_agents() const { return n_; }
    int state_dim() const { return s_; }
    int hidden() const { return h_; }

    std::vector<double>& params() { return params_; }
    const std::vector<double>& params() const { return params_; }

    struct Cache {
        std::vector<double> q, state;
        std::vector<double> w1_raw, z1, h1; // mixing first layer
        std::vector<double> w2_raw;         // mixing second layer
        std::vector<double> v_hidden_raw;   // state-value branch
    };

    double forward(const std::vector<double>& q, const std::vector<double>& state,
                   Cache* cache = nullptr) const;

    // Gradients of (d_qtot * Q_tot): accumulates hypernetwork gradients into
    // param_grad and returns dQ_tot/dq scaled by d_qtot. Every entry of the
    // returned vector is >= 0 when d_qtot >= 0.
    std::vector<double> backward(const Cache& cache, double d_qtot,
                                 std::vector<double>& param_grad) const;

private:
    int n_ = 0, s_ = 0, h_ = 0;
    std::vector<double> params_;
    // flat layout offsets
    long hw1_ = 0, d1_ = 0, hb1_ = 0, d2_ = 0, hw2_ = 0, d3_ = 0, v1_ = 0, d4_ = 0, v2_ = 0,
         d5_ = 0;
};

} // namespace flexcoord
