#include "flexcoord/mixer.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

namespace flexcoord {

namespace {
double sign(double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }
} // namespace

MixingNetwork::MixingNetwork(int n_agents, int state_dim, int hidden, std::uint64_t seed)
    : n_(n_agents), s_(state_dim), h_(hidden) {
    long at = 0;
    hw1_ = at; at += static_cast<long>(n_) * h_ * s_;
    d1_ = at; at += static_cast<long>(n_) * h_;
    hb1_ = at; at += static_cast<long>(h_) * s_;
    d2_ = at; at += h_;
    hw2_ = at; at += static_cast<long>(h_) * s_;
    d3_ = at; at += h_;
    v1_ = at; at += static_cast<long>(h_) * s_;
    d4_ = at; at += h_;
    v2_ = at; at += h_;
    d5_ = at; at += 1;
    params_.assign(at, 0.0);

    std::mt19937_64 rng(seed);
    const double bound = 1.0 / std::sqrt(static_cast<double>(s_));
    std::uniform_real_distribution<double> u(-bound, bound);
    for (long j = hw1_; j < d1_; ++j) params_[j] = u(rng);
    for (long j = hb1_; j < d2_; ++j) params_[j] = u(rng);
    for (long j = hw2_; j < d3_; ++j) params_[j] = u(rng);
    for (long j = v1_; j < d4_; ++j) params_[j] = u(rng);
    const double bh = 1.0 / std::sqrt(static_cast<double>(h_));
    std::uniform_real_distribution<double> uh(-bh, bh);
    for (long j = v2_; j < d5_; ++j) params_[j] = uh(rng);
}

double MixingNetwork::forward(const std::vector<double>& q, const std::vector<double>& state,
                              Cache* cache) const {
    if (static_cast<int>(q.size()) != n_ || static_cast<int>(state.size()) != s_)
        throw std::invalid_argument("MixingNetwork::forward: shape mismatch");
    const double* p = params_.data();

    std::vector<double> w1_raw(static_cast<std::size_t>(n_) * h_);
    for (int i = 0; i < n_; ++i)
        for (int j = 0; j < h_; ++j) {
            const long row = (static_cast<long>(i) * h_ + j);
            double z = p[d1_ + row];
            const double* w = p + hw1_ + row * s_;
            for (int k = 0; k < s_; ++k) z += w[k] * state[k];
            w1_raw[row] = z;
        }
    std::vector<double> z1(h_), h1(h_);
    for (int j = 0; j < h_; ++j) {
        double b = p[d2_ + j];
        const double* w = p + hb1_ + static_cast<long>(j) * s_;
        for (int k = 0; k < s_; ++k) b += w[k] * state[k];
        double z = b;
        for (int i = 0; i < n_; ++i) z += std::abs(w1_raw[static_cast<long>(i) * h_ + j]) * q[i];
        z1[j] = z;
        // exponential-linear hidden: strictly increasing, so negative
        // utilities keep a gradient path
        h1[j] = z > 0.0 ? z : std::expm1(z);
    }
    std::vector<double> w2_raw(h_);
    for (int j = 0; j < h_; ++j) {
        double z = p[d3_ + j];
        const double* w = p + hw2_ + static_cast<long>(j) * s_;
        for (int k = 0; k < s_; ++k) z += w[k] * state[k];
        w2_raw[j] = z;
    }
    std::vector<double> v_hidden_raw(h_);
    for (int j = 0; j < h_; ++j) {
        double z = p[d4_ + j];
        const double* w = p + v1_ + static_cast<long>(j) * s_;
        for (int k = 0; k < s_; ++k) z += w[k] * state[k];
        v_hidden_raw[j] = z;
    }
    double q_tot = p[d5_];
    for (int j = 0; j < h_; ++j) {
        q_tot += std::abs(w2_raw[j]) * h1[j];
        q_tot += p[v2_ + j] * std::max(v_hidden_raw[j], 0.0);
    }
    if (cache) {
        cache->q = q;
        cache->state = state;
        cache->w1_raw = std::move(w1_raw);
        cache->z1 = std::move(z1);
        cache->h1 = std::move(h1);
        cache->w2_raw = std::move(w2_raw);
        cache->v_hidden_raw = std::move(v_hidden_raw);
    }
    return q_tot;
}

std::vector<double> MixingNetwork::backward(const Cache& c, double d_qtot,
                                            std::vector<double>& g) const {
    if (g.size() != params_.size())
        throw std::invalid_argument("MixingNetwork::backward: gradient size mismatch");
    const double* p = params_.data();
    std::vector<double> dq(n_, 0.0);
    g[d5_] += d_qtot;
    for (int j = 0; j < h_; ++j) {
        // state-value branch
        const double dvh = d_qtot * p[v2_ + j] * (c.v_hidden_raw[j] > 0.0 ? 1.0 : 0.0);
        g[v2_ + j] += d_qtot * std::max(c.v_hidden_raw[j], 0.0);
        if (dvh != 0.0) {
            g[d4_ + j] += dvh;
            double* gv = g.data() + v1_ + static_cast<long>(j) * s_;
            for (int k = 0; k < s_; ++k) gv[k] += dvh * c.state[k];
        }
        // second mixing layer
        const double dw2 = d_qtot * c.h1[j] * sign(c.w2_raw[j]);
        if (dw2 != 0.0) {
            g[d3_ + j] += dw2;
            double* gw = g.data() + hw2_ + static_cast<long>(j) * s_;
            for (int k = 0; k < s_; ++k) gw[k] += dw2 * c.state[k];
        }
        // first mixing layer
        const double dz1 =
            d_qtot * std::abs(c.w2_raw[j]) * (c.z1[j] > 0.0 ? 1.0 : std::exp(c.z1[j]));
        if (dz1 == 0.0) continue;
        g[d2_ + j] += dz1;
        double* gb = g.data() + hb1_ + static_cast<long>(j) * s_;
        for (int k = 0; k < s_; ++k) gb[k] += dz1 * c.state[k];
        for (int i = 0; i < n_; ++i) {
            const long row = static_cast<long>(i) * h_ + j;
            dq[i] += dz1 * std::abs(c.w1_raw[row]);
            const double dw1 = dz1 * c.q[i] * sign(c.w1_raw[row]);
            if (dw1 == 0.0) continue;
            g[d1_ + row] += dw1;
            double* gw = g.data() + hw1_ + row * s_;
            for (int k = 0; k < s_; ++k) gw[k] += dw1 * c.state[k];
        }
    }
    return dq;
}

} // namespace flexcoord
