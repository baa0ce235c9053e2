#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

namespace flexcoord {

enum class Activation { Linear, Relu, Tanh, Sigmoid };

struct LayerSpec {
    enum class Kind { Dense, Conv1d };
    Kind kind = Kind::Dense;
    // dense
    int in = 0, out = 0;
    Activation act = Activation::Linear;
    std::vector<Activation> unit_acts; // per-output override (dense heads)
    // conv1d: kernel 3, stride 1, zero same-padding, channels-major layout
    int in_channels = 0, out_channels = 0, length = 0;

    int input_size() const { return kind == Kind::Dense ? in : in_channels * length; }
    int output_size() const { return kind == Kind::Dense ? out : out_channels * length; }
    long param_count() const {
        return kind == Kind::Dense ? static_cast<long>(out) * in + out
                                   : static_cast<long>(out_channels) * in_channels * 3 + out_channels;
    }
};

LayerSpec dense(int in, int out, Activation act = Activation::Linear);
LayerSpec dense_heads(int in, std::vector<Activation> unit_acts);
LayerSpec conv1d(int in_channels, int out_channels, int length,
                 Activation act = Activation::Linear);

struct NetworkSpec {
    std::vector<LayerSpec> layers;

    int input_size() const { return layers.empty() ? 0 : layers.front().input_size(); }
    int output_size() const { return layers.empty() ? 0 : layers.back().output_size(); }
    long param_count() const;
    void check_composition() const; // throws when adjacent shapes do not chain
    std::string id() const;
    static NetworkSpec parse(const std::string& id);
};

// Explicit forward/backward network over a flat parameter vector.
// Initialization: weights fan-in scaled uniform, biases zero.
class Network {
public:
    Network() = default;
    Network(NetworkSpec spec, std::uint64_t seed);

    const NetworkSpec& spec() const { return spec_; }
    std::vector<double>& params() { return params_; }
    const std::vector<double>& params() const { return params_; }

    struct Cache {
        std::vector<std::vector<double>> values; // values[0] = input, values[k+1] = layer k output
    };

    std::vector<double> forward(const std::vector<double>& input, Cache* cache = nullptr) const;

    // Exact gradients of the scalar whose d/d(output) is `output_grad`.
    // Accumulates into param_grad (sized like params) and returns d/d(input).
    std::vector<double> backward(const Cache& cache, const std::vector<double>& output_grad,
                                 std::vector<double>& param_grad) const;

private:
    NetworkSpec spec_;
    std::vector<double> params_;
    std::vector<long> offsets_; // per-layer start into params_
};

struct AdamState {
    double lr = 1e-3;
    double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
    long step_count = 0;
    std::vector<double> m, v;

    AdamState() = default;
    AdamState(std::size_t n_params, double lr);
    void apply(std::vector<double>& params, const std::vector<double>& grad);
};

// target <- (1 - tau) * target + tau * online
void soft_update(std::vector<double>& target, const std::vector<double>& online, double tau);

// Plain-text checkpoint: header, then per section a name + spec id + flat
// parameter vector in declaration order.
void save_networks(std::ostream& out, const std::vector<std::pair<std::string, const Network*>>&);
std::map<std::string, Network> load_networks(std::istream& in);

} // namespace flexcoord
