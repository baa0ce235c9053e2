#include "flexcoord/neural.hpp"

#include <cmath>
#include <istream>
#include <ostream>
#include <random>
#include <sstream>
#include <stdexcept>

#include "flexcoord/util.hpp"

namespace flexcoord {

namespace {

double activate(Activation a, double x) {
    switch (a) {
        case Activation::Linear: return x;
        case Activation::Relu: return x > 0.0 ? x : 0.0;
        case Activation::Tanh: return std::tanh(x);
        case Activation::Sigmoid: return 1.0 / (1.0 + std::exp(-x));
    }
    return x;
}

// derivative expressed through the activated value
double activate_grad(Activation a, double y) {
    switch (a) {
        case Activation::Linear: return 1.0;
        case Activation::Relu: return y > 0.0 ? 1.0 : 0.0;
        case Activation::Tanh: return 1.0 - y * y;
        case Activation::Sigmoid: return y * (1.0 - y);
    }
    return 1.0;
}

const char* act_name(Activation a) {
    switch (a) {
        case Activation::Linear: return "linear";
        case Activation::Relu: return "relu";
        case Activation::Tanh: return "tanh";
        case Activation::Sigmoid: return "sigmoid";
    }
    return "?";
}

Activation act_from(const std::string& s) {
    if (s == "linear") return Activation::Linear;
    if (s == "relu") return Activation::Relu;
    if (s == "tanh") return Activation::Tanh;
    if (s == "sigmoid") return Activation::Sigmoid;
    throw std::invalid_argument("unknown activation: " + s);
}

} // namespace

LayerSpec dense(int in, int out, Activation act) {
    LayerSpec l;
    l.kind = LayerSpec::Kind::Dense;
    l.in = in;
    l.out = out;
    l.act = act;
    return l;
}

LayerSpec dense_heads(int in, std::vector<Activation> unit_acts) {
    LayerSpec l = dense(in, static_cast<int>(unit_acts.size()));
    l.unit_acts = std::move(unit_acts);
    return l;
}

LayerSpec conv1d(int in_channels, int out_channels, int length, Activation act) {
    LayerSpec l;
    l.kind = LayerSpec::Kind::Conv1d;
    l.in_channels = in_channels;
    l.out_channels = out_channels;
    l.length = length;
    l.act = act;
    return l;
}

long NetworkSpec::param_count() const {
    long total = 0;
    for (const LayerSpec& l : layers) total += l.param_count();
    return total;
}

void NetworkSpec::check_composition() const {
    for (std::size_t k = 1; k < layers.size(); ++k)
        if (layers[k].input_size() != layers[k - 1].output_size())
            throw std::invalid_argument("layer " + std::to_string(k) + " expects input " +
                                        std::to_string(layers[k].input_size()) + ", previous emits " +
                                        std::to_string(layers[k - 1].output_size()));
}

std::string NetworkSpec::id() const {
    std::string s;
    for (const LayerSpec& l : layers) {
        if (!s.empty()) s += ';';
        if (l.kind == LayerSpec::Kind::Conv1d) {
            s += "conv1d:" + std::to_string(l.in_channels) + "x" + std::to_string(l.length) + "->" +
                 std::to_string(l.out_channels) + "," + act_name(l.act);
        } else {
            s += "dense:" + std::to_string(l.in) + "->" + std::to_string(l.out) + ",";
            if (l.unit_acts.empty()) {
                s += act_name(l.act);
            } else {
                for (std::size_t u = 0; u < l.unit_acts.size(); ++u)
                    s += std::string(u ? "|" : "") + act_name(l.unit_acts[u]);
            }
        }
    }
    return s;
}

NetworkSpec NetworkSpec::parse(const std::string& id) {
    NetworkSpec spec;
    std::stringstream ss(id);
    std::string item;
    while (std::getline(ss, item, ';')) {
        const auto colon = item.find(':');
        const auto comma = item.rfind(',');
        if (colon == std::string::npos || comma == std::string::npos)
            throw std::invalid_argument("bad layer id: " + item);
        const std::string kind = item.substr(0, colon);
        const std::string shape = item.substr(colon + 1, comma - colon - 1);
        const std::string acts = item.substr(comma + 1);
        const auto arrow = shape.find("->");
        if (arrow == std::string::npos) throw std::invalid_argument("bad layer shape: " + item);
        if (kind == "conv1d") {
            const auto x = shape.find('x');
            LayerSpec l = conv1d(std::stoi(shape.substr(0, x)),
                                 std::stoi(shape.substr(arrow + 2)),
                                 std::stoi(shape.substr(x + 1, arrow - x - 1)), act_from(acts));
            spec.layers.push_back(l);
        } else if (kind == "dense") {
            const int in = std::stoi(shape.substr(0, arrow));
            const int out = std::stoi(shape.substr(arrow + 2));
            if (acts.find('|') == std::string::npos) {
                spec.layers.push_back(dense(in, out, act_from(acts)));
            } else {
                std::vector<Activation> unit;
                std::stringstream as(acts);
                std::string a;
                while (std::getline(as, a, '|')) unit.push_back(act_from(a));
                if (static_cast<int>(unit.size()) != out)
                    throw std::invalid_argument("head count mismatch in: " + item);
                spec.layers.push_back(dense_heads(in, std::move(unit)));
            }
        } else {
            throw std::invalid_argument("unknown layer kind: " + kind);
        }
    }
    spec.check_composition();
    return spec;
}

Network::Network(NetworkSpec spec, std::uint64_t seed) : spec_(std::move(spec)) {
    spec_.check_composition();
    offsets_.resize(spec_.layers.size());
    long total = 0;
    for (std::size_t k = 0; k < spec_.layers.size(); ++k) {
        offsets_[k] = total;
        total += spec_.layers[k].param_count();
    }
    params_.assign(total, 0.0);
    std::mt19937_64 rng(seed);
    for (std::size_t k = 0; k < spec_.layers.size(); ++k) {
        const LayerSpec& l = spec_.layers[k];
        const int fan_in = l.kind == LayerSpec::Kind::Dense ? l.in : l.in_channels * 3;
        const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
        std::uniform_real_distribution<double> u(-bound, bound);
        // weights and biases both fan-in scaled; a nonzero bias keeps
        // pre-activations off the exact rectifier kink even when a whole
        // layer's input goes inactive
        for (long j = 0; j < l.param_count(); ++j) params_[offsets_[k] + j] = u(rng);
    }
}

std::vector<double> Network::forward(const std::vector<double>& input, Cache* cache) const {
    if (static_cast<int>(input.size()) != spec_.input_size())
        throw std::invalid_argument("forward: input size " + std::to_string(input.size()) +
                                    ", expected " + std::to_string(spec_.input_size()));
    if (cache) {
        cache->values.clear();
        cache->values.push_back(input);
    }
    std::vector<double> x = input;
    for (std::size_t k = 0; k < spec_.layers.size(); ++k) {
        const LayerSpec& l = spec_.layers[k];
        const double* w = params_.data() + offsets_[k];
        std::vector<double> y(l.output_size());
        if (l.kind == LayerSpec::Kind::Dense) {
            const double* b = w + static_cast<long>(l.out) * l.in;
            for (int o = 0; o < l.out; ++o) {
                double z = b[o];
                const double* row = w + static_cast<long>(o) * l.in;
                for (int i = 0; i < l.in; ++i) z += row[i] * x[i];
                y[o] = activate(l.unit_acts.empty() ? l.act : l.unit_acts[o], z);
            }
        } else {
            const int L = l.length;
            const double* b = w + static_cast<long>(l.out_channels) * l.in_channels * 3;
            for (int oc = 0; oc < l.out_channels; ++oc) {
                for (int p = 0; p < L; ++p) {
                    double z = b[oc];
                    for (int ic = 0; ic < l.in_channels; ++ic) {
                        const double* kw = w + (static_cast<long>(oc) * l.in_channels + ic) * 3;
                        for (int t = 0; t < 3; ++t) {
                            const int src = p + t - 1;
                            if (src >= 0 && src < L) z += kw[t] * x[ic * L + src];
                        }
                    }
                    y[oc * L + p] = activate(l.act, z);
                }
            }
        }
        x = std::move(y);
        if (cache) cache->values.push_back(x);
    }
    return x;
}

std::vector<double> Network::backward(const Cache& cache, const std::vector<double>& output_grad,
                                      std::vector<double>& param_grad) const {
    if (cache.values.size() != spec_.layers.size() + 1)
        throw std::invalid_argument("backward: stale or missing cache");
    if (param_grad.size() != params_.size())
        throw std::invalid_argument("backward: param_grad size mismatch");
    std::vector<double> dy = output_grad;
    for (int k = static_cast<int>(spec_.layers.size()) - 1; k >= 0; --k) {
        const LayerSpec& l = spec_.layers[k];
        const std::vector<double>& x = cache.values[k];
        const std::vector<double>& y = cache.values[k + 1];
        const double* w = params_.data() + offsets_[k];
        double* gw = param_grad.data() + offsets_[k];
        std::vector<double> dx(l.input_size(), 0.0);
        if (l.kind == LayerSpec::Kind::Dense) {
            double* gb = gw + static_cast<long>(l.out) * l.in;
            for (int o = 0; o < l.out; ++o) {
                const Activation act = l.unit_acts.empty() ? l.act : l.unit_acts[o];
                const double dz = dy[o] * activate_grad(act, y[o]);
                if (dz == 0.0) continue;
                gb[o] += dz;
                const double* row = w + static_cast<long>(o) * l.in;
                double* grow = gw + static_cast<long>(o) * l.in;
                for (int i = 0; i < l.in; ++i) {
                    grow[i] += dz * x[i];
                    dx[i] += dz * row[i];
                }
            }
        } else {
            const int L = l.length;
            double* gb = gw + static_cast<long>(l.out_channels) * l.in_channels * 3;
            for (int oc = 0; oc < l.out_channels; ++oc) {
                for (int p = 0; p < L; ++p) {
                    const double dz = dy[oc * L + p] * activate_grad(l.act, y[oc * L + p]);
                    if (dz == 0.0) continue;
                    gb[oc] += dz;
                    for (int ic = 0; ic < l.in_channels; ++ic) {
                        const long base = (static_cast<long>(oc) * l.in_channels + ic) * 3;
                        for (int t = 0; t < 3; ++t) {
                            const int src = p + t - 1;
                            if (src < 0 || src >= L) continue;
                            gw[base + t] += dz * x[ic * L + src];
                            dx[ic * L + src] += dz * w[base + t];
                        }
                    }
                }
            }
        }
        dy = std::move(dx);
    }
    return dy;
}

AdamState::AdamState(std::size_t n_params, double lr_) : lr(lr_), m(n_params, 0.0), v(n_params, 0.0) {}

void AdamState::apply(std::vector<double>& params, const std::vector<double>& grad) {
    if (params.size() != m.size() || grad.size() != m.size())
        throw std::invalid_argument("AdamState::apply: size mismatch");
    ++step_count;
    const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(step_count));
    const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(step_count));
    for (std::size_t j = 0; j < params.size(); ++j) {
        m[j] = beta1 * m[j] + (1.0 - beta1) * grad[j];
        v[j] = beta2 * v[j] + (1.0 - beta2) * grad[j] * grad[j];
        params[j] -= lr * (m[j] / bc1) / (std::sqrt(v[j] / bc2) + eps);
    }
}

void soft_update(std::vector<double>& target, const std::vector<double>& online, double tau) {
    if (target.size() != online.size())
        throw std::invalid_argument("soft_update: size mismatch");
    for (std::size_t j = 0; j < target.size(); ++j)
        target[j] = (1.0 - tau) * target[j] + tau * online[j];
}

void save_networks(std::ostream& out,
                   const std::vector<std::pair<std::string, const Network*>>& nets) {
    out << "flexcoord-params v1\n" << nets.size() << "\n";
    for (const auto& [name, net] : nets) {
        out << "section " << name << " " << net->spec().id() << " " << net->params().size() << "\n";
        for (double p : net->params()) out << format_double(p) << "\n";
    }
}

std::map<std::string, Network> load_networks(std::istream& in) {
    std::string header;
    std::getline(in, header);
    if (header != "flexcoord-params v1")
        throw std::runtime_error("unrecognised checkpoint header: " + header);
    std::size_t count = 0;
    in >> count;
    std::map<std::string, Network> nets;
    for (std::size_t s = 0; s < count; ++s) {
        std::string tag, name, spec_id;
        std::size_t n_params = 0;
        in >> tag >> name >> spec_id >> n_params;
        if (tag != "section") throw std::runtime_error("malformed checkpoint section");
        Network net(NetworkSpec::parse(spec_id), 0);
        if (net.params().size() != n_params)
            throw std::runtime_error("checkpoint parameter count disagrees with spec " + spec_id);
        for (std::size_t j = 0; j < n_params; ++j) {
            std::string v;
            in >> v;
            auto parsed = parse_double(v);
            if (!parsed) throw std::runtime_error("bad parameter value in checkpoint: " + v);
            net.params()[j] = *parsed;
        }
        nets.emplace(name, std::move(net));
    }
    return nets;
}

} // namespace flexcoord
