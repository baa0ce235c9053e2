#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "flexcoord/neural.hpp"
#include "grad_oracles.hpp"

using namespace flexcoord;
using flexcoord::testing::max_relative_gradient_error;

TEST_CASE("identity dense layer passes input through") {
    Network net({{dense(3, 3, Activation::Linear)}}, 0);
    auto& p = net.params();
    std::fill(p.begin(), p.end(), 0.0);
    p[0] = p[4] = p[8] = 1.0; // W = I, bias 0
    CHECK(net.forward({1.0, -2.0, 0.5}) == std::vector<double>{1.0, -2.0, 0.5});
}

TEST_CASE("identity convolution kernel passes input through") {
    Network net({{conv1d(1, 1, 4)}}, 0);
    auto& p = net.params();
    p[0] = 0.0; p[1] = 1.0; p[2] = 0.0; p[3] = 0.0; // kernel [0,1,0], bias 0
    const std::vector<double> x{0.3, -1.2, 2.0, 0.7};
    CHECK(net.forward(x) == x);
}

TEST_CASE("box convolution with zero padding") {
    Network net({{conv1d(1, 1, 4)}}, 0);
    auto& p = net.params();
    p[0] = p[1] = p[2] = 1.0; // kernel [1,1,1]
    p[3] = 0.0;
    auto y = net.forward({1.0, 2.0, 3.0, 4.0});
    CHECK(y == std::vector<double>{3.0, 6.0, 9.0, 7.0});
}

TEST_CASE("zero output gradient leaves parameters untouched") {
    Network net({{dense(4, 3, Activation::Tanh), dense(3, 2, Activation::Sigmoid)}}, 7);
    Network::Cache cache;
    net.forward({0.1, 0.2, 0.3, 0.4}, &cache);
    std::vector<double> grad(net.params().size(), 0.0);
    net.backward(cache, {0.0, 0.0}, grad);
    for (double g : grad) CHECK(g == 0.0);
}

TEST_CASE("single dense layer matches the closed-form squared-error gradient") {
    Network net({{dense(2, 1, Activation::Linear)}}, 3);
    const std::vector<double> x{0.7, -0.4};
    const double target = 0.3;
    Network::Cache cache;
    const double out = net.forward(x, &cache)[0];
    std::vector<double> grad(net.params().size(), 0.0);
    net.backward(cache, {2.0 * (out - target)}, grad);
    // d/dW = 2 (Wx + b - y) x^T, d/db = 2 (Wx + b - y)
    CHECK(grad[0] == doctest::Approx(2.0 * (out - target) * x[0]).epsilon(1e-12));
    CHECK(grad[1] == doctest::Approx(2.0 * (out - target) * x[1]).epsilon(1e-12));
    CHECK(grad[2] == doctest::Approx(2.0 * (out - target)).epsilon(1e-12));
}

TEST_CASE("gradients match central differences across layer types and seeds") {
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        NetworkSpec spec{{conv1d(2, 3, 5, Activation::Tanh), dense(15, 8, Activation::Relu),
                          dense_heads(8, {Activation::Tanh, Activation::Sigmoid,
                                          Activation::Linear})}};
        Network net(spec, seed);
        std::mt19937_64 rng(seed * 31 + 1);
        std::uniform_real_distribution<double> u(-1.0, 1.0);

        std::vector<double> input(spec.input_size());
        std::vector<double> target(spec.output_size());
        for (double& v : input) v = u(rng);
        for (double& v : target) v = u(rng);

        auto loss = [&] {
            auto y = net.forward(input);
            double e = 0.0;
            for (std::size_t k = 0; k < y.size(); ++k) e += (y[k] - target[k]) * (y[k] - target[k]);
            return e;
        };
        Network::Cache cache;
        auto y = net.forward(input, &cache);
        std::vector<double> dy(y.size());
        for (std::size_t k = 0; k < y.size(); ++k) dy[k] = 2.0 * (y[k] - target[k]);
        std::vector<double> analytic(net.params().size(), 0.0);
        net.backward(cache, dy, analytic);

        CHECK(max_relative_gradient_error(net.params(), loss, analytic) < 1e-4);
    }
}

TEST_CASE("input gradients are exact too") {
    Network net({{dense(3, 4, Activation::Tanh), dense(4, 1, Activation::Linear)}}, 11);
    std::vector<double> input{0.2, -0.5, 0.9};
    Network::Cache cache;
    net.forward(input, &cache);
    std::vector<double> pg(net.params().size(), 0.0);
    auto dx = net.backward(cache, {1.0}, pg);

    for (int j = 0; j < 3; ++j) {
        const double keep = input[j];
        input[j] = keep + 1e-6;
        const double up = net.forward(input)[0];
        input[j] = keep - 1e-6;
        const double down = net.forward(input)[0];
        input[j] = keep;
        CHECK(dx[j] == doctest::Approx((up - down) / 2e-6).epsilon(1e-5));
    }
}

TEST_CASE("shape mismatches are rejected") {
    CHECK_THROWS_AS(Network({{dense(3, 4), dense(5, 2)}}, 0), std::invalid_argument);
    Network net({{dense(3, 2)}}, 0);
    CHECK_THROWS_AS(net.forward({1.0}), std::invalid_argument);
    Network::Cache stale;
    std::vector<double> g(net.params().size(), 0.0);
    CHECK_THROWS_AS(net.backward(stale, {1.0, 0.0}, g), std::invalid_argument);
}

TEST_CASE("adaptive moments: zero gradient is a no-op") {
    Network net({{dense(2, 2)}}, 5);
    auto before = net.params();
    AdamState opt(before.size(), 0.1);
    std::vector<double> zero(before.size(), 0.0);
    opt.apply(net.params(), zero);
    CHECK(net.params() == before);
}

TEST_CASE("adaptive moments: first step displaces by about the learning rate") {
    std::vector<double> params{1.0};
    AdamState opt(1, 0.1);
    opt.apply(params, {1.0});
    // bias-corrected m and v both equal g on the first step
    CHECK(params[0] == doctest::Approx(1.0 - 0.1).epsilon(1e-6));
}

TEST_CASE("adaptive moments: constant gradient moves monotonically against it") {
    std::vector<double> params{0.0};
    AdamState opt(1, 0.01);
    double prev = params[0];
    for (int k = 0; k < 50; ++k) {
        opt.apply(params, {2.5});
        CHECK(params[0] < prev);
        prev = params[0];
    }
}

TEST_CASE("soft update blends and converges geometrically") {
    std::vector<double> target{0.0, 4.0};
    const std::vector<double> online{2.0, 2.0};
    soft_update(target, online, 0.5);
    CHECK(target == std::vector<double>{1.0, 3.0});

    std::vector<double> copy{0.0, 4.0};
    soft_update(copy, online, 1.0);
    CHECK(copy == online);

    std::vector<double> t2{0.0};
    for (int k = 0; k < 60; ++k) soft_update(t2, {1.0}, 0.1);
    CHECK(t2[0] == doctest::Approx(1.0 - std::pow(0.9, 60)).epsilon(1e-12));
}

TEST_CASE("bounded heads stay inside their ranges") {
    Network net({{dense(2, 8, Activation::Relu),
                  dense_heads(8, {Activation::Tanh, Activation::Sigmoid, Activation::Sigmoid})}},
                9);
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> u(-50.0, 50.0);
    for (int k = 0; k < 200; ++k) {
        auto y = net.forward({u(rng), u(rng)});
        CHECK(y[0] >= -1.0);
        CHECK(y[0] <= 1.0);
        CHECK(y[1] >= 0.0);
        CHECK(y[1] <= 1.0);
        CHECK(y[2] >= 0.0);
        CHECK(y[2] <= 1.0);
    }
}

TEST_CASE("identical seeds give identical parameter trajectories") {
    auto run = [](std::uint64_t seed) {
        Network net({{dense(3, 4, Activation::Tanh), dense(4, 1)}}, seed);
        AdamState opt(net.params().size(), 1e-2);
        for (int k = 0; k < 10; ++k) {
            Network::Cache cache;
            const double y = net.forward({0.1, 0.2, 0.3}, &cache)[0];
            std::vector<double> g(net.params().size(), 0.0);
            net.backward(cache, {2.0 * (y - 1.0)}, g);
            opt.apply(net.params(), g);
        }
        return net.params();
    };
    CHECK(run(42) == run(42));
    CHECK(run(42) != run(43));
}

TEST_CASE("checkpoints round-trip through the text format") {
    Network actor({{conv1d(1, 4, 6, Activation::Relu), dense(24, 5, Activation::Tanh)}}, 21);
    Network critic({{dense(8, 6, Activation::Relu), dense(6, 1)}}, 22);
    std::stringstream buf;
    save_networks(buf, {{"actor", &actor}, {"critic", &critic}});
    auto loaded = load_networks(buf);
    REQUIRE(loaded.count("actor") == 1);
    REQUIRE(loaded.count("critic") == 1);
    CHECK(loaded.at("actor").params() == actor.params());
    CHECK(loaded.at("critic").params() == critic.params());
    CHECK(loaded.at("actor").spec().id() == actor.spec().id());
}

TEST_CASE("network spec ids parse back to the same spec") {
    NetworkSpec spec{{conv1d(1, 8, 24, Activation::Relu), dense(192, 64, Activation::Relu),
                      dense_heads(64, {Activation::Tanh, Activation::Sigmoid,
                                       Activation::Sigmoid})}};
    CHECK(NetworkSpec::parse(spec.id()).id() == spec.id());
    CHECK(spec.param_count() == (1 * 8 * 3 + 8) + (192 * 64 + 64) + (64 * 3 + 3));
}
