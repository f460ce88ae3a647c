#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <stdexcept>

#include "vecmec/neural.hpp"

using namespace vecmec;
using namespace vecmec::neural;

namespace {

// Plain re-implementation of the forward pass used as an independent oracle.
std::vector<double> oracle_forward(const DenseNet& net, const std::vector<double>& input) {
    std::vector<double> cur = input;
    const auto& params = net.params();
    size_t cursor = 0;
    for (const auto& spec : net.layers()) {
        std::vector<double> next(spec.fan_out, 0.0);
        for (int i = 0; i < spec.fan_in; ++i)
            for (int j = 0; j < spec.fan_out; ++j)
                next[j] += cur[i] * params[cursor + static_cast<size_t>(i) * spec.fan_out + j];
        cursor += static_cast<size_t>(spec.fan_in) * spec.fan_out;
        for (int j = 0; j < spec.fan_out; ++j) {
            next[j] += params[cursor + j];
            switch (spec.act) {
                case Activation::sigmoid: next[j] = 1.0 / (1.0 + std::exp(-next[j])); break;
                case Activation::relu: next[j] = std::max(0.0, next[j]); break;
                case Activation::linear: break;
            }
        }
        cursor += spec.fan_out;
        cur = std::move(next);
    }
    return cur;
}

}  // namespace

TEST_CASE("forward fixed points") {
    SUBCASE("zero parameters, sigmoid output is 0.5") {
        DenseNet net = DenseNet::with_layers({{4, 3, Activation::sigmoid}});
        auto out = net.forward(std::vector<double>{0.3, -1.0, 2.0, 0.0});
        for (double v : out) CHECK(v == doctest::Approx(0.5));
    }
    SUBCASE("identity linear layer reproduces the input") {
        DenseNet net = DenseNet::with_layers({{3, 3, Activation::linear}});
        auto& p = net.params();
        for (int i = 0; i < 3; ++i) p[static_cast<size_t>(i) * 3 + i] = 1.0;
        std::vector<double> x = {1.5, -2.25, 0.125};
        auto out = net.forward(x);
        for (int i = 0; i < 3; ++i) CHECK(out[i] == x[i]);
    }
    SUBCASE("shape mismatch is a contract violation") {
        DenseNet net = DenseNet::with_layers({{3, 2, Activation::linear}});
        CHECK_THROWS_AS(net.forward(std::vector<double>{1.0, 2.0}), std::logic_error);
    }
}

TEST_CASE("forward agrees with an independent re-implementation") {
    Rng rng(17);
    DenseNet net({{7, 16, Activation::sigmoid},
                  {16, 16, Activation::relu},
                  {16, 3, Activation::linear}},
                 rng);
    for (int k = 0; k < 100; ++k) {
        std::vector<double> x(7);
        for (auto& v : x) v = rng.uniform(-2.0, 2.0);
        auto got = net.forward(x);
        auto want = oracle_forward(net, x);
        for (int j = 0; j < 3; ++j) CHECK(std::abs(got[j] - want[j]) <= 1e-12);
    }
}

TEST_CASE("batch forward equals single-sample forward") {
    Rng rng(29);
    DenseNet net({{5, 8, Activation::sigmoid}, {8, 2, Activation::linear}}, rng);
    Matrix X(6, 5);
    for (auto& v : X.a) v = rng.uniform(-1.0, 1.0);
    DenseNet::Cache cache;
    const Matrix& Y = net.forward_batch(X, cache);
    for (int i = 0; i < 6; ++i) {
        auto row = net.forward(std::span<const double>(X.row(i), 5));
        for (int j = 0; j < 2; ++j) CHECK(std::abs(Y.at(i, j) - row[j]) <= 1e-14);
    }
}

TEST_CASE("linear layer gradient matches the closed form") {
    // loss = sum_j (Wx + b - y)_j^2, so dW_ij = 2(Wx+b-y)_j x_i
    Rng rng(3);
    DenseNet net({{3, 2, Activation::linear}}, rng);
    std::vector<double> x = {0.5, -1.0, 2.0};
    std::vector<double> y = {1.0, -0.5};
    auto out = net.forward(x);

    Matrix X(1, 3);
    std::copy(x.begin(), x.end(), X.a.begin());
    DenseNet::Cache cache;
    net.forward_batch(X, cache);
    Matrix dY(1, 2);
    for (int j = 0; j < 2; ++j) dY.at(0, j) = 2.0 * (out[j] - y[j]);
    std::vector<double> grad;
    net.backward_batch(cache, dY, grad);

    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 2; ++j)
            CHECK(grad[static_cast<size_t>(i) * 2 + j] ==
                  doctest::Approx(2.0 * (out[j] - y[j]) * x[i]).epsilon(1e-12));
    for (int j = 0; j < 2; ++j)
        CHECK(grad[6 + j] == doctest::Approx(2.0 * (out[j] - y[j])).epsilon(1e-12));
}

TEST_CASE("zero loss gradient gives zero parameter gradient") {
    Rng rng(5);
    DenseNet net({{4, 6, Activation::sigmoid}, {6, 2, Activation::linear}}, rng);
    Matrix X(2, 4);
    for (auto& v : X.a) v = rng.uniform(-1.0, 1.0);
    DenseNet::Cache cache;
    net.forward_batch(X, cache);
    Matrix dY(2, 2);  // zeros
    std::vector<double> grad;
    Matrix dX;
    net.backward_batch(cache, dY, grad, &dX);
    for (double g : grad) CHECK(g == 0.0);
    for (double g : dX.a) CHECK(g == 0.0);
}

TEST_CASE("backward requires a cached forward pass") {
    Rng rng(5);
    DenseNet net({{4, 2, Activation::linear}}, rng);
    DenseNet::Cache cache;
    Matrix dY(1, 2);
    std::vector<double> grad;
    CHECK_THROWS_AS(net.backward_batch(cache, dY, grad), std::logic_error);
}

TEST_CASE("dense gradients match central finite differences") {
    Rng rng(11);
    const double h = 1e-5;
    for (int draw = 0; draw < 20; ++draw) {
        DenseNet net({{6, 10, Activation::sigmoid},
                      {10, 8, Activation::relu},
                      {8, 1, Activation::linear}},
                     rng);
        Matrix X(3, 6);
        for (auto& v : X.a) v = rng.uniform(-1.5, 1.5);
        DenseNet::Cache cache;
        const Matrix& Y = net.forward_batch(X, cache);
        Matrix dY(Y.rows, Y.cols);
        std::fill(dY.a.begin(), dY.a.end(), 1.0);
        std::vector<double> grad;
        Matrix dX;
        net.backward_batch(cache, dY, grad, &dX);

        auto loss_at = [&]() {
            DenseNet::Cache c;
            const Matrix& out = net.forward_batch(X, c);
            double s = 0.0;
            for (double v : out.a) s += v;
            return s;
        };
        for (int k = 0; k < net.param_count(); ++k) {
            double& p = net.params()[static_cast<size_t>(k)];
            const double saved = p;
            p = saved + h;
            const double up = loss_at();
            p = saved - h;
            const double dn = loss_at();
            p = saved;
            const double fd = (up - dn) / (2.0 * h);
            CHECK(std::abs(grad[static_cast<size_t>(k)] - fd) <= 1e-4 * std::max(1.0, std::abs(fd)));
        }
        for (int i = 0; i < X.rows; ++i) {
            for (int j = 0; j < X.cols; j += 2) {
                double& p = X.at(i, j);
                const double saved = p;
                p = saved + h;
                const double up = loss_at();
                p = saved - h;
                const double dn = loss_at();
                p = saved;
                const double fd = (up - dn) / (2.0 * h);
                CHECK(std::abs(dX.at(i, j) - fd) <= 1e-4 * std::max(1.0, std::abs(fd)));
            }
        }
    }
}

TEST_CASE("critic gradients flow through both branches") {
    Rng rng(23);
    CriticNet critic(5, 3, 6, 8, rng);
    const double h = 1e-5;
    Matrix Xs(2, 5), Xa(2, 3);
    for (auto& v : Xs.a) v = rng.uniform(-1.0, 1.0);
    for (auto& v : Xa.a) v = rng.uniform(0.0, 1.0);

    CriticNet::Cache cache;
    const Matrix& Q = critic.forward_batch(Xs, Xa, cache);
    Matrix dY(Q.rows, 1);
    std::fill(dY.a.begin(), dY.a.end(), 1.0);
    CriticNet::Grads grads;
    Matrix dXs, dXa;
    critic.backward_batch(cache, dY, grads, &dXs, &dXa);

    auto loss_at = [&]() {
        CriticNet::Cache c;
        const Matrix& out = critic.forward_batch(Xs, Xa, c);
        double s = 0.0;
        for (double v : out.a) s += v;
        return s;
    };
    auto check_params = [&](std::vector<double>& params, const std::vector<double>& grad) {
        for (size_t k = 0; k < params.size(); ++k) {
            const double saved = params[k];
            params[k] = saved + h;
            const double up = loss_at();
            params[k] = saved - h;
            const double dn = loss_at();
            params[k] = saved;
            const double fd = (up - dn) / (2.0 * h);
            CHECK(std::abs(grad[k] - fd) <= 1e-4 * std::max(1.0, std::abs(fd)));
        }
    };
    check_params(critic.state_net().params(), grads.state);
    check_params(critic.action_net().params(), grads.action);
    check_params(critic.head_net().params(), grads.head);

    // the input-only fast path must agree with the full backward pass
    Matrix dXa_fast = critic.action_input_grad(cache, dY);
    REQUIRE(dXa_fast.rows == dXa.rows);
    for (size_t k = 0; k < dXa.a.size(); ++k) CHECK(dXa_fast.a[k] == dXa.a[k]);

    // the action-input gradient feeds the actor update, check it too
    for (int i = 0; i < Xa.rows; ++i) {
        for (int j = 0; j < Xa.cols; ++j) {
            const double saved = Xa.at(i, j);
            Xa.at(i, j) = saved + h;
            const double up = loss_at();
            Xa.at(i, j) = saved - h;
            const double dn = loss_at();
            Xa.at(i, j) = saved;
            const double fd = (up - dn) / (2.0 * h);
            CHECK(std::abs(dXa.at(i, j) - fd) <= 1e-4 * std::max(1.0, std::abs(fd)));
        }
    }
}

TEST_CASE("adam identities") {
    SUBCASE("zero gradient leaves parameters unchanged") {
        std::vector<double> params = {1.0, -2.0, 3.0};
        std::vector<double> grad = {0.0, 0.0, 0.0};
        Adam opt(3, 0.01);
        opt.step(params, grad);
        CHECK(params[0] == 1.0);
        CHECK(params[1] == -2.0);
        CHECK(params[2] == 3.0);
        CHECK(opt.steps() == 1);
    }
    SUBCASE("first step moves by about the learning rate") {
        std::vector<double> params = {0.0};
        std::vector<double> grad = {0.37};
        Adam opt(1, 0.001);
        opt.step(params, grad);
        CHECK(std::abs(params[0]) == doctest::Approx(0.001).epsilon(1e-6));
        CHECK(params[0] < 0.0);  // moves against the gradient
    }
    SUBCASE("quadratic bowl descends monotonically after warm-up") {
        std::vector<double> params = {5.0};
        Adam opt(1, 0.02);
        double prev = params[0] * params[0];
        int violations = 0;
        for (int k = 0; k < 500; ++k) {
            std::vector<double> grad = {2.0 * params[0]};
            opt.step(params, grad);
            const double loss = params[0] * params[0];
            if (k > 50 && loss > prev + 1e-12) violations += 1;
            prev = loss;
        }
        CHECK(violations == 0);
        CHECK(prev < 1.0);  // loss started at 25
    }
}

TEST_CASE("soft update") {
    SUBCASE("direct substitution") {
        std::vector<double> target = {0.0};
        std::vector<double> main = {1.0};
        soft_update(target, main, 0.005);
        CHECK(target[0] == doctest::Approx(0.005));
    }
    SUBCASE("fixed point") {
        std::vector<double> target = {0.7, -0.3};
        std::vector<double> main = target;
        soft_update(target, main, 0.005);
        CHECK(target[0] == doctest::Approx(0.7));
        CHECK(target[1] == doctest::Approx(-0.3));
    }
    SUBCASE("geometric contraction") {
        std::vector<double> target = {0.0};
        std::vector<double> main = {1.0};
        for (int k = 1; k <= 200; ++k) {
            soft_update(target, main, 0.005);
            const double want = 1.0 - std::pow(0.995, k);
            CHECK(target[0] == doctest::Approx(want).epsilon(1e-12));
        }
    }
    SUBCASE("contract violations") {
        std::vector<double> target = {0.0};
        std::vector<double> main = {1.0, 2.0};
        CHECK_THROWS_AS(soft_update(target, main, 0.005), std::logic_error);
        std::vector<double> same = {1.0};
        CHECK_THROWS_AS(soft_update(same, same, 0.0), std::invalid_argument);
        CHECK_THROWS_AS(soft_update(same, same, 1.0), std::invalid_argument);
    }
}

TEST_CASE("same seed, same initial weights") {
    Rng a(77), b(77);
    DenseNet na({{5, 7, Activation::sigmoid}, {7, 2, Activation::linear}}, a);
    DenseNet nb({{5, 7, Activation::sigmoid}, {7, 2, Activation::linear}}, b);
    CHECK(na.params() == nb.params());
}

TEST_CASE("checkpoint round trip") {
    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path() / "vecmec_ckpt_test";
    fs::create_directories(dir);

    Rng rng(99);
    DenseNet net({{4, 6, Activation::sigmoid}, {6, 3, Activation::linear}}, rng);
    const std::string dense_path = (dir / "actor.ckpt").string();
    save_dense_checkpoint(dense_path, net);
    DenseNet back = load_dense_checkpoint(dense_path);
    CHECK(back.params() == net.params());
    CHECK(back.layers().size() == net.layers().size());
    std::vector<double> x = {0.1, 0.2, 0.3, 0.4};
    CHECK(back.forward(x) == net.forward(x));

    CriticNet critic(6, 2, 4, 8, rng);
    const std::string critic_path = (dir / "critic.ckpt").string();
    save_critic_checkpoint(critic_path, critic);
    CriticNet critic_back = load_critic_checkpoint(critic_path);
    std::vector<double> s = {0.1, -0.2, 0.3, 0.0, 0.5, -0.6};
    std::vector<double> act = {0.4, 0.9};
    CHECK(critic_back.forward_one(s, act) == critic.forward_one(s, act));

    fs::remove_all(dir);
}
