#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "lznet/neural_cells.hpp"

using namespace lznet;
using ad::Tape;
using ad::Tensor;
using ad::Value;

namespace {

// hand-rolled scalar reference of the gate equations
struct ScalarLstmRef {
    const nn::LstmParams& p;
    std::size_t hidden, input;

    // gate order i, f, g, o
    void step(const std::vector<double>& x, std::vector<double>& h,
              std::vector<double>& c) const {
        std::vector<double> pre(4 * hidden, 0.0);
        for (std::size_t r = 0; r < 4 * hidden; ++r) {
            double acc = p.bias[r];
            for (std::size_t j = 0; j < input; ++j) acc += p.w_ih.at(r, j) * x[j];
            for (std::size_t j = 0; j < hidden; ++j) acc += p.w_hh.at(r, j) * h[j];
            pre[r] = acc;
        }
        auto sig = [](double v) { return 1.0 / (1.0 + std::exp(-v)); };
        for (std::size_t j = 0; j < hidden; ++j) {
            const double gi = sig(pre[j]);
            const double gf = sig(pre[hidden + j]);
            const double gg = std::tanh(pre[2 * hidden + j]);
            const double go = sig(pre[3 * hidden + j]);
            c[j] = gf * c[j] + gi * gg;
            h[j] = go * std::tanh(c[j]);
        }
    }
};

Tensor random_tensor(std::vector<std::size_t> shape, std::mt19937_64& rng) {
    Tensor t(std::move(shape));
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (auto& e : t.data()) e = gauss(rng);
    return t;
}

}  // namespace

TEST_CASE("zero-parameter LSTM analytics") {
    const std::size_t hidden = 4, input = 3;
    nn::LstmParams zero;
    zero.w_ih = Tensor({4 * hidden, input});
    zero.w_hh = Tensor({4 * hidden, hidden});
    zero.bias = Tensor({4 * hidden});

    Tape tape;
    auto params = nn::on_tape(tape, zero, false);
    auto x = tape.constant(Tensor({1, input}, {0.5, -1.0, 2.0}));

    // c = 0 -> h_hat = 0
    auto s1 = nn::lstm_cell(tape, x, tape.constant(Tensor({1, hidden})),
                            tape.constant(Tensor({1, hidden})), params);
    for (double v : s1.h_hat.val().data()) CHECK(v == doctest::Approx(0.0));

    // arbitrary c -> c' = 0.5 c, h_hat = 0.5 tanh(0.5 c)
    Tensor c0({1, hidden}, {1.0, -2.0, 0.3, 4.0});
    auto s2 = nn::lstm_cell(tape, x, tape.constant(Tensor({1, hidden})),
                            tape.constant(c0), params);
    for (std::size_t j = 0; j < hidden; ++j) {
        CHECK(s2.c.val()[j] == doctest::Approx(0.5 * c0[j]));
        CHECK(s2.h_hat.val()[j] == doctest::Approx(0.5 * std::tanh(0.5 * c0[j])));
    }
}

TEST_CASE("LSTM cell matches the scalar oracle") {
    const std::size_t hidden = 8, input = 5;
    auto params = nn::init_lstm(input, hidden, 99);
    ScalarLstmRef ref{params, hidden, input};

    std::mt19937_64 rng(3);
    std::vector<double> h(hidden, 0.0), c(hidden, 0.0);
    Tensor th({1, hidden}), tc({1, hidden});

    for (int step = 0; step < 4; ++step) {
        std::vector<double> x(input);
        for (auto& e : x) e = std::normal_distribution<double>(0, 1)(rng);

        Tape tape;
        auto pv = nn::on_tape(tape, params, false);
        auto xv = tape.constant(Tensor({1, input}, x));
        auto out = nn::lstm_cell(tape, xv, tape.constant(th), tape.constant(tc), pv);

        ref.step(x, h, c);
        for (std::size_t j = 0; j < hidden; ++j) {
            CHECK(out.h_hat.val()[j] == doctest::Approx(h[j]).epsilon(1e-12));
            CHECK(out.c.val()[j] == doctest::Approx(c[j]).epsilon(1e-12));
            th[j] = out.h_hat.val()[j];
            tc[j] = out.c.val()[j];
        }
    }
}

TEST_CASE("LSTM cell gradients pass grad_check") {
    const std::size_t hidden = 6, input = 4, batch = 3;
    std::mt19937_64 rng(17);
    auto params = nn::init_lstm(input, hidden, 5);
    auto x = random_tensor({batch, input}, rng);
    auto h = random_tensor({batch, hidden}, rng);
    auto c = random_tensor({batch, hidden}, rng);
    Tensor target = random_tensor({batch, hidden}, rng);

    const double err = ad::grad_check(
        [&](Tape& t, const std::vector<Value>& in) {
            nn::LstmValues pv{in[0], in[1], in[2]};
            auto out = nn::lstm_cell(t, in[3], in[4], in[5], pv);
            return t.mse_loss(out.h_hat, target);
        },
        {params.w_ih, params.w_hh, params.bias, x, h, c});
    CHECK(err < 1e-4);
}

TEST_CASE("novelty score analytics") {
    const std::size_t hidden = 4;
    std::mt19937_64 rng(1);
    nn::NoveltyParams p;
    p.w = Tensor({hidden, hidden});
    p.bias = Tensor::scalar(0.0);

    Tape tape;
    auto pv = nn::on_tape(tape, p, false);
    auto r_hat = tape.constant(Tensor({1, hidden}, {0.1, 0.2, 0.3, 0.4}));
    auto r = tape.constant(Tensor({hidden}, {1.0, 1.0, 1.0, 1.0}));

    auto soft = nn::novelty_score(tape, r_hat, r, pv, nn::NoveltyMode::kSoft, rng);
    CHECK(soft.val()[0] == doctest::Approx(0.5));  // W = 0, b = 0

    nn::NoveltyParams p1{Tensor({hidden, hidden}), Tensor::scalar(1.0)};
    auto pv1 = nn::on_tape(tape, p1, false);
    auto s1 = nn::novelty_score(tape, r_hat, r, pv1, nn::NoveltyMode::kSoft, rng);
    CHECK(s1.val()[0] == doctest::Approx(0.7310585786));

    nn::NoveltyParams pm{Tensor({hidden, hidden}), Tensor::scalar(-1.0)};
    auto pvm = nn::on_tape(tape, pm, false);
    auto sm = nn::novelty_score(tape, r_hat, r, pvm, nn::NoveltyMode::kSoft, rng);
    CHECK(sm.val()[0] == doctest::Approx(0.2689414214));
}

TEST_CASE("hard mode saturates deterministically at s = 1") {
    const std::size_t hidden = 2;
    std::mt19937_64 rng(8);
    nn::NoveltyParams p{Tensor({hidden, hidden}), Tensor::scalar(1000.0)};

    Tape tape;
    auto pv = nn::on_tape(tape, p, false);
    auto r_hat = tape.constant(Tensor({3, hidden}, {1, 1, 1, 1, 1, 1}));
    auto r = tape.constant(Tensor({hidden}, {1, 1}));
    auto hard = nn::novelty_score(tape, r_hat, r, pv, nn::NoveltyMode::kHard, rng);
    for (double v : hard.val().data()) CHECK(v == 1.0);
}

TEST_CASE("novelty score is in [0,1]; hard mode in {0,1}") {
    const std::size_t hidden = 5, batch = 7;
    std::mt19937_64 rng(21);
    auto p = nn::init_novelty(hidden, 0.0, 33);
    for (int trial = 0; trial < 20; ++trial) {
        Tape tape;
        auto pv = nn::on_tape(tape, p, false);
        auto r_hat = tape.constant(random_tensor({batch, hidden}, rng));
        auto r = tape.constant(random_tensor({hidden}, rng));
        auto soft = nn::novelty_score(tape, r_hat, r, pv, nn::NoveltyMode::kSoft, rng);
        for (double v : soft.val().data()) {
            CHECK(v >= 0.0);
            CHECK(v <= 1.0);
        }
        auto hard = nn::novelty_score(tape, r_hat, r, pv, nn::NoveltyMode::kHard, rng);
        for (double v : hard.val().data()) CHECK((v == 0.0 || v == 1.0));
    }
}

TEST_CASE("novelty swap symmetry: sigma(rh^T W r) = sigma(r^T W^T rh)") {
    const std::size_t hidden = 6;
    std::mt19937_64 rng(5);
    auto p = nn::init_novelty(hidden, 1.0, 12);
    Tensor wt({hidden, hidden});
    for (std::size_t i = 0; i < hidden; ++i) {
        for (std::size_t j = 0; j < hidden; ++j) wt.at(i, j) = p.w.at(j, i);
    }
    auto r_hat = random_tensor({2, hidden}, rng);
    auto r = random_tensor({2, hidden}, rng);

    Tape tape;
    auto pv = nn::on_tape(tape, p, false);
    nn::NoveltyParams swapped{wt, p.bias};
    auto pv2 = nn::on_tape(tape, swapped, false);
    auto a = nn::novelty_score(tape, tape.constant(r_hat), tape.constant(r), pv,
                               nn::NoveltyMode::kSoft, rng);
    auto b = nn::novelty_score(tape, tape.constant(r), tape.constant(r_hat), pv2,
                               nn::NoveltyMode::kSoft, rng);
    for (std::size_t i = 0; i < 2; ++i) {
        CHECK(a.val()[i] == doctest::Approx(b.val()[i]).epsilon(1e-12));
    }
}

TEST_CASE("novelty gradients pass grad_check") {
    const std::size_t hidden = 5, batch = 4;
    std::mt19937_64 rng(31);
    auto p = nn::init_novelty(hidden, -1.0, 44);
    auto r_hat = random_tensor({batch, hidden}, rng);
    auto r = random_tensor({hidden}, rng);

    const double err = ad::grad_check(
        [&rng](Tape& t, const std::vector<Value>& in) {
            nn::NoveltyValues pv{in[0], in[1]};
            std::mt19937_64 local(0);
            auto s = nn::novelty_score(t, in[2], in[3], pv, nn::NoveltyMode::kSoft, local);
            return t.sum(t.mul(s, s));
        },
        {p.w, p.bias, r_hat, r});
    CHECK(err < 1e-4);
}

TEST_CASE("straight-through expectation approximates the soft gradient") {
    // f(p) = sum(k * p); soft gradient wrt s is k. Average the hard-mode
    // gradient over many sample draws and compare.
    const std::size_t n = 4;
    Tensor s({n}, {0.2, 0.5, 0.7, 0.9});
    Tensor k({n}, {1.0, -2.0, 0.5, 3.0});
    std::mt19937_64 rng(1234);

    Tensor mean_grad({n});
    const int samples = 10000;
    for (int it = 0; it < samples; ++it) {
        Tape tape;
        auto sv = tape.leaf(s, true);
        auto hard = tape.bernoulli(sv, rng, true);
        auto loss = tape.sum(tape.mul(hard, tape.constant(k)));
        tape.backward(loss);
        for (std::size_t i = 0; i < n; ++i) mean_grad[i] += tape.grad(sv)[i];
    }
    for (std::size_t i = 0; i < n; ++i) {
        mean_grad[i] /= samples;
        CHECK(mean_grad[i] == doctest::Approx(k[i]).epsilon(0.05));
    }
}

TEST_CASE("init contracts") {
    auto p = nn::init_novelty(8, -1.0, 3);
    CHECK(p.bias.scalar_value() == -1.0);
    CHECK_THROWS_AS(nn::init_novelty(8, 0.5, 3), ConfigError);

    auto a = nn::init_lstm(3, 8, 7);
    auto b = nn::init_lstm(3, 8, 7);
    CHECK(a.w_ih.data() == b.w_ih.data());
    CHECK(a.w_hh.data() == b.w_hh.data());
    CHECK(a.bias.data() == b.bias.data());

    for (std::size_t i = 8; i < 16; ++i) CHECK(a.bias[i] == 1.0);  // forget gate
    const double bound = 1.0 / std::sqrt(8.0);
    for (double v : a.w_ih.data()) {
        CHECK(v >= -bound);
        CHECK(v <= bound);
    }
}
