#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>

#include "lznet/tasks.hpp"

using namespace lznet;

namespace {

struct TempFile {
    std::string path;
    explicit TempFile(const std::string& name, const std::string& content)
        : path("/tmp/lznet_test_" + name) {
        std::ofstream f(path);
        f << content;
    }
    ~TempFile() { std::remove(path.c_str()); }
};

}  // namespace

TEST_CASE("addition batches satisfy the two-hot invariants") {
    const std::size_t steps = 7;  // odd: first half is indices 0..2
    const std::size_t half = steps / 2;
    std::mt19937_64 seeds(1);
    for (int trial = 0; trial < 100; ++trial) {
        auto batch = tasks::gen_addition(steps, 100, seeds());
        for (std::size_t b = 0; b < batch.batch; ++b) {
            std::size_t ones_lo = 0, ones_hi = 0;
            double expect = 0.0;
            for (std::size_t t = 0; t < steps; ++t) {
                const double ind = batch.indicators[b * steps + t];
                const double val = batch.values[b * steps + t];
                CHECK((ind == 0.0 || ind == 1.0));
                CHECK(val >= 0.0);
                CHECK(val < 1.0);
                if (ind == 1.0) {
                    (t < half ? ones_lo : ones_hi) += 1;
                    expect += val;
                }
            }
            CHECK(ones_lo == 1);
            CHECK(ones_hi == 1);
            CHECK(batch.targets[b] == expect);
            CHECK(batch.targets[b] >= 0.0);
            CHECK(batch.targets[b] < 2.0);
        }
    }
}

TEST_CASE("addition determinism and mean target") {
    auto a = tasks::gen_addition(10, 16, 42);
    auto b = tasks::gen_addition(10, 16, 42);
    CHECK(a.values == b.values);
    CHECK(a.indicators == b.indicators);
    CHECK(a.targets == b.targets);
    CHECK_THROWS_AS(tasks::gen_addition(1, 4, 0), Error);

    double mean = 0.0;
    std::size_t count = 0;
    auto big = tasks::gen_addition(20, 100000, 7);
    for (double t : big.targets) {
        mean += t;
        ++count;
    }
    mean /= static_cast<double>(count);
    CHECK(mean == doctest::Approx(1.0).epsilon(0.01));
}

TEST_CASE("the reference addition row sums to 1.05") {
    // values and indicators arranged as in the worked example
    const std::vector<double> values{0.33, 0.56, 0.78, 0.21, 0.49, 0.83};
    const std::vector<double> indicators{0, 1, 0, 0, 1, 0};
    double target = 0.0;
    for (std::size_t t = 0; t < values.size(); ++t) target += values[t] * indicators[t];
    CHECK(target == doctest::Approx(1.05));
}

TEST_CASE("addition baseline") {
    CHECK(tasks::addition_baseline_mse() == doctest::Approx(1.0 / 6.0).epsilon(1e-15));

    // Monte Carlo MSE of the constant-1 predictor
    double mse = 0.0;
    const std::size_t samples = 1000000;
    auto batch = tasks::gen_addition(6, samples, 99);
    for (double t : batch.targets) mse += (t - 1.0) * (t - 1.0);
    mse /= static_cast<double>(samples);
    CHECK(mse == doctest::Approx(1.0 / 6.0).epsilon(0.012));

    // a batch whose two indicated values are 0.5 each has zero error
    CHECK((0.5 + 0.5 - 1.0) * (0.5 + 0.5 - 1.0) == 0.0);
}

TEST_CASE("copy batches reproduce the reference layout") {
    auto batch = tasks::gen_copy(5, 3, 10, 4, 3);
    CHECK(batch.length == 20);
    for (std::size_t b = 0; b < batch.batch; ++b) {
        const int* in = batch.inputs.data() + b * batch.length;
        const int* tg = batch.targets.data() + b * batch.length;
        for (std::size_t i = 0; i < 5; ++i) {
            CHECK(in[i] >= 1);
            CHECK(in[i] <= 3);
        }
        for (std::size_t i = 5; i < 14; ++i) CHECK(in[i] == 0);
        CHECK(in[14] == 4);  // delimiter = M + 1
        for (std::size_t i = 15; i < 20; ++i) CHECK(in[i] == 0);
        for (std::size_t i = 0; i < 15; ++i) CHECK(tg[i] == 0);
        for (std::size_t i = 0; i < 5; ++i) CHECK(tg[15 + i] == in[i]);
    }
}

TEST_CASE("copy generation properties") {
    std::mt19937_64 seeds(5);
    for (int trial = 0; trial < 100; ++trial) {
        auto batch = tasks::gen_copy(10, 8, 13, 100, seeds());
        CHECK(batch.length == 13 + 20);
        for (std::size_t b = 0; b < batch.batch; ++b) {
            for (std::size_t i = 0; i < 10; ++i) {
                const int sym = batch.inputs[b * batch.length + i];
                CHECK(sym >= 1);
                CHECK(sym <= 8);
            }
        }
    }
    CHECK_THROWS_AS(tasks::gen_copy(0, 8, 10, 1, 0), Error);
    CHECK_THROWS_AS(tasks::gen_copy(10, 1, 10, 1, 0), Error);
}

TEST_CASE("copy baseline cross-entropy") {
    CHECK(tasks::copy_baseline_ce(10, 8, 100) ==
          doctest::Approx(10.0 * std::log(8.0) / 120.0).epsilon(1e-15));
    CHECK(tasks::copy_baseline_ce(10, 8, 100) == doctest::Approx(0.1732868).epsilon(1e-6));
    CHECK(tasks::copy_baseline_ce(7, 1, 55) == 0.0);
    CHECK(tasks::copy_baseline_ce(10, 8, 2000) == doctest::Approx(0.0102945).epsilon(1e-5));
}

TEST_CASE("ucr loader parses labels and series") {
    TempFile file("ucr_ok.tsv",
                  "2\t0.1\t0.3\n"
                  "5,1.5,-2.0\n"
                  "3 0.0 0.25\n");
    auto ds = tasks::load_ucr_tsv(file.path);
    REQUIRE(ds.series.size() == 3);
    CHECK(ds.length == 2);
    CHECK(ds.classes == 3);
    // labels {2, 5, 3} remap to {0, 2, 1}
    CHECK(ds.labels == std::vector<int>{0, 2, 1});
    CHECK(ds.series[0] == std::vector<double>{0.1, 0.3});
    CHECK(ds.series[1] == std::vector<double>{1.5, -2.0});
}

TEST_CASE("ucr loader rejects malformed input") {
    TempFile ragged("ucr_ragged.tsv", "1\t0.1\t0.2\n1\t0.5\n");
    CHECK_THROWS_WITH_AS(tasks::load_ucr_tsv(ragged.path),
                         doctest::Contains("line 2"), Error);

    TempFile nonnum("ucr_nonnum.tsv", "1\t0.1\tzzz\n");
    CHECK_THROWS_AS(tasks::load_ucr_tsv(nonnum.path), Error);

    TempFile short_row("ucr_short.tsv", "7\n");
    CHECK_THROWS_AS(tasks::load_ucr_tsv(short_row.path), Error);

    CHECK_THROWS_AS(tasks::load_ucr_tsv("/nonexistent/file.tsv"), Error);
}

TEST_CASE("znormalize") {
    tasks::UcrDataset ds;
    ds.classes = 1;
    ds.length = 3;
    ds.labels = {0, 0};
    ds.series = {{1.0, 2.0, 3.0}, {5.0, 5.0, 5.0}};
    tasks::znormalize(ds);

    CHECK(ds.series[0][0] == doctest::Approx(-1.2247448714).epsilon(1e-9));
    CHECK(ds.series[0][1] == doctest::Approx(0.0));
    CHECK(ds.series[0][2] == doctest::Approx(1.2247448714).epsilon(1e-9));
    CHECK(ds.series[1] == std::vector<double>{0.0, 0.0, 0.0});

    // every non-constant series ends at mean 0, std 1
    auto freq = tasks::make_frequency_dataset(20, 32, 9);
    tasks::znormalize(freq);
    for (const auto& s : freq.series) {
        double mean = 0.0, var = 0.0;
        for (double v : s) mean += v;
        mean /= static_cast<double>(s.size());
        for (double v : s) var += (v - mean) * (v - mean);
        var /= static_cast<double>(s.size());
        CHECK(std::abs(mean) < 1e-9);
        CHECK(std::abs(std::sqrt(var) - 1.0) < 1e-9);
    }
}

TEST_CASE("frequency dataset round-trips through the UCR format") {
    auto ds = tasks::make_frequency_dataset(10, 16, 4);
    TempFile file("ucr_roundtrip.tsv", "");
    tasks::write_ucr_tsv(file.path, ds);
    auto loaded = tasks::load_ucr_tsv(file.path);
    CHECK(loaded.classes == 2);
    CHECK(loaded.length == 16);
    REQUIRE(loaded.series.size() == ds.series.size());
    for (std::size_t i = 0; i < ds.series.size(); ++i) {
        CHECK(loaded.labels[i] == ds.labels[i]);
        for (std::size_t t = 0; t < ds.length; ++t) {
            CHECK(loaded.series[i][t] == doctest::Approx(ds.series[i][t]).epsilon(1e-15));
        }
    }
}
