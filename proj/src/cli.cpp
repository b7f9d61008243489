#include "lznet/cli.hpp"

#include <CLI11.hpp>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>

#include "lznet/lz_classic.hpp"
#include "lznet/train.hpp"

namespace lznet::cli {

namespace {

std::string read_file_bytes(const std::string& path) {
    std::ifstream file(path, std::ios::binary);
    if (!file) throw Error("cannot open " + path);
    std::ostringstream buf;
    buf << file.rdbuf();
    return buf.str();
}

std::uint64_t default_seed() {
    if (const char* env = std::getenv("LZNET_SEED")) {
        try {
            return std::stoull(env);
        } catch (const std::exception&) {
            throw ConfigError("LZNET_SEED is not an integer: " + std::string(env));
        }
    }
    return 1;
}

// UCR series quantized into per-series uniform bins make byte tokens for
// the discrete pipeline.
lzc::TokenSeq quantize_series(const std::vector<double>& series, std::size_t bins) {
    double lo = series[0], hi = series[0];
    for (double v : series) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    lzc::TokenSeq tokens(series.size(), '\0');
    const double span = hi - lo;
    for (std::size_t i = 0; i < series.size(); ++i) {
        std::size_t bin = 0;
        if (span > 0.0) {
            bin = static_cast<std::size_t>((series[i] - lo) / span *
                                           static_cast<double>(bins - 1) +
                                           0.5);
        }
        tokens[i] = static_cast<char>(bin);
    }
    return tokens;
}

struct TrainCliOptions {
    std::string config_file;
    std::map<std::string, std::string> overrides;
};

void add_train_flags(CLI::App* cmd, std::shared_ptr<TrainCliOptions> opts) {
    cmd->add_option("--config", opts->config_file, "flat key=value config file");
    // every TrainConfig key doubles as a flag; collected as strings and
    // funneled through TrainConfig::set so file and CLI behave identically
    static const char* keys[] = {
        "task", "model", "backend", "mode", "reset_cell", "readout", "bias_init",
        "hidden", "batch", "seq_len", "copy_items", "copy_symbols", "optimizer",
        "lr", "decay", "beta1", "beta2", "clip_norm", "epochs", "batches_per_epoch",
        "eval_batches", "stop_loss", "seed", "memory_seed", "hopfield_beta",
        "znormalize", "ucr_train", "ucr_test", "metrics_path", "checkpoint_path",
        "best_checkpoint_path", "resume_from", "log_wallclock"};
    for (const char* key : keys) {
        const std::string flag = std::string("--") + key;
        cmd->add_option_function<std::string>(
            flag, [opts, key = std::string(key)](const std::string& v) {
                opts->overrides[key] = v;
            });
    }
    // convenience alias used throughout the docs
    cmd->add_option_function<std::string>(
        "--seq-len", [opts](const std::string& v) { opts->overrides["seq_len"] = v; });
}

train::TrainConfig resolve_config(const TrainCliOptions& opts) {
    train::TrainConfig config;
    config.seed = default_seed();
    if (!opts.config_file.empty()) train::apply_config_file(config, opts.config_file);
    for (const auto& [key, value] : opts.overrides) config.set(key, value);
    config.validate();
    return config;
}

int cmd_digest(const std::string& path, bool hashed) {
    const auto bytes = read_file_bytes(path);
    if (hashed) {
        for (auto h : lzc::lz_digest_hashed(bytes)) std::cout << h << '\n';
    } else {
        const auto digest = lzc::lz_digest(bytes);
        for (const auto& entry : digest.entries()) std::cout << entry << '\n';
    }
    return 0;
}

int cmd_lzjd(const std::string& a, const std::string& b, bool hashed) {
    const auto sa = read_file_bytes(a);
    const auto sb = read_file_bytes(b);
    const double d = hashed ? lzc::lzjd_hashed(sa, sb) : lzc::lzjd(sa, sb);
    std::printf("%.6f\n", d);
    return 0;
}

int cmd_knn(const std::string& train_path, const std::string& test_path, std::size_t k,
            std::size_t bins, bool hashed) {
    auto train_ds = tasks::load_ucr_tsv(train_path);
    auto test_ds = tasks::load_ucr_tsv(test_path);
    std::vector<lzc::LabeledSeq> train_seqs;
    train_seqs.reserve(train_ds.series.size());
    for (std::size_t i = 0; i < train_ds.series.size(); ++i) {
        train_seqs.push_back(
            {quantize_series(train_ds.series[i], bins), train_ds.labels[i]});
    }
    std::size_t hits = 0;
    for (std::size_t i = 0; i < test_ds.series.size(); ++i) {
        const int predicted = lzc::knn_classify(
            train_seqs, quantize_series(test_ds.series[i], bins), k, hashed);
        hits += predicted == test_ds.labels[i];
    }
    std::printf("%.6f\n",
                static_cast<double>(hits) / static_cast<double>(test_ds.series.size()));
    return 0;
}

// Two sweeps per backend: a single-pair bind/unbind round trip, and the
// memory protocol (query a stored item, compare the reconstruction to the
// tag) as the stored count grows.
int cmd_vsa_bench(std::size_t dim, std::size_t max_items, std::size_t trials,
                  std::uint64_t seed) {
    std::printf("d = %zu, %zu trials per row\n", dim, trials);
    std::printf("%-8s %-10s %-8s %-12s\n", "backend", "sweep", "items", "mean_cosine");
    for (const std::string backend : {"hrr", "vtb"}) {
        const bool hrr = backend == "hrr";
        if (!hrr) {
            const auto side = static_cast<std::size_t>(std::sqrt(double(dim)));
            if (side * side != dim) continue;
        }
        auto fresh = [&](std::mt19937_64& seeds) {
            auto v = vsa::random_hypervector(dim, seeds());
            return hrr ? vsa::project_unitary(v) : v;
        };

        std::mt19937_64 seeds(derive_seed(seed, 1, hrr));
        double pair = 0.0;
        for (std::size_t trial = 0; trial < trials; ++trial) {
            auto a = fresh(seeds);
            auto b = fresh(seeds);
            auto rt = hrr ? vsa::unbind_hrr(vsa::bind_hrr(a, b), b)
                          : vsa::unbind_vtb(vsa::bind_vtb(a, b), b);
            pair += vsa::cosine_similarity(rt, a) / static_cast<double>(trials);
        }
        std::printf("%-8s %-10s %-8d %-12.4f\n", backend.c_str(), "pair", 1, pair);

        for (std::size_t items = 1; items <= max_items; items *= 2) {
            std::mt19937_64 s2(derive_seed(seed, 2 + items, hrr));
            double mean = 0.0;
            for (std::size_t trial = 0; trial < trials; ++trial) {
                memory::AssociativeMemory mem(
                    hrr ? memory::Backend::kHrr : memory::Backend::kVtb, dim, s2());
                std::vector<vsa::HyperVector> stored;
                for (std::size_t i = 0; i < items; ++i) {
                    stored.push_back(fresh(s2));
                    mem.insert(stored.back(), 1.0);
                }
                auto q = mem.query(stored.front());
                mean += vsa::cosine_similarity(q.r_hat, q.r) / static_cast<double>(trials);
            }
            std::printf("%-8s %-10s %-8zu %-12.4f\n", backend.c_str(), "memory", items,
                        mean);
        }
    }
    return 0;
}

int cmd_gradcheck();

}  // namespace

int run(int argc, const char* const* argv) {
    CLI::App app{"Lempel-Ziv Network toolkit"};
    app.require_subcommand(1);

    auto train_opts = std::make_shared<TrainCliOptions>();
    auto* train_cmd = app.add_subcommand("train", "train a model and write metrics");
    add_train_flags(train_cmd, train_opts);

    auto eval_opts = std::make_shared<TrainCliOptions>();
    std::string eval_ckpt;
    auto* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint");
    eval_cmd->add_option("checkpoint", eval_ckpt, "checkpoint path")->required();
    add_train_flags(eval_cmd, eval_opts);

    std::string digest_path;
    bool digest_hashed = false;
    auto* digest_cmd = app.add_subcommand("digest", "print the LZ digest of a file");
    digest_cmd->add_option("file", digest_path)->required();
    digest_cmd->add_flag("--hashed", digest_hashed, "64-bit hash entries");

    std::string lzjd_a, lzjd_b;
    bool lzjd_hashed = false;
    auto* lzjd_cmd = app.add_subcommand("lzjd", "LZJD distance between two files");
    lzjd_cmd->add_option("fileA", lzjd_a)->required();
    lzjd_cmd->add_option("fileB", lzjd_b)->required();
    lzjd_cmd->add_flag("--hashed", lzjd_hashed);

    std::string knn_train, knn_test;
    std::size_t knn_k = 1, knn_bins = 16;
    bool knn_hashed = false;
    auto* knn_cmd =
        app.add_subcommand("knn", "LZJD k-NN classification of UCR-format data");
    knn_cmd->add_option("--train", knn_train)->required();
    knn_cmd->add_option("--test", knn_test)->required();
    knn_cmd->add_option("--k", knn_k);
    knn_cmd->add_option("--quantize-bins", knn_bins);
    knn_cmd->add_flag("--hashed", knn_hashed);

    std::size_t bench_dim = 256, bench_items = 32, bench_trials = 20;
    std::uint64_t bench_seed = 7;
    auto* bench_cmd = app.add_subcommand("vsa-bench", "round-trip and capacity sweeps");
    bench_cmd->add_option("--dim", bench_dim);
    bench_cmd->add_option("--max-items", bench_items);
    bench_cmd->add_option("--trials", bench_trials);
    bench_cmd->add_option("--seed", bench_seed);

    auto* gradcheck_cmd =
        app.add_subcommand("gradcheck", "finite-difference checks of every primitive");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (train_cmd->parsed()) {
            auto config = resolve_config(*train_opts);
            auto result = train::run_training(config);
            std::printf("trained %zu epochs, final train loss %.6g, metrics at %s\n",
                        result.epochs_run, result.final_train_loss,
                        config.metrics_path.c_str());
            return 0;
        }
        if (eval_cmd->parsed()) {
            auto config = resolve_config(*eval_opts);
            auto result = train::evaluate_checkpoint(config, eval_ckpt);
            std::printf("loss %.6g", result.loss);
            if (result.accuracy) std::printf(" accuracy %.6g", *result.accuracy);
            if (result.mean_p) std::printf(" mean_p %.6g", *result.mean_p);
            std::printf("\n");
            return 0;
        }
        if (digest_cmd->parsed()) return cmd_digest(digest_path, digest_hashed);
        if (lzjd_cmd->parsed()) return cmd_lzjd(lzjd_a, lzjd_b, lzjd_hashed);
        if (knn_cmd->parsed()) {
            return cmd_knn(knn_train, knn_test, knn_k, knn_bins, knn_hashed);
        }
        if (bench_cmd->parsed()) {
            return cmd_vsa_bench(bench_dim, bench_items, bench_trials, bench_seed);
        }
        if (gradcheck_cmd->parsed()) return cmd_gradcheck();
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 2;
}

namespace {

int cmd_gradcheck() {
    using ad::Tape;
    using ad::Tensor;
    using ad::Value;
    std::mt19937_64 rng(12345);
    auto random_tensor = [&rng](std::vector<std::size_t> shape) {
        Tensor t(std::move(shape));
        std::normal_distribution<double> gauss(0.0, 1.0);
        for (auto& e : t.data()) e = gauss(rng);
        return t;
    };

    struct Case {
        std::string name;
        double rtol;
        std::function<double()> run;
    };
    std::vector<Case> cases;

    auto simple = [&](const std::string& name,
                      std::function<Value(Tape&, const std::vector<Value>&)> f,
                      std::vector<Tensor> inputs, double rtol = 1e-4) {
        cases.push_back({name, rtol, [f = std::move(f), inputs = std::move(inputs)] {
                             return ad::grad_check(f, inputs);
                         }});
    };

    simple("add/sub/mul/affine",
           [](Tape& t, const std::vector<Value>& in) {
               return t.sum(t.affine(t.mul(t.add(in[0], in[1]), t.sub(in[0], in[1])),
                                     0.5, 1.0));
           },
           {random_tensor({6}), random_tensor({6})});
    simple("sigmoid/tanh/log",
           [](Tape& t, const std::vector<Value>& in) {
               auto pos = t.affine(t.sigmoid(in[0]), 1.0, 0.1);
               return t.sum(t.mul(t.log(pos), t.tanh(in[0])));
           },
           {random_tensor({8})});
    simple("matmul",
           [](Tape& t, const std::vector<Value>& in) {
               return t.mean(t.matmul(in[0], in[1]));
           },
           {random_tensor({3, 5}), random_tensor({5, 4})});
    simple("matmul_t",
           [](Tape& t, const std::vector<Value>& in) {
               return t.mean(t.matmul(in[0], in[1], true));
           },
           {random_tensor({3, 5}), random_tensor({4, 5})});
    simple("bilinear",
           [](Tape& t, const std::vector<Value>& in) {
               return t.sum(t.sigmoid(t.bilinear(in[0], in[1], in[2], in[3])));
           },
           {random_tensor({3, 4}), random_tensor({4, 4}), random_tensor({4}),
            Tensor::scalar(0.2)});
    simple("softmax",
           [](Tape& t, const std::vector<Value>& in) {
               return t.sum(t.mul(t.softmax_rows(in[0]), in[0]));
           },
           {random_tensor({3, 5})});
    simple("rowops/concat/slice",
           [](Tape& t, const std::vector<Value>& in) {
               auto m = t.row_scale(t.add_rowvec(in[0], in[1]), in[2]);
               auto cat = t.concat_cols(m, in[0]);
               return t.sum(t.slice_cols(cat, 1, 7));
           },
           {random_tensor({4, 5}), random_tensor({5}), random_tensor({4})});
    simple("reductions/mse",
           [](Tape& t, const std::vector<Value>& in) {
               auto target = Tensor({3, 2});
               return t.add(t.mse_loss(in[0], target), t.mean(in[0]));
           },
           {random_tensor({3, 2})});
    simple("softmax_xent",
           [](Tape& t, const std::vector<Value>& in) {
               return t.softmax_xent(in[0], {0, 2, 1});
           },
           {random_tensor({3, 4})});
    simple("circ_conv",
           [](Tape& t, const std::vector<Value>& in) {
               return t.mean(t.tanh(t.circ_conv(in[0], in[1])));
           },
           {random_tensor({8}), random_tensor({8})});
    simple("circ_corr",
           [](Tape& t, const std::vector<Value>& in) {
               return t.mean(t.tanh(t.circ_corr(in[0], in[1])));
           },
           {random_tensor({8}), random_tensor({8})});
    simple("spectral_normalize",
           [](Tape& t, const std::vector<Value>& in) {
               return t.mean(t.tanh(t.spectral_normalize(in[0])));
           },
           {random_tensor({9})});
    simple("vtb_bind/unbind",
           [](Tape& t, const std::vector<Value>& in) {
               auto bound = t.vtb_bind(in[0], in[1]);
               return t.mean(t.tanh(t.vtb_unbind(bound, in[1])));
           },
           {random_tensor({2, 9}), random_tensor({9})});

    // LSTM cell
    {
        auto lstm = nn::init_lstm(4, 6, 77);
        auto x = random_tensor({3, 4});
        auto h = random_tensor({3, 6});
        auto c = random_tensor({3, 6});
        Tensor target = random_tensor({3, 6});
        simple("lstm_cell",
               [target](Tape& t, const std::vector<Value>& in) {
                   nn::LstmValues pv{in[0], in[1], in[2]};
                   auto out = nn::lstm_cell(t, in[3], in[4], in[5], pv);
                   return t.mse_loss(out.h_hat, target);
               },
               {lstm.w_ih, lstm.w_hh, lstm.bias, x, h, c});
    }
    // novelty score
    {
        auto nov = nn::init_novelty(5, 0.0, 78);
        simple("novelty_score",
               [](Tape& t, const std::vector<Value>& in) {
                   nn::NoveltyValues pv{in[0], in[1]};
                   std::mt19937_64 local(1);
                   auto s =
                       nn::novelty_score(t, in[2], in[3], pv, nn::NoveltyMode::kSoft, local);
                   return t.sum(t.mul(s, s));
               },
               {nov.w, nov.bias, random_tensor({3, 5}), random_tensor({5})});
    }
    // full lz_forward, both VSA backends
    for (auto backend : {memory::Backend::kHrr, memory::Backend::kVtb}) {
        const std::size_t hidden = 9, input = 2, steps = 5, batch = 2;
        std::vector<Tensor> xs;
        for (std::size_t t = 0; t < steps; ++t) xs.push_back(random_tensor({batch, input}));
        auto lstm = nn::init_lstm(input, hidden, 80);
        auto nov = nn::init_novelty(hidden, 0.0, 81);
        auto head = nn::init_head(hidden, 1, 82);
        Tensor target = random_tensor({batch, 1});
        lz::LzLayerConfig config;
        config.backend = backend;
        cases.push_back(
            {std::string("lz_forward_") + memory::to_string(backend), 1e-3,
             [=] {
                 return ad::grad_check(
                     [&](Tape& t, const std::vector<Value>& in) {
                         nn::LstmValues lv{in[0], in[1], in[2]};
                         nn::NoveltyValues nv{in[3], in[4]};
                         nn::HeadValues hv{in[5], in[6]};
                         auto out = lz::lz_forward(t, xs, lv, nv, hidden, config);
                         return t.mse_loss(lz::readout(t, out, hv), target);
                     },
                     {lstm.w_ih, lstm.w_hh, lstm.bias, nov.w, nov.bias, head.w,
                      head.bias});
             }});
    }

    bool all_pass = true;
    std::printf("%-24s %-12s %-8s %s\n", "primitive", "max_rel_err", "rtol", "status");
    for (const auto& c : cases) {
        const double err = c.run();
        const bool pass = err < c.rtol;
        all_pass = all_pass && pass;
        std::printf("%-24s %-12.3e %-8.0e %s\n", c.name.c_str(), err, c.rtol,
                    pass ? "PASS" : "FAIL");
    }
    return all_pass ? 0 : 1;
}

}  // namespace

}  // namespace lznet::cli
