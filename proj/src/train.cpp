#include "lznet/train.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

namespace lznet::train {

namespace {

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

// group tags for derived RNG streams
enum StreamKind : std::uint64_t {
    kInitStream = 1,
    kTrainStream = 2,
    kEvalStream = 3,
    kHardStream = 4,
    kShuffleStream = 5,
};

struct TaskBatch {
    std::vector<ad::Tensor> xs;            // one B x I tensor per step
    ad::Tensor regression_target;          // addition: B x 1
    std::vector<std::vector<int>> labels;  // copy: one label set per step
    std::vector<int> class_labels;         // ucr: one per row
};

TaskBatch addition_to_batch(const tasks::AdditionBatch& b) {
    TaskBatch out;
    out.xs.reserve(b.steps);
    for (std::size_t t = 0; t < b.steps; ++t) {
        ad::Tensor x({b.batch, 2});
        for (std::size_t r = 0; r < b.batch; ++r) {
            x.at(r, 0) = b.values[r * b.steps + t];
            x.at(r, 1) = b.indicators[r * b.steps + t];
        }
        out.xs.push_back(std::move(x));
    }
    out.regression_target = ad::Tensor({b.batch, 1}, b.targets);
    return out;
}

TaskBatch copy_to_batch(const tasks::CopyBatch& b) {
    const std::size_t width = b.n_symbols + 2;  // blank + symbols + delimiter
    TaskBatch out;
    out.xs.reserve(b.length);
    out.labels.resize(b.length);
    for (std::size_t t = 0; t < b.length; ++t) {
        ad::Tensor x({b.batch, width});
        out.labels[t].resize(b.batch);
        for (std::size_t r = 0; r < b.batch; ++r) {
            x.at(r, static_cast<std::size_t>(b.inputs[r * b.length + t])) = 1.0;
            out.labels[t][r] = b.targets[r * b.length + t];
        }
        out.xs.push_back(std::move(x));
    }
    return out;
}

TaskBatch ucr_to_batch(const tasks::UcrDataset& ds, const std::vector<std::size_t>& rows) {
    TaskBatch out;
    out.xs.reserve(ds.length);
    for (std::size_t t = 0; t < ds.length; ++t) {
        ad::Tensor x({rows.size(), 1});
        for (std::size_t r = 0; r < rows.size(); ++r) {
            x.at(r, 0) = ds.series[rows[r]][t];
        }
        out.xs.push_back(std::move(x));
    }
    out.class_labels.reserve(rows.size());
    for (auto r : rows) out.class_labels.push_back(ds.labels[r]);
    return out;
}

struct ForwardStats {
    ad::Value loss;
    std::optional<double> accuracy;
    std::optional<double> mean_p;
};

struct OnTapeModel {
    nn::LstmValues lstm;
    nn::NoveltyValues novelty;
    nn::HeadValues head;
};

OnTapeModel model_on_tape(ad::Tape& tape, const ModelParams& params, bool requires_grad) {
    OnTapeModel m;
    m.lstm = nn::on_tape(tape, params.lstm, requires_grad);
    if (params.has_novelty) m.novelty = nn::on_tape(tape, params.novelty, requires_grad);
    m.head = nn::on_tape(tape, params.head, requires_grad);
    return m;
}

lz::LzLayerConfig layer_config(const TrainConfig& config) {
    lz::LzLayerConfig lc;
    lc.backend = config.backend;
    lc.mode = config.mode == "hard" ? lz::GateMode::kHard : lz::GateMode::kSoft;
    lc.reset_cell = config.reset_cell;
    lc.memory_seed = config.memory_seed;
    lc.hopfield_beta = config.hopfield_beta;
    return lc;
}

double mean_p_of(const std::vector<ad::Value>& p_mask) {
    double acc = 0.0;
    std::size_t count = 0;
    for (const auto& p : p_mask) {
        for (double v : p.val().data()) {
            acc += v;
            ++count;
        }
    }
    return count ? acc / static_cast<double>(count) : 0.0;
}

double argmax_accuracy(const ad::Tensor& logits, const std::vector<int>& labels) {
    std::size_t hits = 0;
    for (std::size_t r = 0; r < logits.rows(); ++r) {
        std::size_t best = 0;
        for (std::size_t c = 1; c < logits.cols(); ++c) {
            if (logits.at(r, c) > logits.at(r, best)) best = c;
        }
        if (static_cast<int>(best) == labels[r]) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(logits.rows());
}

// Builds the task loss on the tape. global_batch seeds hard-mode streams.
ForwardStats build_forward(ad::Tape& tape, const TrainConfig& config,
                           const OnTapeModel& model, const TaskBatch& batch,
                           std::uint64_t global_batch) {
    const std::size_t rows = batch.xs[0].rows();

    std::vector<ad::Value> h_hats;
    lz::LzLayerOutput lz_out;
    ForwardStats stats;
    const bool is_lz = config.model == Model::kLz;
    if (is_lz) {
        std::vector<std::mt19937_64> streams;
        if (config.mode == "hard") {
            streams.reserve(rows);
            for (std::size_t r = 0; r < rows; ++r) {
                streams.emplace_back(
                    derive_seed(config.seed, kHardStream, global_batch, r));
            }
        }
        lz_out = lz::lz_forward(tape, batch.xs, model.lstm, model.novelty,
                                config.hidden, layer_config(config), streams);
        h_hats = lz_out.h_hats;
        stats.mean_p = mean_p_of(lz_out.p_mask);
    } else {
        h_hats = lz::lstm_forward(tape, batch.xs, model.lstm, config.hidden);
    }

    auto readout_value = [&](ad::Value h) { return nn::apply_head(tape, h, model.head); };
    ad::Value final_input = h_hats.back();
    if (is_lz && config.readout == "memory") final_input = lz_out.memory_state;

    switch (config.task) {
        case Task::kAddition: {
            auto pred = readout_value(final_input);
            stats.loss = tape.mse_loss(pred, batch.regression_target);
            break;
        }
        case Task::kCopy: {
            ad::Value total;
            std::size_t correct = 0, positions = 0;
            for (std::size_t t = 0; t < batch.xs.size(); ++t) {
                auto logits = readout_value(h_hats[t]);
                auto term = tape.softmax_xent(logits, batch.labels[t]);
                total = (t == 0) ? term : tape.add(total, term);
                const auto& lv = logits.val();
                for (std::size_t r = 0; r < rows; ++r) {
                    std::size_t best = 0;
                    for (std::size_t c = 1; c < lv.cols(); ++c) {
                        if (lv.at(r, c) > lv.at(r, best)) best = c;
                    }
                    correct += static_cast<int>(best) == batch.labels[t][r];
                    ++positions;
                }
            }
            stats.loss =
                tape.affine(total, 1.0 / static_cast<double>(batch.xs.size()), 0.0);
            stats.accuracy = static_cast<double>(correct) / static_cast<double>(positions);
            break;
        }
        case Task::kUcr: {
            auto logits = readout_value(final_input);
            stats.loss = tape.softmax_xent(logits, batch.class_labels);
            stats.accuracy = argmax_accuracy(logits.val(), batch.class_labels);
            break;
        }
    }
    return stats;
}

opt::GradMap collect_grads(ad::Tape& tape, const OnTapeModel& model, bool has_novelty) {
    opt::GradMap grads;
    grads.emplace("lstm.w_ih", tape.grad(model.lstm.w_ih));
    grads.emplace("lstm.w_hh", tape.grad(model.lstm.w_hh));
    grads.emplace("lstm.b", tape.grad(model.lstm.bias));
    if (has_novelty) {
        grads.emplace("novelty.W", tape.grad(model.novelty.w));
        grads.emplace("novelty.b", tape.grad(model.novelty.bias));
    }
    grads.emplace("head.W", tape.grad(model.head.w));
    grads.emplace("head.b", tape.grad(model.head.bias));
    return grads;
}

struct DataContext {
    tasks::UcrDataset ucr_train;
    tasks::UcrDataset ucr_test;
    bool has_test = false;
    std::size_t classes = 0;
};

DataContext load_data(const TrainConfig& config) {
    DataContext ctx;
    if (config.task != Task::kUcr) {
        ctx.has_test = true;  // generated eval split
        return ctx;
    }
    ctx.ucr_train = tasks::load_ucr_tsv(config.ucr_train);
    ctx.classes = ctx.ucr_train.classes;
    if (config.znormalize) tasks::znormalize(ctx.ucr_train);
    if (!config.ucr_test.empty()) {
        ctx.ucr_test = tasks::load_ucr_tsv(config.ucr_test);
        if (ctx.ucr_test.length != ctx.ucr_train.length) {
            throw Error("train: UCR train/test series lengths differ");
        }
        ctx.classes = std::max(ctx.classes, ctx.ucr_test.classes);
        if (config.znormalize) tasks::znormalize(ctx.ucr_test);
        ctx.has_test = true;
    }
    return ctx;
}

TaskBatch make_train_batch(const TrainConfig& config, const DataContext& ctx,
                           std::size_t epoch, std::size_t batch_idx) {
    const std::uint64_t seed = derive_seed(config.seed, kTrainStream, epoch, batch_idx);
    switch (config.task) {
        case Task::kAddition:
            return addition_to_batch(tasks::gen_addition(config.seq_len, config.batch, seed));
        case Task::kCopy:
            return copy_to_batch(tasks::gen_copy(config.copy_items, config.copy_symbols,
                                                 config.seq_len, config.batch, seed));
        case Task::kUcr: {
            const std::size_t n = ctx.ucr_train.series.size();
            std::vector<std::size_t> order(n);
            std::iota(order.begin(), order.end(), 0);
            std::mt19937_64 rng(derive_seed(config.seed, kShuffleStream, epoch));
            std::shuffle(order.begin(), order.end(), rng);
            const std::size_t begin = (batch_idx * config.batch) % n;
            std::vector<std::size_t> rows;
            rows.reserve(config.batch);
            for (std::size_t i = 0; i < config.batch; ++i) {
                rows.push_back(order[(begin + i) % n]);
            }
            return ucr_to_batch(ctx.ucr_train, rows);
        }
    }
    throw Error("train: unreachable");
}

std::vector<TaskBatch> make_eval_batches(const TrainConfig& config,
                                         const DataContext& ctx) {
    std::vector<TaskBatch> out;
    switch (config.task) {
        case Task::kAddition:
            for (std::size_t i = 0; i < config.eval_batches; ++i) {
                out.push_back(addition_to_batch(tasks::gen_addition(
                    config.seq_len, config.batch,
                    derive_seed(config.seed, kEvalStream, i))));
            }
            break;
        case Task::kCopy:
            for (std::size_t i = 0; i < config.eval_batches; ++i) {
                out.push_back(copy_to_batch(
                    tasks::gen_copy(config.copy_items, config.copy_symbols,
                                    config.seq_len, config.batch,
                                    derive_seed(config.seed, kEvalStream, i))));
            }
            break;
        case Task::kUcr: {
            if (!ctx.has_test) break;
            const std::size_t n = ctx.ucr_test.series.size();
            for (std::size_t begin = 0; begin < n; begin += config.batch) {
                std::vector<std::size_t> rows;
                for (std::size_t r = begin; r < std::min(begin + config.batch, n); ++r) {
                    rows.push_back(r);
                }
                out.push_back(ucr_to_batch(ctx.ucr_test, rows));
            }
            break;
        }
    }
    return out;
}

MetricsRow evaluate_params(const TrainConfig& config, const ModelParams& params,
                           const std::vector<TaskBatch>& batches, std::size_t epoch) {
    MetricsRow row;
    row.epoch = epoch;
    row.split = "test";
    double loss = 0.0, acc = 0.0, meanp = 0.0;
    bool has_acc = false, has_p = false;
    std::size_t count = 0;
    for (const auto& batch : batches) {
        ad::Tape tape;
        auto model = model_on_tape(tape, params, false);
        auto stats = build_forward(tape, config, model, batch, (1ull << 32) + count);
        loss += stats.loss.val().scalar_value();
        if (stats.accuracy) {
            acc += *stats.accuracy;
            has_acc = true;
        }
        if (stats.mean_p) {
            meanp += *stats.mean_p;
            has_p = true;
        }
        ++count;
    }
    if (count) {
        row.loss = loss / static_cast<double>(count);
        if (has_acc) row.accuracy = acc / static_cast<double>(count);
        if (has_p) row.mean_p = meanp / static_cast<double>(count);
    }
    return row;
}

void write_metrics(const std::string& path, const std::vector<MetricsRow>& rows) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw Error("train: cannot open metrics file " + path);
    out << kMetricsHeader << '\n';
    for (const auto& row : rows) out << format_metrics_row(row) << '\n';
    if (!out) throw Error("train: metrics write failure " + path);
}

std::string best_path_of(const TrainConfig& config) {
    if (!config.best_checkpoint_path.empty()) return config.best_checkpoint_path;
    return config.checkpoint_path + ".best";
}

}  // namespace

std::string format_metrics_row(const MetricsRow& row) {
    std::string out = std::to_string(row.epoch) + "," + row.split + "," +
                      format_double(row.loss) + ",";
    if (row.accuracy) out += format_double(*row.accuracy);
    out += ",";
    if (row.mean_p) out += format_double(*row.mean_p);
    out += ",";
    if (row.wallclock_s) out += format_double(*row.wallclock_s);
    return out;
}

std::size_t task_input_size(const TrainConfig& config) {
    switch (config.task) {
        case Task::kAddition: return 2;
        case Task::kCopy: return config.copy_symbols + 2;
        case Task::kUcr: return 1;
    }
    return 0;
}

std::size_t task_output_size(const TrainConfig& config, std::size_t ucr_classes) {
    switch (config.task) {
        case Task::kAddition: return 1;
        case Task::kCopy: return config.copy_symbols + 2;
        case Task::kUcr: return ucr_classes;
    }
    return 0;
}

opt::ParamMap ModelParams::to_map() const {
    opt::ParamMap map;
    map.emplace("lstm.w_ih", lstm.w_ih);
    map.emplace("lstm.w_hh", lstm.w_hh);
    map.emplace("lstm.b", lstm.bias);
    if (has_novelty) {
        map.emplace("novelty.W", novelty.w);
        map.emplace("novelty.b", novelty.bias);
    }
    map.emplace("head.W", head.w);
    map.emplace("head.b", head.bias);
    return map;
}

ModelParams ModelParams::from_map(const opt::ParamMap& map, bool has_novelty) {
    ModelParams p;
    p.has_novelty = has_novelty;
    p.lstm.w_ih = map.at("lstm.w_ih");
    p.lstm.w_hh = map.at("lstm.w_hh");
    p.lstm.bias = map.at("lstm.b");
    if (has_novelty) {
        p.novelty.w = map.at("novelty.W");
        p.novelty.bias = map.at("novelty.b");
    }
    p.head.w = map.at("head.W");
    p.head.bias = map.at("head.b");
    return p;
}

ModelParams init_model(const TrainConfig& config) {
    std::size_t classes = 0;
    if (config.task == Task::kUcr) {
        classes = tasks::load_ucr_tsv(config.ucr_train).classes;
    }
    ModelParams params;
    params.has_novelty = config.model == Model::kLz;
    params.lstm = nn::init_lstm(task_input_size(config), config.hidden,
                                derive_seed(config.seed, kInitStream, 1));
    if (params.has_novelty) {
        params.novelty = nn::init_novelty(config.hidden, config.bias_init,
                                          derive_seed(config.seed, kInitStream, 2));
    }
    params.head = nn::init_head(config.hidden, task_output_size(config, classes),
                                derive_seed(config.seed, kInitStream, 3));
    return params;
}

TrainResult run_training(const TrainConfig& config) {
    config.validate();
    DataContext ctx = load_data(config);

    ModelParams params;
    opt::OptimizerState ostate;
    std::size_t start_epoch = 1;
    std::mt19937_64 run_rng(derive_seed(config.seed, kInitStream, 0));

    if (!config.resume_from.empty()) {
        auto ckpt = io::load_checkpoint(config.resume_from);
        const bool has_novelty = ckpt.tensors.count("novelty.W") != 0;
        opt::ParamMap loaded;
        for (const auto& [name, tensor] : ckpt.tensors) {
            if (name.rfind("opt.m.", 0) == 0) {
                ostate.m.emplace(name.substr(6), tensor);
            } else if (name.rfind("opt.v.", 0) == 0) {
                ostate.v.emplace(name.substr(6), tensor);
            } else if (name == "opt.step") {
                ostate.step = static_cast<std::uint64_t>(tensor.scalar_value());
            } else if (name == "train.next_epoch") {
                start_epoch = static_cast<std::size_t>(tensor.scalar_value());
            } else {
                loaded.emplace(name, tensor);
            }
        }
        params = ModelParams::from_map(loaded, has_novelty);
        if (!ckpt.rng_state.empty()) {
            std::istringstream state(ckpt.rng_state);
            state >> run_rng;
        }
    } else {
        params = init_model(config);
    }

    const auto eval_batches = make_eval_batches(config, ctx);
    opt::RmsPropConfig rms{config.lr, config.decay, 1e-8};
    opt::AdamConfig adam{config.lr, config.beta1, config.beta2, 1e-8};

    TrainResult result;
    opt::ParamMap best_params;
    double best_loss = 0.0;
    bool have_best = false;

    auto push_eval_row = [&](std::size_t epoch) {
        if (eval_batches.empty()) return;
        auto row = evaluate_params(config, params, eval_batches, epoch);
        if (!have_best || row.loss < best_loss) {
            best_loss = row.loss;
            best_params = params.to_map();
            have_best = true;
            result.best_test_loss = row.loss;
            result.best_test_accuracy = row.accuracy;
        }
        result.rows.push_back(std::move(row));
    };

    if (config.epochs == 0 || start_epoch > config.epochs) {
        push_eval_row(start_epoch - 1);
    }

    for (std::size_t epoch = start_epoch; epoch <= config.epochs; ++epoch) {
        const auto epoch_start = std::chrono::steady_clock::now();
        double train_loss = 0.0, train_acc = 0.0, train_p = 0.0;
        bool has_acc = false, has_p = false;

        for (std::size_t batch_idx = 0; batch_idx < config.batches_per_epoch;
             ++batch_idx) {
            auto batch = make_train_batch(config, ctx, epoch, batch_idx);
            ad::Tape tape;
            const std::uint64_t global_batch =
                (epoch - 1) * config.batches_per_epoch + batch_idx;
            auto model = model_on_tape(tape, params, true);
            auto stats = build_forward(tape, config, model, batch, global_batch);

            const double loss_value = stats.loss.val().scalar_value();
            if (!std::isfinite(loss_value)) {
                throw Error("training aborted: non-finite loss at epoch " +
                            std::to_string(epoch));
            }
            train_loss += loss_value;
            if (stats.accuracy) {
                train_acc += *stats.accuracy;
                has_acc = true;
            }
            if (stats.mean_p) {
                train_p += *stats.mean_p;
                has_p = true;
            }

            tape.backward(stats.loss);
            auto grads = collect_grads(tape, model, params.has_novelty);
            if (config.clip_norm > 0.0) opt::clip_global_norm(grads, config.clip_norm);
            auto pmap = params.to_map();
            if (config.optimizer == Optimizer::kRmsProp) {
                opt::rmsprop_step(pmap, grads, ostate, rms);
            } else {
                opt::adam_step(pmap, grads, ostate, adam);
            }
            opt::check_finite(pmap, "training epoch " + std::to_string(epoch));
            params = ModelParams::from_map(pmap, params.has_novelty);
        }

        MetricsRow train_row;
        train_row.epoch = epoch;
        train_row.split = "train";
        train_row.loss = train_loss / static_cast<double>(config.batches_per_epoch);
        if (has_acc) {
            train_row.accuracy = train_acc / static_cast<double>(config.batches_per_epoch);
        }
        if (has_p) {
            train_row.mean_p = train_p / static_cast<double>(config.batches_per_epoch);
        }
        if (config.log_wallclock) {
            const auto elapsed = std::chrono::steady_clock::now() - epoch_start;
            train_row.wallclock_s =
                std::chrono::duration<double>(elapsed).count();
        }
        result.final_train_loss = train_row.loss;
        result.rows.push_back(train_row);
        push_eval_row(epoch);
        result.epochs_run = epoch - start_epoch + 1;

        if (config.stop_loss > 0.0 && train_row.loss < config.stop_loss) break;
    }

    write_metrics(config.metrics_path, result.rows);

    io::Checkpoint ckpt;
    ckpt.config_echo = config.echo();
    {
        std::ostringstream state;
        state << run_rng;
        ckpt.rng_state = state.str();
    }
    ckpt.tensors = params.to_map();
    for (const auto& [name, slot] : ostate.m) ckpt.tensors.emplace("opt.m." + name, slot);
    for (const auto& [name, slot] : ostate.v) ckpt.tensors.emplace("opt.v." + name, slot);
    ckpt.tensors.emplace("opt.step",
                         ad::Tensor::scalar(static_cast<double>(ostate.step)));
    ckpt.tensors.emplace(
        "train.next_epoch",
        ad::Tensor::scalar(static_cast<double>(start_epoch + result.epochs_run)));
    io::save_checkpoint(config.checkpoint_path, ckpt);

    if (have_best) {
        io::Checkpoint best = ckpt;
        best.tensors.clear();
        best.tensors = best_params;
        io::save_checkpoint(best_path_of(config), best);
    }
    return result;
}

EvalResult evaluate_checkpoint(const TrainConfig& config, const std::string& path) {
    auto ckpt = io::load_checkpoint(path);
    const bool has_novelty = ckpt.tensors.count("novelty.W") != 0;
    opt::ParamMap loaded;
    for (const auto& [name, tensor] : ckpt.tensors) {
        if (name.rfind("opt.", 0) == 0 || name.rfind("train.", 0) == 0) continue;
        loaded.emplace(name, tensor);
    }
    auto params = ModelParams::from_map(loaded, has_novelty);
    DataContext ctx = load_data(config);
    auto batches = make_eval_batches(config, ctx);
    if (batches.empty()) throw Error("evaluate: no evaluation split available");
    auto row = evaluate_params(config, params, batches, 0);
    EvalResult out;
    out.loss = row.loss;
    out.accuracy = row.accuracy;
    out.mean_p = row.mean_p;
    return out;
}

}  // namespace lznet::train
