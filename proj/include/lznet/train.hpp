#pragma once

#include <optional>
#include <vector>

#include "lznet/checkpoint.hpp"
#include "lznet/config.hpp"
#include "lznet/lz_layer.hpp"
#include "lznet/optim.hpp"
#include "lznet/tasks.hpp"

namespace lznet::train {

/// One metrics CSV line. Inapplicable fields stay disengaged and render
/// as empty columns.
struct MetricsRow {
    std::size_t epoch = 0;
    std::string split;
    double loss = 0.0;
    std::optional<double> accuracy;
    std::optional<double> mean_p;
    std::optional<double> wallclock_s;
};

inline constexpr const char* kMetricsHeader = "epoch,split,loss,accuracy,mean_p,wallclock_s";

std::string format_metrics_row(const MetricsRow& row);

/// All model parameters under their stable checkpoint names.
struct ModelParams {
    nn::LstmParams lstm;
    nn::NoveltyParams novelty;  // LZ models only
    nn::HeadParams head;
    bool has_novelty = false;

    opt::ParamMap to_map() const;
    static ModelParams from_map(const opt::ParamMap& map, bool has_novelty);
};

/// Input width and head width implied by the task.
std::size_t task_input_size(const TrainConfig& config);
std::size_t task_output_size(const TrainConfig& config, std::size_t ucr_classes);

ModelParams init_model(const TrainConfig& config);

struct TrainResult {
    std::vector<MetricsRow> rows;
    double final_train_loss = 0.0;
    std::size_t epochs_run = 0;
    std::optional<double> best_test_loss;
    std::optional<double> best_test_accuracy;
};

/// Full training run: writes the metrics CSV and final (plus best, when a
/// test split exists) checkpoints, then reports the rows back.
TrainResult run_training(const TrainConfig& config);

struct EvalResult {
    double loss = 0.0;
    std::optional<double> accuracy;
    std::optional<double> mean_p;
};

/// Evaluation of a stored checkpoint on the config's evaluation split.
EvalResult evaluate_checkpoint(const TrainConfig& config, const std::string& path);

}  // namespace lznet::train
