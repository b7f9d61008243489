#pragma once

#include <cstdint>
#include <string>

#include "lznet/assoc_memory.hpp"

namespace lznet::train {

enum class Task { kAddition, kCopy, kUcr };
enum class Model { kLz, kLstm };
enum class Optimizer { kRmsProp, kAdam };

/// Full experiment configuration. Flat key=value files ('#' comments) map
/// onto these fields one-to-one; unknown keys are errors.
struct TrainConfig {
    Task task = Task::kAddition;
    Model model = Model::kLz;
    memory::Backend backend = memory::Backend::kHrr;
    std::string mode = "soft";  // soft | hard
    bool reset_cell = true;
    std::string readout = "hidden";  // hidden | memory
    double bias_init = 0.0;          // novelty bias, one of {-1, 0, 1}

    std::size_t hidden = 64;
    std::size_t batch = 64;
    std::size_t seq_len = 100;  // addition T / copy delay T / capped UCR length
    std::size_t copy_items = 10;    // N
    std::size_t copy_symbols = 8;   // M

    Optimizer optimizer = Optimizer::kRmsProp;
    double lr = 1e-3;
    double decay = 0.9;   // RMSProp
    double beta1 = 0.9;   // Adam
    double beta2 = 0.999;
    double clip_norm = 5.0;  // 0 disables clipping

    std::size_t epochs = 100;
    std::size_t batches_per_epoch = 25;
    std::size_t eval_batches = 4;
    double stop_loss = 0.0;  // > 0: stop once train loss drops below

    std::uint64_t seed = 1;
    std::uint64_t memory_seed = 0;
    double hopfield_beta = 0.0;  // 0: 1/sqrt(H)

    bool znormalize = true;
    std::string ucr_train;
    std::string ucr_test;

    std::string metrics_path = "metrics.csv";
    std::string checkpoint_path = "final.ckpt";
    std::string best_checkpoint_path;  // empty: derived from checkpoint_path
    std::string resume_from;
    bool log_wallclock = false;

    /// Applies one key=value pair; throws ConfigError on unknown keys or
    /// unparsable values.
    void set(const std::string& key, const std::string& value);

    /// key=value rendering of every field, one per line, stable order.
    std::string echo() const;

    void validate() const;
};

/// Parses a flat key=value config file into `config`.
void apply_config_file(TrainConfig& config, const std::string& path);

const char* to_string(Task t);
const char* to_string(Model m);
const char* to_string(Optimizer o);

}  // namespace lznet::train
