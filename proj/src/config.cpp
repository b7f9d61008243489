#include "lznet/config.hpp"

#include <fstream>
#include <sstream>

namespace lznet::train {

namespace {

bool parse_bool(const std::string& v, const std::string& key) {
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off") return false;
    throw ConfigError("config: bad boolean for " + key + ": " + v);
}

double parse_double(const std::string& v, const std::string& key) {
    std::size_t consumed = 0;
    double parsed = 0.0;
    try {
        parsed = std::stod(v, &consumed);
    } catch (const std::exception&) {
        throw ConfigError("config: bad number for " + key + ": " + v);
    }
    if (consumed != v.size()) throw ConfigError("config: bad number for " + key + ": " + v);
    return parsed;
}

std::uint64_t parse_u64(const std::string& v, const std::string& key) {
    std::size_t consumed = 0;
    unsigned long long parsed = 0;
    try {
        parsed = std::stoull(v, &consumed);
    } catch (const std::exception&) {
        throw ConfigError("config: bad integer for " + key + ": " + v);
    }
    if (consumed != v.size()) {
        throw ConfigError("config: bad integer for " + key + ": " + v);
    }
    return parsed;
}

std::string trim(const std::string& s) {
    const auto begin = s.find_first_not_of(" \t\r");
    if (begin == std::string::npos) return "";
    const auto end = s.find_last_not_of(" \t\r");
    return s.substr(begin, end - begin + 1);
}

}  // namespace

void TrainConfig::set(const std::string& key, const std::string& value) {
    if (key == "task") {
        if (value == "addition") task = Task::kAddition;
        else if (value == "copy") task = Task::kCopy;
        else if (value == "ucr") task = Task::kUcr;
        else throw ConfigError("config: unknown task: " + value);
    } else if (key == "model") {
        if (value == "lz") model = Model::kLz;
        else if (value == "lstm") model = Model::kLstm;
        else throw ConfigError("config: unknown model: " + value);
    } else if (key == "backend") {
        backend = memory::backend_from_string(value);
    } else if (key == "mode") {
        if (value != "soft" && value != "hard") {
            throw ConfigError("config: mode must be soft or hard: " + value);
        }
        mode = value;
    } else if (key == "reset_cell") {
        reset_cell = parse_bool(value, key);
    } else if (key == "readout") {
        if (value != "hidden" && value != "memory") {
            throw ConfigError("config: readout must be hidden or memory: " + value);
        }
        readout = value;
    } else if (key == "bias_init") {
        bias_init = parse_double(value, key);
    } else if (key == "hidden") {
        hidden = parse_u64(value, key);
    } else if (key == "batch") {
        batch = parse_u64(value, key);
    } else if (key == "seq_len") {
        seq_len = parse_u64(value, key);
    } else if (key == "copy_items") {
        copy_items = parse_u64(value, key);
    } else if (key == "copy_symbols") {
        copy_symbols = parse_u64(value, key);
    } else if (key == "optimizer") {
        if (value == "rmsprop") optimizer = Optimizer::kRmsProp;
        else if (value == "adam") optimizer = Optimizer::kAdam;
        else throw ConfigError("config: unknown optimizer: " + value);
    } else if (key == "lr") {
        lr = parse_double(value, key);
    } else if (key == "decay") {
        decay = parse_double(value, key);
    } else if (key == "beta1") {
        beta1 = parse_double(value, key);
    } else if (key == "beta2") {
        beta2 = parse_double(value, key);
    } else if (key == "clip_norm") {
        clip_norm = parse_double(value, key);
    } else if (key == "epochs") {
        epochs = parse_u64(value, key);
    } else if (key == "batches_per_epoch") {
        batches_per_epoch = parse_u64(value, key);
    } else if (key == "eval_batches") {
        eval_batches = parse_u64(value, key);
    } else if (key == "stop_loss") {
        stop_loss = parse_double(value, key);
    } else if (key == "seed") {
        seed = parse_u64(value, key);
    } else if (key == "memory_seed") {
        memory_seed = parse_u64(value, key);
    } else if (key == "hopfield_beta") {
        hopfield_beta = parse_double(value, key);
    } else if (key == "znormalize") {
        znormalize = parse_bool(value, key);
    } else if (key == "ucr_train") {
        ucr_train = value;
    } else if (key == "ucr_test") {
        ucr_test = value;
    } else if (key == "metrics_path") {
        metrics_path = value;
    } else if (key == "checkpoint_path") {
        checkpoint_path = value;
    } else if (key == "best_checkpoint_path") {
        best_checkpoint_path = value;
    } else if (key == "resume_from") {
        resume_from = value;
    } else if (key == "log_wallclock") {
        log_wallclock = parse_bool(value, key);
    } else {
        throw ConfigError("config: unknown key: " + key);
    }
}

std::string TrainConfig::echo() const {
    std::ostringstream out;
    out.precision(17);
    out << "task=" << to_string(task) << '\n'
        << "model=" << to_string(model) << '\n'
        << "backend=" << memory::to_string(backend) << '\n'
        << "mode=" << mode << '\n'
        << "reset_cell=" << (reset_cell ? "true" : "false") << '\n'
        << "readout=" << readout << '\n'
        << "bias_init=" << bias_init << '\n'
        << "hidden=" << hidden << '\n'
        << "batch=" << batch << '\n'
        << "seq_len=" << seq_len << '\n'
        << "copy_items=" << copy_items << '\n'
        << "copy_symbols=" << copy_symbols << '\n'
        << "optimizer=" << to_string(optimizer) << '\n'
        << "lr=" << lr << '\n'
        << "decay=" << decay << '\n'
        << "beta1=" << beta1 << '\n'
        << "beta2=" << beta2 << '\n'
        << "clip_norm=" << clip_norm << '\n'
        << "epochs=" << epochs << '\n'
        << "batches_per_epoch=" << batches_per_epoch << '\n'
        << "eval_batches=" << eval_batches << '\n'
        << "stop_loss=" << stop_loss << '\n'
        << "seed=" << seed << '\n'
        << "memory_seed=" << memory_seed << '\n'
        << "hopfield_beta=" << hopfield_beta << '\n'
        << "znormalize=" << (znormalize ? "true" : "false") << '\n'
        << "ucr_train=" << ucr_train << '\n'
        << "ucr_test=" << ucr_test << '\n'
        << "metrics_path=" << metrics_path << '\n'
        << "checkpoint_path=" << checkpoint_path << '\n'
        << "best_checkpoint_path=" << best_checkpoint_path << '\n'
        << "resume_from=" << resume_from << '\n'
        << "log_wallclock=" << (log_wallclock ? "true" : "false") << '\n';
    return out.str();
}

void TrainConfig::validate() const {
    if (hidden == 0 || batch == 0 || seq_len == 0) {
        throw ConfigError("config: sizes must be positive");
    }
    if (lr <= 0.0) throw ConfigError("config: learning rate must be positive");
    if (bias_init != 0.0 && bias_init != 1.0 && bias_init != -1.0) {
        throw ConfigError("config: bias_init must be one of {-1, 0, 1}");
    }
    if (task == Task::kAddition && seq_len < 2) {
        throw ConfigError("config: addition needs seq_len >= 2");
    }
    if (task == Task::kCopy && (copy_items < 1 || copy_symbols < 2)) {
        throw ConfigError("config: copy needs copy_items >= 1, copy_symbols >= 2");
    }
    if (task == Task::kUcr && ucr_train.empty()) {
        throw ConfigError("config: ucr task needs ucr_train");
    }
    if (model == Model::kLz && backend == memory::Backend::kVtb) {
        vsa::vtb_block_side(hidden);  // perfect-square check
    }
}

void apply_config_file(TrainConfig& config, const std::string& path) {
    std::ifstream file(path);
    if (!file) throw ConfigError("config: cannot open " + path);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(file, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("config: expected key=value at " + path + ":" +
                              std::to_string(line_no));
        }
        config.set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
}

const char* to_string(Task t) {
    switch (t) {
        case Task::kAddition: return "addition";
        case Task::kCopy: return "copy";
        case Task::kUcr: return "ucr";
    }
    return "?";
}

const char* to_string(Model m) {
    return m == Model::kLz ? "lz" : "lstm";
}

const char* to_string(Optimizer o) {
    return o == Optimizer::kRmsProp ? "rmsprop" : "adam";
}

}  // namespace lznet::train
