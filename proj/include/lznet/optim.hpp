#pragma once

#include <map>
#include <string>

#include "lznet/tensor.hpp"

namespace lznet::opt {

/// Named parameter set; the names double as checkpoint keys.
using ParamMap = std::map<std::string, ad::Tensor>;
using GradMap = std::map<std::string, ad::Tensor>;

struct RmsPropConfig {
    double lr = 1e-3;
    double decay = 0.9;
    double eps = 1e-8;
};

struct AdamConfig {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

/// Per-parameter slot tensors, keyed like the parameters themselves.
struct OptimizerState {
    std::map<std::string, ad::Tensor> v;  // RMSProp accumulator / Adam 2nd moment
    std::map<std::string, ad::Tensor> m;  // Adam 1st moment
    std::uint64_t step = 0;
};

/// v <- decay v + (1-decay) g^2; theta <- theta - lr g / (sqrt(v) + eps)
void rmsprop_step(ParamMap& params, const GradMap& grads, OptimizerState& state,
                  const RmsPropConfig& cfg);

/// Standard Adam with bias correction.
void adam_step(ParamMap& params, const GradMap& grads, OptimizerState& state,
               const AdamConfig& cfg);

/// Scales all gradients so their global L2 norm is at most max_norm.
/// Returns the pre-clip norm.
double clip_global_norm(GradMap& grads, double max_norm);

/// Throws with a diagnostic if any parameter is non-finite.
void check_finite(const ParamMap& params, const std::string& context);

}  // namespace lznet::opt
