#include "lznet/optim.hpp"

#include <cmath>

namespace lznet::opt {

namespace {
ad::Tensor& slot(std::map<std::string, ad::Tensor>& store, const std::string& name,
                 const ad::Tensor& like) {
    auto it = store.find(name);
    if (it == store.end()) it = store.emplace(name, ad::Tensor(like.shape())).first;
    return it->second;
}
}  // namespace

void rmsprop_step(ParamMap& params, const GradMap& grads, OptimizerState& state,
                  const RmsPropConfig& cfg) {
    state.step += 1;
    for (auto& [name, theta] : params) {
        const auto git = grads.find(name);
        if (git == grads.end()) continue;
        const ad::Tensor& g = git->second;
        if (!g.same_shape(theta)) throw ShapeMismatchError("rmsprop_step: " + name);
        ad::Tensor& v = slot(state.v, name, theta);
        for (std::size_t i = 0; i < theta.numel(); ++i) {
            v[i] = cfg.decay * v[i] + (1.0 - cfg.decay) * g[i] * g[i];
            theta[i] -= cfg.lr * g[i] / (std::sqrt(v[i]) + cfg.eps);
        }
    }
}

void adam_step(ParamMap& params, const GradMap& grads, OptimizerState& state,
               const AdamConfig& cfg) {
    state.step += 1;
    const double t = static_cast<double>(state.step);
    const double bc1 = 1.0 - std::pow(cfg.beta1, t);
    const double bc2 = 1.0 - std::pow(cfg.beta2, t);
    for (auto& [name, theta] : params) {
        const auto git = grads.find(name);
        if (git == grads.end()) continue;
        const ad::Tensor& g = git->second;
        if (!g.same_shape(theta)) throw ShapeMismatchError("adam_step: " + name);
        ad::Tensor& m = slot(state.m, name, theta);
        ad::Tensor& v = slot(state.v, name, theta);
        for (std::size_t i = 0; i < theta.numel(); ++i) {
            m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g[i];
            v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g[i] * g[i];
            const double mhat = m[i] / bc1;
            const double vhat = v[i] / bc2;
            theta[i] -= cfg.lr * mhat / (std::sqrt(vhat) + cfg.eps);
        }
    }
}

double clip_global_norm(GradMap& grads, double max_norm) {
    double sq = 0.0;
    for (const auto& [name, g] : grads) {
        for (double e : g.data()) sq += e * e;
    }
    const double norm = std::sqrt(sq);
    if (norm > max_norm && norm > 0.0) {
        const double scale = max_norm / norm;
        for (auto& [name, g] : grads) {
            for (auto& e : g.data()) e *= scale;
        }
    }
    return norm;
}

void check_finite(const ParamMap& params, const std::string& context) {
    for (const auto& [name, p] : params) {
        if (!p.all_finite()) {
            throw Error(context + ": parameter '" + name + "' became non-finite");
        }
    }
}

}  // namespace lznet::opt
