#include "lznet/assoc_memory.hpp"

#include <algorithm>
#include <cmath>

namespace lznet::memory {

Backend backend_from_string(const std::string& s) {
    if (s == "hrr") return Backend::kHrr;
    if (s == "vtb") return Backend::kVtb;
    if (s == "hopfield") return Backend::kHopfield;
    throw ConfigError("unknown memory backend: " + s);
}

const char* to_string(Backend b) {
    switch (b) {
        case Backend::kHrr: return "hrr";
        case Backend::kVtb: return "vtb";
        case Backend::kHopfield: return "hopfield";
    }
    return "?";
}

AssociativeMemory::AssociativeMemory(Backend kind, std::size_t d, std::uint64_t seed)
    : kind_(kind), d_(d) {
    if (d < 2) throw InvalidDimensionError("AssociativeMemory: d must be >= 2");
    if (kind == Backend::kVtb) vsa::vtb_block_side(d);  // validates perfect square
    if (kind == Backend::kHopfield) {
        beta_ = 1.0 / std::sqrt(static_cast<double>(d));
    } else {
        m_.assign(d, 0.0);
        tag_ = vsa::project_unitary(vsa::random_hypervector(d, seed));
    }
}

void AssociativeMemory::insert(const vsa::HyperVector& v, double p) {
    if (v.size() != d_) throw ShapeMismatchError("insert: dimension mismatch");
    if (p < 0.0 || p > 1.0) throw Error("insert: weight p outside [0, 1]");
    if (p == 0.0) return;
    switch (kind_) {
        case Backend::kHrr: {
            auto bound = vsa::bind_hrr(v, tag_);
            for (std::size_t i = 0; i < d_; ++i) m_[i] += p * bound[i];
            break;
        }
        case Backend::kVtb: {
            auto bound = vsa::bind_vtb(v, tag_);
            for (std::size_t i = 0; i < d_; ++i) m_[i] += p * bound[i];
            break;
        }
        case Backend::kHopfield:
            patterns_.push_back(v);
            weights_.push_back(p);
            break;
    }
}

QueryResult AssociativeMemory::query(const vsa::HyperVector& q) const {
    if (q.size() != d_) throw ShapeMismatchError("query: dimension mismatch");
    QueryResult out;
    switch (kind_) {
        case Backend::kHrr:
            out.r_hat = vsa::unbind_hrr(m_, q);
            out.r = tag_;
            break;
        case Backend::kVtb:
            out.r_hat = vsa::unbind_vtb(m_, q);
            out.r = tag_;
            break;
        case Backend::kHopfield: {
            out.r = q;
            out.r_hat.assign(d_, 0.0);
            if (patterns_.empty()) break;
            // softmax over beta*<pattern, q> + log(weight); the log-weight
            // keeps p = 1 inserts retrievable undistorted
            std::vector<double> logits(patterns_.size());
            double max_logit = -1e300;
            for (std::size_t i = 0; i < patterns_.size(); ++i) {
                logits[i] = beta_ * vsa::dot(patterns_[i], q) + std::log(weights_[i]);
                max_logit = std::max(max_logit, logits[i]);
            }
            double z = 0.0;
            for (auto& l : logits) {
                l = std::exp(l - max_logit);
                z += l;
            }
            for (std::size_t i = 0; i < patterns_.size(); ++i) {
                const double w = logits[i] / z;
                for (std::size_t j = 0; j < d_; ++j) out.r_hat[j] += w * patterns_[i][j];
            }
            break;
        }
    }
    return out;
}

void AssociativeMemory::reset() {
    if (kind_ == Backend::kHopfield) {
        patterns_.clear();
        weights_.clear();
    } else {
        std::fill(m_.begin(), m_.end(), 0.0);
    }
}

void AssociativeMemory::set_state(vsa::HyperVector m) {
    if (m.size() != d_) throw ShapeMismatchError("set_state: dimension mismatch");
    m_ = std::move(m);
}

void AssociativeMemory::set_tag(vsa::HyperVector tag) {
    if (tag.size() != d_) throw ShapeMismatchError("set_tag: dimension mismatch");
    tag_ = std::move(tag);
}

}  // namespace lznet::memory
