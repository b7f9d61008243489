#pragma once

#include <cstdint>
#include <vector>

#include "lznet/vsa.hpp"

namespace lznet::memory {

enum class Backend { kHrr, kVtb, kHopfield };

Backend backend_from_string(const std::string& s);
const char* to_string(Backend b);

/// What a query hands to the novelty score: the reconstruction r_hat and
/// the reference r it should be compared against (the tag for VSA
/// backends, the query itself for Hopfield).
struct QueryResult {
    vsa::HyperVector r_hat;
    vsa::HyperVector r;
};

/// Insert/query associative memory over hypervectors.
///
/// VSA backends keep a single superposition state m plus a fixed unitary
/// tag; every insert bundles B(p*v, tag) into m and a query unbinds m by
/// the query vector. The Hopfield backend stores explicit patterns and
/// retrieves a softmax-weighted average of them.
class AssociativeMemory {
  public:
    AssociativeMemory(Backend kind, std::size_t d, std::uint64_t seed);

    void insert(const vsa::HyperVector& v, double p);
    QueryResult query(const vsa::HyperVector& q) const;

    /// Clears contents; the tag survives so the memory can be reused
    /// across sequences.
    void reset();

    Backend kind() const { return kind_; }
    std::size_t dim() const { return d_; }
    const vsa::HyperVector& state() const { return m_; }
    const vsa::HyperVector& tag() const { return tag_; }
    const std::vector<vsa::HyperVector>& patterns() const { return patterns_; }
    const std::vector<double>& pattern_weights() const { return weights_; }
    double beta() const { return beta_; }
    void set_beta(double beta) { beta_ = beta; }

    /// Direct state access for checkpoint restore.
    void set_state(vsa::HyperVector m);
    void set_tag(vsa::HyperVector tag);

  private:
    Backend kind_;
    std::size_t d_;
    vsa::HyperVector m_;    // VSA superposition
    vsa::HyperVector tag_;  // fixed unitary tag (VSA backends)
    std::vector<vsa::HyperVector> patterns_;
    std::vector<double> weights_;
    double beta_ = 0.0;  // Hopfield inverse temperature
};

}  // namespace lznet::memory
