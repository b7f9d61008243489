#pragma once

#include <cstdint>
#include <string>
#include <unordered_set>
#include <vector>

#include "lznet/common.hpp"

namespace lznet::lzc {

/// Discrete input sequence; tokens are bytes (small alphabets map onto them).
using TokenSeq = std::string;

/// Set of unique subsequences produced by the sliding-window LZ pass.
/// Entries are kept in insertion order so the source prefix can be
/// reconstructed by concatenation; membership checks go through the set.
class Digest {
  public:
    void insert(std::string entry);
    bool contains(const std::string& entry) const;
    std::size_t size() const { return ordered_.size(); }
    const std::vector<std::string>& entries() const { return ordered_; }

  private:
    std::vector<std::string> ordered_;
    std::unordered_set<std::string> members_;
};

/// Hash-mode digest: 64-bit rolling hashes of the subsequences. O(1)
/// window extension; the exact Digest is the correctness oracle.
using HashedDigest = std::unordered_set<std::uint64_t>;

/// Sliding-window LZ pass: grow the window until the selected subsequence
/// is absent from the store, insert it, restart the window. A trailing
/// window still present at end of input is discarded.
Digest lz_digest(const TokenSeq& seq);

/// Same pass over rolling hashes instead of materialized subsequences.
HashedDigest lz_digest_hashed(const TokenSeq& seq);

/// 1 - |A n B| / |A u B|; 0 when both digests are empty.
double jaccard_distance(const Digest& a, const Digest& b);
double jaccard_distance(const HashedDigest& a, const HashedDigest& b);

/// Lempel-Ziv Jaccard distance between two sequences.
double lzjd(const TokenSeq& s1, const TokenSeq& s2);
double lzjd_hashed(const TokenSeq& s1, const TokenSeq& s2);

struct LabeledSeq {
    TokenSeq tokens;
    int label;
};

/// Majority label among the k nearest training sequences under LZJD.
/// Distance ties break toward the earlier training index; label-count ties
/// break toward the smaller summed distance, then the earlier first hit.
int knn_classify(const std::vector<LabeledSeq>& train, const TokenSeq& query,
                 std::size_t k, bool hashed = false);

/// Pairwise LZJD distances, row-major |xs| x |ys| layout.
std::vector<double> distance_matrix(const std::vector<TokenSeq>& xs,
                                    const std::vector<TokenSeq>& ys,
                                    bool hashed = false);

}  // namespace lznet::lzc
