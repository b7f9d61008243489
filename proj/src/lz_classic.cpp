#include "lznet/lz_classic.hpp"

#include <algorithm>
#include <map>

namespace lznet::lzc {

void Digest::insert(std::string entry) {
    if (members_.insert(entry).second) ordered_.push_back(std::move(entry));
}

bool Digest::contains(const std::string& entry) const {
    return members_.count(entry) != 0;
}

Digest lz_digest(const TokenSeq& seq) {
    Digest digest;
    std::size_t start = 0;
    while (start < seq.size()) {
        std::size_t end = start + 1;
        while (end <= seq.size() && digest.contains(seq.substr(start, end - start))) {
            ++end;
        }
        if (end > seq.size()) break;  // trailing window already stored: discard
        digest.insert(seq.substr(start, end - start));
        start = end;
    }
    return digest;
}

namespace {
constexpr std::uint64_t kHashMult = 0x100000001b3ULL;  // FNV-ish odd multiplier
constexpr std::uint64_t kHashInit = 0xcbf29ce484222325ULL;

inline std::uint64_t extend_hash(std::uint64_t h, unsigned char tok) {
    return (h ^ tok) * kHashMult;
}
}  // namespace

HashedDigest lz_digest_hashed(const TokenSeq& seq) {
    HashedDigest digest;
    std::size_t start = 0;
    while (start < seq.size()) {
        std::uint64_t h = kHashInit;
        std::size_t end = start;
        bool inserted = false;
        while (end < seq.size()) {
            h = extend_hash(h, static_cast<unsigned char>(seq[end]));
            ++end;
            if (!digest.count(h)) {
                digest.insert(h);
                inserted = true;
                break;
            }
        }
        if (!inserted) break;
        start = end;
    }
    return digest;
}

double jaccard_distance(const Digest& a, const Digest& b) {
    if (a.size() == 0 && b.size() == 0) return 0.0;
    std::size_t inter = 0;
    for (const auto& e : a.entries()) {
        if (b.contains(e)) ++inter;
    }
    const double uni = static_cast<double>(a.size() + b.size() - inter);
    return 1.0 - static_cast<double>(inter) / uni;
}

double jaccard_distance(const HashedDigest& a, const HashedDigest& b) {
    if (a.empty() && b.empty()) return 0.0;
    std::size_t inter = 0;
    for (const auto& h : a) {
        if (b.count(h)) ++inter;
    }
    const double uni = static_cast<double>(a.size() + b.size() - inter);
    return 1.0 - static_cast<double>(inter) / uni;
}

double lzjd(const TokenSeq& s1, const TokenSeq& s2) {
    return jaccard_distance(lz_digest(s1), lz_digest(s2));
}

double lzjd_hashed(const TokenSeq& s1, const TokenSeq& s2) {
    return jaccard_distance(lz_digest_hashed(s1), lz_digest_hashed(s2));
}

int knn_classify(const std::vector<LabeledSeq>& train, const TokenSeq& query,
                 std::size_t k, bool hashed) {
    if (train.empty()) throw Error("knn_classify: empty training set");
    if (k == 0 || k > train.size()) {
        throw Error("knn_classify: k must be in [1, |train|]");
    }
    std::vector<std::pair<double, std::size_t>> dist(train.size());
    if (hashed) {
        const auto qd = lz_digest_hashed(query);
        for (std::size_t i = 0; i < train.size(); ++i) {
            dist[i] = {jaccard_distance(lz_digest_hashed(train[i].tokens), qd), i};
        }
    } else {
        const auto qd = lz_digest(query);
        for (std::size_t i = 0; i < train.size(); ++i) {
            dist[i] = {jaccard_distance(lz_digest(train[i].tokens), qd), i};
        }
    }
    std::sort(dist.begin(), dist.end());  // (distance, index): earlier index wins ties

    struct Tally {
        std::size_t count = 0;
        double dist_sum = 0.0;
        std::size_t first_seen = 0;
    };
    std::map<int, Tally> tallies;
    for (std::size_t j = 0; j < k; ++j) {
        const auto [d, idx] = dist[j];
        auto [it, fresh] = tallies.try_emplace(train[idx].label);
        if (fresh) it->second.first_seen = j;
        it->second.count += 1;
        it->second.dist_sum += d;
    }
    int best_label = tallies.begin()->first;
    Tally best = tallies.begin()->second;
    for (const auto& [label, t] : tallies) {
        const bool wins = t.count > best.count ||
                          (t.count == best.count && t.dist_sum < best.dist_sum) ||
                          (t.count == best.count && t.dist_sum == best.dist_sum &&
                           t.first_seen < best.first_seen);
        if (wins) {
            best_label = label;
            best = t;
        }
    }
    return best_label;
}

std::vector<double> distance_matrix(const std::vector<TokenSeq>& xs,
                                    const std::vector<TokenSeq>& ys, bool hashed) {
    std::vector<double> out(xs.size() * ys.size());
    if (hashed) {
        std::vector<HashedDigest> dx(xs.size()), dy(ys.size());
        for (std::size_t i = 0; i < xs.size(); ++i) dx[i] = lz_digest_hashed(xs[i]);
        for (std::size_t j = 0; j < ys.size(); ++j) dy[j] = lz_digest_hashed(ys[j]);
        for (std::size_t i = 0; i < xs.size(); ++i) {
            for (std::size_t j = 0; j < ys.size(); ++j) {
                out[i * ys.size() + j] = jaccard_distance(dx[i], dy[j]);
            }
        }
    } else {
        std::vector<Digest> dx(xs.size()), dy(ys.size());
        for (std::size_t i = 0; i < xs.size(); ++i) dx[i] = lz_digest(xs[i]);
        for (std::size_t j = 0; j < ys.size(); ++j) dy[j] = lz_digest(ys[j]);
        for (std::size_t i = 0; i < xs.size(); ++i) {
            for (std::size_t j = 0; j < ys.size(); ++j) {
                out[i * ys.size() + j] = jaccard_distance(dx[i], dy[j]);
            }
        }
    }
    return out;
}

}  // namespace lznet::lzc
