#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "lznet/common.hpp"

namespace lznet::vsa {

/// Dense real hypervector of dimension d >= 2. The currency of all VSA
/// operations: binding, bundling and memory contents all live here.
using HyperVector = std::vector<double>;

/// i.i.d. Gaussian entries with mean 0 and variance 1/d, so ||v|| ~ 1.
/// Deterministic for a fixed seed.
HyperVector random_hypervector(std::size_t d, std::uint64_t seed);

/// Complex unit magnitude projection: normalizes every spectral component
/// of x to magnitude 1. The result is a unitary vector with unit L2 norm,
/// whose exact HRR inverse coincides with the pseudo-inverse.
HyperVector project_unitary(const HyperVector& x);

/// True if every spectral component of x has magnitude within tol of 1.
bool is_unitary(const HyperVector& x, double tol = 1e-9);

/// HRR binding: circular convolution, computed as an elementwise product
/// in the spectrum. Commutative.
HyperVector bind_hrr(const HyperVector& a, const HyperVector& b);

/// HRR pseudo-inverse: conjugate spectrum divided by its magnitude.
/// Equals the exact inverse when a is unitary.
HyperVector pseudo_inverse(const HyperVector& a);

/// HRR unbinding via the pseudo-inverse: s (*) a+ ~ b when s = a (*) b.
HyperVector unbind_hrr(const HyperVector& s, const HyperVector& a);

/// VTB binding B(x, y) = V_y x, where V_y is block-diagonal with sqrt(d)
/// copies of d^{1/4} * (row-major sqrt(d) x sqrt(d) reshape of y).
/// Requires d to be a perfect square. The block matrix is never materialized.
HyperVector bind_vtb(const HyperVector& x, const HyperVector& y);

/// VTB unbinding B+(s, y) = V_y^T s.
HyperVector unbind_vtb(const HyperVector& s, const HyperVector& y);

/// Weighted elementwise sum of hypervectors.
HyperVector bundle(std::span<const HyperVector> vs, std::span<const double> weights);

double dot(const HyperVector& a, const HyperVector& b);
double l2_norm(const HyperVector& a);

/// a.b / (||a|| ||b||); throws UndefinedSimilarityError on zero-norm input.
double cosine_similarity(const HyperVector& a, const HyperVector& b);

/// Side length of the VTB block for dimension d; throws unless d is a
/// perfect square >= 4.
std::size_t vtb_block_side(std::size_t d);

}  // namespace lznet::vsa
