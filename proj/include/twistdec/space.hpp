#pragma once

#include <Eigen/Dense>
#include <complex>
#include <string>
#include <vector>

namespace twistdec {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;

// Coefficients at or below this magnitude are treated as absent when the
// support of a vector is read off numerically.
inline constexpr double kSupportEps = 1e-13;

// One direct summand: polynomials truncated at degree_cap per variable,
// tensored with a fiber of dimension fiber_dim. degree_cap == 0 models a
// pure fiber block (finite unitary summand).
struct Block {
  int degree_cap = 0;
  int fiber_dim = 1;

  bool operator==(const Block& o) const {
    return degree_cap == o.degree_cap && fiber_dim == o.fiber_dim;
  }
};

// Ambient truncated space: a direct sum of blocks over a common variable
// count. Basis order: blocks in declared order; within a block, multi-indices
// k in {0..D}^v lexicographically with k_1 most significant, then the fiber
// index.
struct SpaceSpec {
  static constexpr long kDefaultDimCap = 20000;

  int vars = 0;
  std::vector<Block> blocks;

  SpaceSpec() = default;
  SpaceSpec(int v, std::vector<Block> bs, long dim_cap = kDefaultDimCap);

  long total_dim() const { return total_dim_; }
  int block_count() const { return static_cast<int>(blocks.size()); }
  long monomial_count(int b) const;
  long block_dim(int b) const;
  long block_offset(int b) const { return offsets_.at(b); }
  int block_of_index(long index) const;
  // A block carries degree structure only when there are variables to grade.
  bool graded(int b) const { return vars > 0 && blocks[b].degree_cap > 0; }
  int max_degree_cap() const;

  bool operator==(const SpaceSpec& o) const {
    return vars == o.vars && blocks == o.blocks;
  }
  bool operator!=(const SpaceSpec& o) const { return !(*this == o); }

 private:
  std::vector<long> offsets_;
  long total_dim_ = 0;
};

struct BasisIndex {
  int block = 0;
  std::vector<int> exponents;  // length = vars
  int fiber = 0;

  bool operator==(const BasisIndex& o) const {
    return block == o.block && exponents == o.exponents && fiber == o.fiber;
  }
};

long index_of(const SpaceSpec& space, const BasisIndex& b);
BasisIndex basis_at(const SpaceSpec& space, long index);
// Canonical enumeration of the whole basis, in coordinate order.
std::vector<BasisIndex> build_space(const SpaceSpec& space);

// A vector in the truncation plus the flag saying whether every operator
// application that produced it acted exactly like the untruncated model.
struct StateVector {
  Vector coeffs;
  bool certified = true;

  double norm() const { return coeffs.norm(); }
};

// Degree support of a coefficient vector, per block and per variable.
struct SupportProfile {
  std::vector<int> max_degree;               // max over support of max_v k_v; -1 empty
  std::vector<std::vector<int>> max_by_var;  // per block, per variable; -1 empty
  bool any(int b) const { return max_degree[b] >= 0; }
};

SupportProfile support_profile(const SpaceSpec& space, const Vector& coeffs,
                               double eps = kSupportEps);

// Per-block max degree of the support (the StateVector max_degree contract).
std::vector<int> max_degrees(const SpaceSpec& space, const Vector& coeffs,
                             double eps = kSupportEps);

}  // namespace twistdec
