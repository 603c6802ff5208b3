#pragma once

#include <optional>
#include <vector>

#include "twistdec/config.hpp"
#include "twistdec/operator.hpp"

namespace twistdec {

// Coordinate shift: multiplication by the variable `var` (1-based) on every
// graded block. Fiber blocks would be annihilated, which the caller must
// opt into by listing them in `masked_blocks`.
GradedOperator mz(const SpaceSpec& space, int var,
                  const std::vector<int>& masked_blocks = {});

// Diagonal symbol: z^k ⊗ η  ->  z^k ⊗ U^{k_var} η on graded blocks whose
// fiber matches the symbol; fiber blocks see exponent 0 and stay fixed.
GradedOperator diag_symbol(const SpaceSpec& space, int var, const Matrix& symbol,
                           double unitary_tol = 1e-12);

// W on the named block, zero elsewhere; combine with dsum for a global map.
GradedOperator fiber_unitary(const SpaceSpec& space, int block, const Matrix& w,
                             double unitary_tol = 1e-12);

GradedOperator literal_op(const SpaceSpec& space, Matrix m);
GradedOperator literal_op(const SpaceSpec& space, Matrix m, std::vector<int> raise,
                          std::vector<int> lower);

// Unimodular scalar multiple.
GradedOperator scale_op(Complex factor, const GradedOperator& op, double tol = 1e-12);

// Block-diagonal assembly: one operator per block, each living on the
// corresponding single-block space.
GradedOperator dsum(const SpaceSpec& space, const std::vector<GradedOperator>& per_block);

SpaceSpec single_block_space(const SpaceSpec& space, int block);

// Commuting family of unitaries U_{ij}, i < j, attached to a tuple.
// twist(j, i) is the adjoint of twist(i, j).
struct TwistFamily {
  int n = 0;
  std::vector<GradedOperator> upper;  // lex order (1,2), (1,3), ..., (n-1,n)
  double unitary_residual = 0.0;
  double commute_residual = 0.0;
  bool lifted = false;  // derived twist replaced by its exact structured form
  bool derived = false;

  static int upper_index(int i, int j, int n);  // 1-based, i < j
  const GradedOperator& at_upper(int i, int j) const;
  GradedOperator twist(int i, int j) const;  // any i != j
  bool family_ok(double tol = 1e-10) const {
    return unitary_residual < tol && commute_residual < tol;
  }
};

// Residuals of a twist family's own invariants on the full truncation.
void measure_twist_family(TwistFamily& family);

struct TupleFlags {
  bool twisted = false;
  double twisted_residual = 0.0;
  bool doubly_twisted = false;
  double doubly_residual = 0.0;
  double commutant_residual = 0.0;  // tuple entries vs twist entries
};

struct IsometryTuple {
  SpaceSpec space;
  std::vector<GradedOperator> V;
  std::optional<TwistFamily> twist;
  TupleFlags flags;

  int n() const { return static_cast<int>(V.size()); }
};

// Validates entries as certified isometries (throws on failure), attaches a
// twist when given, and measures the twist-word residuals into flags.
IsometryTuple make_tuple(const SpaceSpec& space, std::vector<GradedOperator> ops,
                         std::optional<TwistFamily> twist = std::nullopt,
                         const Tolerances& tol = {});

// Model tuple on graded blocks: V_1 = M_{z_1},
// V_i = M_{z_i} D_1[U_{i1}] ... D_{i-1}[U_{i,i-1}]. symbols[i][l] is U_{(i+2)(l+1)}
// in 1-based terms: symbols.size() == n-1, symbols[m].size() == m+1.
// Symbols must be unitary and mutually commuting. The twist is derived
// numerically from the tuple and attached.
IsometryTuple twisted_shift_tuple(const SpaceSpec& space,
                                  const std::vector<std::vector<Matrix>>& symbols,
                                  const Tolerances& tol = {});

// Direct sum of tuples of equal arity on the concatenation of their spaces.
// Twists combine block-diagonally when every summand carries one; otherwise
// the sum's twist is re-derived.
IsometryTuple dsum_tuple(const std::vector<IsometryTuple>& summands,
                         const Tolerances& tol = {});

}  // namespace twistdec
