#pragma once

#include <memory>
#include <vector>

#include "twistdec/space.hpp"

namespace twistdec {

struct OpExpr;

// Dense operator on a truncated space together with its degree budget.
// raise[v] / lower[v] bound how far the modeled (untruncated) operator can
// move the exponent of variable v; they sum under composition. word_len
// counts elementary factors. The truncated matrix agrees with the model on
// every vector whose support satisfies k_v + raise[v] <= D_b per graded
// block, the certified region of this operator.
struct GradedOperator {
  SpaceSpec space;
  Matrix mat;
  std::vector<int> raise;
  std::vector<int> lower;
  int word_len = 1;
  // Every basis vector maps to a scalar multiple of a basis vector (and vice
  // versa for rows). Such operators push escaping content out of the box
  // orthogonally, which keeps image chains canonical on the truncation.
  bool weighted_permutation = false;
  std::shared_ptr<const OpExpr> provenance;
};

GradedOperator make_operator(const SpaceSpec& space, Matrix mat,
                             std::vector<int> raise, std::vector<int> lower,
                             int word_len, std::shared_ptr<const OpExpr> prov);

bool detect_weighted_permutation(const Matrix& m, double eps = kSupportEps);

// Sparsity-derived budgets for a literal matrix: within a block the bound is
// the per-variable exponent delta; across blocks the conservative delta of
// total degrees is charged to every variable.
void derive_bounds(const SpaceSpec& space, const Matrix& m,
                   std::vector<int>& raise, std::vector<int>& lower);

// True when applying an operator with the given raise budget to a vector
// with this support stays inside every graded block's cap.
bool application_exact(const SpaceSpec& space, const SupportProfile& support,
                       const std::vector<int>& raise);

// Basis vectors on which a word with the given raise budget acts exactly.
std::vector<char> certified_basis_mask(const SpaceSpec& space,
                                       const std::vector<int>& raise);

// Advisory per-block guard band: D_b minus the worst raise (0 on fiber blocks).
std::vector<int> certified_degrees(const SpaceSpec& space,
                                   const std::vector<int>& raise);

StateVector apply(const GradedOperator& op, const StateVector& x);

// Product in listed order, leftmost applied last. Budgets and word lengths sum.
GradedOperator compose(const std::vector<GradedOperator>& ops);
GradedOperator adjoint(const GradedOperator& op);
GradedOperator identity_op(const SpaceSpec& space);
GradedOperator operator_power(const GradedOperator& op, int p);  // p >= 0

struct IsometryCheck {
  bool ok = false;
  double residual = 0.0;
  std::vector<int> certified_degree;
  long checked = 0;  // certified basis vectors examined
};

// Norm preservation over the certified basis vectors of the operator.
IsometryCheck is_isometry_certified(const GradedOperator& op, double tol = 1e-10);

}  // namespace twistdec
