#pragma once

#include <string>
#include <vector>

#include "twistdec/config.hpp"
#include "twistdec/operator.hpp"

namespace twistdec {

// Closed subspace of the truncation, held as an orthonormal frame.
// `cert` is the advisory per-block guard band remaining after the
// construction; `certified` says every operator application along the way
// acted exactly (or benignly escaped the box) and every iteration stabilized.
struct Subspace {
  SpaceSpec space;
  Matrix frame;  // total_dim x dim, orthonormal columns
  std::vector<int> cert;
  bool certified = true;
  double tol_rank = 1e-10;
  std::string label;

  long dim() const { return frame.cols(); }
};

Subspace whole_space(const SpaceSpec& space);
Subspace zero_space(const SpaceSpec& space);

// Householder QR followed by an SVD rank filter (keep sigma > atol + rtol*sigma_max).
Subspace orthonormalize(const SpaceSpec& space, const Matrix& cols,
                        const Tolerances& tol = {});

// Null space of the operator matrix: right singular vectors with small sigma.
Subspace kernel(const GradedOperator& op, const Tolerances& tol = {});

Subspace image(const GradedOperator& op, const Subspace& s, const Tolerances& tol = {});

// Principal-direction intersection: singular vectors of F_S^* F_T with
// sigma >= 1 - angle tolerance, represented by the normalized average of the
// paired images.
Subspace intersect(const Subspace& s, const Subspace& t, const Tolerances& tol = {});

Subspace complement(const Subspace& s, const Tolerances& tol = {});
Subspace join(const Subspace& s, const Subspace& t, const Tolerances& tol = {});

// Angles between the spaces, ascending, min(dim,dim) entries. Small angles
// are computed through sines so that equality tests keep full precision.
std::vector<double> principal_angles(const Subspace& s, const Subspace& t);

bool equal(const Subspace& s, const Subspace& t, double angle_tol = 1e-8);

// Largest-angle sine of S inside T (0 when S is contained in T).
double containment_sin(const Subspace& s, const Subspace& t);

struct ReduceCheck {
  bool ok = false;
  double residual = 0.0;
  long checked = 0;
};

// Column-wise invariance of S under op and op* over certified frame columns.
ReduceCheck reduces(const GradedOperator& op, const Subspace& s, double tol = 1e-9);

struct StabilizedResult {
  Subspace space;
  bool stabilized = false;
  bool certified = false;
  int steps = 0;
  double invariance_residual = 0.0;
};

// Fixed point of G -> ∩_i op_i(G) starting from S. Ops should map S into
// itself; a violation is measured and flagged but iteration proceeds.
StabilizedResult stabilized_intersection(const std::vector<GradedOperator>& ops,
                                         const Subspace& s, int budget,
                                         const Tolerances& tol = {});

}  // namespace twistdec
