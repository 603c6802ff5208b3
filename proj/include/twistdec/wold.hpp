#pragma once

#include "twistdec/subspace.hpp"

namespace twistdec {

struct ProjectionIteration {
  Matrix projection;
  bool stabilized = false;
  int steps = 0;
};

// SOT limit of V^m V*^m on the truncation: iterate M <- V M V* until two
// consecutive iterates agree (or M vanishes, which is already a fixed point).
// m_max <= 0 selects the space default (max degree cap + 2).
ProjectionIteration unitary_projection(const GradedOperator& v, int m_max = 0,
                                       const Tolerances& tol = {});

// Sum of V^m P_{ker V*} V*^m; terms die once the kernel orbit leaves the box.
ProjectionIteration shift_projection(const GradedOperator& v, int m_max = 0,
                                     const Tolerances& tol = {});

struct WoldResult {
  Subspace shift_part;
  Subspace unitary_part;
  bool certified = false;
  int steps = 0;
  double completeness_residual = 0.0;  // P_s + P_u vs identity on the certified region
  double orthogonality_residual = 0.0;
};

WoldResult wold_decompose(const GradedOperator& v, int m_max = 0,
                          const Tolerances& tol = {});

enum class RestrictionClass { Shift, Unitary, Mixed, Uncertified };

const char* to_string(RestrictionClass c);

// Classification of V restricted to a reducing subspace. Throws when S does
// not reduce V within tolerance.
RestrictionClass classify_restriction(const GradedOperator& v, const Subspace& s,
                                      int budget = 0, const Tolerances& tol = {});

// Shift test on a merely invariant subspace: the stabilized intersection of
// the V-orbit of S must vanish. Returns {is_shift, certified}.
struct InvariantShiftCheck {
  bool is_shift = false;
  bool certified = false;
  double invariance_residual = 0.0;
};
InvariantShiftCheck shift_on_invariant(const GradedOperator& v, const Subspace& s,
                                       int budget = 0, const Tolerances& tol = {});

int default_iteration_budget(const SpaceSpec& space);

}  // namespace twistdec
