#pragma once

namespace twistdec {

// Numerical thresholds used across the library. Defaults are the contract
// values; the CLI can override rank_rtol and residual.
struct Tolerances {
  double rank_atol = 1e-12;      // singular value floor for rank decisions
  double rank_rtol = 1e-10;      // relative singular value cutoff
  double residual = 1e-9;        // reducing / word-identity / classification checks
  double twist_family = 1e-10;   // twist unitarity, commutation, isometry checks
  double angle = 1e-8;           // subspace equality and intersection angles
  double symbol_unitary = 1e-12; // unitarity of user-supplied symbols
  double derive_soft_fail = 1e-8;  // derived twist flagged unusable beyond this
  double oracle_compare = 1e-7;    // cross-route disagreement bound
  double stabilize = 1e-10;        // projection iteration stabilization
};

struct SpaceSpec;

// Iteration budgets. Zero fields mean "derive from the space": orbit and
// exponent budgets default to the largest degree cap, iteration counts to
// the cap plus two (one step to flush the top shell, one to observe the
// fixed point).
struct Budgets {
  int orbit = 0;       // K for orbit sums and kernel-word exponents
  int iterations = 0;  // stabilized-intersection steps and Wold m_max
  int samples = 24;    // sampled word-identity checks

  Budgets resolved(const SpaceSpec& space) const;
};

}  // namespace twistdec
