#pragma once

#include <map>
#include <string>
#include <vector>

#include "twistdec/models.hpp"
#include "twistdec/subspace.hpp"
#include "twistdec/wold.hpp"

namespace twistdec {

using Bitmask = unsigned;

std::vector<int> members(Bitmask a);          // set bits as ascending 1-based indices
std::string subset_label(Bitmask a, int n);   // "{1,3}" style

struct EngineConfig {
  Budgets budgets;
  Tolerances tol;
  unsigned long long seed = 1;
  int jobs = 1;
};

// V_{m_1}^{k_1} ... V_{m_p}^{k_p} for A = {m_1 < ... < m_p}.
GradedOperator tuple_word(const IsometryTuple& t, Bitmask a, const std::vector<int>& k);

// Numerically derives U_{ij} from the word V_i* V_j* V_i V_j. When the word
// is fiber-constant per block on the certified region it is replaced by its
// exact block-diagonal extension (unitary on the full truncation); otherwise
// the raw word is kept and the family residuals expose it.
TwistFamily derive_twist(const IsometryTuple& t, const Tolerances& tol = {});

struct PairCheck {
  bool ok = false;
  double residual = 0.0;            // worst word identity violation
  double commutant_residual = 0.0;  // tuple entries against twist entries
  double family_residual = 0.0;     // twist family unitarity/commutation
};

// V_i V_j = U_{ij} V_j V_i on certified basis vectors, plus the twist family
// invariants and the tuple-twist commutant.
PairCheck check_twisted(const IsometryTuple& t, const TwistFamily& u,
                        const Tolerances& tol = {});
// Additionally V_i* V_j = U_{ij}* V_j V_i* for all ordered pairs.
PairCheck check_doubly_twisted(const IsometryTuple& t, const TwistFamily& u,
                               const Tolerances& tol = {});

// ∩_{i in A} ker V_i*; the whole space for A = {}.
Subspace defect_space(const IsometryTuple& t, Bitmask a, const Tolerances& tol = {});

struct WanderingResult {
  Subspace space;
  bool stabilized = false;
  bool certified = false;
  int budget_used = 0;
  double invariance_residual = 0.0;
};

// ∩_{i in A} ∩_{B ⊆ {i}^c} ∩_k ker(V_i* V_B^k), exponents grown shell by
// shell until two consecutive shells agree or K is exhausted.
WanderingResult weak_wandering(const IsometryTuple& t, Bitmask a, int k_budget = 0,
                               const Tolerances& tol = {});

enum class BlockRoute { WeakWandering, Defect };

// Stabilized intersection over the complementary coordinates of the chosen
// base space (weak wandering subspace for the twisted route, joint kernel
// for the doubly twisted route).
WanderingResult wandering(const IsometryTuple& t, Bitmask a,
                          BlockRoute route = BlockRoute::WeakWandering,
                          const Budgets& budgets = {}, const Tolerances& tol = {});

// ⊕_k V_A^k W_A over the exponent box. Pairwise orthogonality of the
// summands is asserted; violation beyond tolerance is a hard error.
Subspace block_space(const IsometryTuple& t, Bitmask a,
                     BlockRoute route = BlockRoute::WeakWandering,
                     const Budgets& budgets = {}, const Tolerances& tol = {});

struct WitnessEntry {
  int i = 0, j = 0;
  double residual = 0.0;
};

struct CriterionResult {
  enum class Verdict { Ok, Failed, Uncertified };
  Verdict verdict = Verdict::Ok;
  std::vector<WitnessEntry> witnesses;
};

// Joint reducibility of the per-coordinate unitary parts.
CriterionResult vnw_criterion(const IsometryTuple& t, const EngineConfig& cfg = {});

struct BlockEntry {
  Bitmask A = 0;
  Subspace space;
  bool certified = false;
  std::vector<RestrictionClass> classifications;  // one per coordinate
  double reducing_residual = 0.0;
  double restriction_doubly_residual = 0.0;
  double cross_route_angle = 0.0;
};

struct ShiftVerdict {
  bool ok = false;
  bool certified = false;
  std::vector<std::string> evidence;
};

struct DecompositionReport {
  std::string mode;
  bool ok = true;
  bool certified = true;
  std::string failure;
  std::vector<BlockEntry> blocks;  // ascending subset order
  double orthogonality_residual = 0.0;
  long sum_dims = 0;
  long ambient_dim = 0;
  bool complete = false;
  CriterionResult criterion;
  bool has_weak_shift = false;
  ShiftVerdict weak_shift;
  int budget_orbit = 0;
  int budget_iterations = 0;
  unsigned long long seed = 1;
};

// Blocks as intersections of per-coordinate shift/unitary parts. Requires
// the criterion; failure is reported with witnesses, not thrown.
DecompositionReport vnw_decompose(const IsometryTuple& t, const EngineConfig& cfg = {});

// Kernel-based blocks for doubly twisted tuples, cross-checked per subset
// against the intersection route. Throws when the tuple is not doubly twisted.
DecompositionReport doubly_twisted_decompose(const IsometryTuple& t,
                                             const EngineConfig& cfg = {});

// Proper blocks from weak wandering subspaces plus the orthocomplement
// residual block, whose restriction must be a weak shift. Throws when the
// tuple is not twisted.
DecompositionReport twisted_decompose(const IsometryTuple& t,
                                      const EngineConfig& cfg = {});

struct ClassifierEvidence {
  std::string what;
  RestrictionClass cls = RestrictionClass::Uncertified;
};

struct ClassifierResult {
  bool ok = false;
  bool certified = false;
  std::vector<ClassifierEvidence> evidence;
};

// Model criterion (restrictions to joint kernels and pairwise products)
// cross-checked against directly classifying every coordinate.
ClassifierResult is_twisted_shift(const IsometryTuple& t, const EngineConfig& cfg = {});

// Weak shift test, optionally restricted to an invariant subspace.
ClassifierResult is_twisted_weak_shift(const IsometryTuple& t,
                                       const EngineConfig& cfg = {});
ClassifierResult is_twisted_weak_shift(const IsometryTuple& t, const Subspace& within,
                                       const EngineConfig& cfg = {});

// Product of twist powers; exponent sign selects the adjoint.
struct TwistMonomial {
  int n = 0;
  std::map<std::pair<int, int>, int> powers;  // key (i,j) with i<j

  // eta_{i,k}: prod_{j != i} U_{ij}^{k_j} in the adjoint convention.
  static TwistMonomial eta(int i, const std::vector<int>& k, int n);
  GradedOperator evaluate(const TwistFamily& u) const;
};

struct IdentityCheck {
  bool ok = false;
  double residual = 0.0;
  int samples = 0;
};

// Sampled verification of V_i V^k = V^k V_i eta_{i,k}(U).
IdentityCheck twist_commutation_check(const IsometryTuple& t, int budget = 0,
                                      unsigned long long seed = 1, int min_samples = 20,
                                      const Tolerances& tol = {});

struct ProbeResult {
  bool contained = false;
  double containment_angle_sin = 0.0;
};

// Verifies the candidate reduces the tuple with the right per-coordinate
// classifications and doubly twisted restriction (throws naming the failing
// property otherwise), then tests containment in the A-block.
ProbeResult maximality_probe(const IsometryTuple& t, Bitmask a, const Subspace& k,
                             const EngineConfig& cfg = {});

}  // namespace twistdec
