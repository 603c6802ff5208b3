#include "twistdec/wold.hpp"

#include <stdexcept>

namespace twistdec {

int default_iteration_budget(const SpaceSpec& space) {
  return space.max_degree_cap() + 2;
}

namespace {

void require_isometry(const GradedOperator& v, const Tolerances& tol, const char* what) {
  IsometryCheck chk = is_isometry_certified(v, tol.twist_family);
  if (!chk.ok)
    throw std::invalid_argument(std::string(what) +
                                " wants a certified isometry (residual " +
                                std::to_string(chk.residual) + ")");
}

}  // namespace

ProjectionIteration unitary_projection(const GradedOperator& v, int m_max,
                                       const Tolerances& tol) {
  require_isometry(v, tol, "unitary_projection");
  if (m_max <= 0) m_max = default_iteration_budget(v.space);
  long n = v.space.total_dim();
  ProjectionIteration out;
  Matrix m = Matrix::Identity(n, n);
  Matrix adj = v.mat.adjoint();
  for (int step = 1; step <= m_max; ++step) {
    Matrix next = v.mat * m * adj;
    ++out.steps;
    double diff = (next - m).cwiseAbs().maxCoeff();
    m = std::move(next);
    if (diff < tol.stabilize || m.cwiseAbs().maxCoeff() < tol.stabilize) {
      out.stabilized = true;
      break;
    }
  }
  out.projection = std::move(m);
  return out;
}

ProjectionIteration shift_projection(const GradedOperator& v, int m_max,
                                     const Tolerances& tol) {
  require_isometry(v, tol, "shift_projection");
  if (m_max <= 0) m_max = default_iteration_budget(v.space);
  Subspace ker = kernel(adjoint(v), tol);
  long n = v.space.total_dim();
  Matrix term = ker.frame * ker.frame.adjoint();
  Matrix acc = term;
  Matrix adj = v.mat.adjoint();
  ProjectionIteration out;
  out.stabilized = ker.dim() == 0;
  for (int m = 1; m <= m_max; ++m) {
    term = v.mat * term * adj;
    ++out.steps;
    if (term.cwiseAbs().maxCoeff() < tol.stabilize) {
      out.stabilized = true;
      break;
    }
    acc += term;
  }
  out.projection = std::move(acc);
  return out;
}

WoldResult wold_decompose(const GradedOperator& v, int m_max, const Tolerances& tol) {
  ProjectionIteration pu = unitary_projection(v, m_max, tol);
  ProjectionIteration ps = shift_projection(v, m_max, tol);
  WoldResult res;
  res.steps = std::max(pu.steps, ps.steps);
  res.unitary_part = orthonormalize(v.space, pu.projection, tol);
  res.unitary_part.label = "wold unitary part";
  res.shift_part = orthonormalize(v.space, ps.projection, tol);
  res.shift_part.label = "wold shift part";
  if (res.unitary_part.dim() > 0 && res.shift_part.dim() > 0)
    res.orthogonality_residual =
        (res.unitary_part.frame.adjoint() * res.shift_part.frame).cwiseAbs().maxCoeff();
  // completeness on the one-application guard region
  Matrix total = pu.projection + ps.projection;
  std::vector<char> mask = certified_basis_mask(v.space, v.raise);
  for (long i = 0; i < v.space.total_dim(); ++i) {
    if (!mask[i]) continue;
    Vector e = Vector::Zero(v.space.total_dim());
    e[i] = 1.0;
    res.completeness_residual =
        std::max(res.completeness_residual, (total * e - e).norm());
  }
  res.certified = pu.stabilized && ps.stabilized;
  res.unitary_part.certified = res.certified;
  res.shift_part.certified = res.certified;
  // the Wold ranges are exact up to one guard application of the word
  res.unitary_part.cert = certified_degrees(v.space, v.raise);
  res.shift_part.cert = res.unitary_part.cert;
  return res;
}

const char* to_string(RestrictionClass c) {
  switch (c) {
    case RestrictionClass::Shift: return "shift";
    case RestrictionClass::Unitary: return "unitary";
    case RestrictionClass::Mixed: return "mixed";
    case RestrictionClass::Uncertified: return "uncertified";
  }
  return "uncertified";
}

InvariantShiftCheck shift_on_invariant(const GradedOperator& v, const Subspace& s,
                                       int budget, const Tolerances& tol) {
  if (budget <= 0) budget = default_iteration_budget(v.space);
  StabilizedResult tail = stabilized_intersection({v}, s, budget, tol);
  InvariantShiftCheck out;
  out.is_shift = tail.space.dim() == 0;
  out.certified = tail.stabilized && (tail.space.dim() == 0 || tail.certified);
  out.invariance_residual = tail.invariance_residual;
  return out;
}

RestrictionClass classify_restriction(const GradedOperator& v, const Subspace& s,
                                      int budget, const Tolerances& tol) {
  ReduceCheck red = reduces(v, s, tol.residual);
  if (!red.ok)
    throw std::invalid_argument("classify_restriction wants a reducing subspace (residual " +
                                std::to_string(red.residual) + ")");
  if (s.dim() == 0) return RestrictionClass::Shift;  // vacuous
  if (budget <= 0) budget = default_iteration_budget(v.space);
  StabilizedResult tail = stabilized_intersection({v}, s, budget, tol);
  if (!tail.stabilized) return RestrictionClass::Uncertified;
  if (tail.space.dim() == 0) return RestrictionClass::Shift;
  // unitary test: V S = S and V V* acts as the identity on certified columns
  Subspace im = image(v, s, tol);
  bool onto = equal(im, s, tol.angle);
  double vvstar = 0.0;
  long checked = 0;
  Matrix w = v.mat * v.mat.adjoint();
  for (long c = 0; c < s.frame.cols(); ++c) {
    SupportProfile p = support_profile(s.space, s.frame.col(c));
    if (!application_exact(s.space, p, v.raise)) continue;
    vvstar = std::max(vvstar, (w * s.frame.col(c) - s.frame.col(c)).norm());
    ++checked;
  }
  if (onto && checked > 0 && vvstar < tol.residual) return RestrictionClass::Unitary;
  return RestrictionClass::Mixed;
}

}  // namespace twistdec
