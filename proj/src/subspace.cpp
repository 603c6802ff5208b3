#include "twistdec/subspace.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <Eigen/QR>
#include <Eigen/SVD>

namespace twistdec {

namespace {

std::vector<int> full_cert(const SpaceSpec& space) {
  std::vector<int> c(space.block_count(), 0);
  for (int b = 0; b < space.block_count(); ++b)
    c[b] = space.graded(b) ? space.blocks[b].degree_cap : 0;
  return c;
}

std::vector<int> min_cert(const std::vector<int>& a, const std::vector<int>& b) {
  std::vector<int> out(a.size());
  for (size_t i = 0; i < a.size(); ++i) out[i] = std::min(a[i], b[i]);
  return out;
}

void require_same_space(const Subspace& s, const Subspace& t, const char* what) {
  if (s.space != t.space)
    throw std::invalid_argument(std::string(what) + ": subspaces live on different spaces");
}

Eigen::JacobiSVD<Matrix> svd_of(const Matrix& m, unsigned options) {
  return Eigen::JacobiSVD<Matrix>(m, options);
}

}  // namespace

Subspace whole_space(const SpaceSpec& space) {
  Subspace s;
  s.space = space;
  s.frame = Matrix::Identity(space.total_dim(), space.total_dim());
  s.cert = full_cert(space);
  s.label = "whole";
  return s;
}

Subspace zero_space(const SpaceSpec& space) {
  Subspace s;
  s.space = space;
  s.frame = Matrix(space.total_dim(), 0);
  s.cert = full_cert(space);
  s.label = "zero";
  return s;
}

Subspace orthonormalize(const SpaceSpec& space, const Matrix& cols,
                        const Tolerances& tol) {
  if (cols.rows() != space.total_dim())
    throw std::invalid_argument("orthonormalize: columns do not match space dimension");
  Subspace out = zero_space(space);
  out.tol_rank = tol.rank_rtol;
  if (cols.cols() == 0) return out;
  long n = cols.rows(), m = cols.cols();
  long k = std::min(n, m);
  Eigen::HouseholderQR<Matrix> qr(cols);
  Matrix q = qr.householderQ() * Matrix::Identity(n, k);
  Matrix r = qr.matrixQR().topRows(k).triangularView<Eigen::Upper>();
  Eigen::JacobiSVD<Matrix> svd = svd_of(r, Eigen::ComputeThinU);
  const auto& sv = svd.singularValues();
  double cutoff = tol.rank_atol + tol.rank_rtol * (sv.size() ? sv(0) : 0.0);
  long kept = 0;
  while (kept < sv.size() && sv(kept) > cutoff) ++kept;
  if (kept == 0) return out;
  out.frame = q * svd.matrixU().leftCols(kept);
  return out;
}

Subspace kernel(const GradedOperator& op, const Tolerances& tol) {
  Eigen::JacobiSVD<Matrix> svd = svd_of(op.mat, Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  double cutoff = tol.rank_atol + tol.rank_rtol * (sv.size() ? sv(0) : 0.0);
  long rank = 0;
  while (rank < sv.size() && sv(rank) > cutoff) ++rank;
  Subspace out = zero_space(op.space);
  out.tol_rank = tol.rank_rtol;
  out.frame = svd.matrixV().rightCols(op.mat.cols() - rank);
  out.cert = min_cert(full_cert(op.space), certified_degrees(op.space, op.raise));
  out.label = "ker";
  return out;
}

Subspace image(const GradedOperator& op, const Subspace& s, const Tolerances& tol) {
  if (op.space != s.space)
    throw std::invalid_argument("image: operator and subspace spaces differ");
  if (s.dim() == 0) {
    Subspace out = zero_space(op.space);
    out.cert = s.cert;
    out.certified = s.certified;
    return out;
  }
  Matrix cols = op.mat * s.frame;
  bool exact = true;
  bool graded_support = false;
  for (long c = 0; c < s.frame.cols(); ++c) {
    SupportProfile p = support_profile(op.space, s.frame.col(c));
    exact = exact && application_exact(op.space, p, op.raise);
    for (int b = 0; b < op.space.block_count() && !graded_support; ++b)
      graded_support = op.space.graded(b) && p.any(b);
  }
  Subspace out = orthonormalize(op.space, cols, tol);
  out.cert = s.cert;
  if (graded_support && !exact) {
    int worst = 0;
    for (int r : op.raise) worst = std::max(worst, r);
    for (int b = 0; b < op.space.block_count(); ++b)
      if (op.space.graded(b)) out.cert[b] = s.cert[b] - worst;
  }
  out.certified = s.certified && (exact || op.weighted_permutation);
  return out;
}

Subspace intersect(const Subspace& s, const Subspace& t, const Tolerances& tol) {
  require_same_space(s, t, "intersect");
  if (s.dim() == 0 || t.dim() == 0) {
    Subspace out = zero_space(s.space);
    out.cert = min_cert(s.cert, t.cert);
    out.certified = s.certified && t.certified;
    return out;
  }
  Matrix g = s.frame.adjoint() * t.frame;
  Eigen::JacobiSVD<Matrix> svd = svd_of(g, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();
  std::vector<long> keep;
  for (long i = 0; i < sv.size(); ++i)
    if (sv(i) >= 1.0 - tol.angle) keep.push_back(i);
  Matrix reps(s.space.total_dim(), static_cast<long>(keep.size()));
  for (size_t i = 0; i < keep.size(); ++i) {
    Vector x = s.frame * svd.matrixU().col(keep[i]);
    Vector y = t.frame * svd.matrixV().col(keep[i]);
    Vector avg = 0.5 * (x + y);
    reps.col(static_cast<long>(i)) = avg / avg.norm();
  }
  Subspace out = orthonormalize(s.space, reps, tol);
  out.cert = min_cert(s.cert, t.cert);
  out.certified = s.certified && t.certified;
  return out;
}

Subspace complement(const Subspace& s, const Tolerances& tol) {
  if (s.dim() == 0) {
    Subspace out = whole_space(s.space);
    out.cert = s.cert;
    out.certified = s.certified;
    return out;
  }
  Eigen::JacobiSVD<Matrix> svd =
      svd_of(Matrix(s.frame.adjoint()), Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  double cutoff = tol.rank_atol + tol.rank_rtol * (sv.size() ? sv(0) : 0.0);
  long rank = 0;
  while (rank < sv.size() && sv(rank) > cutoff) ++rank;
  Subspace out = zero_space(s.space);
  out.frame = svd.matrixV().rightCols(s.space.total_dim() - rank);
  out.cert = s.cert;
  out.certified = s.certified;
  return out;
}

Subspace join(const Subspace& s, const Subspace& t, const Tolerances& tol) {
  require_same_space(s, t, "join");
  Matrix cols(s.space.total_dim(), s.dim() + t.dim());
  cols << s.frame, t.frame;
  Subspace out = orthonormalize(s.space, cols, tol);
  out.cert = min_cert(s.cert, t.cert);
  out.certified = s.certified && t.certified;
  return out;
}

std::vector<double> principal_angles(const Subspace& s, const Subspace& t) {
  require_same_space(s, t, "principal_angles");
  long k = std::min(s.dim(), t.dim());
  if (k == 0) return {};
  const Subspace& a = s.dim() <= t.dim() ? s : t;  // smaller space first
  const Subspace& b = s.dim() <= t.dim() ? t : s;
  Matrix g = b.frame.adjoint() * a.frame;  // dim(b) x k
  Eigen::JacobiSVD<Matrix> csvd = svd_of(g, 0);
  std::vector<double> cosines(csvd.singularValues().data(),
                              csvd.singularValues().data() + k);  // descending
  Matrix resid = a.frame - b.frame * g;  // sine components of a inside b
  Eigen::JacobiSVD<Matrix> ssvd = svd_of(resid, 0);
  std::vector<double> sines(ssvd.singularValues().data(),
                            ssvd.singularValues().data() + k);  // descending
  std::vector<double> angles(k);
  for (long i = 0; i < k; ++i) {
    double c = std::clamp(cosines[i], 0.0, 1.0);
    double sn = std::clamp(sines[k - 1 - i], 0.0, 1.0);
    angles[i] = c * c > 0.5 ? std::asin(sn) : std::acos(c);
  }
  std::sort(angles.begin(), angles.end());
  return angles;
}

bool equal(const Subspace& s, const Subspace& t, double angle_tol) {
  require_same_space(s, t, "equal");
  if (s.dim() != t.dim()) return false;
  if (s.dim() == 0) return true;
  std::vector<double> angles = principal_angles(s, t);
  return angles.back() < angle_tol;
}

double containment_sin(const Subspace& s, const Subspace& t) {
  require_same_space(s, t, "containment");
  if (s.dim() == 0) return 0.0;
  if (t.dim() == 0) return 1.0;
  Matrix resid = s.frame - t.frame * (t.frame.adjoint() * s.frame);
  Eigen::JacobiSVD<Matrix> svd = svd_of(resid, 0);
  return std::clamp(svd.singularValues()(0), 0.0, 1.0);
}

ReduceCheck reduces(const GradedOperator& op, const Subspace& s, double tol) {
  if (op.space != s.space)
    throw std::invalid_argument("reduces: operator and subspace spaces differ");
  ReduceCheck res;
  if (s.dim() == 0 || s.dim() == s.space.total_dim()) {
    res.ok = true;
    return res;
  }
  Matrix proj = s.frame * s.frame.adjoint();
  Matrix adj = op.mat.adjoint();
  for (long c = 0; c < s.frame.cols(); ++c) {
    SupportProfile p = support_profile(s.space, s.frame.col(c));
    if (application_exact(s.space, p, op.raise)) {
      Vector y = op.mat * s.frame.col(c);
      res.residual = std::max(res.residual, (y - proj * y).norm());
      ++res.checked;
    }
    if (application_exact(s.space, p, op.lower)) {
      Vector y = adj * s.frame.col(c);
      res.residual = std::max(res.residual, (y - proj * y).norm());
      ++res.checked;
    }
  }
  res.ok = res.residual < tol;
  return res;
}

StabilizedResult stabilized_intersection(const std::vector<GradedOperator>& ops,
                                         const Subspace& s, int budget,
                                         const Tolerances& tol) {
  for (const GradedOperator& op : ops)
    if (op.space != s.space)
      throw std::invalid_argument("stabilized_intersection: space mismatch");
  StabilizedResult res;
  res.space = s;
  // invariance precondition, measured on exactly-applicable columns
  for (const GradedOperator& op : ops) {
    if (s.dim() == 0) break;
    Matrix proj = s.frame * s.frame.adjoint();
    for (long c = 0; c < s.frame.cols(); ++c) {
      if (!application_exact(s.space, support_profile(s.space, s.frame.col(c)), op.raise))
        continue;
      Vector y = op.mat * s.frame.col(c);
      res.invariance_residual = std::max(res.invariance_residual, (y - proj * y).norm());
    }
  }
  if (ops.empty()) {
    res.stabilized = true;
    res.certified = s.certified;
    return res;
  }
  Subspace g = s;
  for (int t = 1; t <= budget; ++t) {
    Subspace h = image(ops.front(), g, tol);
    for (size_t i = 1; i < ops.size(); ++i) h = intersect(h, image(ops[i], g, tol), tol);
    ++res.steps;
    bool fixed = h.dim() == 0 || (h.dim() == g.dim() && equal(h, g, tol.angle));
    g = std::move(h);
    if (fixed) {
      res.stabilized = true;
      break;
    }
  }
  res.certified = res.stabilized && g.certified;
  res.space = std::move(g);
  return res;
}

}  // namespace twistdec
