#include "twistdec/operator.hpp"

#include <stdexcept>

#include "twistdec/expr.hpp"

namespace twistdec {

GradedOperator make_operator(const SpaceSpec& space, Matrix mat,
                             std::vector<int> raise, std::vector<int> lower,
                             int word_len, std::shared_ptr<const OpExpr> prov) {
  if (mat.rows() != space.total_dim() || mat.cols() != space.total_dim())
    throw std::invalid_argument("operator matrix does not match space dimension");
  if (static_cast<int>(raise.size()) != space.vars ||
      static_cast<int>(lower.size()) != space.vars)
    throw std::invalid_argument("budget vectors must have one entry per variable");
  GradedOperator op;
  op.space = space;
  op.mat = std::move(mat);
  op.raise = std::move(raise);
  op.lower = std::move(lower);
  op.word_len = word_len;
  op.weighted_permutation = detect_weighted_permutation(op.mat);
  op.provenance = std::move(prov);
  return op;
}

bool detect_weighted_permutation(const Matrix& m, double eps) {
  for (long c = 0; c < m.cols(); ++c) {
    int nz = 0;
    for (long r = 0; r < m.rows(); ++r)
      if (std::abs(m(r, c)) > eps && ++nz > 1) return false;
  }
  for (long r = 0; r < m.rows(); ++r) {
    int nz = 0;
    for (long c = 0; c < m.cols(); ++c)
      if (std::abs(m(r, c)) > eps && ++nz > 1) return false;
  }
  return true;
}

void derive_bounds(const SpaceSpec& space, const Matrix& m,
                   std::vector<int>& raise, std::vector<int>& lower) {
  raise.assign(space.vars, 0);
  lower.assign(space.vars, 0);
  for (long c = 0; c < m.cols(); ++c) {
    BasisIndex src = basis_at(space, c);
    for (long r = 0; r < m.rows(); ++r) {
      if (std::abs(m(r, c)) <= kSupportEps) continue;
      BasisIndex dst = basis_at(space, r);
      if (src.block == dst.block) {
        for (int v = 0; v < space.vars; ++v) {
          int d = dst.exponents[v] - src.exponents[v];
          if (d > 0) raise[v] = std::max(raise[v], d);
          if (d < 0) lower[v] = std::max(lower[v], -d);
        }
      } else {
        int sd = 0, dd = 0;
        for (int v = 0; v < space.vars; ++v) {
          sd = std::max(sd, src.exponents[v]);
          dd = std::max(dd, dst.exponents[v]);
        }
        int d = dd - sd;
        for (int v = 0; v < space.vars; ++v) {
          if (d > 0) raise[v] = std::max(raise[v], d);
          if (d < 0) lower[v] = std::max(lower[v], -d);
        }
      }
    }
  }
}

bool application_exact(const SpaceSpec& space, const SupportProfile& support,
                       const std::vector<int>& raise) {
  for (int b = 0; b < space.block_count(); ++b) {
    if (!space.graded(b) || !support.any(b)) continue;
    for (int v = 0; v < space.vars; ++v) {
      int k = support.max_by_var[b][v];
      if (k >= 0 && k + raise[v] > space.blocks[b].degree_cap) return false;
    }
  }
  return true;
}

std::vector<char> certified_basis_mask(const SpaceSpec& space,
                                       const std::vector<int>& raise) {
  std::vector<char> mask(space.total_dim(), 1);
  for (long i = 0; i < space.total_dim(); ++i) {
    BasisIndex bi = basis_at(space, i);
    if (!space.graded(bi.block)) continue;
    int cap = space.blocks[bi.block].degree_cap;
    for (int v = 0; v < space.vars; ++v) {
      if (bi.exponents[v] + raise[v] > cap) {
        mask[i] = 0;
        break;
      }
    }
  }
  return mask;
}

std::vector<int> certified_degrees(const SpaceSpec& space,
                                   const std::vector<int>& raise) {
  int worst = 0;
  for (int r : raise) worst = std::max(worst, r);
  std::vector<int> cert(space.block_count(), 0);
  for (int b = 0; b < space.block_count(); ++b)
    cert[b] = space.graded(b) ? space.blocks[b].degree_cap - worst : 0;
  return cert;
}

StateVector apply(const GradedOperator& op, const StateVector& x) {
  if (x.coeffs.size() != op.space.total_dim())
    throw std::invalid_argument("vector does not match operator space");
  StateVector y;
  y.coeffs = op.mat * x.coeffs;
  y.certified =
      x.certified && application_exact(op.space, support_profile(op.space, x.coeffs),
                                       op.raise);
  return y;
}

GradedOperator compose(const std::vector<GradedOperator>& ops) {
  if (ops.empty()) throw std::invalid_argument("compose needs at least one factor");
  for (const GradedOperator& op : ops)
    if (op.space != ops.front().space)
      throw std::invalid_argument("compose factors live on different spaces");
  Matrix m = ops.front().mat;
  std::vector<int> raise = ops.front().raise;
  std::vector<int> lower = ops.front().lower;
  int word_len = ops.front().word_len;
  std::vector<std::shared_ptr<const OpExpr>> prov;
  prov.push_back(ops.front().provenance);
  for (size_t i = 1; i < ops.size(); ++i) {
    m = m * ops[i].mat;
    for (int v = 0; v < ops[i].space.vars; ++v) {
      raise[v] += ops[i].raise[v];
      lower[v] += ops[i].lower[v];
    }
    word_len += ops[i].word_len;
    prov.push_back(ops[i].provenance);
  }
  std::shared_ptr<const OpExpr> node;
  bool have_all = true;
  for (const auto& p : prov) have_all = have_all && p != nullptr;
  if (have_all) node = OpExpr::compose(prov);
  return make_operator(ops.front().space, std::move(m), std::move(raise),
                       std::move(lower), word_len, node);
}

GradedOperator adjoint(const GradedOperator& op) {
  std::shared_ptr<const OpExpr> node;
  if (op.provenance) node = OpExpr::adjoint(op.provenance);
  return make_operator(op.space, op.mat.adjoint(), op.lower, op.raise, op.word_len,
                       node);
}

GradedOperator identity_op(const SpaceSpec& space) {
  return make_operator(space, Matrix::Identity(space.total_dim(), space.total_dim()),
                       std::vector<int>(space.vars, 0), std::vector<int>(space.vars, 0),
                       1, nullptr);
}

GradedOperator operator_power(const GradedOperator& op, int p) {
  if (p < 0) throw std::invalid_argument("operator_power wants p >= 0");
  if (p == 0) return identity_op(op.space);
  GradedOperator out = op;
  for (int i = 1; i < p; ++i) out = compose({out, op});
  return out;
}

IsometryCheck is_isometry_certified(const GradedOperator& op, double tol) {
  IsometryCheck res;
  res.certified_degree = certified_degrees(op.space, op.raise);
  std::vector<char> mask = certified_basis_mask(op.space, op.raise);
  for (long i = 0; i < op.space.total_dim(); ++i) {
    if (!mask[i]) continue;
    ++res.checked;
    res.residual = std::max(res.residual, std::abs(op.mat.col(i).norm() - 1.0));
  }
  res.ok = res.checked > 0 && res.residual < tol;
  return res;
}

}  // namespace twistdec
