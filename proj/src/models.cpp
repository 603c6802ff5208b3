#include "twistdec/models.hpp"

#include <algorithm>
#include <stdexcept>

#include "twistdec/expr.hpp"
#include "twistdec/twisted.hpp"

namespace twistdec {

namespace {

double unitarity_residual(const Matrix& u) {
  return (u.adjoint() * u - Matrix::Identity(u.rows(), u.cols()))
      .cwiseAbs()
      .maxCoeff();
}

void require_unitary(const Matrix& u, double tol, const char* what) {
  if (u.rows() != u.cols()) throw std::invalid_argument(std::string(what) + " must be square");
  if (u.rows() == 0) throw std::invalid_argument(std::string(what) + " must be nonempty");
  if (unitarity_residual(u) > tol)
    throw std::invalid_argument(std::string(what) + " is not unitary within tolerance");
}

}  // namespace

GradedOperator mz(const SpaceSpec& space, int var, const std::vector<int>& masked_blocks) {
  if (space.vars < 1) throw std::invalid_argument("mz needs at least one variable");
  if (var < 1 || var > space.vars) throw std::invalid_argument("mz variable out of range");
  for (int b = 0; b < space.block_count(); ++b) {
    if (space.graded(b)) continue;
    if (std::find(masked_blocks.begin(), masked_blocks.end(), b) == masked_blocks.end())
      throw std::invalid_argument(
          "mz annihilates fiber block " + std::to_string(b) + "; mask it explicitly");
  }
  long n = space.total_dim();
  Matrix m = Matrix::Zero(n, n);
  for (long i = 0; i < n; ++i) {
    BasisIndex bi = basis_at(space, i);
    if (!space.graded(bi.block)) continue;  // masked fiber block: column stays zero
    if (bi.exponents[var - 1] >= space.blocks[bi.block].degree_cap) continue;
    BasisIndex up = bi;
    ++up.exponents[var - 1];
    m(index_of(space, up), i) = 1.0;
  }
  std::vector<int> raise(space.vars, 0), lower(space.vars, 0);
  raise[var - 1] = 1;
  return make_operator(space, std::move(m), std::move(raise), std::move(lower), 1,
                       OpExpr::mz(var, masked_blocks));
}

GradedOperator diag_symbol(const SpaceSpec& space, int var, const Matrix& symbol,
                           double unitary_tol) {
  if (space.vars < 1) throw std::invalid_argument("diag_symbol needs at least one variable");
  if (var < 1 || var > space.vars)
    throw std::invalid_argument("diag_symbol variable out of range");
  require_unitary(symbol, unitary_tol, "diag symbol");
  long n = space.total_dim();
  Matrix m = Matrix::Zero(n, n);
  for (int b = 0; b < space.block_count(); ++b) {
    const Block& blk = space.blocks[b];
    if (!space.graded(b)) {
      // exponent is always 0 here: identity regardless of the symbol
      long off = space.block_offset(b);
      for (long i = 0; i < space.block_dim(b); ++i) m(off + i, off + i) = 1.0;
      continue;
    }
    if (symbol.rows() != blk.fiber_dim)
      throw std::invalid_argument("diag symbol does not match fiber dimension of block " +
                                  std::to_string(b));
    std::vector<Matrix> powers(blk.degree_cap + 1);
    powers[0] = Matrix::Identity(blk.fiber_dim, blk.fiber_dim);
    for (int p = 1; p <= blk.degree_cap; ++p) powers[p] = powers[p - 1] * symbol;
    long monos = space.monomial_count(b);
    for (long mi = 0; mi < monos; ++mi) {
      long base = space.block_offset(b) + mi * blk.fiber_dim;
      BasisIndex bi = basis_at(space, base);
      const Matrix& up = powers[bi.exponents[var - 1]];
      for (int r = 0; r < blk.fiber_dim; ++r)
        for (int c = 0; c < blk.fiber_dim; ++c) m(base + r, base + c) = up(r, c);
    }
  }
  return make_operator(space, std::move(m), std::vector<int>(space.vars, 0),
                       std::vector<int>(space.vars, 0), 1, OpExpr::diag(var, symbol));
}

GradedOperator fiber_unitary(const SpaceSpec& space, int block, const Matrix& w,
                             double unitary_tol) {
  if (block < 0 || block >= space.block_count())
    throw std::invalid_argument("fiber_unitary block out of range");
  if (w.rows() != space.block_dim(block))
    throw std::invalid_argument("fiber_unitary matrix must match the block dimension");
  require_unitary(w, unitary_tol, "fiber unitary");
  long n = space.total_dim();
  Matrix m = Matrix::Zero(n, n);
  long off = space.block_offset(block);
  m.block(off, off, w.rows(), w.cols()) = w;
  std::vector<int> raise, lower;
  derive_bounds(space, m, raise, lower);
  return make_operator(space, std::move(m), std::move(raise), std::move(lower), 1,
                       OpExpr::fiber_unitary(block, w));
}

GradedOperator literal_op(const SpaceSpec& space, Matrix m) {
  std::vector<int> raise, lower;
  derive_bounds(space, m, raise, lower);
  auto prov = OpExpr::literal(m);
  return make_operator(space, std::move(m), std::move(raise), std::move(lower), 1, prov);
}

GradedOperator literal_op(const SpaceSpec& space, Matrix m, std::vector<int> raise,
                          std::vector<int> lower) {
  auto prov = OpExpr::literal(m, raise, lower);
  return make_operator(space, std::move(m), std::move(raise), std::move(lower), 1, prov);
}

GradedOperator scale_op(Complex factor, const GradedOperator& op, double tol) {
  if (std::abs(std::abs(factor) - 1.0) > tol)
    throw std::invalid_argument("scale factor must be unimodular");
  std::shared_ptr<const OpExpr> node;
  if (op.provenance) node = OpExpr::scale(factor, op.provenance);
  return make_operator(op.space, factor * op.mat, op.raise, op.lower, op.word_len, node);
}

SpaceSpec single_block_space(const SpaceSpec& space, int block) {
  return SpaceSpec(space.vars, {space.blocks.at(block)});
}

GradedOperator dsum(const SpaceSpec& space, const std::vector<GradedOperator>& per_block) {
  if (static_cast<int>(per_block.size()) != space.block_count())
    throw std::invalid_argument("dsum wants exactly one operator per block");
  long n = space.total_dim();
  Matrix m = Matrix::Zero(n, n);
  std::vector<int> raise(space.vars, 0), lower(space.vars, 0);
  int word_len = 1;
  std::vector<std::shared_ptr<const OpExpr>> prov;
  bool have_prov = true;
  for (int b = 0; b < space.block_count(); ++b) {
    const GradedOperator& op = per_block[b];
    if (op.space != single_block_space(space, b))
      throw std::invalid_argument("dsum summand " + std::to_string(b) +
                                  " does not live on that block");
    long off = space.block_offset(b);
    m.block(off, off, op.mat.rows(), op.mat.cols()) = op.mat;
    for (int v = 0; v < space.vars; ++v) {
      raise[v] = std::max(raise[v], op.raise[v]);
      lower[v] = std::max(lower[v], op.lower[v]);
    }
    word_len = std::max(word_len, op.word_len);
    have_prov = have_prov && op.provenance != nullptr;
    prov.push_back(op.provenance);
  }
  std::shared_ptr<const OpExpr> node;
  if (have_prov) node = OpExpr::dsum(prov);
  return make_operator(space, std::move(m), std::move(raise), std::move(lower), word_len,
                       node);
}

int TwistFamily::upper_index(int i, int j, int n) {
  if (i < 1 || j <= i || j > n) throw std::invalid_argument("twist pair out of range");
  // lex position of (i,j) among pairs with i < j
  return (i - 1) * n - (i * (i - 1)) / 2 + (j - i - 1);
}

const GradedOperator& TwistFamily::at_upper(int i, int j) const {
  return upper.at(upper_index(i, j, n));
}

GradedOperator TwistFamily::twist(int i, int j) const {
  if (i == j) throw std::invalid_argument("twist needs i != j");
  if (i < j) return at_upper(i, j);
  return adjoint(at_upper(j, i));
}

void measure_twist_family(TwistFamily& family) {
  family.unitary_residual = 0.0;
  family.commute_residual = 0.0;
  for (const GradedOperator& u : family.upper)
    family.unitary_residual = std::max(family.unitary_residual, unitarity_residual(u.mat));
  for (size_t a = 0; a < family.upper.size(); ++a)
    for (size_t b = a + 1; b < family.upper.size(); ++b) {
      Matrix d = family.upper[a].mat * family.upper[b].mat -
                 family.upper[b].mat * family.upper[a].mat;
      family.commute_residual = std::max(family.commute_residual, d.cwiseAbs().maxCoeff());
    }
}

IsometryTuple make_tuple(const SpaceSpec& space, std::vector<GradedOperator> ops,
                         std::optional<TwistFamily> twist, const Tolerances& tol) {
  if (ops.empty()) throw std::invalid_argument("tuple needs at least one entry");
  for (size_t i = 0; i < ops.size(); ++i) {
    if (ops[i].space != space)
      throw std::invalid_argument("tuple entry " + std::to_string(i + 1) +
                                  " lives on a different space");
    IsometryCheck chk = is_isometry_certified(ops[i], tol.twist_family);
    if (!chk.ok)
      throw std::invalid_argument("tuple entry " + std::to_string(i + 1) +
                                  " is not a certified isometry (residual " +
                                  std::to_string(chk.residual) + ")");
  }
  IsometryTuple t;
  t.space = space;
  t.V = std::move(ops);
  if (twist) {
    if (twist->n != t.n())
      throw std::invalid_argument("twist family arity does not match the tuple");
    t.twist = std::move(twist);
    PairCheck tw = check_twisted(t, *t.twist, tol);
    PairCheck dw = check_doubly_twisted(t, *t.twist, tol);
    t.flags.twisted = tw.ok;
    t.flags.twisted_residual = tw.residual;
    t.flags.doubly_twisted = dw.ok;
    t.flags.doubly_residual = dw.residual;
    t.flags.commutant_residual = tw.commutant_residual;
  }
  return t;
}

IsometryTuple twisted_shift_tuple(const SpaceSpec& space,
                                  const std::vector<std::vector<Matrix>>& symbols,
                                  const Tolerances& tol) {
  int n = static_cast<int>(symbols.size()) + 1;
  if (space.vars != n)
    throw std::invalid_argument("twisted_shift_tuple wants one variable per coordinate");
  for (int b = 0; b < space.block_count(); ++b)
    if (!space.graded(b))
      throw std::invalid_argument("twisted_shift_tuple wants graded blocks only");
  for (int i = 0; i < n - 1; ++i)
    if (static_cast<int>(symbols[i].size()) != i + 1)
      throw std::invalid_argument("symbol table must be lower triangular");
  // pairwise commutativity across the whole family
  std::vector<const Matrix*> all;
  for (const auto& row : symbols)
    for (const Matrix& u : row) {
      require_unitary(u, tol.symbol_unitary, "shift symbol");
      all.push_back(&u);
    }
  for (size_t a = 0; a < all.size(); ++a)
    for (size_t b = a + 1; b < all.size(); ++b) {
      if (all[a]->rows() != all[b]->rows())
        throw std::invalid_argument("shift symbols must share the fiber dimension");
      if ((*all[a] * *all[b] - *all[b] * *all[a]).cwiseAbs().maxCoeff() >
          tol.symbol_unitary)
        throw std::invalid_argument("shift symbols must commute pairwise");
    }
  std::vector<GradedOperator> ops;
  for (int i = 1; i <= n; ++i) {
    std::vector<GradedOperator> factors;
    factors.push_back(mz(space, i));
    for (int l = 1; l < i; ++l)
      factors.push_back(diag_symbol(space, l, symbols[i - 2][l - 1], tol.symbol_unitary));
    ops.push_back(factors.size() == 1 ? factors.front() : compose(factors));
  }
  IsometryTuple t = twistdec::make_tuple(space, std::move(ops), std::nullopt, tol);
  TwistFamily fam = derive_twist(t, tol);
  return twistdec::make_tuple(space, t.V, std::move(fam), tol);
}

IsometryTuple dsum_tuple(const std::vector<IsometryTuple>& summands,
                         const Tolerances& tol) {
  if (summands.empty()) throw std::invalid_argument("dsum_tuple needs summands");
  int n = summands.front().n();
  int vars = summands.front().space.vars;
  std::vector<Block> blocks;
  for (const IsometryTuple& s : summands) {
    if (s.n() != n) throw std::invalid_argument("dsum_tuple wants equal arity");
    if (s.space.vars != vars)
      throw std::invalid_argument("dsum_tuple wants a common variable count");
    for (const Block& b : s.space.blocks) blocks.push_back(b);
  }
  SpaceSpec space(vars, blocks);
  long N = space.total_dim();

  auto embed = [&](auto&& pick) {
    Matrix m = Matrix::Zero(N, N);
    long off = 0;
    for (const IsometryTuple& s : summands) {
      const Matrix& part = pick(s);
      m.block(off, off, part.rows(), part.cols()) = part;
      off += part.rows();
    }
    return m;
  };

  std::vector<GradedOperator> ops;
  for (int i = 0; i < n; ++i) {
    Matrix m = embed([&](const IsometryTuple& s) -> const Matrix& { return s.V[i].mat; });
    std::vector<int> raise(vars, 0), lower(vars, 0);
    int word_len = 1;
    for (const IsometryTuple& s : summands) {
      for (int v = 0; v < vars; ++v) {
        raise[v] = std::max(raise[v], s.V[i].raise[v]);
        lower[v] = std::max(lower[v], s.V[i].lower[v]);
      }
      word_len = std::max(word_len, s.V[i].word_len);
    }
    ops.push_back(
        make_operator(space, std::move(m), std::move(raise), std::move(lower), word_len,
                      nullptr));
  }

  bool all_twisted = true;
  for (const IsometryTuple& s : summands) all_twisted = all_twisted && s.twist.has_value();
  std::optional<TwistFamily> fam;
  if (all_twisted && n >= 2) {
    TwistFamily f;
    f.n = n;
    f.derived = true;
    f.lifted = true;
    for (const IsometryTuple& s : summands) f.lifted = f.lifted && s.twist->lifted;
    for (int i = 1; i <= n; ++i)
      for (int j = i + 1; j <= n; ++j) {
        Matrix m = embed([&](const IsometryTuple& s) -> const Matrix& {
          return s.twist->at_upper(i, j).mat;
        });
        std::vector<int> raise(vars, 0), lower(vars, 0);
        for (const IsometryTuple& s : summands) {
          const GradedOperator& u = s.twist->at_upper(i, j);
          for (int v = 0; v < vars; ++v) {
            raise[v] = std::max(raise[v], u.raise[v]);
            lower[v] = std::max(lower[v], u.lower[v]);
          }
        }
        f.upper.push_back(make_operator(space, std::move(m), std::move(raise),
                                        std::move(lower), 1, nullptr));
      }
    measure_twist_family(f);
    fam = std::move(f);
  }
  IsometryTuple t = twistdec::make_tuple(space, std::move(ops), std::move(fam), tol);
  if (!t.twist && t.n() >= 2) {
    TwistFamily derived = derive_twist(t, tol);
    t = twistdec::make_tuple(space, t.V, std::move(derived), tol);
  }
  return t;
}

}  // namespace twistdec
