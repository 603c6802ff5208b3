#include "twistdec/twisted.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <functional>
#include <mutex>
#include <numeric>
#include <random>
#include <stdexcept>
#include <thread>
#include <utility>

namespace twistdec {

namespace {

using Verdict = CriterionResult::Verdict;

std::string fmt_res(double r) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3e", r);
  return buf;
}

std::vector<int> max_raise(const std::vector<int>& a, const std::vector<int>& b) {
  std::vector<int> out(a.size());
  for (size_t v = 0; v < a.size(); ++v) out[v] = std::max(a[v], b[v]);
  return out;
}

// Worst column difference between two words over the basis vectors certified
// for both.
double word_residual(const GradedOperator& lhs, const GradedOperator& rhs,
                     long* checked = nullptr) {
  std::vector<char> mask =
      certified_basis_mask(lhs.space, max_raise(lhs.raise, rhs.raise));
  double worst = 0.0;
  long cnt = 0;
  for (long c = 0; c < lhs.space.total_dim(); ++c) {
    if (!mask[c]) continue;
    worst = std::max(worst, (lhs.mat.col(c) - rhs.mat.col(c)).norm());
    ++cnt;
  }
  if (checked) *checked = cnt;
  return worst;
}

void run_indexed(unsigned total, int jobs, const std::function<void(unsigned)>& fn) {
  if (jobs <= 1 || total <= 1) {
    for (unsigned a = 0; a < total; ++a) fn(a);
    return;
  }
  std::atomic<unsigned> next{0};
  std::mutex err_mu;
  std::exception_ptr err;
  std::vector<std::thread> pool;
  unsigned workers = std::min<unsigned>(static_cast<unsigned>(jobs), total);
  for (unsigned w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      for (;;) {
        unsigned a = next.fetch_add(1);
        if (a >= total) return;
        try {
          fn(a);
        } catch (...) {
          std::lock_guard<std::mutex> lk(err_mu);
          if (!err) err = std::current_exception();
        }
      }
    });
  for (std::thread& th : pool) th.join();
  if (err) std::rethrow_exception(err);
}

Bitmask full_mask(int n) { return n >= 32 ? ~0u : ((1u << n) - 1u); }

GradedOperator commutator_word(const IsometryTuple& t, int i, int j) {
  return compose({adjoint(t.V[i - 1]), adjoint(t.V[j - 1]), t.V[i - 1], t.V[j - 1]});
}

struct Lift {
  bool ok = false;
  GradedOperator op;
  double deviation = 0.0;
};

// A word that acts per block as (monomial identity) ⊗ M_b on its certified
// region extends uniquely to the block-diagonal operator I ⊗ M_b on the full
// truncation. That extension is exact (raise 0), so downstream masks stay
// wide open.
Lift lift_fiber_constant(const SpaceSpec& sp, const GradedOperator& w, double tol) {
  Lift out;
  const long dim = sp.total_dim();
  std::vector<char> mask = certified_basis_mask(sp, w.raise);
  std::vector<Matrix> fib(sp.block_count());
  for (int b = 0; b < sp.block_count(); ++b) {
    const long r = sp.blocks[b].fiber_dim;
    const long off = sp.block_offset(b);
    const long mono = sp.monomial_count(b);
    bool have = false;
    for (long q = 0; q < mono && !have; ++q) {
      bool all = true;
      for (long f = 0; f < r && all; ++f) all = mask[off + q * r + f] != 0;
      if (!all) continue;
      fib[b] = Matrix::Zero(r, r);
      for (long f = 0; f < r; ++f)
        fib[b].col(f) = w.mat.col(off + q * r + f).segment(off + q * r, r);
      have = true;
    }
    if (!have) return out;
  }
  double dev = 0.0;
  for (long c = 0; c < dim; ++c) {
    if (!mask[c]) continue;
    const int b = sp.block_of_index(c);
    const long r = sp.blocks[b].fiber_dim;
    const long off = sp.block_offset(b);
    const long slot = (c - off) / r;
    const long f = (c - off) % r;
    Vector expect = Vector::Zero(dim);
    expect.segment(off + slot * r, r) = fib[b].col(f);
    dev = std::max(dev,
                   (w.mat.col(c) - expect).lpNorm<Eigen::Infinity>());
  }
  out.deviation = dev;
  if (dev > tol) return out;
  Matrix full = Matrix::Zero(dim, dim);
  for (int b = 0; b < sp.block_count(); ++b) {
    const long r = sp.blocks[b].fiber_dim;
    const long off = sp.block_offset(b);
    for (long q = 0; q < sp.monomial_count(b); ++q)
      full.block(off + q * r, off + q * r, r, r) = fib[b];
  }
  out.op = make_operator(sp, std::move(full), std::vector<int>(sp.vars, 0),
                         std::vector<int>(sp.vars, 0), 1, nullptr);
  out.ok = true;
  return out;
}

// Ambient doubly twisted word residual measured on the certified columns of
// a frame.
double restricted_doubly_residual(const IsometryTuple& t, const Subspace& s,
                                  const Tolerances& tol) {
  (void)tol;
  const TwistFamily& u = *t.twist;
  double worst = 0.0;
  for (int i = 1; i <= t.n(); ++i)
    for (int j = 1; j <= t.n(); ++j) {
      if (i == j) continue;
      GradedOperator lhs = compose({adjoint(t.V[i - 1]), t.V[j - 1]});
      GradedOperator rhs =
          compose({adjoint(u.twist(i, j)), t.V[j - 1], adjoint(t.V[i - 1])});
      std::vector<int> need = max_raise(lhs.raise, rhs.raise);
      Matrix diff = lhs.mat - rhs.mat;
      for (long c = 0; c < s.dim(); ++c) {
        SupportProfile p = support_profile(t.space, s.frame.col(c));
        if (!application_exact(t.space, p, need)) continue;
        worst = std::max(worst, (diff * s.frame.col(c)).norm());
      }
    }
  return worst;
}

// ⊕_k V_A^k base over the exponent box, frames built by incremental
// application (the innermost factor of V_A^k varies outermost so each power
// reuses the previous frame). Summand orthogonality is asserted.
Subspace orbit_sum(const IsometryTuple& t, Bitmask a, const Subspace& base,
                   bool base_certified, int korbit, const Tolerances& tol) {
  const SpaceSpec& sp = t.space;
  std::vector<int> mem = members(a);
  std::string label = "H" + subset_label(a, t.n());
  if (base.dim() == 0 || mem.empty()) {
    Subspace out = base;
    out.label = label;
    out.certified = base_certified && base.certified;
    return out;
  }
  std::vector<Matrix> summands;
  bool exact = true;
  std::function<void(int, const Matrix&)> rec = [&](int level, const Matrix& f) {
    if (level < 0) {
      if (f.cols() > 0) summands.push_back(f);
      return;
    }
    const GradedOperator& v = t.V[mem[level] - 1];
    Matrix cur = f;
    rec(level - 1, cur);
    for (int k = 1; k <= korbit && cur.cols() > 0; ++k) {
      Matrix next(sp.total_dim(), cur.cols());
      long keep = 0;
      for (long c = 0; c < cur.cols(); ++c) {
        SupportProfile p = support_profile(sp, cur.col(c));
        bool ex = application_exact(sp, p, v.raise);
        if (!ex && !v.weighted_permutation) exact = false;
        Vector im = v.mat * cur.col(c);
        double nn = im.norm();
        if (nn <= 1e-8) continue;
        if (std::abs(nn - 1.0) > 1e-8) exact = false;
        next.col(keep++) = im / nn;
      }
      next.conservativeResize(sp.total_dim(), keep);
      cur = std::move(next);
      rec(level - 1, cur);
    }
  };
  rec(static_cast<int>(mem.size()) - 1, base.frame);

  long cols = 0;
  for (const Matrix& s : summands) cols += s.cols();
  Matrix cat(sp.total_dim(), cols);
  long pos = 0;
  for (const Matrix& s : summands) {
    cat.middleCols(pos, s.cols()) = s;
    pos += s.cols();
  }
  if (cols > 0) {
    Matrix gram = cat.adjoint() * cat;
    double ortho =
        (gram - Matrix::Identity(cols, cols)).cwiseAbs().maxCoeff();
    if (ortho > tol.residual)
      throw std::runtime_error("orbit summands for " + label +
                               " are not orthonormal (residual " +
                               fmt_res(ortho) + ")");
  }
  Subspace out = orthonormalize(sp, cat, tol);
  out.cert = base.cert;
  out.certified = base_certified && base.certified && exact;
  out.label = label;
  return out;
}

CriterionResult criterion_impl(const IsometryTuple& t, const EngineConfig& cfg,
                               std::vector<WoldResult>* keep) {
  Budgets bud = cfg.budgets.resolved(t.space);
  std::vector<WoldResult> wolds;
  wolds.reserve(t.n());
  for (int i = 0; i < t.n(); ++i)
    wolds.push_back(wold_decompose(t.V[i], bud.iterations, cfg.tol));
  bool uncert = false;
  for (const WoldResult& w : wolds) uncert = uncert || !w.certified;
  CriterionResult out;
  for (int i = 1; i <= t.n(); ++i)
    for (int j = 1; j <= t.n(); ++j) {
      ReduceCheck rc =
          reduces(t.V[j - 1], wolds[i - 1].unitary_part, cfg.tol.residual);
      if (!rc.ok) out.witnesses.push_back({i, j, rc.residual});
    }
  out.verdict = !out.witnesses.empty() ? Verdict::Failed
                : uncert               ? Verdict::Uncertified
                                       : Verdict::Ok;
  if (keep) *keep = std::move(wolds);
  return out;
}

void note_failure(DecompositionReport& rep, const std::string& what) {
  rep.ok = false;
  if (rep.failure.empty()) rep.failure = what;
}

// Shared verification: reducing, per-coordinate classification against the
// subset pattern, pairwise orthogonality, completeness, and optionally the
// doubly twisted word identities on each block. residual_slot marks the
// weak-shift remainder, which is exempt from the pattern checks.
void finish_report(const IsometryTuple& t, const EngineConfig& cfg,
                   bool check_doubly, int residual_slot,
                   DecompositionReport& rep) {
  Budgets bud = cfg.budgets.resolved(t.space);
  long sum = 0;
  for (size_t idx = 0; idx < rep.blocks.size(); ++idx) {
    BlockEntry& e = rep.blocks[idx];
    const Subspace& s = e.space;
    const bool residual = static_cast<int>(idx) == residual_slot;
    sum += s.dim();
    e.certified = s.certified;
    rep.certified = rep.certified && e.certified;

    bool red_ok = true;
    for (int i = 0; i < t.n(); ++i) {
      ReduceCheck rc = reduces(t.V[i], s, cfg.tol.residual);
      e.reducing_residual = std::max(e.reducing_residual, rc.residual);
      red_ok = red_ok && rc.ok;
    }
    if (!red_ok) {
      note_failure(rep, "block " + s.label + " does not reduce the tuple (residual " +
                            fmt_res(e.reducing_residual) + ")");
      continue;
    }
    for (int i = 1; i <= t.n(); ++i) {
      RestrictionClass c =
          s.dim() == 0 ? RestrictionClass::Shift
                       : classify_restriction(t.V[i - 1], s, bud.iterations, cfg.tol);
      e.classifications.push_back(c);
      if (s.dim() == 0 || residual) continue;
      const bool in_a = (e.A >> (i - 1)) & 1u;
      RestrictionClass expect =
          in_a ? RestrictionClass::Shift : RestrictionClass::Unitary;
      if (c == RestrictionClass::Uncertified)
        rep.certified = false;
      else if (c != expect)
        note_failure(rep, "block " + s.label + " coordinate " + std::to_string(i) +
                              " classified " + to_string(c) + ", expected " +
                              to_string(expect));
    }
    if (check_doubly && !residual && s.dim() > 0) {
      e.restriction_doubly_residual = restricted_doubly_residual(t, s, cfg.tol);
      if (e.restriction_doubly_residual >= cfg.tol.residual)
        note_failure(rep, "restriction to " + s.label +
                              " is not doubly twisted (residual " +
                              fmt_res(e.restriction_doubly_residual) + ")");
    }
  }
  rep.sum_dims = sum;

  double ortho = 0.0;
  for (size_t x = 0; x < rep.blocks.size(); ++x)
    for (size_t y = x + 1; y < rep.blocks.size(); ++y) {
      const Subspace& sx = rep.blocks[x].space;
      const Subspace& sy = rep.blocks[y].space;
      if (sx.dim() == 0 || sy.dim() == 0) continue;
      ortho = std::max(ortho,
                       (sx.frame.adjoint() * sy.frame).cwiseAbs().maxCoeff());
    }
  rep.orthogonality_residual = ortho;
  if (ortho >= cfg.tol.residual)
    note_failure(rep, "blocks are not pairwise orthogonal (residual " +
                          fmt_res(ortho) + ")");

  rep.complete = sum == rep.ambient_dim;
  if (!rep.complete && rep.ok && rep.certified)
    note_failure(rep, "blocks span dimension " + std::to_string(sum) + " of " +
                          std::to_string(rep.ambient_dim));
}

void seed_report(const IsometryTuple& t, const EngineConfig& cfg,
                 const char* mode, DecompositionReport& rep) {
  Budgets bud = cfg.budgets.resolved(t.space);
  rep.mode = mode;
  rep.budget_orbit = bud.orbit;
  rep.budget_iterations = bud.iterations;
  rep.seed = cfg.seed;
  rep.ambient_dim = t.space.total_dim();
}

void require_arity(const IsometryTuple& t) {
  if (t.n() < 1) throw std::invalid_argument("tuple is empty");
  if (t.n() > 16) throw std::invalid_argument("tuple arity too large");
}

}  // namespace

std::vector<int> members(Bitmask a) {
  std::vector<int> out;
  for (int i = 1; a; ++i, a >>= 1)
    if (a & 1u) out.push_back(i);
  return out;
}

std::string subset_label(Bitmask a, int n) {
  std::string s = "{";
  bool first = true;
  for (int i = 1; i <= n; ++i)
    if ((a >> (i - 1)) & 1u) {
      if (!first) s += ",";
      s += std::to_string(i);
      first = false;
    }
  return s + "}";
}

GradedOperator tuple_word(const IsometryTuple& t, Bitmask a,
                          const std::vector<int>& k) {
  std::vector<int> mem = members(a);
  if (k.size() != mem.size())
    throw std::invalid_argument("tuple_word exponent count does not match the subset");
  std::vector<GradedOperator> factors;
  for (size_t l = 0; l < mem.size(); ++l) {
    if (k[l] < 0) throw std::invalid_argument("tuple_word wants nonnegative exponents");
    if (k[l] > 0) factors.push_back(operator_power(t.V[mem[l] - 1], k[l]));
  }
  if (factors.empty()) return identity_op(t.space);
  if (factors.size() == 1) return factors.front();
  return compose(factors);
}

TwistFamily derive_twist(const IsometryTuple& t, const Tolerances& tol) {
  if (t.n() < 2)
    throw std::invalid_argument("twist derivation wants at least two isometries");
  TwistFamily fam;
  fam.n = t.n();
  fam.derived = true;
  bool all_lifted = true;
  for (int i = 1; i <= t.n(); ++i)
    for (int j = i + 1; j <= t.n(); ++j) {
      GradedOperator w = commutator_word(t, i, j);
      Lift lift = lift_fiber_constant(t.space, w, tol.twist_family);
      if (lift.ok) {
        fam.upper.push_back(std::move(lift.op));
      } else {
        all_lifted = false;
        fam.upper.push_back(std::move(w));
      }
    }
  fam.lifted = all_lifted;
  measure_twist_family(fam);
  return fam;
}

PairCheck check_twisted(const IsometryTuple& t, const TwistFamily& u,
                        const Tolerances& tol) {
  if (u.n != t.n())
    throw std::invalid_argument("twist family arity does not match the tuple");
  PairCheck out;
  for (int i = 1; i <= t.n(); ++i)
    for (int j = i + 1; j <= t.n(); ++j) {
      GradedOperator lhs = compose({t.V[i - 1], t.V[j - 1]});
      GradedOperator rhs = compose({u.at_upper(i, j), t.V[j - 1], t.V[i - 1]});
      out.residual = std::max(out.residual, word_residual(lhs, rhs));
    }
  for (const GradedOperator& v : t.V)
    for (const GradedOperator& w : u.upper) {
      GradedOperator lhs = compose({v, w});
      GradedOperator rhs = compose({w, v});
      out.commutant_residual =
          std::max(out.commutant_residual, word_residual(lhs, rhs));
    }
  out.family_residual = std::max(u.unitary_residual, u.commute_residual);
  out.ok = out.residual < tol.residual &&
           out.commutant_residual < tol.twist_family && u.family_ok(tol.twist_family);
  return out;
}

PairCheck check_doubly_twisted(const IsometryTuple& t, const TwistFamily& u,
                               const Tolerances& tol) {
  PairCheck tw = check_twisted(t, u, tol);
  PairCheck out;
  out.commutant_residual = tw.commutant_residual;
  out.family_residual = tw.family_residual;
  for (int i = 1; i <= t.n(); ++i)
    for (int j = 1; j <= t.n(); ++j) {
      if (i == j) continue;
      GradedOperator lhs = compose({adjoint(t.V[i - 1]), t.V[j - 1]});
      GradedOperator rhs =
          compose({adjoint(u.twist(i, j)), t.V[j - 1], adjoint(t.V[i - 1])});
      out.residual = std::max(out.residual, word_residual(lhs, rhs));
    }
  out.ok = tw.ok && out.residual < tol.residual;
  return out;
}

Subspace defect_space(const IsometryTuple& t, Bitmask a, const Tolerances& tol) {
  std::vector<int> mem = members(a);
  Subspace s;
  if (mem.empty()) {
    s = whole_space(t.space);
  } else {
    bool first = true;
    for (int i : mem) {
      Subspace k = kernel(adjoint(t.V[i - 1]), tol);
      s = first ? std::move(k) : intersect(s, k, tol);
      first = false;
    }
  }
  s.label = "N" + subset_label(a, t.n());
  return s;
}

WanderingResult weak_wandering(const IsometryTuple& t, Bitmask a, int k_budget,
                               const Tolerances& tol) {
  require_arity(t);
  const int n = t.n();
  if (k_budget <= 0) k_budget = Budgets{}.resolved(t.space).orbit;
  WanderingResult out;
  std::vector<int> mem = members(a);
  if (mem.empty()) {
    out.space = whole_space(t.space);
    out.space.label = "E" + subset_label(a, n);
    out.stabilized = true;
    out.certified = true;
    return out;
  }
  Subspace e;
  bool first = true;
  auto meet = [&](const Subspace& k) {
    if (first) {
      e = k;
      first = false;
    } else if (e.dim() > 0) {
      e = intersect(e, k, tol);
    }
  };
  for (int i : mem) meet(kernel(adjoint(t.V[i - 1]), tol));

  bool stab = e.dim() == 0;
  int used = 0;
  for (int s = 1; s <= k_budget && !stab; ++s) {
    Subspace prev = e;
    for (int i : mem) {
      const Bitmask comp = full_mask(n) & ~(1u << (i - 1));
      for (Bitmask b = comp; b; b = (b - 1) & comp) {
        std::vector<int> bm = members(b);
        const int p = static_cast<int>(bm.size());
        std::vector<int> k(p, 1);
        for (;;) {
          if (*std::max_element(k.begin(), k.end()) == s) {
            GradedOperator word =
                compose({adjoint(t.V[i - 1]), tuple_word(t, b, k)});
            meet(kernel(word, tol));
            if (e.dim() == 0) break;
          }
          int posn = p - 1;
          while (posn >= 0 && k[posn] == s) k[posn--] = 1;
          if (posn < 0) break;
          ++k[posn];
        }
        if (e.dim() == 0) break;
      }
      if (e.dim() == 0) break;
    }
    used = s;
    if (e.dim() == 0 || (e.dim() == prev.dim() && equal(e, prev, tol.angle)))
      stab = true;
  }
  out.space = std::move(e);
  out.space.label = "E" + subset_label(a, n);
  out.stabilized = stab;
  out.certified = stab && out.space.certified;
  out.budget_used = used;
  return out;
}

WanderingResult wandering(const IsometryTuple& t, Bitmask a, BlockRoute route,
                          const Budgets& budgets, const Tolerances& tol) {
  require_arity(t);
  Budgets bud = budgets.resolved(t.space);
  WanderingResult base;
  if (route == BlockRoute::WeakWandering) {
    base = weak_wandering(t, a, bud.orbit, tol);
  } else {
    base.space = defect_space(t, a, tol);
    base.stabilized = true;
    base.certified = base.space.certified;
  }
  std::vector<GradedOperator> comp_ops;
  for (int j = 1; j <= t.n(); ++j)
    if (!((a >> (j - 1)) & 1u)) comp_ops.push_back(t.V[j - 1]);
  StabilizedResult st =
      stabilized_intersection(comp_ops, base.space, bud.iterations, tol);
  WanderingResult out;
  out.space = std::move(st.space);
  out.space.label = "W" + subset_label(a, t.n());
  out.stabilized = base.stabilized && st.stabilized;
  out.certified = base.certified && st.certified;
  out.budget_used = std::max(base.budget_used, st.steps);
  out.invariance_residual = st.invariance_residual;
  return out;
}

Subspace block_space(const IsometryTuple& t, Bitmask a, BlockRoute route,
                     const Budgets& budgets, const Tolerances& tol) {
  Budgets bud = budgets.resolved(t.space);
  WanderingResult w = wandering(t, a, route, budgets, tol);
  return orbit_sum(t, a, w.space, w.certified, bud.orbit, tol);
}

CriterionResult vnw_criterion(const IsometryTuple& t, const EngineConfig& cfg) {
  require_arity(t);
  return criterion_impl(t, cfg, nullptr);
}

DecompositionReport vnw_decompose(const IsometryTuple& t, const EngineConfig& cfg) {
  require_arity(t);
  DecompositionReport rep;
  seed_report(t, cfg, "decompose-vnw", rep);
  std::vector<WoldResult> wolds;
  rep.criterion = criterion_impl(t, cfg, &wolds);
  if (rep.criterion.verdict == Verdict::Failed) {
    rep.ok = false;
    rep.failure = "joint reducibility criterion failed:";
    for (const WitnessEntry& w : rep.criterion.witnesses)
      rep.failure += " unitary part of V_" + std::to_string(w.i) +
                     " is not reduced by V_" + std::to_string(w.j) +
                     " (residual " + fmt_res(w.residual) + ")";
    return rep;
  }
  if (rep.criterion.verdict == Verdict::Uncertified) rep.certified = false;

  const unsigned total = 1u << t.n();
  rep.blocks.resize(total);
  run_indexed(total, cfg.jobs, [&](unsigned a) {
    BlockEntry e;
    e.A = a;
    Subspace h;
    bool first = true;
    for (int i = 1; i <= t.n(); ++i) {
      const Subspace& part = ((a >> (i - 1)) & 1u) ? wolds[i - 1].shift_part
                                                   : wolds[i - 1].unitary_part;
      h = first ? part : intersect(h, part, cfg.tol);
      first = false;
    }
    h.label = "H" + subset_label(a, t.n());
    e.space = std::move(h);
    rep.blocks[a] = std::move(e);
  });
  finish_report(t, cfg, false, -1, rep);
  return rep;
}

DecompositionReport doubly_twisted_decompose(const IsometryTuple& t,
                                             const EngineConfig& cfg) {
  require_arity(t);
  if (!t.twist)
    throw std::invalid_argument(
        "doubly twisted decomposition wants a tuple with a twist attached");
  PairCheck dw = check_doubly_twisted(t, *t.twist, cfg.tol);
  if (!dw.ok)
    throw std::invalid_argument("tuple is not doubly twisted (word residual " +
                                fmt_res(dw.residual) + ", family residual " +
                                fmt_res(dw.family_residual) + ")");
  DecompositionReport rep;
  seed_report(t, cfg, "decompose-doubly", rep);
  const unsigned total = 1u << t.n();
  rep.blocks.resize(total);
  run_indexed(total, cfg.jobs, [&](unsigned a) {
    BlockEntry e;
    e.A = a;
    e.space = block_space(t, a, BlockRoute::Defect, cfg.budgets, cfg.tol);
    rep.blocks[a] = std::move(e);
  });

  DecompositionReport other = vnw_decompose(t, cfg);
  rep.criterion = other.criterion;
  if (!other.ok) {
    rep.certified = rep.certified && other.certified;
    note_failure(rep, "intersection route failed: " + other.failure);
  } else {
    for (unsigned a = 0; a < total; ++a) {
      BlockEntry& e = rep.blocks[a];
      const BlockEntry& o = other.blocks[a];
      rep.certified = rep.certified && o.certified;
      if (e.space.dim() != o.space.dim()) {
        note_failure(rep, "routes disagree on " + e.space.label + " (kernel route dim " +
                              std::to_string(e.space.dim()) +
                              ", intersection route dim " +
                              std::to_string(o.space.dim()) + ")");
        continue;
      }
      if (e.space.dim() == 0) continue;
      std::vector<double> angs = principal_angles(e.space, o.space);
      e.cross_route_angle = angs.empty() ? 0.0 : angs.back();
      if (e.cross_route_angle >= cfg.tol.angle)
        note_failure(rep, "routes disagree on " + e.space.label + " (angle " +
                              fmt_res(e.cross_route_angle) + ")");
    }
  }
  finish_report(t, cfg, true, -1, rep);
  return rep;
}

DecompositionReport twisted_decompose(const IsometryTuple& t,
                                      const EngineConfig& cfg) {
  require_arity(t);
  if (!t.twist)
    throw std::invalid_argument(
        "twisted decomposition wants a tuple with a twist attached");
  PairCheck tw = check_twisted(t, *t.twist, cfg.tol);
  if (!tw.ok)
    throw std::invalid_argument("tuple is not twisted (word residual " +
                                fmt_res(tw.residual) + ", family residual " +
                                fmt_res(tw.family_residual) + ")");
  DecompositionReport rep;
  seed_report(t, cfg, "decompose-twisted", rep);
  const unsigned total = 1u << t.n();
  const unsigned full = total - 1;
  rep.blocks.resize(total);
  // Proper blocks cover every A strictly inside the index set, the empty set
  // included; the full-set slot holds the leftover piece, taken as an
  // orthocomplement rather than from orbits so its error does not compound.
  run_indexed(full, cfg.jobs, [&](unsigned a) {
    BlockEntry e;
    e.A = a;
    e.space = block_space(t, a, BlockRoute::WeakWandering, cfg.budgets, cfg.tol);
    rep.blocks[a] = std::move(e);
  });

  Subspace joined = zero_space(t.space);
  for (unsigned a = 0; a < full; ++a) joined = join(joined, rep.blocks[a].space, cfg.tol);
  Subspace resid = complement(joined, cfg.tol);
  resid.certified = joined.certified;
  resid.label = "residual";
  rep.blocks[full].A = full;
  rep.blocks[full].space = std::move(resid);

  finish_report(t, cfg, true, static_cast<int>(full), rep);

  rep.has_weak_shift = true;
  try {
    ClassifierResult ws = is_twisted_weak_shift(t, rep.blocks[full].space, cfg);
    rep.weak_shift.ok = ws.ok;
    rep.weak_shift.certified = ws.certified;
    for (const ClassifierEvidence& ev : ws.evidence)
      rep.weak_shift.evidence.push_back(ev.what + ": " + to_string(ev.cls));
    rep.certified = rep.certified && ws.certified;
    if (!ws.ok)
      note_failure(rep, "residual restriction is not a weak shift");
  } catch (const std::invalid_argument& ex) {
    rep.weak_shift.ok = false;
    rep.weak_shift.certified = false;
    rep.certified = false;
    note_failure(rep, ex.what());
  }
  return rep;
}

ClassifierResult is_twisted_shift(const IsometryTuple& t, const EngineConfig& cfg) {
  require_arity(t);
  if (!t.twist)
    throw std::invalid_argument("shift classification wants a twist attached");
  PairCheck dw = check_doubly_twisted(t, *t.twist, cfg.tol);
  if (!dw.ok)
    throw std::invalid_argument(
        "shift classification wants a doubly twisted tuple (word residual " +
        fmt_res(dw.residual) + ")");
  Budgets bud = cfg.budgets.resolved(t.space);
  const int n = t.n();
  ClassifierResult out;
  out.ok = true;
  out.certified = true;
  bool criterion_ok = true;
  for (int i = 1; i <= n; ++i) {
    Bitmask a = full_mask(n) & ~(1u << (i - 1));
    Subspace na = defect_space(t, a, cfg.tol);
    RestrictionClass c = RestrictionClass::Shift;
    if (na.dim() > 0) {
      try {
        c = classify_restriction(t.V[i - 1], na, bud.iterations, cfg.tol);
      } catch (const std::invalid_argument&) {
        c = RestrictionClass::Mixed;
      }
    }
    out.evidence.push_back({"V_" + std::to_string(i) + " on " + na.label, c});
    criterion_ok = criterion_ok && c == RestrictionClass::Shift;
    out.certified = out.certified && c != RestrictionClass::Uncertified;
  }
  for (int j = 1; j <= n; ++j)
    for (int k = 1; k <= n; ++k) {
      if (j == k) continue;
      GradedOperator w = compose({t.V[j - 1], t.V[k - 1]});
      InvariantShiftCheck c =
          shift_on_invariant(w, whole_space(t.space), bud.iterations, cfg.tol);
      RestrictionClass cls = !c.certified ? RestrictionClass::Uncertified
                             : c.is_shift ? RestrictionClass::Shift
                                          : RestrictionClass::Mixed;
      out.evidence.push_back(
          {"V_" + std::to_string(j) + "V_" + std::to_string(k), cls});
      criterion_ok = criterion_ok && c.is_shift;
      out.certified = out.certified && c.certified;
    }
  bool direct_ok = true;
  for (int i = 1; i <= n; ++i) {
    RestrictionClass c =
        classify_restriction(t.V[i - 1], whole_space(t.space), bud.iterations, cfg.tol);
    out.evidence.push_back({"V_" + std::to_string(i) + " directly", c});
    direct_ok = direct_ok && c == RestrictionClass::Shift;
    out.certified = out.certified && c != RestrictionClass::Uncertified;
  }
  if (criterion_ok != direct_ok) {
    out.certified = false;
    out.evidence.push_back(
        {"criterion and direct routes disagree", RestrictionClass::Uncertified});
  }
  out.ok = criterion_ok && direct_ok;
  return out;
}

ClassifierResult is_twisted_weak_shift(const IsometryTuple& t,
                                       const EngineConfig& cfg) {
  return is_twisted_weak_shift(t, whole_space(t.space), cfg);
}

ClassifierResult is_twisted_weak_shift(const IsometryTuple& t, const Subspace& within,
                                       const EngineConfig& cfg) {
  require_arity(t);
  Budgets bud = cfg.budgets.resolved(t.space);
  const int n = t.n();
  ClassifierResult out;
  out.ok = true;
  out.certified = true;
  auto record = [&](const std::string& what, const GradedOperator& op, Bitmask a) {
    WanderingResult e = weak_wandering(t, a, bud.orbit, cfg.tol);
    Subspace s = intersect(e.space, within, cfg.tol);
    InvariantShiftCheck c = shift_on_invariant(op, s, bud.iterations, cfg.tol);
    if (c.invariance_residual >= cfg.tol.residual)
      throw std::invalid_argument(e.space.label + " is not invariant under " + what +
                                  " (residual " + fmt_res(c.invariance_residual) + ")");
    RestrictionClass cls = !(c.certified && e.certified)
                               ? RestrictionClass::Uncertified
                           : c.is_shift ? RestrictionClass::Shift
                                        : RestrictionClass::Mixed;
    out.evidence.push_back({what + " on " + e.space.label, cls});
    out.ok = out.ok && c.is_shift;
    out.certified = out.certified && c.certified && e.certified;
  };
  for (int i = 1; i <= n; ++i)
    record("V_" + std::to_string(i), t.V[i - 1],
           full_mask(n) & ~(1u << (i - 1)));
  for (int j = 1; j <= n; ++j)
    for (int k = 1; k <= n; ++k) {
      if (j == k) continue;
      record("V_" + std::to_string(j) + "V_" + std::to_string(k),
             compose({t.V[j - 1], t.V[k - 1]}),
             full_mask(n) & ~(1u << (j - 1)) & ~(1u << (k - 1)));
    }
  return out;
}

TwistMonomial TwistMonomial::eta(int i, const std::vector<int>& k, int n) {
  if (static_cast<int>(k.size()) != n)
    throw std::invalid_argument("exponent vector arity mismatch");
  if (i < 1 || i > n) throw std::invalid_argument("coordinate out of range");
  TwistMonomial m;
  m.n = n;
  for (int j = 1; j <= n; ++j) {
    if (j == i || k[j - 1] == 0) continue;
    if (j > i)
      m.powers[{i, j}] += k[j - 1];
    else
      m.powers[{j, i}] -= k[j - 1];
  }
  return m;
}

GradedOperator TwistMonomial::evaluate(const TwistFamily& u) const {
  if (u.n != n) throw std::invalid_argument("twist family arity mismatch");
  if (u.upper.empty()) throw std::invalid_argument("twist family is empty");
  const SpaceSpec& sp = u.upper.front().space;
  std::vector<GradedOperator> factors;
  for (const auto& [key, p] : powers) {
    if (p == 0) continue;
    GradedOperator base = p > 0 ? u.at_upper(key.first, key.second)
                                : adjoint(u.at_upper(key.first, key.second));
    factors.push_back(operator_power(base, std::abs(p)));
  }
  if (factors.empty()) return identity_op(sp);
  if (factors.size() == 1) return factors.front();
  return compose(factors);
}

IdentityCheck twist_commutation_check(const IsometryTuple& t, int budget,
                                      unsigned long long seed, int min_samples,
                                      const Tolerances& tol) {
  require_arity(t);
  if (!t.twist)
    throw std::invalid_argument("word identity check wants a twist attached");
  const int n = t.n();
  if (budget <= 0) budget = std::max(1, Budgets{}.resolved(t.space).orbit);
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> pick_i(1, n);
  std::uniform_int_distribution<int> pick_k(0, budget);
  IdentityCheck out;
  const int max_attempts = std::max(1, min_samples) * 50;
  const Bitmask full = full_mask(n);
  for (int attempt = 0; attempt < max_attempts && out.samples < min_samples;
       ++attempt) {
    int i = pick_i(rng);
    std::vector<int> k(n, 0);
    int total = 0;
    for (int j = 0; j < n; ++j) total += (k[j] = pick_k(rng));
    if (total == 0 || total > budget) continue;
    GradedOperator word = tuple_word(t, full, k);
    GradedOperator lhs = compose({t.V[i - 1], word});
    GradedOperator eta = TwistMonomial::eta(i, k, n).evaluate(*t.twist);
    GradedOperator rhs = compose({word, t.V[i - 1], eta});
    long checked = 0;
    double r = word_residual(lhs, rhs, &checked);
    if (checked == 0) continue;
    out.residual = std::max(out.residual, r);
    ++out.samples;
  }
  out.ok = out.samples >= min_samples && out.residual < tol.residual;
  return out;
}

ProbeResult maximality_probe(const IsometryTuple& t, Bitmask a, const Subspace& k,
                             const EngineConfig& cfg) {
  require_arity(t);
  if (!t.twist)
    throw std::invalid_argument("maximality probe wants a twist attached");
  if (k.space != t.space)
    throw std::invalid_argument("candidate lives on a different space");
  Budgets bud = cfg.budgets.resolved(t.space);
  for (int i = 0; i < t.n(); ++i) {
    ReduceCheck rc = reduces(t.V[i], k, cfg.tol.residual);
    if (!rc.ok)
      throw std::invalid_argument("candidate does not reduce V_" +
                                  std::to_string(i + 1) + " (residual " +
                                  fmt_res(rc.residual) + ")");
  }
  if (k.dim() > 0) {
    for (int i = 1; i <= t.n(); ++i) {
      RestrictionClass c = classify_restriction(t.V[i - 1], k, bud.iterations, cfg.tol);
      const bool in_a = (a >> (i - 1)) & 1u;
      RestrictionClass expect =
          in_a ? RestrictionClass::Shift : RestrictionClass::Unitary;
      if (c != expect)
        throw std::invalid_argument("candidate restriction of V_" + std::to_string(i) +
                                    " classified " + std::string(to_string(c)) +
                                    ", expected " + to_string(expect));
    }
    double dres = restricted_doubly_residual(t, k, cfg.tol);
    if (dres >= cfg.tol.residual)
      throw std::invalid_argument(
          "candidate restriction is not doubly twisted (residual " +
          fmt_res(dres) + ")");
  }
  Subspace block =
      block_space(t, a, BlockRoute::WeakWandering, cfg.budgets, cfg.tol);
  ProbeResult out;
  out.containment_angle_sin = k.dim() == 0 ? 0.0 : containment_sin(k, block);
  out.contained = out.containment_angle_sin < cfg.tol.angle;
  return out;
}

}  // namespace twistdec
