#include "twistdec/space.hpp"

#include <stdexcept>

namespace twistdec {

SpaceSpec::SpaceSpec(int v, std::vector<Block> bs, long dim_cap)
    : vars(v), blocks(std::move(bs)) {
  if (vars < 0) throw std::invalid_argument("variable count must be >= 0");
  if (blocks.empty()) throw std::invalid_argument("space needs at least one block");
  offsets_.reserve(blocks.size());
  long off = 0;
  for (const Block& b : blocks) {
    if (b.degree_cap < 0) throw std::invalid_argument("degree cap must be >= 0");
    if (b.fiber_dim < 1) throw std::invalid_argument("fiber dimension must be >= 1");
    offsets_.push_back(off);
    long mono = 1;
    for (int i = 0; i < vars; ++i) {
      mono *= b.degree_cap + 1;
      if (mono > dim_cap) throw std::invalid_argument("dimension cap exceeded");
    }
    off += mono * b.fiber_dim;
    if (off > dim_cap) throw std::invalid_argument("dimension cap exceeded");
  }
  total_dim_ = off;
}

long SpaceSpec::monomial_count(int b) const {
  long mono = 1;
  for (int i = 0; i < vars; ++i) mono *= blocks.at(b).degree_cap + 1;
  return mono;
}

long SpaceSpec::block_dim(int b) const {
  return monomial_count(b) * blocks.at(b).fiber_dim;
}

int SpaceSpec::block_of_index(long index) const {
  if (index < 0 || index >= total_dim_) throw std::out_of_range("basis index out of range");
  int b = block_count() - 1;
  while (b > 0 && offsets_[b] > index) --b;
  return b;
}

int SpaceSpec::max_degree_cap() const {
  int d = 0;
  for (const Block& b : blocks) d = std::max(d, b.degree_cap);
  return d;
}

long index_of(const SpaceSpec& space, const BasisIndex& bi) {
  if (bi.block < 0 || bi.block >= space.block_count())
    throw std::out_of_range("block out of range");
  const Block& blk = space.blocks[bi.block];
  if (static_cast<int>(bi.exponents.size()) != space.vars)
    throw std::invalid_argument("exponent tuple has wrong length");
  if (bi.fiber < 0 || bi.fiber >= blk.fiber_dim)
    throw std::out_of_range("fiber index out of range");
  long flat = 0;
  for (int v = 0; v < space.vars; ++v) {
    int k = bi.exponents[v];
    if (k < 0 || k > blk.degree_cap) throw std::out_of_range("exponent out of range");
    flat = flat * (blk.degree_cap + 1) + k;
  }
  return space.block_offset(bi.block) + flat * blk.fiber_dim + bi.fiber;
}

BasisIndex basis_at(const SpaceSpec& space, long index) {
  int b = space.block_of_index(index);
  const Block& blk = space.blocks[b];
  long rel = index - space.block_offset(b);
  BasisIndex bi;
  bi.block = b;
  bi.fiber = static_cast<int>(rel % blk.fiber_dim);
  long flat = rel / blk.fiber_dim;
  bi.exponents.assign(space.vars, 0);
  for (int v = space.vars - 1; v >= 0; --v) {
    bi.exponents[v] = static_cast<int>(flat % (blk.degree_cap + 1));
    flat /= blk.degree_cap + 1;
  }
  return bi;
}

std::vector<BasisIndex> build_space(const SpaceSpec& space) {
  std::vector<BasisIndex> out;
  out.reserve(space.total_dim());
  for (long i = 0; i < space.total_dim(); ++i) out.push_back(basis_at(space, i));
  return out;
}

SupportProfile support_profile(const SpaceSpec& space, const Vector& coeffs,
                               double eps) {
  if (coeffs.size() != space.total_dim())
    throw std::invalid_argument("coefficient vector does not match space dimension");
  SupportProfile p;
  p.max_degree.assign(space.block_count(), -1);
  p.max_by_var.assign(space.block_count(), std::vector<int>(space.vars, -1));
  for (long i = 0; i < coeffs.size(); ++i) {
    if (std::abs(coeffs[i]) <= eps) continue;
    BasisIndex bi = basis_at(space, i);
    int md = 0;
    for (int v = 0; v < space.vars; ++v) {
      md = std::max(md, bi.exponents[v]);
      p.max_by_var[bi.block][v] = std::max(p.max_by_var[bi.block][v], bi.exponents[v]);
    }
    p.max_degree[bi.block] = std::max(p.max_degree[bi.block], md);
  }
  return p;
}

std::vector<int> max_degrees(const SpaceSpec& space, const Vector& coeffs, double eps) {
  return support_profile(space, coeffs, eps).max_degree;
}

}  // namespace twistdec
