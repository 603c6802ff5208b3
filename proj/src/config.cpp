#include "twistdec/config.hpp"

#include "twistdec/space.hpp"

namespace twistdec {

Budgets Budgets::resolved(const SpaceSpec& space) const {
  Budgets out = *this;
  if (out.orbit <= 0) out.orbit = space.max_degree_cap();
  if (out.iterations <= 0) out.iterations = space.max_degree_cap() + 2;
  if (out.samples <= 0) out.samples = 24;
  return out;
}

}  // namespace twistdec
