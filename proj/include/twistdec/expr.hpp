#pragma once

#include <memory>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "twistdec/space.hpp"

namespace twistdec {

// Symbolic operator expression. Evaluation against a SpaceSpec produces a
// GradedOperator; the tree is also kept on operators as provenance and is
// what scene files encode.
struct OpExpr {
  enum class Kind { Mz, Diag, FiberUnitary, Literal, Compose, Adjoint, Dsum, Scale };

  Kind kind = Kind::Mz;
  int var = 0;                    // Mz, Diag (1-based)
  int block = 0;                  // FiberUnitary
  std::vector<int> mask;          // Mz: fiber blocks deliberately annihilated
  Matrix matrix;                  // Diag, FiberUnitary, Literal
  bool has_bounds = false;        // Literal: explicit raise/lower supplied
  std::vector<int> raise, lower;  // Literal override (per variable)
  Complex factor{1.0, 0.0};       // Scale
  std::vector<std::shared_ptr<const OpExpr>> children;  // Compose, Dsum, Adjoint, Scale

  static std::shared_ptr<const OpExpr> mz(int var, std::vector<int> mask = {});
  static std::shared_ptr<const OpExpr> diag(int var, Matrix symbol);
  static std::shared_ptr<const OpExpr> fiber_unitary(int block, Matrix w);
  static std::shared_ptr<const OpExpr> literal(Matrix m);
  static std::shared_ptr<const OpExpr> literal(Matrix m, std::vector<int> raise,
                                               std::vector<int> lower);
  static std::shared_ptr<const OpExpr> compose(
      std::vector<std::shared_ptr<const OpExpr>> factors);
  static std::shared_ptr<const OpExpr> adjoint(std::shared_ptr<const OpExpr> of);
  static std::shared_ptr<const OpExpr> dsum(
      std::vector<std::shared_ptr<const OpExpr>> per_block);
  static std::shared_ptr<const OpExpr> scale(Complex factor,
                                             std::shared_ptr<const OpExpr> of);
};

// Canonical JSON encoding. Complex numbers are [re, im]; matrices are
// row-major nested arrays of such pairs. Unknown keys are rejected.
nlohmann::json expr_to_json(const OpExpr& e);
std::shared_ptr<const OpExpr> expr_from_json(const nlohmann::json& j);

nlohmann::json complex_to_json(const Complex& c);
Complex complex_from_json(const nlohmann::json& j);
nlohmann::json matrix_to_json(const Matrix& m);
Matrix matrix_from_json(const nlohmann::json& j);

struct GradedOperator;
// Evaluate the expression on the given space. Structural problems (bad
// variable, unmasked fiber block under mz, dimension mismatch, non-unitary
// symbol) throw std::invalid_argument.
GradedOperator evaluate(const SpaceSpec& space, const OpExpr& e);

}  // namespace twistdec
