#include "twistdec/expr.hpp"

#include <set>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "twistdec/models.hpp"

namespace twistdec {

using nlohmann::json;

namespace {

std::shared_ptr<OpExpr> node(OpExpr::Kind k) {
  auto e = std::make_shared<OpExpr>();
  e->kind = k;
  return e;
}

void check_keys(const json& j, const std::set<std::string>& allowed,
                const std::set<std::string>& required, const char* what) {
  if (!j.is_object()) throw std::invalid_argument(std::string(what) + " must be an object");
  for (const auto& item : j.items())
    if (!allowed.count(item.key()))
      throw std::invalid_argument(std::string("unknown key \"") + item.key() + "\" in " +
                                  what);
  for (const std::string& k : required)
    if (!j.contains(k))
      throw std::invalid_argument(std::string(what) + " is missing key \"" + k + "\"");
}

int int_field(const json& j, const char* key) {
  const json& v = j.at(key);
  if (!v.is_number_integer())
    throw std::invalid_argument(std::string("key \"") + key + "\" must be an integer");
  return v.get<int>();
}

}  // namespace

std::shared_ptr<const OpExpr> OpExpr::mz(int var, std::vector<int> mask) {
  auto e = node(Kind::Mz);
  e->var = var;
  e->mask = std::move(mask);
  return e;
}

std::shared_ptr<const OpExpr> OpExpr::diag(int var, Matrix symbol) {
  auto e = node(Kind::Diag);
  e->var = var;
  e->matrix = std::move(symbol);
  return e;
}

std::shared_ptr<const OpExpr> OpExpr::fiber_unitary(int block, Matrix w) {
  auto e = node(Kind::FiberUnitary);
  e->block = block;
  e->matrix = std::move(w);
  return e;
}

std::shared_ptr<const OpExpr> OpExpr::literal(Matrix m) {
  auto e = node(Kind::Literal);
  e->matrix = std::move(m);
  return e;
}

std::shared_ptr<const OpExpr> OpExpr::literal(Matrix m, std::vector<int> raise,
                                              std::vector<int> lower) {
  auto e = node(Kind::Literal);
  e->matrix = std::move(m);
  e->has_bounds = true;
  e->raise = std::move(raise);
  e->lower = std::move(lower);
  return e;
}

std::shared_ptr<const OpExpr> OpExpr::compose(
    std::vector<std::shared_ptr<const OpExpr>> factors) {
  auto e = node(Kind::Compose);
  e->children = std::move(factors);
  return e;
}

std::shared_ptr<const OpExpr> OpExpr::adjoint(std::shared_ptr<const OpExpr> of) {
  auto e = node(Kind::Adjoint);
  e->children.push_back(std::move(of));
  return e;
}

std::shared_ptr<const OpExpr> OpExpr::dsum(
    std::vector<std::shared_ptr<const OpExpr>> per_block) {
  auto e = node(Kind::Dsum);
  e->children = std::move(per_block);
  return e;
}

std::shared_ptr<const OpExpr> OpExpr::scale(Complex factor,
                                            std::shared_ptr<const OpExpr> of) {
  auto e = node(Kind::Scale);
  e->factor = factor;
  e->children.push_back(std::move(of));
  return e;
}

json complex_to_json(const Complex& c) { return json::array({c.real(), c.imag()}); }

Complex complex_from_json(const json& j) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number())
    throw std::invalid_argument("complex values must be [re, im]");
  return Complex(j[0].get<double>(), j[1].get<double>());
}

json matrix_to_json(const Matrix& m) {
  json rows = json::array();
  for (long r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (long c = 0; c < m.cols(); ++c) row.push_back(complex_to_json(m(r, c)));
    rows.push_back(std::move(row));
  }
  return rows;
}

Matrix matrix_from_json(const json& j) {
  if (!j.is_array() || j.empty()) throw std::invalid_argument("matrix must be a nonempty array");
  long rows = static_cast<long>(j.size());
  if (!j[0].is_array() || j[0].empty())
    throw std::invalid_argument("matrix rows must be nonempty arrays");
  long cols = static_cast<long>(j[0].size());
  Matrix m(rows, cols);
  for (long r = 0; r < rows; ++r) {
    if (!j[r].is_array() || static_cast<long>(j[r].size()) != cols)
      throw std::invalid_argument("matrix rows must have equal length");
    for (long c = 0; c < cols; ++c) m(r, c) = complex_from_json(j[r][c]);
  }
  return m;
}

json expr_to_json(const OpExpr& e) {
  json j;
  switch (e.kind) {
    case OpExpr::Kind::Mz:
      j["op"] = "mz";
      j["var"] = e.var;
      if (!e.mask.empty()) j["mask"] = e.mask;
      break;
    case OpExpr::Kind::Diag:
      j["op"] = "diag";
      j["var"] = e.var;
      j["matrix"] = matrix_to_json(e.matrix);
      break;
    case OpExpr::Kind::FiberUnitary:
      j["op"] = "fiber_unitary";
      j["block"] = e.block;
      j["matrix"] = matrix_to_json(e.matrix);
      break;
    case OpExpr::Kind::Literal:
      j["op"] = "literal";
      j["matrix"] = matrix_to_json(e.matrix);
      if (e.has_bounds) {
        j["raise"] = e.raise;
        j["lower"] = e.lower;
      }
      break;
    case OpExpr::Kind::Compose: {
      j["op"] = "compose";
      json f = json::array();
      for (const auto& c : e.children) f.push_back(expr_to_json(*c));
      j["factors"] = std::move(f);
      break;
    }
    case OpExpr::Kind::Adjoint:
      j["op"] = "adjoint";
      j["of"] = expr_to_json(*e.children.at(0));
      break;
    case OpExpr::Kind::Dsum: {
      j["op"] = "dsum";
      json f = json::array();
      for (const auto& c : e.children) f.push_back(expr_to_json(*c));
      j["blocks"] = std::move(f);
      break;
    }
    case OpExpr::Kind::Scale:
      j["op"] = "scale";
      j["factor"] = complex_to_json(e.factor);
      j["of"] = expr_to_json(*e.children.at(0));
      break;
  }
  return j;
}

std::shared_ptr<const OpExpr> expr_from_json(const json& j) {
  if (!j.is_object() || !j.contains("op") || !j.at("op").is_string())
    throw std::invalid_argument("operator expression must be an object with an \"op\" key");
  std::string op = j.at("op").get<std::string>();
  if (op == "mz") {
    check_keys(j, {"op", "var", "mask"}, {"op", "var"}, "mz node");
    std::vector<int> mask;
    if (j.contains("mask")) {
      if (!j.at("mask").is_array()) throw std::invalid_argument("mz mask must be an array");
      for (const auto& v : j.at("mask")) {
        if (!v.is_number_integer()) throw std::invalid_argument("mz mask entries must be integers");
        mask.push_back(v.get<int>());
      }
    }
    return OpExpr::mz(int_field(j, "var"), std::move(mask));
  }
  if (op == "diag") {
    check_keys(j, {"op", "var", "matrix"}, {"op", "var", "matrix"}, "diag node");
    return OpExpr::diag(int_field(j, "var"), matrix_from_json(j.at("matrix")));
  }
  if (op == "fiber_unitary") {
    check_keys(j, {"op", "block", "matrix"}, {"op", "block", "matrix"}, "fiber_unitary node");
    return OpExpr::fiber_unitary(int_field(j, "block"), matrix_from_json(j.at("matrix")));
  }
  if (op == "literal") {
    check_keys(j, {"op", "matrix", "raise", "lower"}, {"op", "matrix"}, "literal node");
    Matrix m = matrix_from_json(j.at("matrix"));
    if (j.contains("raise") != j.contains("lower"))
      throw std::invalid_argument("literal bounds need both raise and lower");
    if (j.contains("raise")) {
      std::vector<int> raise = j.at("raise").get<std::vector<int>>();
      std::vector<int> lower = j.at("lower").get<std::vector<int>>();
      return OpExpr::literal(std::move(m), std::move(raise), std::move(lower));
    }
    return OpExpr::literal(std::move(m));
  }
  if (op == "compose") {
    check_keys(j, {"op", "factors"}, {"op", "factors"}, "compose node");
    if (!j.at("factors").is_array() || j.at("factors").empty())
      throw std::invalid_argument("compose needs a nonempty factor list");
    std::vector<std::shared_ptr<const OpExpr>> factors;
    for (const auto& f : j.at("factors")) factors.push_back(expr_from_json(f));
    return OpExpr::compose(std::move(factors));
  }
  if (op == "adjoint") {
    check_keys(j, {"op", "of"}, {"op", "of"}, "adjoint node");
    return OpExpr::adjoint(expr_from_json(j.at("of")));
  }
  if (op == "dsum") {
    check_keys(j, {"op", "blocks"}, {"op", "blocks"}, "dsum node");
    if (!j.at("blocks").is_array() || j.at("blocks").empty())
      throw std::invalid_argument("dsum needs a nonempty block list");
    std::vector<std::shared_ptr<const OpExpr>> blocks;
    for (const auto& b : j.at("blocks")) blocks.push_back(expr_from_json(b));
    return OpExpr::dsum(std::move(blocks));
  }
  if (op == "scale") {
    check_keys(j, {"op", "factor", "of"}, {"op", "factor", "of"}, "scale node");
    return OpExpr::scale(complex_from_json(j.at("factor")), expr_from_json(j.at("of")));
  }
  throw std::invalid_argument("unknown operator kind \"" + op + "\"");
}

GradedOperator evaluate(const SpaceSpec& space, const OpExpr& e) {
  switch (e.kind) {
    case OpExpr::Kind::Mz:
      return mz(space, e.var, e.mask);
    case OpExpr::Kind::Diag:
      return diag_symbol(space, e.var, e.matrix);
    case OpExpr::Kind::FiberUnitary:
      return fiber_unitary(space, e.block, e.matrix);
    case OpExpr::Kind::Literal:
      if (e.has_bounds) return literal_op(space, e.matrix, e.raise, e.lower);
      return literal_op(space, e.matrix);
    case OpExpr::Kind::Compose: {
      std::vector<GradedOperator> ops;
      for (const auto& c : e.children) ops.push_back(evaluate(space, *c));
      return compose(ops);
    }
    case OpExpr::Kind::Adjoint:
      return adjoint(evaluate(space, *e.children.at(0)));
    case OpExpr::Kind::Dsum: {
      if (static_cast<int>(e.children.size()) != space.block_count())
        throw std::invalid_argument("dsum expression wants one branch per block");
      std::vector<GradedOperator> parts;
      for (int b = 0; b < space.block_count(); ++b)
        parts.push_back(evaluate(single_block_space(space, b), *e.children[b]));
      return dsum(space, parts);
    }
    case OpExpr::Kind::Scale:
      return scale_op(e.factor, evaluate(space, *e.children.at(0)));
  }
  throw std::logic_error("unreachable expression kind");
}

}  // namespace twistdec
