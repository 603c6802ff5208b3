#include "twistdec/report.hpp"

#include <nlohmann/json.hpp>

namespace twistdec {

using nlohmann::json;

json subset_json(Bitmask a, int n) {
  json out = json::array();
  for (int i = 1; i <= n; ++i)
    if ((a >> (i - 1)) & 1u) out.push_back(i);
  return out;
}

json tuple_flags_json(const IsometryTuple& t) {
  json j;
  j["n"] = t.n();
  j["twisted"] = t.flags.twisted;
  j["twisted_residual"] = t.flags.twisted_residual;
  j["doubly_twisted"] = t.flags.doubly_twisted;
  j["doubly_residual"] = t.flags.doubly_residual;
  j["commutant_residual"] = t.flags.commutant_residual;
  json tw;
  tw["present"] = t.twist.has_value();
  if (t.twist) {
    tw["derived"] = t.twist->derived;
    tw["lifted"] = t.twist->lifted;
    tw["unitary_residual"] = t.twist->unitary_residual;
    tw["commute_residual"] = t.twist->commute_residual;
  }
  j["twist"] = std::move(tw);
  return j;
}

json criterion_json(const CriterionResult& c) {
  json j;
  switch (c.verdict) {
    case CriterionResult::Verdict::Ok:
      j["verdict"] = "ok";
      break;
    case CriterionResult::Verdict::Failed:
      j["verdict"] = "failed";
      break;
    case CriterionResult::Verdict::Uncertified:
      j["verdict"] = "uncertified";
      break;
  }
  json w = json::array();
  for (const WitnessEntry& e : c.witnesses) {
    json ej;
    ej["i"] = e.i;
    ej["j"] = e.j;
    ej["residual"] = e.residual;
    w.push_back(std::move(ej));
  }
  j["witnesses"] = std::move(w);
  return j;
}

json classifier_json(const ClassifierResult& c) {
  json j;
  j["ok"] = c.ok;
  j["certified"] = c.certified;
  json ev = json::array();
  for (const ClassifierEvidence& e : c.evidence) {
    json ej;
    ej["what"] = e.what;
    ej["class"] = to_string(e.cls);
    ev.push_back(std::move(ej));
  }
  j["evidence"] = std::move(ev);
  return j;
}

json decomposition_json(const DecompositionReport& rep, int n) {
  json j;
  json blocks = json::array();
  const bool twisted_mode = rep.has_weak_shift;
  for (size_t idx = 0; idx < rep.blocks.size(); ++idx) {
    const BlockEntry& e = rep.blocks[idx];
    json bj;
    bj["A"] = subset_json(e.A, n);
    bj["label"] = e.space.label;
    bj["dim"] = e.space.dim();
    bj["certified"] = e.certified;
    json cls = json::array();
    for (RestrictionClass c : e.classifications) cls.push_back(to_string(c));
    bj["classifications"] = std::move(cls);
    bj["reducing_residual"] = e.reducing_residual;
    bj["doubly_residual"] = e.restriction_doubly_residual;
    bj["cross_route_angle"] = e.cross_route_angle;
    if (twisted_mode) bj["residual_block"] = idx + 1 == rep.blocks.size();
    blocks.push_back(std::move(bj));
  }
  j["blocks"] = std::move(blocks);
  json checks;
  checks["orthogonality_residual"] = rep.orthogonality_residual;
  checks["criterion"] = criterion_json(rep.criterion);
  if (rep.has_weak_shift) {
    json ws;
    ws["ok"] = rep.weak_shift.ok;
    ws["certified"] = rep.weak_shift.certified;
    ws["evidence"] = rep.weak_shift.evidence;
    checks["weak_shift"] = std::move(ws);
  }
  j["checks"] = std::move(checks);
  j["sum_dims"] = rep.sum_dims;
  j["ambient_dim"] = rep.ambient_dim;
  j["complete"] = rep.complete;
  j["certified"] = rep.certified;
  if (!rep.failure.empty()) j["failure"] = rep.failure;
  return j;
}

const char* verdict_string(const DecompositionReport& rep) {
  if (!rep.ok) return "failed";
  return rep.certified ? "ok" : "uncertified";
}

}  // namespace twistdec
