#include "twistdec/run.hpp"

#include <chrono>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <set>

#include <nlohmann/json.hpp>

#include "twistdec/report.hpp"
#include "twistdec/scene.hpp"
#include "twistdec/twisted.hpp"

namespace twistdec {

using nlohmann::json;

namespace {

std::string fmt_res(double r) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3e", r);
  return buf;
}

void merge(json& dst, json src) {
  for (auto& [k, v] : src.items()) dst[k] = std::move(v);
}

std::string run_check(const IsometryTuple& t, const EngineConfig& ecfg,
                      const Budgets& bud, json& rep) {
  json checks;
  json iso = json::array();
  bool any_unchecked = false;
  for (const GradedOperator& v : t.V) {
    IsometryCheck c = is_isometry_certified(v, ecfg.tol.twist_family);
    json cj;
    cj["residual"] = c.residual;
    cj["checked"] = c.checked;
    iso.push_back(std::move(cj));
    any_unchecked = any_unchecked || c.checked == 0;
  }
  checks["isometry"] = std::move(iso);
  std::string verdict = "ok";
  if (t.n() >= 2) {
    if (!t.flags.twisted) {
      rep["checks"] = std::move(checks);
      rep["failure"] = "tuple is not twisted (word residual " +
                       fmt_res(t.flags.twisted_residual) + ", family residual " +
                       fmt_res(std::max(t.twist ? t.twist->unitary_residual : 0.0,
                                        t.twist ? t.twist->commute_residual : 0.0)) +
                       ")";
      return "failed";
    }
    IdentityCheck wi =
        twist_commutation_check(t, bud.orbit, ecfg.seed, bud.samples, ecfg.tol);
    json wj;
    wj["ok"] = wi.ok;
    wj["residual"] = wi.residual;
    wj["samples"] = wi.samples;
    checks["word_identity"] = std::move(wj);
    if (!wi.ok) {
      rep["failure"] =
          "sampled word identity failed (residual " + fmt_res(wi.residual) + ")";
      verdict = "failed";
    }
  }
  rep["checks"] = std::move(checks);
  if (verdict == "ok" && any_unchecked) verdict = "uncertified";
  return verdict;
}

std::string run_classify(const IsometryTuple& t, const EngineConfig& ecfg,
                         const Budgets& bud, json& rep) {
  if (t.n() >= 2 && !t.flags.twisted) {
    rep["failure"] = "tuple is not twisted (word residual " +
                     fmt_res(t.flags.twisted_residual) + ")";
    return "failed";
  }
  json cls;
  bool uncertified = false;
  json coords = json::array();
  for (const GradedOperator& v : t.V) {
    RestrictionClass c =
        classify_restriction(v, whole_space(t.space), bud.iterations, ecfg.tol);
    coords.push_back(to_string(c));
    uncertified = uncertified || c == RestrictionClass::Uncertified;
  }
  cls["coordinates"] = std::move(coords);
  ClassifierResult ws = is_twisted_weak_shift(t, ecfg);
  uncertified = uncertified || !ws.certified;
  cls["weak_shift"] = classifier_json(ws);
  if (t.twist && t.flags.doubly_twisted) {
    ClassifierResult sh = is_twisted_shift(t, ecfg);
    uncertified = uncertified || !sh.certified;
    cls["shift"] = classifier_json(sh);
  }
  rep["classify"] = std::move(cls);
  return uncertified ? "uncertified" : "ok";
}

std::string run_decompose(const IsometryTuple& t, const std::string& mode,
                          const EngineConfig& ecfg, json& rep) {
  DecompositionReport d;
  try {
    if (mode == "decompose-vnw")
      d = vnw_decompose(t, ecfg);
    else if (mode == "decompose-doubly")
      d = doubly_twisted_decompose(t, ecfg);
    else
      d = twisted_decompose(t, ecfg);
  } catch (const std::exception& e) {
    rep["failure"] = e.what();
    return "failed";
  }
  merge(rep, decomposition_json(d, t.n()));
  return verdict_string(d);
}

std::string run_oracle(const Scene& scene, const IsometryTuple& t,
                       const RunConfig& cfg, const EngineConfig& ecfg, json& rep) {
  DecompositionReport d;
  try {
    d = doubly_twisted_decompose(t, ecfg);
  } catch (const std::exception& e) {
    rep["failure"] = e.what();
    return "failed";
  }
  merge(rep, decomposition_json(d, t.n()));
  std::string verdict = verdict_string(d);

  json cmp;
  double worst = 0.0;
  for (const BlockEntry& e : d.blocks) worst = std::max(worst, e.cross_route_angle);
  cmp["worst_angle"] = worst;
  if (worst >= ecfg.tol.oracle_compare) {
    verdict = "failed";
    if (!rep.contains("failure"))
      rep["failure"] = "routes disagree beyond the comparison tolerance (angle " +
                       fmt_res(worst) + ")";
  }

  if (cfg.compare_cap > 0) {
    SpaceSpec sp2 = retruncated(scene.space, cfg.compare_cap);
    IsometryTuple t2 = build_tuple_on(scene, sp2, ecfg.tol);
    bool stable = t2.flags.twisted == t.flags.twisted &&
                  t2.flags.doubly_twisted == t.flags.doubly_twisted;
    json wj = json::array();
    for (Bitmask a = 0; a < (1u << t.n()); ++a) {
      WanderingResult w1 = wandering(t, a, BlockRoute::Defect, ecfg.budgets, ecfg.tol);
      WanderingResult w2 = wandering(t2, a, BlockRoute::Defect, ecfg.budgets, ecfg.tol);
      json ej;
      ej["A"] = subset_json(a, t.n());
      ej["dim"] = w1.space.dim();
      ej["dim_compare"] = w2.space.dim();
      stable = stable && w1.space.dim() == w2.space.dim();
      wj.push_back(std::move(ej));
    }
    cmp["cap"] = cfg.compare_cap;
    cmp["wandering"] = std::move(wj);
    cmp["stable"] = stable;
    if (!stable && verdict == "ok") {
      verdict = "failed";
      rep["failure"] = "wandering dimensions change under retruncation";
    }
  }
  rep["compare"] = std::move(cmp);
  return verdict;
}

}  // namespace

int run(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  using clock = std::chrono::steady_clock;
  const auto t0 = clock::now();
  static const std::set<std::string> kModes = {
      "check",           "classify",         "decompose-vnw",
      "decompose-doubly", "decompose-twisted", "oracle-compare"};
  if (!kModes.count(cfg.mode)) {
    err << "error: unknown mode \"" << cfg.mode << "\"\n";
    return kExitConfig;
  }
  if (cfg.scene_path.empty()) {
    err << "error: no scene file given\n";
    return kExitConfig;
  }
  if (cfg.jobs < 1) {
    err << "error: jobs must be positive\n";
    return kExitConfig;
  }

  json rep;
  std::string verdict;
  try {
    Scene scene = load_scene(cfg.scene_path);
    IsometryTuple t = build_tuple(scene, cfg.tol);
    EngineConfig ecfg;
    ecfg.budgets = cfg.budgets;
    ecfg.tol = cfg.tol;
    ecfg.seed = cfg.seed;
    ecfg.jobs = cfg.jobs;
    Budgets bud = cfg.budgets.resolved(t.space);

    rep["schema_version"] = 1;
    rep["scene_digest"] = scene.digest;
    rep["mode"] = cfg.mode;
    json bj;
    bj["orbit"] = bud.orbit;
    bj["iterations"] = bud.iterations;
    bj["samples"] = bud.samples;
    rep["budgets"] = std::move(bj);
    rep["seed"] = cfg.seed;
    rep["tuple"] = tuple_flags_json(t);

    if (cfg.mode == "check")
      verdict = run_check(t, ecfg, bud, rep);
    else if (cfg.mode == "classify")
      verdict = run_classify(t, ecfg, bud, rep);
    else if (cfg.mode == "oracle-compare")
      verdict = run_oracle(scene, t, cfg, ecfg, rep);
    else
      verdict = run_decompose(t, cfg.mode, ecfg, rep);
  } catch (const SceneError& e) {
    err << "error: " << e.what() << "\n";
    return kExitConfig;
  }

  rep["verdict"] = verdict;
  long long ms = 0;
  if (cfg.timing)
    ms = std::chrono::duration_cast<std::chrono::milliseconds>(clock::now() - t0)
             .count();
  rep["timing_ms"] = ms;

  std::string text = (cfg.pretty ? rep.dump(2) : rep.dump()) + "\n";
  if (!cfg.out_path.empty()) {
    std::ofstream f(cfg.out_path, std::ios::binary);
    if (!f) {
      err << "error: cannot write \"" << cfg.out_path << "\"\n";
      return kExitConfig;
    }
    f << text;
  } else {
    out << text;
  }
  if (verdict == "ok") return kExitOk;
  if (verdict == "uncertified") return kExitUncertified;
  return kExitFailed;
}

}  // namespace twistdec
