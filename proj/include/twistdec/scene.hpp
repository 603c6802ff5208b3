#pragma once

#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "twistdec/expr.hpp"
#include "twistdec/models.hpp"

namespace twistdec {

// Configuration problem: unreadable file, malformed JSON, schema violation,
// or a tuple entry that fails validation. Distinct from verification
// failures, which produce reports.
struct SceneError : std::runtime_error {
  explicit SceneError(const std::string& msg) : std::runtime_error(msg) {}
};

struct Scene {
  SpaceSpec space;
  std::vector<std::shared_ptr<const OpExpr>> tuple;
  bool derive_twist_requested = true;  // "twist": "derive" or absent
  std::vector<std::shared_ptr<const OpExpr>> twist;  // explicit upper entries
  std::string digest;  // FNV-1a of the canonical serialization
};

// Strict parse: unknown keys are rejected, JSON syntax errors are reported
// with line and column.
Scene parse_scene(const std::string& text);
Scene load_scene(const std::string& path);

nlohmann::json scene_to_json(const Scene& s);

// Evaluates the tuple (and the explicit twist, if any) on the scene's space.
// Entries that are not certified isometries and explicit twist families that
// are not unitary/commuting are configuration errors. A requested derived
// twist is attached as measured, usable or not.
IsometryTuple build_tuple(const Scene& s, const Tolerances& tol = {});

// Same scene on a different space (degree caps replaced). Used for
// truncation-stability comparisons.
IsometryTuple build_tuple_on(const Scene& s, const SpaceSpec& space,
                             const Tolerances& tol = {});

// Scene space with every graded cap replaced by new_cap.
SpaceSpec retruncated(const SpaceSpec& space, int new_cap);

}  // namespace twistdec
