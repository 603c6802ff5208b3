#include "twistdec/scene.hpp"

#include <cstdint>
#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "twistdec/twisted.hpp"

namespace twistdec {

using nlohmann::json;

namespace {

std::string fnv1a_hex(const std::string& s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::pair<int, int> line_col(const std::string& text, std::size_t byte) {
  int line = 1, col = 1;
  for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return {line, col};
}

void check_keys(const json& j, const std::set<std::string>& allowed,
                const std::set<std::string>& required, const char* what) {
  if (!j.is_object()) throw SceneError(std::string(what) + " must be an object");
  for (const auto& item : j.items())
    if (!allowed.count(item.key()))
      throw SceneError(std::string("unknown key \"") + item.key() + "\" in " + what);
  for (const std::string& k : required)
    if (!j.contains(k))
      throw SceneError(std::string(what) + " is missing key \"" + k + "\"");
}

int int_field(const json& j, const char* key, const char* what) {
  const json& v = j.at(key);
  if (!v.is_number_integer())
    throw SceneError(std::string(what) + " key \"" + key + "\" must be an integer");
  return v.get<int>();
}

}  // namespace

Scene parse_scene(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    auto [line, col] = line_col(text, e.byte > 0 ? e.byte - 1 : 0);
    throw SceneError("scene is not valid JSON at line " + std::to_string(line) +
                     ", column " + std::to_string(col));
  }
  Scene s;
  try {
    check_keys(j, {"space", "tuple", "twist"}, {"space", "tuple"}, "scene");
    const json& sp = j.at("space");
    check_keys(sp, {"v", "blocks"}, {"v", "blocks"}, "space");
    int v = int_field(sp, "v", "space");
    if (v < 0) throw SceneError("space variable count must be nonnegative");
    if (!sp.at("blocks").is_array() || sp.at("blocks").empty())
      throw SceneError("space blocks must be a nonempty array");
    std::vector<Block> blocks;
    for (const json& bj : sp.at("blocks")) {
      check_keys(bj, {"D", "r"}, {"D"}, "block");
      Block b;
      b.degree_cap = int_field(bj, "D", "block");
      b.fiber_dim = bj.contains("r") ? int_field(bj, "r", "block") : 1;
      blocks.push_back(b);
    }
    s.space = SpaceSpec(v, std::move(blocks));

    if (!j.at("tuple").is_array() || j.at("tuple").empty())
      throw SceneError("tuple must be a nonempty array of operator expressions");
    for (const json& e : j.at("tuple")) s.tuple.push_back(expr_from_json(e));

    if (j.contains("twist")) {
      const json& tw = j.at("twist");
      if (tw.is_string()) {
        if (tw.get<std::string>() != "derive")
          throw SceneError("twist must be \"derive\" or an array of operator expressions");
        s.derive_twist_requested = true;
      } else if (tw.is_array()) {
        const int n = static_cast<int>(s.tuple.size());
        const int want = n * (n - 1) / 2;
        if (static_cast<int>(tw.size()) != want)
          throw SceneError("explicit twist wants " + std::to_string(want) +
                           " entries in pair order (1,2), (1,3), ..., got " +
                           std::to_string(tw.size()));
        for (const json& e : tw) s.twist.push_back(expr_from_json(e));
        s.derive_twist_requested = false;
      } else {
        throw SceneError("twist must be \"derive\" or an array of operator expressions");
      }
    }
  } catch (const std::invalid_argument& e) {
    throw SceneError(e.what());
  }
  s.digest = fnv1a_hex(scene_to_json(s).dump());
  return s;
}

Scene load_scene(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw SceneError("cannot open scene file \"" + path + "\"");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_scene(buf.str());
}

json scene_to_json(const Scene& s) {
  json j;
  json sp;
  sp["v"] = s.space.vars;
  json blocks = json::array();
  for (const Block& b : s.space.blocks) {
    json bj;
    bj["D"] = b.degree_cap;
    bj["r"] = b.fiber_dim;
    blocks.push_back(std::move(bj));
  }
  sp["blocks"] = std::move(blocks);
  j["space"] = std::move(sp);
  json tuple = json::array();
  for (const auto& e : s.tuple) tuple.push_back(expr_to_json(*e));
  j["tuple"] = std::move(tuple);
  if (!s.twist.empty()) {
    json tw = json::array();
    for (const auto& e : s.twist) tw.push_back(expr_to_json(*e));
    j["twist"] = std::move(tw);
  } else if (s.derive_twist_requested) {
    j["twist"] = "derive";
  }
  return j;
}

SpaceSpec retruncated(const SpaceSpec& space, int new_cap) {
  if (new_cap < 1) throw SceneError("comparison degree cap must be positive");
  std::vector<Block> blocks = space.blocks;
  for (Block& b : blocks)
    if (b.degree_cap > 0) b.degree_cap = new_cap;
  try {
    return SpaceSpec(space.vars, std::move(blocks));
  } catch (const std::invalid_argument& e) {
    throw SceneError(e.what());
  }
}

IsometryTuple build_tuple_on(const Scene& s, const SpaceSpec& space,
                             const Tolerances& tol) {
  std::vector<GradedOperator> ops;
  for (size_t i = 0; i < s.tuple.size(); ++i) {
    try {
      ops.push_back(evaluate(space, *s.tuple[i]));
    } catch (const std::exception& e) {
      throw SceneError("tuple entry " + std::to_string(i + 1) + ": " + e.what());
    }
  }
  const int n = static_cast<int>(ops.size());
  std::optional<TwistFamily> fam;
  if (!s.twist.empty()) {
    TwistFamily f;
    f.n = n;
    for (size_t i = 0; i < s.twist.size(); ++i) {
      try {
        f.upper.push_back(evaluate(space, *s.twist[i]));
      } catch (const std::exception& e) {
        throw SceneError("twist entry " + std::to_string(i + 1) + ": " + e.what());
      }
    }
    measure_twist_family(f);
    if (!f.family_ok(tol.twist_family)) {
      char buf[64];
      std::snprintf(buf, sizeof(buf), "%.3e / %.3e", f.unitary_residual,
                    f.commute_residual);
      throw SceneError(
          std::string("explicit twist family is not unitary/commuting (residuals ") +
          buf + ")");
    }
    fam = std::move(f);
  }
  IsometryTuple t;
  try {
    t = twistdec::make_tuple(space, std::move(ops), std::move(fam), tol);
  } catch (const std::invalid_argument& e) {
    throw SceneError(e.what());
  }
  if (!t.twist && s.derive_twist_requested && n >= 2) {
    TwistFamily derived = derive_twist(t, tol);
    try {
      t = twistdec::make_tuple(space, t.V, std::move(derived), tol);
    } catch (const std::invalid_argument& e) {
      throw SceneError(e.what());
    }
  }
  return t;
}

IsometryTuple build_tuple(const Scene& s, const Tolerances& tol) {
  return build_tuple_on(s, s.space, tol);
}

}  // namespace twistdec
