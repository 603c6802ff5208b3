#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

#include <nlohmann/json.hpp>

#include "common.hpp"
#include "twistdec/run.hpp"
#include "twistdec/scene.hpp"

using namespace twistdec;
using nlohmann::json;

namespace {

std::string parse_err(const std::string& text) {
  try {
    parse_scene(text);
  } catch (const SceneError& e) {
    return e.what();
  }
  return "";
}

bool has(const std::string& hay, const std::string& needle) {
  return hay.find(needle) != std::string::npos;
}

const char* kGood =
    R"({"space": {"v": 1, "blocks": [{"D": 3}]}, "tuple": [{"op": "mz", "var": 1}]})";

std::string temp_file(const std::string& tag, const std::string& content) {
  std::string path = (std::filesystem::temp_directory_path() /
                      ("twistdec_scene_" + tag + "_" + std::to_string(::getpid()) +
                       ".json"))
                         .string();
  std::ofstream f(path, std::ios::binary);
  f << content;
  return path;
}

}  // namespace

TEST_CASE("scene parsing accepts the minimal form") {
  Scene s = parse_scene(kGood);
  CHECK(s.space.vars == 1);
  CHECK(s.space.total_dim() == 4);
  CHECK(s.tuple.size() == 1);
  CHECK(s.derive_twist_requested);  // absent twist means derive
  CHECK(s.twist.empty());
  CHECK(s.digest.size() == 16);
  CHECK(s.digest.find_first_not_of("0123456789abcdef") == std::string::npos);
}

TEST_CASE("scene parsing rejects malformed input with precise messages") {
  CHECK(has(parse_err(R"({"space": })"), "not valid JSON at line 1"));
  CHECK(has(parse_err("{\n  \"space\": }"), "not valid JSON at line 2"));
  CHECK(has(parse_err(R"({"space": {"v": 1, "blocks": [{"D": 3}]}, "tuple": [], "extra": 1})"),
            "unknown key \"extra\" in scene"));
  CHECK(has(parse_err(R"({"space": {"v": 1, "blocks": [{"D": 3}]}})"),
            "scene is missing key \"tuple\""));
  CHECK(has(parse_err(R"({"space": {"v": 1, "blocks": [{"r": 2}]}, "tuple": [1]})"),
            "block is missing key \"D\""));
  CHECK(has(parse_err(R"({"space": {"v": 1, "blocks": [{"D": 3, "q": 1}]}, "tuple": [1]})"),
            "unknown key \"q\" in block"));
  CHECK(has(parse_err(R"({"space": {"v": 1.5, "blocks": [{"D": 3}]}, "tuple": [1]})"),
            "space key \"v\" must be an integer"));
  CHECK(has(parse_err(R"({"space": {"v": -1, "blocks": [{"D": 3}]}, "tuple": [1]})"),
            "space variable count must be nonnegative"));
  CHECK(has(parse_err(R"({"space": {"v": 1, "blocks": []}, "tuple": [1]})"),
            "space blocks must be a nonempty array"));
  CHECK(has(parse_err(R"({"space": {"v": 1, "blocks": [{"D": 3}]}, "tuple": []})"),
            "tuple must be a nonempty array"));

  const std::string pair_prefix =
      R"({"space": {"v": 1, "blocks": [{"D": 3}]},)"
      R"( "tuple": [{"op": "mz", "var": 1}, {"op": "mz", "var": 1}],)";
  CHECK(has(parse_err(pair_prefix + R"( "twist": 7})"),
            "twist must be \"derive\" or an array"));
  CHECK(has(parse_err(pair_prefix + R"( "twist": "auto"})"),
            "twist must be \"derive\" or an array"));
  CHECK(has(parse_err(pair_prefix +
                      R"( "twist": [{"op": "mz", "var": 1}, {"op": "mz", "var": 1}]})"),
            "explicit twist wants 1 entries"));
  CHECK(has(parse_err(R"({"space": {"v": 0, "blocks": [{"D": 0, "r": 2}]},)"
                      R"( "tuple": [{"op": "literal", "matrix": [[1, 0], [0, 1]]}]})"),
            "complex values must be [re, im]"));
}

TEST_CASE("scene digest is whitespace-insensitive and content-sensitive") {
  Scene a = parse_scene(kGood);
  Scene b = parse_scene(
      "{\n  \"space\": {\"v\": 1, \"blocks\": [{\"D\": 3}]},\n"
      "  \"tuple\": [{\"op\": \"mz\", \"var\": 1}]\n}\n");
  CHECK(a.digest == b.digest);
  Scene c = parse_scene(
      R"({"space": {"v": 1, "blocks": [{"D": 4}]}, "tuple": [{"op": "mz", "var": 1}]})");
  CHECK(a.digest != c.digest);
  // Default fiber dimension and an explicit r: 1 canonicalize identically.
  Scene d = parse_scene(
      R"({"space": {"v": 1, "blocks": [{"D": 3, "r": 1}]}, "tuple": [{"op": "mz", "var": 1}]})");
  CHECK(a.digest == d.digest);
}

TEST_CASE("scenes load from disk and missing files are reported") {
  Scene s = load_scene(scene_path("commuting_shifts_n2.json"));
  CHECK(s.space.vars == 2);
  CHECK(s.derive_twist_requested);
  CHECK_THROWS_WITH_AS(load_scene("/nonexistent/missing.json"),
                       doctest::Contains("cannot open scene file"), SceneError);
}

TEST_CASE("tuple building surfaces engine failures as scene errors") {
  Scene bad_iso = parse_scene(
      R"({"space": {"v": 0, "blocks": [{"D": 0, "r": 2}]},)"
      R"( "tuple": [{"op": "literal",)"
      R"( "matrix": [[[0.5, 0], [0, 0]], [[0, 0], [0.5, 0]]]}]})");
  CHECK_THROWS_WITH_AS(build_tuple(bad_iso),
                       doctest::Contains("tuple entry 1 is not a certified isometry"),
                       SceneError);

  Scene bad_var = parse_scene(
      R"({"space": {"v": 1, "blocks": [{"D": 3}]},)"
      R"( "tuple": [{"op": "mz", "var": 1}, {"op": "mz", "var": 5}]})");
  CHECK_THROWS_WITH_AS(build_tuple(bad_var), doctest::Contains("tuple entry 2:"),
                       SceneError);

  Scene bad_twist = parse_scene(
      R"({"space": {"v": 0, "blocks": [{"D": 0, "r": 2}]},)"
      R"( "tuple": [{"op": "literal", "matrix": [[[0, 0], [1, 0]], [[1, 0], [0, 0]]]},)"
      R"(  {"op": "literal", "matrix": [[[1, 0], [0, 0]], [[0, 0], [1, 0]]]}],)"
      R"( "twist": [{"op": "literal", "matrix": [[[0.5, 0], [0, 0]], [[0, 0], [0.5, 0]]]}]})");
  CHECK_THROWS_WITH_AS(build_tuple(bad_twist),
                       doctest::Contains("explicit twist family is not unitary/commuting"),
                       SceneError);
}

TEST_CASE("retruncation rebuilds graded blocks only") {
  Scene s = load_scene(scene_path("mixed_n2.json"));
  SpaceSpec capped = retruncated(s.space, 3);
  CHECK(capped.blocks[0].degree_cap == 3);
  CHECK(capped.blocks[1].degree_cap == 0);  // fiber blocks keep their shape
  CHECK(capped.blocks[1].fiber_dim == 2);
  CHECK_THROWS_AS(retruncated(s.space, 0), SceneError);
  IsometryTuple t = build_tuple_on(s, capped, Tolerances{});
  CHECK(t.space.total_dim() == 18);
  CHECK(t.flags.doubly_twisted);
}

TEST_CASE("cli check and classify modes") {
  CliRun ok = run_cli("--scene " + scene_path("commuting_shifts_n2.json") + " --mode check");
  CHECK(ok.code == kExitOk);
  json rep = json::parse(ok.out);
  CHECK(rep["verdict"] == "ok");
  CHECK(rep["schema_version"] == 1);
  CHECK(rep["tuple"]["twisted"] == true);
  CHECK(rep["tuple"]["twist"]["present"] == true);
  CHECK(rep["budgets"]["orbit"] == 5);
  CHECK(rep["checks"]["word_identity"]["ok"] == true);
  CHECK(rep["checks"]["word_identity"]["samples"].get<int>() >= 24);

  CliRun bad = run_cli("--scene " + scene_path("wrong_twist.json") + " --mode check");
  CHECK(bad.code == kExitFailed);
  json brep = json::parse(bad.out);
  CHECK(brep["verdict"] == "failed");
  CHECK(has(brep["failure"].get<std::string>(), "not twisted"));

  CliRun cls = run_cli("--scene " + scene_path("unitary_pair.json") + " --mode classify");
  CHECK(cls.code == kExitOk);
  json crep = json::parse(cls.out);
  CHECK(crep["classify"]["coordinates"] == json::array({"unitary", "unitary"}));
  CHECK(crep["classify"]["weak_shift"]["ok"] == false);
  CHECK(crep["classify"]["shift"]["ok"] == false);

  CliRun tight = run_cli("--scene " + scene_path("commuting_shifts_n2.json") +
                         " --mode classify --budget 2");
  CHECK(tight.code == kExitUncertified);
  CHECK(json::parse(tight.out)["verdict"] == "uncertified");
}

TEST_CASE("cli decomposition modes") {
  CliRun tw = run_cli("--scene " + scene_path("same_shift_pair.json") +
                      " --mode decompose-twisted");
  CHECK(tw.code == kExitOk);
  json trep = json::parse(tw.out);
  REQUIRE(trep["blocks"].size() == 4);
  CHECK(trep["blocks"][0]["residual_block"] == false);
  CHECK(trep["blocks"][3]["residual_block"] == true);
  CHECK(trep["blocks"][3]["label"] == "residual");
  CHECK(trep["blocks"][3]["dim"] == 7);
  CHECK(trep["checks"]["weak_shift"]["ok"] == true);
  CHECK(trep["complete"] == true);

  CliRun dd = run_cli("--scene " + scene_path("same_shift_pair.json") +
                      " --mode decompose-doubly");
  CHECK(dd.code == kExitFailed);
  CHECK(has(json::parse(dd.out)["failure"].get<std::string>(), "not doubly twisted"));

  CliRun vnw = run_cli("--scene " + scene_path("feed_constant.json") +
                       " --mode decompose-vnw");
  CHECK(vnw.code == kExitFailed);
  json vrep = json::parse(vnw.out);
  CHECK(vrep["verdict"] == "failed");
  CHECK(vrep["checks"]["criterion"]["verdict"] == "failed");
  REQUIRE(vrep["checks"]["criterion"]["witnesses"].size() == 1);
  CHECK(vrep["checks"]["criterion"]["witnesses"][0]["i"] == 1);
  CHECK(vrep["checks"]["criterion"]["witnesses"][0]["j"] == 2);
  CHECK(has(vrep["failure"].get<std::string>(), "joint reducibility criterion failed"));

  CliRun oc = run_cli("--scene " + scene_path("commuting_shifts_n2.json") +
                      " --mode oracle-compare --compare-D 4");
  CHECK(oc.code == kExitOk);
  json orep = json::parse(oc.out);
  CHECK(orep["compare"]["stable"] == true);
  CHECK(orep["compare"]["cap"] == 4);
  CHECK(orep["compare"]["worst_angle"].get<double>() < 1e-8);
  CHECK(orep["compare"]["wandering"].size() == 4);
}

TEST_CASE("cli configuration errors use the config exit code") {
  CliRun m = run_cli("--scene " + scene_path("commuting_shifts_n2.json") + " --mode tango");
  CHECK(m.code == kExitConfig);
  CHECK(has(m.err, "unknown mode"));

  CliRun noscene = run_cli("--mode check");
  CHECK(noscene.code == kExitConfig);

  CliRun missing = run_cli("--scene /nonexistent/missing.json --mode check");
  CHECK(missing.code == kExitConfig);
  CHECK(has(missing.err, "cannot open scene file"));

  std::string badfile = temp_file("badjson", "{]");
  CliRun badparse = run_cli("--scene " + badfile + " --mode check");
  CHECK(badparse.code == kExitConfig);
  CHECK(has(badparse.err, "not valid JSON"));
  std::filesystem::remove(badfile);

  CliRun jobs = run_cli("--scene " + scene_path("commuting_shifts_n2.json") +
                        " --mode check --jobs 0");
  CHECK(jobs.code == kExitConfig);
  CHECK(has(jobs.err, "jobs must be positive"));
}

TEST_CASE("cli reports are byte-reproducible") {
  const std::string base =
      "--scene " + scene_path("mixed_n2.json") + " --mode decompose-doubly";
  CliRun r1 = run_cli(base);
  CliRun r2 = run_cli(base);
  CHECK(r1.code == kExitOk);
  CHECK(r1.out == r2.out);
  CHECK(!r1.out.empty());

  CliRun threaded = run_cli(base + " --jobs 2");
  CHECK(threaded.out == r1.out);

  CliRun pretty = run_cli(base + " --pretty");
  CHECK(json::parse(pretty.out) == json::parse(r1.out));

  std::string outp = temp_file("report", "");
  CliRun filed = run_cli(base + " --out " + outp);
  CHECK(filed.code == kExitOk);
  CHECK(filed.out.empty());
  CHECK(read_file(outp) == r1.out);
  std::filesystem::remove(outp);

  CliRun timed = run_cli(base + " --timing");
  json trep = json::parse(timed.out);
  CHECK(trep.contains("timing_ms"));
  CHECK(trep["timing_ms"].get<long long>() >= 0);
  CHECK(json::parse(r1.out)["timing_ms"] == 0);
}
