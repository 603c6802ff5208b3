#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "common.hpp"
#include "twistdec/models.hpp"
#include "twistdec/run.hpp"
#include "twistdec/twisted.hpp"
#include "twistdec/wold.hpp"

using namespace twistdec;

namespace {

// The bundled scenes that carry a doubly twisted tuple.
const std::vector<std::string> kDoublyCorpus = {
    "commuting_shifts_n2.json", "rotation_pair.json",
    "scalar_triple.json",       "mixed_n2.json",
    "unitary_pair.json",        "mixed_n3.json",
    "commuting_shifts_fiber.json"};

const std::vector<std::string> kShiftModels = {
    "commuting_shifts_n2.json", "rotation_pair.json", "scalar_triple.json",
    "commuting_shifts_fiber.json"};

const std::vector<std::string> kUnitarySummand = {"mixed_n2.json", "mixed_n3.json",
                                                  "unitary_pair.json"};

struct Criterion {
  int num;
  const char* what;
  bool ok = true;
  std::chrono::steady_clock::time_point start;

  Criterion(int n, const char* w) : num(n), what(w) {
    start = std::chrono::steady_clock::now();
  }
  void expect(bool c, const char* label) {
    ok = ok && c;
    CHECK_MESSAGE(c, "criterion " << num << ": " << label);
  }
  void finish(double limit_seconds) {
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
            .count();
    expect(secs < limit_seconds, "runtime limit");
    std::printf("%s criterion %d: %s (%.2fs)\n", ok ? "PASS" : "FAIL", num, what, secs);
    std::fflush(stdout);
  }
};

Matrix random_unitary(long dim, unsigned long long seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  Matrix m(dim, dim);
  for (long r = 0; r < dim; ++r)
    for (long c = 0; c < dim; ++c) m(r, c) = Complex(g(rng), g(rng));
  return Eigen::HouseholderQR<Matrix>(m).householderQ();
}

Matrix scalar1(Complex z) {
  Matrix m(1, 1);
  m(0, 0) = z;
  return m;
}

// V_1 = V_2 = M_z on one variable, twist derived (identity).
IsometryTuple repeated_shift(int cap) {
  SpaceSpec s(1, {{cap, 1}});
  IsometryTuple bare = twistdec::make_tuple(s, {mz(s, 1), mz(s, 1)});
  TwistFamily fam = derive_twist(bare);
  return twistdec::make_tuple(s, bare.V, std::move(fam));
}

}  // namespace

TEST_CASE("criterion 1: single-operator Wold suite") {
  Criterion c(1, "Wold parts complete, orthogonal, and classified on the three models");

  SpaceSpec s1(1, {{8, 1}});
  GradedOperator shift = mz(s1, 1);
  WoldResult w1 = wold_decompose(shift);
  c.expect(w1.certified, "shift Wold certified");
  c.expect(w1.completeness_residual < 1e-9, "shift P_s + P_u = I");
  c.expect(w1.orthogonality_residual < 1e-9, "shift parts orthogonal");
  c.expect(w1.shift_part.dim() == 9 && w1.unitary_part.dim() == 0, "shift part dims");
  c.expect(classify_restriction(shift, whole_space(s1)) == RestrictionClass::Shift,
           "M_z classified Shift");

  SpaceSpec s2(0, {{0, 4}});
  GradedOperator u = literal_op(s2, random_unitary(4, 20260814));
  WoldResult w2 = wold_decompose(u);
  c.expect(w2.certified, "unitary Wold certified");
  c.expect(w2.completeness_residual < 1e-9, "unitary P_s + P_u = I");
  c.expect(w2.orthogonality_residual < 1e-9, "unitary parts orthogonal");
  c.expect(w2.shift_part.dim() == 0 && w2.unitary_part.dim() == 4, "unitary part dims");
  c.expect(classify_restriction(u, whole_space(s2)) == RestrictionClass::Unitary,
           "random unitary classified Unitary");

  SpaceSpec s3(1, {{8, 1}, {0, 2}});
  Matrix d = Matrix::Zero(2, 2);
  d(0, 0) = Complex(1, 0);
  d(1, 1) = Complex(0, 1);
  GradedOperator v3 = dsum(s3, {mz(single_block_space(s3, 0), 1),
                                fiber_unitary(single_block_space(s3, 1), 0, d)});
  WoldResult w3 = wold_decompose(v3);
  c.expect(w3.certified, "mixed Wold certified");
  c.expect(w3.completeness_residual < 1e-9, "mixed P_s + P_u = I");
  c.expect(w3.orthogonality_residual < 1e-9, "mixed parts orthogonal");
  c.expect(w3.shift_part.dim() == 9 && w3.unitary_part.dim() == 2, "mixed part dims");
  c.expect(classify_restriction(v3, whole_space(s3)) == RestrictionClass::Mixed,
           "M_z + diag(1,i) classified Mixed");

  c.finish(1.0);
}

TEST_CASE("criterion 2: model identity suite") {
  Criterion c(2, "derived twists and sampled word identities on the shift models");

  SpaceSpec rot_space(2, {{6, 1}});
  IsometryTuple rot = twisted_shift_tuple(rot_space, {{scalar1(Complex(0, 1))}});
  c.expect(rot.twist.has_value(), "rotation twist attached");
  c.expect(rot.twist->unitary_residual < 1e-10, "rotation twist unitary");
  c.expect(rot.twist->commute_residual < 1e-10, "rotation twist commuting");
  c.expect(rot.flags.twisted && rot.flags.twisted_residual < 1e-9,
           "rotation pair twisted");
  c.expect(rot.flags.doubly_twisted && rot.flags.doubly_residual < 1e-9,
           "rotation pair doubly twisted");
  IdentityCheck ri = twist_commutation_check(rot, 0, 1, 20);
  c.expect(ri.ok && ri.samples >= 20 && ri.residual < 1e-9,
           "rotation word identity sampled");

  SpaceSpec tri_space(3, {{4, 1}});
  IsometryTuple tri = twisted_shift_tuple(
      tri_space, {{scalar1(Complex(0, 1))},
                  {scalar1(Complex(0.6, 0.8)), scalar1(Complex(-1, 0))}});
  c.expect(tri.twist.has_value(), "triple twist attached");
  c.expect(tri.twist->unitary_residual < 1e-10, "triple twist unitary");
  c.expect(tri.twist->commute_residual < 1e-10, "triple twist commuting");
  c.expect(tri.flags.twisted && tri.flags.twisted_residual < 1e-9, "triple twisted");
  c.expect(tri.flags.doubly_twisted && tri.flags.doubly_residual < 1e-9,
           "triple doubly twisted");
  IdentityCheck ti = twist_commutation_check(tri, 0, 1, 20);
  c.expect(ti.ok && ti.samples >= 20 && ti.residual < 1e-9,
           "triple word identity sampled");

  c.finish(5.0);
}

TEST_CASE("criterion 3: dual-route equivalence on the doubly twisted corpus") {
  Criterion c(3, "kernel-route blocks match intersection-route blocks on every scene");

  for (const std::string& name : kDoublyCorpus) {
    IsometryTuple t = load_tuple(name);
    c.expect(t.flags.doubly_twisted, (name + " doubly twisted").c_str());
    DecompositionReport rep = doubly_twisted_decompose(t);
    c.expect(rep.ok, (name + " decomposition ok").c_str());
    c.expect(rep.certified, (name + " decomposition certified").c_str());
    for (const BlockEntry& e : rep.blocks)
      c.expect(e.cross_route_angle < 1e-8, (name + " route angles").c_str());
    c.expect(rep.complete && rep.sum_dims == rep.ambient_dim,
             (name + " dims sum to the ambient dim").c_str());
  }

  c.finish(30.0);
}

TEST_CASE("criterion 4: criterion discrimination on the feed pair") {
  Criterion c(4, "non-commuting feed pair fails joint reducibility at (1,2)");

  IsometryTuple feed = load_tuple("feed_constant.json");
  CriterionResult cr = vnw_criterion(feed);
  c.expect(cr.verdict == CriterionResult::Verdict::Failed, "criterion verdict failed");
  c.expect(cr.witnesses.size() == 1, "single witness");
  if (!cr.witnesses.empty()) {
    c.expect(cr.witnesses[0].i == 1 && cr.witnesses[0].j == 2, "witness is (1,2)");
    c.expect(cr.witnesses[0].residual > 1e-3, "witness residual is material");
  }
  DecompositionReport rep = vnw_decompose(feed);
  c.expect(!rep.ok, "decomposition reports failure");
  c.expect(rep.failure.find("criterion failed") != std::string::npos,
           "failure names the criterion");
  c.expect(rep.blocks.empty(), "no blocks are produced");

  c.finish(1.0);
}

TEST_CASE("criterion 5: twisted decomposition suite") {
  Criterion c(5, "proper blocks plus a weak-shift residual across the corpus");

  IsometryTuple pair = repeated_shift(8);
  DecompositionReport rep = twisted_decompose(pair);
  c.expect(rep.ok, "(M_z, M_z) decomposition ok");
  bool proper_zero = true;
  for (size_t a = 0; a + 1 < rep.blocks.size(); ++a)
    proper_zero = proper_zero && rep.blocks[a].space.dim() == 0;
  c.expect(proper_zero, "(M_z, M_z) proper blocks vanish");
  c.expect(rep.blocks.back().space.dim() == rep.ambient_dim,
           "(M_z, M_z) residual is the whole space");
  c.expect(rep.weak_shift.ok, "(M_z, M_z) weak-shift verdict");

  for (const std::string& name : kDoublyCorpus) {
    IsometryTuple t = load_tuple(name);
    DecompositionReport tw = twisted_decompose(t);
    DecompositionReport db = doubly_twisted_decompose(t);
    c.expect(tw.ok, (name + " twisted decomposition ok").c_str());
    const size_t full = tw.blocks.size() - 1;
    for (size_t a = 0; a < full; ++a) {
      c.expect(tw.blocks[a].space.dim() == db.blocks[a].space.dim(),
               (name + " proper block dims match the doubly route").c_str());
      if (tw.blocks[a].space.dim() > 0 &&
          tw.blocks[a].space.dim() == db.blocks[a].space.dim()) {
        std::vector<double> angs =
            principal_angles(tw.blocks[a].space, db.blocks[a].space);
        c.expect(angs.back() < 1e-8, (name + " proper block angles").c_str());
        c.expect(tw.blocks[a].restriction_doubly_residual < 1e-9,
                 (name + " proper restriction doubly twisted").c_str());
      }
    }
    c.expect(tw.blocks[full].space.dim() == db.blocks[full].space.dim(),
             (name + " residual matches the full-subset block").c_str());
    c.expect(tw.weak_shift.ok, (name + " residual weak-shift verdict").c_str());
  }

  c.finish(30.0);
}

TEST_CASE("criterion 6: shift classifiers") {
  Criterion c(6, "twisted shift and weak shift classifiers across the corpus");

  for (const std::string& name : kShiftModels) {
    IsometryTuple t = load_tuple(name);
    c.expect(is_twisted_shift(t).ok, (name + " is a twisted shift").c_str());
    c.expect(is_twisted_weak_shift(t).ok, (name + " is a twisted weak shift").c_str());
  }
  for (const std::string& name : kUnitarySummand) {
    IsometryTuple t = load_tuple(name);
    c.expect(!is_twisted_shift(t).ok,
             (name + " is not a twisted shift (unitary summand)").c_str());
  }
  c.expect(is_twisted_weak_shift(repeated_shift(8)).ok,
           "(M_z, M_z) is a twisted weak shift");
  c.expect(!is_twisted_weak_shift(load_tuple("unitary_pair.json")).ok,
           "commuting finite unitaries are not a weak shift");

  c.finish(10.0);
}

TEST_CASE("criterion 7: determinism of the full report suite") {
  Criterion c(7, "two runs of every mode produce byte-identical reports");

  struct Job {
    std::string args;
    std::string name;
    int code;
  };
  const std::vector<Job> jobs = {
      {"--scene " + scene_path("commuting_shifts_n2.json") + " --mode check",
       "check_commuting.json", kExitOk},
      {"--scene " + scene_path("rotation_pair.json") + " --mode check",
       "check_rotation.json", kExitOk},
      {"--scene " + scene_path("wrong_twist.json") + " --mode check",
       "check_wrong.json", kExitFailed},
      {"--scene " + scene_path("unitary_pair.json") + " --mode classify",
       "classify_unitary.json", kExitOk},
      {"--scene " + scene_path("mixed_n2.json") + " --mode decompose-vnw",
       "vnw_mixed.json", kExitOk},
      {"--scene " + scene_path("mixed_n2.json") + " --mode decompose-doubly",
       "doubly_mixed.json", kExitOk},
      {"--scene " + scene_path("scalar_triple.json") + " --mode decompose-doubly",
       "doubly_triple.json", kExitOk},
      {"--scene " + scene_path("same_shift_pair.json") + " --mode decompose-twisted",
       "twisted_same.json", kExitOk},
      {"--scene " + scene_path("mixed_n2.json") + " --mode decompose-twisted",
       "twisted_mixed.json", kExitOk},
      {"--scene " + scene_path("commuting_shifts_n2.json") +
           " --mode oracle-compare --compare-D 4",
       "oracle_commuting.json", kExitOk},
  };

  namespace fs = std::filesystem;
  const fs::path base = fs::temp_directory_path() /
                        ("twistdec_accept_" + std::to_string(::getpid()));
  const fs::path dir_a = base / "a", dir_b = base / "b";
  fs::create_directories(dir_a);
  fs::create_directories(dir_b);

  for (const fs::path& dir : {dir_a, dir_b})
    for (const Job& j : jobs) {
      CliRun r = run_cli(j.args + " --out " + (dir / j.name).string());
      c.expect(r.code == j.code, (j.name + " exit code").c_str());
    }
  for (const Job& j : jobs) {
    std::string a = read_file((dir_a / j.name).string());
    std::string b = read_file((dir_b / j.name).string());
    c.expect(!a.empty(), (j.name + " report written").c_str());
    c.expect(a == b, (j.name + " byte-identical across runs").c_str());
  }
  fs::remove_all(base);

  c.finish(60.0);
}
