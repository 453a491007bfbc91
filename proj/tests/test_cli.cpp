#include "ledsim/cli.hpp"
#include "ledsim/dataset.hpp"
#include "support.hpp"

#include <doctest.h>

#include <fstream>
#include <sstream>

using namespace ledsim;
using testing::scratch_dir;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out, err;
};

Run run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = cli(args, out, err);
  return {code, out.str(), err.str()};
}

json run_json(std::vector<std::string> args) {
  args.insert(args.begin(), "--json");
  const Run r = run(args);
  INFO(r.err);
  REQUIRE(r.code == 0);
  return json::parse(r.out);
}

}  // namespace

TEST_CASE("usage errors exit 64") {
  CHECK(run({}).code == kExitUsage);
  CHECK(run({"frobnicate"}).code == kExitUsage);
  CHECK(run({"gradcheck", "--no-such-flag"}).code == kExitUsage);
  CHECK(run({"generate"}).code == kExitUsage);  // --out is required
  const Run r = run({"subset", "--manifest", "m.json"});
  CHECK(r.code == kExitUsage);
  CHECK(r.err.find("--out") != std::string::npos);
  CHECK(run({"--help"}).code == 0);
}

TEST_CASE("contract errors exit 2 and i/o errors exit 3") {
  const fs::path dir = scratch_dir("cli_errors");
  CHECK(run({"generate", "--out", (dir / "a").string(), "--count", "0"}).code == kExitContract);
  CHECK(run({"generate", "--out", (dir / "b").string(), "--kinds", "laser"}).code == kExitContract);
  CHECK(run({"pattern", "--cell", "0.1", "--out-dir", dir.string()}).code == kExitContract);
  CHECK(run({"project", "--wall", "-3"}).code == kExitContract);
  CHECK(run({"project"}).code == kExitContract);
  CHECK(run({"eval", "--manifest", (dir / "none.json").string(), "--pred-dir", dir.string()}).code == kExitIo);
  std::ofstream(dir / "bad.json") << "[1, 2";
  CHECK(run({"subset", "--manifest", (dir / "bad.json").string(), "--out", (dir / "o.json").string(),
             "--fraction", "0.5"})
            .code == kExitIo);
  std::ofstream(dir / "scene.json") << R"({"trucks": [1, 2]})";
  CHECK(run({"generate", "--out", (dir / "c").string(), "--scene-config", (dir / "scene.json").string()}).code ==
        kExitContract);
  CHECK(run({"project", "--depth", (dir / "missing.pfm").string()}).code == kExitIo);
}

TEST_CASE("gradcheck --seed 7 passes") {
  const Run r = run({"gradcheck", "--seed", "7"});
  CHECK(r.code == 0);
  CHECK(r.out.find("max discrepancy") != std::string::npos);
  const json j = run_json({"gradcheck", "--seed", "7", "--instances", "5"});
  CHECK(j["configs"].size() == 7);
  CHECK(j["max_rel_error"].get<double>() < 1e-4);
  CHECK(j["ok"] == true);
  // An impossible tolerance is a failed check, not an error.
  CHECK(run({"gradcheck", "--instances", "2", "--tol", "0"}).code == kExitCheckFailed);
}

TEST_CASE("generate, verify and evaluate a perfect prediction") {
  const fs::path dir = scratch_dir("cli_eval");
  const fs::path data = dir / "data", pred = dir / "pred";
  const json g = run_json({"generate", "--out", data.string(), "--count", "5", "--seed", "7", "--kinds", "hb"});
  CHECK(g["entries"] == 5);
  CHECK(g["counts"]["test"] == 1);

  const DatasetManifest m = load_manifest(data / "manifest.json");
  fs::create_directories(pred);
  for (const auto& e : m.entries) fs::copy_file(data / e.depth_path, pred / (e.id + ".pfm"));

  for (std::string mask : {"roi", "outside", "full"}) {
    const json j = run_json({"eval", "--manifest", (data / "manifest.json").string(), "--pred-dir", pred.string(),
                             "--mask", mask, "--verify", "--split", "all"});
    INFO(mask);
    CHECK(j["frames"] == 5);
    CHECK(j["rmse"] == 0.0);
    CHECK(j["abs_rel"] == 0.0);
    CHECK(j["silog"] == 0.0);
    CHECK(j["delta1"] == 1.0);
    CHECK(j["delta3"] == 1.0);
    CHECK(j["n_pixels"].get<long>() > 0);
  }
  const json roi = run_json({"eval", "--manifest", (data / "manifest.json").string(), "--pred-dir",
                             pred.string(), "--bins"});
  CHECK(roi["bins"].size() == 10);
  CHECK(roi["split"] == "test");

  const Run text = run({"eval", "--manifest", (data / "manifest.json").string(), "--pred-dir", pred.string()});
  CHECK(text.code == 0);
  CHECK_FALSE(text.out.empty());

  // A missing prediction and a broken manifest are i/o failures.
  fs::remove(pred / (m.entries.back().id + ".pfm"));
  CHECK(run({"eval", "--manifest", (data / "manifest.json").string(), "--pred-dir", pred.string(), "--split",
             "all"})
            .code == kExitIo);
  fs::remove(data / m.entries[0].image_path);
  CHECK(run({"eval", "--manifest", (data / "manifest.json").string(), "--pred-dir", pred.string(), "--verify"})
            .code == kExitIo);
}

TEST_CASE("subset writes a manifest with rebased paths") {
  const fs::path dir = scratch_dir("cli_subset");
  const fs::path data = dir / "data";
  run_json({"generate", "--out", data.string(), "--count", "10", "--size", "32"});
  fs::create_directories(dir / "subsets");
  const fs::path out = dir / "subsets" / "mix.json";
  const json j = run_json({"subset", "--manifest", (data / "manifest.json").string(), "--out", out.string(),
                           "--ratio", "led=0.5,hb=0.5", "--seed", "1"});
  CHECK(j["train_by_illumination"]["led"] == 3);
  CHECK(j["train_by_illumination"]["hb"] == 3);
  const DatasetManifest sub = load_manifest(out);
  CHECK(verify_manifest(sub, out.parent_path()).empty());
  CHECK(run({"subset", "--manifest", (data / "manifest.json").string(), "--out", out.string(), "--fraction",
             "0.01"})
            .code == kExitContract);
}

TEST_CASE("project renders the two-wall comparison") {
  const fs::path dir = scratch_dir("cli_project");
  const fs::path png = dir / "walls.png";
  const json j = run_json({"project", "--wall", "10", "--wall", "100", "--cell", "0.5", "--out", png.string()});
  REQUIRE(j["panels"].size() == 2);
  CHECK(j["panels"][0]["expected_cell_m"].get<double>() == doctest::Approx(0.0873).epsilon(0.01).scale(0));
  CHECK(j["panels"][1]["expected_cell_m"].get<double>() == doctest::Approx(0.873).epsilon(0.01).scale(0));
  const Png8 img = read_png8(png);
  CHECK(img.width == 2 * 320 + 4);  // two panels and a gutter
  CHECK(img.height == 320);

  // Shading a stored depth map.
  ImageD raw = ImageD::Constant(40, 40, 12.0);
  write_depth(dir / "d.pfm", DepthMap::from_values(raw));
  const json d = run_json({"project", "--depth", (dir / "d.pfm").string(), "--out", (dir / "d.png").string()});
  CHECK(d["panels"][0]["width"] == 40);
  CHECK(read_png8(dir / "d.png").width == 40);
}

TEST_CASE("pattern exports control and photometry images") {
  const fs::path dir = scratch_dir("cli_pattern");
  const json j = run_json({"pattern", "--kind", "led", "--out-dir", dir.string(), "--scale", "2"});
  CHECK(j["duty_cycle"].get<double>() == doctest::Approx(0.5).epsilon(0.1).scale(0));
  const Png8 control = read_png8(dir / "control_led.png");
  CHECK(control.width == 264);
  CHECK(control.height == 56);
  CHECK(read_png8(dir / "photometry_led.png").width == 1056);

  const json fine = run_json({"pattern", "--cell", "0.125", "--grid-factor", "4", "--out-dir",
                              (dir / "fine").string(), "--scale", "1"});
  CHECK(read_png8(dir / "fine" / "control_led.png").width == 528);
  CHECK(run({"pattern", "--phase", "sideways", "--out-dir", dir.string()}).code == kExitContract);
}
