#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "error.hpp"
#include "runner.hpp"

using namespace ps;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

json small_config() {
    return json::parse(R"({
      "task": "forward",
      "domain": {"type": "disk", "center": [0, 0], "radius": 1},
      "obstacle": {"components": [{"type": "disk", "center": [0, 0], "radius": 0.5}], "lambda": [[0, 2]]},
      "k": 1, "mesh": {"h_target": 0.1}, "seed": 3,
      "forward": {"data": "constant", "value": 1, "reference": true, "convergence_h": [0.2]}
    })");
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("probescope_test_" + name);
    fs::remove_all(p);
    return p;
}

}  // namespace

TEST_SUITE("config") {

TEST_CASE("parse fills fields and defaults") {
    const ExperimentConfig c = parse_config(small_config());
    CHECK(c.task == Task::Forward);
    CHECK(c.h == doctest::Approx(0.1));
    CHECK(c.obstacle.components.size() == 1u);
    CHECK(c.obstacle.lambda.at(0) == cplx(0, 2));
    CHECK(c.forward.convergence_h.size() == 1u);
    CHECK(c.enclosure.params.tau.size() == 11u);
    CHECK(c.seed == 3u);
}

TEST_CASE("unknown keys are rejected at every level") {
    json j = small_config();
    j["colour"] = "red";
    CHECK_THROWS_AS(parse_config(j), ConfigError);
    j = small_config();
    j["mesh"]["h"] = 0.1;
    CHECK_THROWS_AS(parse_config(j), ConfigError);
    j = small_config();
    j["probe"] = {{"needle", {{"nmax", 3}}}};
    CHECK_THROWS_AS(parse_config(j), ConfigError);
}

TEST_CASE("schema and range violations") {
    json j = small_config();
    j["task"] = "dance";
    CHECK_THROWS_AS(parse_config(j), ConfigError);
    j = small_config();
    j["obstacle"]["lambda"] = json::array({json::array({1, 0})});
    CHECK_THROWS_AS(parse_config(j), ConfigError);
    j = small_config();
    j["obstacle"]["lambda"] = json::array();
    CHECK_THROWS_AS(parse_config(j), ConfigError);
    j = small_config();
    j["k"] = "one";
    CHECK_THROWS_AS(parse_config(j), ConfigError);
    j = small_config();
    j["obstacle"]["components"][0]["radius"] = 1.5;
    CHECK_THROWS_AS(parse_config(j), GeometryError);
}

TEST_CASE("overrides and hashing") {
    json j = small_config();
    const std::string h0 = config_hash(j);
    CHECK(h0.size() == 16u);
    CHECK(config_hash(j) == h0);
    apply_override(j, "mesh.h_target=0.05");
    CHECK(j["mesh"]["h_target"].get<double>() == doctest::Approx(0.05));
    CHECK(config_hash(j) != h0);
    apply_override(j, "probe.mode=side_a");
    CHECK(j["probe"]["mode"] == "side_a");
    apply_override(j, "enclosure.tau=[1,2,3,4,5]");
    CHECK(j["enclosure"]["tau"].size() == 5u);
    CHECK_THROWS_AS(apply_override(j, "novalue"), ConfigError);
    CHECK_THROWS_AS(apply_override(j, "k.x=1"), ConfigError);
}

}

TEST_SUITE("runner") {

TEST_CASE("forward run writes data files and an atomic manifest") {
    RunOptions o;
    o.out_dir = scratch("fwd").string();
    o.overrides = {"mesh.h_target=0.08"};
    const RunResult r = run_experiment(small_config(), o);
    CHECK(fs::exists(fs::path(r.output_dir) / "solution.csv"));
    CHECK(fs::exists(fs::path(r.output_dir) / "forward.json"));
    CHECK_FALSE(fs::exists(fs::path(r.output_dir) / "manifest.json.tmp"));
    const json m = json::parse(slurp(fs::path(r.output_dir) / "manifest.json"));
    CHECK(m["status"] == "ok");
    CHECK(m["config_hash"] == r.config_hash);
    CHECK(m["overrides"][0] == "mesh.h_target=0.08");
    CHECK(m["config"]["mesh"]["h_target"].get<double>() == doctest::Approx(0.08));
    CHECK(m["files"].size() == 2u);
    CHECK(r.summary["reference"]["l2_error"].get<double>() < 1e-2);
}

TEST_CASE("identical config and seed give byte-identical data files") {
    json j = small_config();
    j["task"] = "verify";
    j["verify"] = {{"samples", 3}};
    RunOptions a, b;
    a.out_dir = scratch("det_a").string();
    b.out_dir = scratch("det_b").string();
    const RunResult ra = run_experiment(j, a), rb = run_experiment(j, b);
    REQUIRE(ra.files == rb.files);
    for (auto& f : ra.files) CHECK(slurp(fs::path(ra.output_dir) / f) == slurp(fs::path(rb.output_dir) / f));
    RunOptions c = a;
    c.out_dir = scratch("det_c").string();
    c.seed = 99;
    const RunResult rc = run_experiment(j, c);
    CHECK(slurp(fs::path(ra.output_dir) / "identity.csv") != slurp(fs::path(rc.output_dir) / "identity.csv"));
}

TEST_CASE("subcommand task wins and PROBESCOPE_OUT redirects output") {
    const fs::path env_dir = scratch("env");
    setenv("PROBESCOPE_OUT", env_dir.string().c_str(), 1);
    RunOptions o;
    o.task = Task::Verify;
    json j = small_config();
    j["verify"] = {{"samples", 1}};
    const RunResult r = run_experiment(j, o);
    unsetenv("PROBESCOPE_OUT");
    CHECK(fs::path(r.output_dir) == env_dir);
    CHECK(fs::exists(env_dir / "verify.json"));
}

TEST_CASE("failures write an error manifest and keep their code") {
    RunOptions o;
    o.out_dir = scratch("fail").string();
    json j = small_config();
    j["task"] = "constants";
    j.erase("obstacle");
    j.erase("forward");
    try {
        run_experiment(j, o);
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(e.code() == 2);
    }
    const json m = json::parse(slurp(fs::path(*o.out_dir) / "manifest.json"));
    CHECK(m["status"] == "error");
    CHECK(m["error"]["code"] == 2);
}

}
