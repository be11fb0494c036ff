#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>
#include <probescope/probescope.h>

#include <cmath>
#include <cstdio>
#include <cstring>
#include <string>
#include <vector>

namespace {

const char* kConfig = R"({
  "task": "forward",
  "domain": {"type": "disk", "center": [0, 0], "radius": 1},
  "obstacle": {"components": [{"type": "disk", "center": [0.1, 0], "radius": 0.3}], "lambda": [[0.5, 1]]},
  "k": 1.5, "mesh": {"h_target": 0.1}, "seed": 1
})";

}  // namespace

TEST_CASE("version and error reporting") {
    CHECK(std::strlen(ps_version()) > 0);
    ps_set_quiet(1);
    ps_config* c = nullptr;
    CHECK(ps_config_parse("{not json", &c) == PS_ERR_CONFIG);
    CHECK(c == nullptr);
    CHECK(std::strlen(ps_last_error()) > 0);
    CHECK(ps_config_parse(R"({"task": "forward", "bogus": 1})", &c) == PS_ERR_CONFIG);
    CHECK(std::string(ps_last_error()).find("bogus") != std::string::npos);
    CHECK(ps_config_parse(R"({"obstacle": {"components": [{"type": "disk", "center": [2, 0], "radius": 0.3}],
                                "lambda": [[0, 1]]}})", &c) == PS_ERR_GEOMETRY);
    CHECK(ps_config_parse(nullptr, &c) == PS_ERR_ARGUMENT);
    CHECK(ps_config_load("/nonexistent/config.json", &c) == PS_ERR_CONFIG);
}

TEST_CASE("config handle: override, hash, task") {
    ps_config* c = nullptr;
    REQUIRE(ps_config_parse(kConfig, &c) == PS_OK);
    char h1[17], h2[17];
    CHECK(ps_config_hash(c, h1, sizeof h1) == PS_OK);
    CHECK(ps_config_hash(c, h2, 4) == PS_ERR_ARGUMENT);
    CHECK(std::string(ps_config_task(c)) == "forward");
    CHECK(ps_config_override(c, "task=verify") == PS_OK);
    CHECK(std::string(ps_config_task(c)) == "verify");
    CHECK(ps_config_hash(c, h2, sizeof h2) == PS_OK);
    CHECK(std::string(h1) != std::string(h2));
    CHECK(ps_config_override(c, "mesh.h_target=-1") == PS_ERR_CONFIG);
    CHECK(std::string(ps_config_task(c)) == "verify");
    ps_config_free(c);
}

TEST_CASE("run handle lists the artifacts") {
    ps_config* c = nullptr;
    REQUIRE(ps_config_parse(kConfig, &c) == PS_OK);
    ps_run* r = nullptr;
    const std::string out = "capi_test_out";
    REQUIRE(ps_run_execute(c, "verify", out.c_str(), 1, 5, &r) == PS_OK);
    CHECK(std::string(ps_run_output_dir(r)) == out);
    REQUIRE(ps_run_file_count(r) == 2);
    CHECK(std::string(ps_run_file(r, 0)) == "identity.csv");
    CHECK(ps_run_file(r, 7) == nullptr);
    CHECK(std::string(ps_run_summary(r)).find("max_rel_err") != std::string::npos);
    ps_run_free(r);
    CHECK(ps_run_execute(c, "juggle", nullptr, 0, -1, &r) == PS_ERR_CONFIG);
    ps_config_free(c);
}

TEST_CASE("problem handle: gap and indicator") {
    ps_config* c = nullptr;
    REQUIRE(ps_config_parse(kConfig, &c) == PS_OK);
    ps_problem* p = nullptr;
    REQUIRE(ps_problem_create(c, &p) == PS_OK);
    const size_t n = ps_problem_outer_count(p);
    REQUIRE(n > 10);
    std::vector<double> xy(2 * n), re(n), im(n, 0.0);
    CHECK(ps_problem_outer_nodes(p, xy.data()) == PS_OK);
    CHECK(std::hypot(xy[0], xy[1]) == doctest::Approx(1.0));
    for (size_t i = 0; i < n; ++i) re[i] = std::cos(1.5 * xy[2 * i]);
    double gr = 0, gi = 0;
    CHECK(ps_problem_gap(p, re.data(), im.data(), &gr, &gi) == PS_OK);
    CHECK(gi > 0);
    double v = 0;
    CHECK(ps_problem_indicator(p, -0.6, 0.2, &v) == PS_OK);
    CHECK(v > 0);
    CHECK(ps_problem_indicator(p, 0.1, 0.0, &v) == PS_ERR_GEOMETRY);
    ps_problem_free(p);
    ps_config_free(c);
}
