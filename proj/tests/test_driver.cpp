#include <doctest.h>

#include "stabfem/driver.hpp"

using namespace stabfem;

TEST_SUITE("driver") {
  TEST_CASE("configuration validation") {
    CHECK_THROWS_WITH_AS(run_command("solve", R"({"mu": -1.0, "problem": "nse"})"),
                         doctest::Contains("mu"), ConfigError);
    CHECK_THROWS_WITH_AS(run_command("solve", R"({"typo": 1})"), doctest::Contains("typo"),
                         ConfigError);
    CHECK_THROWS_AS(run_command("solve", "not json"), ConfigError);
    CHECK_THROWS_AS(run_command("nope", "{}"), ConfigError);
    CHECK_THROWS_AS(run_command("solve", R"({"k": 3})"), ConfigError);
    CHECK_THROWS_AS(run_command("convergence", R"({"levels": [8]})"), ConfigError);
    CHECK_THROWS_AS(run_command("solve", R"({"stab": "bogus"})"), ConfigError);
  }

  TEST_CASE("reports are deterministic without timestamps") {
    std::string cfg = R"({"n": 4, "k": 1, "stab": "bp", "samples": 10, "seed": 3,
                          "no_timestamp": true})";
    RunResult a = run_command("check", cfg);
    RunResult b = run_command("check", cfg);
    CHECK(a.status == 0);
    CHECK(a.output == b.output);

    RunResult c = run_command("coercivity", cfg);
    RunResult d = run_command("coercivity", cfg);
    CHECK(c.output == d.output);
  }

  TEST_CASE("stabilization strengthens the measured inf-sup constant") {
    RunResult bp = run_command("infsup", R"({"n": 8, "k": 1, "stab": "bp", "no_timestamp": true})");
    RunResult none =
        run_command("infsup", R"({"n": 8, "k": 1, "stab": "none", "no_timestamp": true})");
    CHECK(bp.status == 0);
    CHECK(none.status == 1);  // unstabilized pair fails the verdict
    auto pick = [](const std::string& s) {
      auto pos = s.find("\"gamma_stab\":");
      return std::stod(s.substr(pos + 13));
    };
    CHECK(pick(bp.output) > pick(none.output));
  }

  TEST_CASE("convergence emits the CSV table") {
    RunResult r = run_command(
        "convergence",
        R"({"levels": [4, 8], "case": "stokes_trig", "stab": "bp", "no_timestamp": true})");
    CHECK(r.is_csv);
    CHECK(r.output.rfind("n,h,eu_l2,eu_h1,ep_l2,eoc_u_l2,eoc_u_h1,eoc_p_l2\n", 0) == 0);
    CHECK(r.status == 0);
  }

  TEST_CASE("solve reports the iteration log") {
    RunResult r = run_command("solve", R"({"problem": "nse", "n": 4, "k": 1, "stab": "bp",
                                           "case": "nse_trig", "no_timestamp": true})");
    CHECK(r.status == 0);
    CHECK(r.output.find("\"converged\": true") != std::string::npos);
    CHECK(r.output.find("\"schema\": 1") != std::string::npos);
    CHECK(r.output.find("\"residuals\"") != std::string::npos);
    CHECK(r.output.find("timestamp") == std::string::npos);
  }
}
