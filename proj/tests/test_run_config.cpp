#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "hifm/error.hpp"
#include "hifm/run_config.hpp"

using namespace hifm;

TEST_CASE("defaults resolve to the library defaults") {
  const RunConfig rc;
  const TrainConfig t = rc.train_config();
  const TrainConfig d;
  CHECK(t.method == d.method);
  CHECK(t.c == d.c);
  CHECK(t.gamma == d.gamma);
  CHECK(t.sigma_min == d.sigma_min);
  CHECK(t.batch_size == d.batch_size);
  CHECK(t.hidden == d.hidden);
  CHECK(t.optimizer.lr == d.optimizer.lr);
  CHECK(t.optimizer.weight_decay == d.optimizer.weight_decay);
  CHECK(t.z_max == d.z_max);
  CHECK(rc.threads() == 1);
  CHECK(rc.train_frac() == 0.8);
  CHECK_FALSE(rc.quadratic_energy().has_value());
}

TEST_CASE("parse and override") {
  RunConfig rc;
  rc.parse("# comment\nmethod = optimal_transport\nsteps=10  # trailing\n\nhidden = 8, 16\nproject = on\n");
  rc.set("lr=0.002");
  const TrainConfig t = rc.train_config();
  CHECK(t.method == Method::optimal_transport);
  CHECK(t.steps == 10);
  CHECK(t.hidden == std::vector<std::size_t>{8, 16});
  CHECK(t.flags.project);
  CHECK(t.optimizer.lr == 0.002);
}

TEST_CASE("errors") {
  RunConfig rc;
  try {
    rc.parse("steps = 3\nbogus = 1\n", "run.cfg");
    FAIL("expected ValidationError");
  } catch (const ValidationError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("run.cfg:2") != std::string::npos);
    CHECK(msg.find("unknown config key \"bogus\"") != std::string::npos);
  }
  CHECK_THROWS_AS(rc.parse("steps\n"), ValidationError);
  CHECK_THROWS_AS(rc.set("novalue"), ValidationError);
  rc.set("steps", "-1");
  CHECK_THROWS_AS(rc.train_config(), ValidationError);
  rc.set("steps", "5");
  rc.set("c", "abc");
  CHECK_THROWS_AS(rc.train_config(), ValidationError);
  rc.set("c", "2");
  rc.set("finite", "maybe");
  CHECK_THROWS_AS(rc.train_config(), ValidationError);
  rc.set("finite", "true");
  rc.set("hidden", "8,0");
  CHECK_THROWS_AS(rc.train_config(), ValidationError);
  rc.set("hidden", "8");
  rc.set("method", "ot");
  CHECK_THROWS_AS(rc.train_config(), ValidationError);
  rc.set("threads", "0");
  CHECK_THROWS_AS(rc.threads(), ValidationError);
  CHECK_THROWS_AS(RunConfig::from_file("/nonexistent/hifm.cfg"), FormatError);
}

TEST_CASE("resolved text parses back to the same configuration") {
  RunConfig rc;
  rc.set("gamma", "0.1");
  rc.set("quad_diag", "1,25");
  const std::string text = rc.resolved_text();
  CHECK(text.find("gamma = 0.1\n") != std::string::npos);
  CHECK(text.find("sigma_min = 1e-05\n") != std::string::npos);
  RunConfig back;
  back.parse(text);
  CHECK(back.resolved_text() == text);

  const auto p = std::filesystem::temp_directory_path() / "hifm_test_resolved.cfg";
  rc.write_resolved(p);
  CHECK(RunConfig::from_file(p).resolved_text() == text);
  std::filesystem::remove(p);
}

TEST_CASE("quadratic energy from the config") {
  RunConfig rc;
  rc.set("quad_diag", "1, 25");
  const auto e = rc.quadratic_energy();
  REQUIRE(e.has_value());
  CHECK(e->dim() == 2);
  rc.set("quad_center", "1,2,3");
  CHECK_THROWS_AS(rc.quadratic_energy(), ValidationError);
}

TEST_CASE("value helpers") {
  CHECK(format_double(0.1) == "0.1");
  CHECK(format_double(1e-10) == "1e-10");
  CHECK(parse_double("k", format_double(1.0 / 3.0)) == 1.0 / 3.0);
  CHECK(parse_list("k", " 1, 2.5 ,-3") == Vector{1.0, 2.5, -3.0});
  CHECK(parse_list("k", "").empty());
  CHECK_THROWS_AS(parse_double("k", "inf"), ValidationError);
  CHECK_THROWS_AS(parse_size("k", "1.5"), ValidationError);
  CHECK(parse_bool("k", "off") == false);
}
