#include <doctest.h>

#include <cstdlib>
#include <fstream>

#include "contact_replay/config.hpp"
#include "contact_replay/errors.hpp"
#include "fixtures.hpp"

using namespace contact_replay;

TEST_CASE("sections prefix keys and comments are dropped") {
  const ConfigMap m = parse_config_text(
      "# top comment\n"
      "agent.gamma = 0.9\n"
      "[prioritizer]\n"
      "kind = cebp   ; trailing comment\n"
      "sigmoid.T=5\n"
      "\n"
      "[run]\n"
      "seeds = 1, 2, 3\n");
  CHECK(m.at("agent.gamma") == "0.9");
  CHECK(m.at("prioritizer.kind") == "cebp");
  CHECK(m.at("prioritizer.sigmoid.T") == "5");
  CHECK(m.at("run.seeds") == "1, 2, 3");

  const RunConfig cfg = parse_run_config(m);
  CHECK(cfg.agent.gamma == 0.9);
  CHECK(cfg.prioritizer.type == PrioritizerType::cebp);
  CHECK(cfg.prioritizer.sigmoid.temperature == 5.0);
  CHECK(cfg.seeds == std::vector<std::uint64_t>{1, 2, 3});
}

TEST_CASE("malformed lines are config errors") {
  CHECK_THROWS_AS(parse_config_text("no equals sign here\n"), ConfigError);
  CHECK_THROWS_AS(parse_config_text("[unterminated\n"), ConfigError);
  CHECK_THROWS_AS(parse_config_text(" = 3\n"), ConfigError);
}

TEST_CASE("unknown keys list the valid ones") {
  ConfigMap m;
  m["agent.gama"] = "0.9";
  try {
    parse_run_config(m);
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("agent.gama") != std::string::npos);
    CHECK(msg.find("agent.gamma") != std::string::npos);
    CHECK(msg.find("prioritizer.sigmoid.T") != std::string::npos);
  }
}

TEST_CASE("bad values are config errors") {
  for (const auto& [k, v] : std::vector<std::pair<std::string, std::string>>{
           {"agent.gamma", "abc"},
           {"agent.gamma", "1.5"},
           {"run.epochs", "-3"},
           {"run.seeds", ""},
           {"run.seeds", "1,1"},
           {"prioritizer.kind", "mep"},
           {"prioritizer.sigmoid.T", "0"},
           {"env.task", "fly"},
           {"run.record_wall_clock", "maybe"},
           {"env.goal_region", "1,2,3"}}) {
    ConfigMap m;
    m[k] = v;
    CAPTURE(k);
    CAPTURE(v);
    CHECK_THROWS_AS(parse_run_config(m).validate(), ConfigError);
  }
}

TEST_CASE("overrides") {
  ConfigMap m;
  apply_override(m, "agent.tau=0.5");
  apply_override(m, " run.epochs = 7 ");
  CHECK(m.at("agent.tau") == "0.5");
  CHECK(m.at("run.epochs") == "7");
  CHECK_THROWS_AS(apply_override(m, "novalue"), ConfigError);
}

TEST_CASE("task sets its geometry before other env keys apply") {
  ConfigMap m;
  m["env.task"] = "slide";
  m["env.friction_coeff"] = "0.2";
  const RunConfig cfg = parse_run_config(m);
  CHECK(cfg.env.task == Task::slide);
  CHECK(cfg.env.friction_coeff == 0.2);
  CHECK(cfg.env.goal_region.lo[0] == EnvConfig::defaults(Task::slide).goal_region.lo[0]);
}

TEST_CASE("to_map round trips every key") {
  ConfigMap m;
  m["env.task"] = "pick_and_place";
  m["agent.hidden"] = "32,16";
  m["prioritizer.kind"] = "per";
  m["prioritizer.per.alpha"] = "0.7";
  m["run.seeds"] = "4,9";
  m["agent.gamma"] = "0.1";
  const RunConfig cfg = parse_run_config(m);
  const ConfigMap full = cfg.to_map();
  CHECK(full.size() == config_keys().size());
  const RunConfig back = parse_run_config(full);
  CHECK(back.to_map() == full);
  CHECK(back.to_text() == cfg.to_text());
  CHECK(parse_run_config(parse_config_text(cfg.to_text())).to_map() == full);
}

TEST_CASE("config files") {
  const auto dir = fixtures::scratch_dir("config");
  {
    std::ofstream(dir / "a.cfg") << "[agent]\nbatch_size = 32\n";
  }
  CHECK(parse_run_config(read_config_file(dir / "a.cfg")).agent.batch_size == 32);
  CHECK_THROWS_AS(read_config_file(dir / "missing.cfg"), IoError);
}

TEST_CASE("output directory default honours the environment") {
  setenv("CONTACT_REPLAY_OUT", "/tmp/somewhere", 1);
  CHECK(default_output_dir() == "/tmp/somewhere");
  unsetenv("CONTACT_REPLAY_OUT");
  CHECK(default_output_dir() == "runs");
}
