#include <sys/wait.h>

#include <array>
#include <cstdio>
#include <sstream>

#include "test_util.hpp"
#include "threadshim/tools/bench.hpp"
#include "threadshim/tools/demo.hpp"
#include "threadshim/tools/explore_run.hpp"

using namespace threadshim;
using namespace threadshim::tools;

namespace {

struct CliRun {
  int exit_code = -1;
  std::string out;
};

CliRun run_cli(const std::string& args) {
  CliRun run;
  std::string cmd = std::string(THREADSHIM_CLI) + " " + args + " 2>/dev/null";
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) return run;
  std::array<char, 4096> buf;
  while (std::size_t n = fread(buf.data(), 1, buf.size(), pipe)) run.out.append(buf.data(), n);
  int status = pclose(pipe);
  run.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return run;
}

std::string value_of(const std::string& out, const std::string& key) {
  std::istringstream in(out);
  for (std::string line; std::getline(in, line);) {
    if (line.rfind(key + "=", 0) == 0) return line.substr(key.size() + 1);
  }
  return {};
}

}  // namespace

TEST(Bench, PreconditionsOnIterations) {
  EXPECT_ERRC(bench_create(CreateKind::Thread, 0), Errc::InvalidValue);
  EXPECT_ERRC(bench_create(CreateKind::Process, 99), Errc::InvalidValue);
  EXPECT_ERRC(bench_pv(PvKind::Emulated, 9999), Errc::InvalidValue);
}

TEST(Bench, EmulatedPvConservesValue) {
  auto r = bench_pv(PvKind::Emulated, kMinPvIterations);
  EXPECT_EQ(r.iterations, kMinPvIterations);
  EXPECT_NE(r.note.find("final_value=1"), std::string::npos);
  EXPECT_GT(r.mean_us, 0);
  EXPECT_GE(r.p95_us, 0);
}

TEST(Bench, ThreadCreationResult) {
  auto r = bench_create(CreateKind::Thread, kMinCreateIterations);
  EXPECT_EQ(r.name, "create_thread");
  EXPECT_EQ(r.iterations, 100u);
  EXPECT_NE(format_result(r, kReferenceThreadCreateUs).find("reference_us=52"), std::string::npos);
}

TEST(Demo, FixedVirtualCountsExactly) {
  ScenarioConfig c;
  c.lock_mode = LockMode::Fixed;
  c.seed = 11;
  auto r = run_demo(c);
  EXPECT_TRUE(r.pass());
  EXPECT_EQ(r.counter, 4000u);
  EXPECT_EQ(r.done_count, 4);
  EXPECT_EQ(r.outcome, "completed");
  EXPECT_EQ(r.shm_leaks, 0);
  EXPECT_EQ(r.reclaim_remaining, 0u);
}

TEST(Demo, TopologyOfRegistry) {
  ScenarioConfig c;
  c.workers = 3;
  c.iterations = 10;
  auto r = run_demo(c);
  int postmasters = 0, bootstraps = 0, workers = 0;
  std::istringstream in(r.registry_dump);
  for (std::string line; std::getline(in, line);) {
    postmasters += line.find(" postmaster ") != std::string::npos;
    bootstraps += line.find(" bootstrap ") != std::string::npos;
    workers += line.find(" worker ") != std::string::npos;
  }
  EXPECT_EQ(postmasters, 1);
  EXPECT_EQ(bootstraps, 1);
  EXPECT_EQ(workers, 3);
}

TEST(Demo, SameSeedSameDumps) {
  ScenarioConfig c;
  c.lock_mode = LockMode::Legacy;
  c.iterations = 200;
  c.seed = 9;
  auto a = run_demo(c);
  auto b = run_demo(c);
  EXPECT_EQ(a.registry_dump, b.registry_dump);
  EXPECT_EQ(a.lock_log, b.lock_log);
  EXPECT_EQ(a.steps, b.steps);
}

TEST(Demo, LegacyAdversarialStarvesWorker) {
  ScenarioConfig c;
  c.lock_mode = LockMode::Legacy;
  c.adversarial = true;
  auto r = run_demo(c);
  EXPECT_FALSE(r.pass());
  EXPECT_EQ(r.outcome, "stalled");
  EXPECT_EQ(r.starved, std::vector<ThreadId>{ThreadId{2}});
  EXPECT_EQ(r.counter, 3000u);
  EXPECT_EQ(r.prefix, legacy_witness_schedule());
  // The starved worker died abnormally; its allocations were swept.
  EXPECT_GT(r.reclaim_swept, 0u);
  EXPECT_EQ(r.reclaim_remaining, 0u);
  EXPECT_EQ(r.shm_leaks, 0);
}

TEST(Demo, FixedAdversarialCompletes) {
  ScenarioConfig c;
  c.lock_mode = LockMode::Fixed;
  c.adversarial = true;
  auto r = run_demo(c);
  EXPECT_TRUE(r.pass());
  EXPECT_EQ(r.counter, 4000u);
}

TEST(Demo, FreeRunFixedCountsExactly) {
  ScenarioConfig c;
  c.schedule = ScheduleMode::Free;
  c.lock_mode = LockMode::Fixed;
  auto r = run_demo(c);
  EXPECT_TRUE(r.pass());
  EXPECT_EQ(r.counter, 4000u);
}

TEST(Demo, ConfigErrors) {
  ScenarioConfig c;
  c.workers = 0;
  EXPECT_ERRC(run_demo(c), Errc::ConfigError);
  c.workers = 4;
  c.schedule = ScheduleMode::Free;
  c.adversarial = true;
  EXPECT_ERRC(run_demo(c), Errc::ConfigError);
  EXPECT_ERRC(parse_schedule_mode("sometimes"), Errc::ConfigError);
}

TEST(ExploreRun, Targets) {
  auto legacy = run_explore({ExploreTarget::LockLegacy, 3, 12, 1});
  EXPECT_FALSE(legacy.result.pass());
  EXPECT_TRUE(run_explore({ExploreTarget::LockFixed, 3, 12, 1}).result.pass());
  EXPECT_TRUE(run_explore({ExploreTarget::LockFlagLess, 3, 12, 1}).result.pass());
  EXPECT_TRUE(run_explore({ExploreTarget::SemModel, 3, 12, 1}).result.pass());
  EXPECT_ERRC(run_explore({ExploreTarget::LockFixed, 3, 40, 1}), Errc::BoundExceeded);
  EXPECT_ERRC(parse_explore_target("LockOther"), Errc::ConfigError);
}

TEST(Cli, ExploreExitCodes) {
  auto legacy = run_cli("explore --target LockLegacy --threads 3 --steps 12");
  EXPECT_EQ(legacy.exit_code, 2);
  EXPECT_EQ(value_of(legacy.out, "result"), "witness");
  EXPECT_NE(legacy.out.find("step 1 thread 0 op acquire -> "), std::string::npos);
  auto fixed = run_cli("explore --target LockFixed --threads 3 --steps 12");
  EXPECT_EQ(fixed.exit_code, 0);
  EXPECT_EQ(value_of(fixed.out, "result"), "pass");
  auto bound = run_cli("explore --target LockFixed --threads 3 --steps 99");
  EXPECT_EQ(bound.exit_code, 1);
  EXPECT_EQ(value_of(bound.out, "error"), "BoundExceeded");
}

TEST(Cli, DemoAndBench) {
  auto demo = run_cli("demo --workers 4 --lock-mode fixed --seed 3");
  EXPECT_EQ(demo.exit_code, 0);
  EXPECT_EQ(value_of(demo.out, "counter"), "4000");
  auto starve = run_cli("demo --workers 4 --lock-mode legacy --seed 3 --adversarial");
  EXPECT_EQ(starve.exit_code, 2);
  EXPECT_EQ(value_of(starve.out, "starved"), "2");
  auto bench = run_cli("bench pv --kind emulated -n 10000");
  EXPECT_EQ(bench.exit_code, 0);
  EXPECT_EQ(value_of(bench.out, "benchmark"), "pv_emulated");
  EXPECT_EQ(run_cli("bench create --kind thread -n 5").exit_code, 1);
  EXPECT_EQ(run_cli("demo --lock-mode sideways").exit_code, 1);
  EXPECT_EQ(run_cli("").exit_code, 1);
}
