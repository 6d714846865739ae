#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "threadshim/error.hpp"
#include "threadshim/tools/bench.hpp"
#include "threadshim/tools/demo.hpp"
#include "threadshim/tools/explore_run.hpp"

namespace tools = threadshim::tools;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitViolation = 2;

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"threadshim: thread-based process emulation harness"};
  app.require_subcommand(1);

  auto* bench = app.add_subcommand("bench", "Microbenchmarks");
  bench->require_subcommand(1);
  std::string create_kind = "thread";
  std::size_t create_n = 200;
  auto* create = bench->add_subcommand("create", "Thread vs process creation");
  create->add_option("--kind", create_kind, "thread | process")->check(CLI::IsMember({"thread", "process"}));
  create->add_option("-n", create_n, "Iterations (>= 100)");
  std::string pv_kind = "emulated";
  std::size_t pv_n = 20000;
  auto* pv = bench->add_subcommand("pv", "Uncontended P+V pairs");
  pv->add_option("--kind", pv_kind, "emulated | os")->check(CLI::IsMember({"emulated", "os"}));
  pv->add_option("-n", pv_n, "Iterations (>= 10000)");

  tools::ScenarioConfig demo_config;
  std::string lock_mode = "fixed";
  std::string schedule = "virtual";
  auto* demo = app.add_subcommand("demo", "Mini postmaster: workers increment a shared counter");
  demo->add_option("--workers", demo_config.workers, "Worker threads");
  demo->add_option("--lock-mode", lock_mode, "legacy | fixed | flagless")
      ->check(CLI::IsMember({"legacy", "fixed", "flagless"}));
  demo->add_option("--seed", demo_config.seed, "Scheduler seed");
  demo->add_option("--iterations", demo_config.iterations, "Increments per worker");
  demo->add_option("--schedule", schedule, "virtual | free")->check(CLI::IsMember({"virtual", "free"}));
  demo->add_flag("--adversarial", demo_config.adversarial,
                 "Replay the explorer's legacy starvation witness first");
  demo->add_option("--self-wake-timeout", demo_config.self_wake_timeout,
                   "Fixed mode alarm: transitions (virtual) or microseconds (free)");
  bool show_log = false;
  demo->add_flag("--log", show_log, "Print the lock event log");

  tools::ExploreRequest explore_request;
  std::string target = "LockLegacy";
  auto* explore = app.add_subcommand("explore", "Exhaustive schedule exploration");
  explore->add_option("--target", target, "SemModel | LockLegacy | LockFixed | LockFlagLess")
      ->check(CLI::IsMember({"SemModel", "LockLegacy", "LockFixed", "LockFlagLess"}));
  explore->add_option("--threads", explore_request.threads, "Thread count");
  explore->add_option("--steps", explore_request.steps, "Step bound");
  explore->add_option("--iterations", explore_request.iterations, "Lock rounds per thread");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitOk : kExitError;
  }

  try {
    if (create->parsed()) {
      auto kind = tools::parse_create_kind(create_kind);
      auto r = tools::bench_create(kind, create_n);
      std::cout << tools::format_result(r, kind == tools::CreateKind::Thread ? tools::kReferenceThreadCreateUs
                                                                             : tools::kReferenceProcessCreateUs);
      return kExitOk;
    }
    if (pv->parsed()) {
      auto kind = tools::parse_pv_kind(pv_kind);
      auto r = tools::bench_pv(kind, pv_n);
      std::cout << tools::format_result(r, kind == tools::PvKind::Emulated ? tools::kReferenceEmulatedPvUs
                                                                          : tools::kReferenceOsPvUs);
      return kExitOk;
    }
    if (demo->parsed()) {
      demo_config.lock_mode = threadshim::parse_lock_mode(lock_mode);
      demo_config.schedule = tools::parse_schedule_mode(schedule);
      auto r = tools::run_demo(demo_config);
      std::cout << tools::format_result(demo_config, r);
      if (show_log) std::cout << r.lock_log;
      return r.pass() ? kExitOk : kExitViolation;
    }
    if (explore->parsed()) {
      explore_request.target = tools::parse_explore_target(target);
      auto report = tools::run_explore(explore_request);
      std::cout << tools::format_report(report);
      return report.result.pass() ? kExitOk : kExitViolation;
    }
  } catch (const threadshim::Error& e) {
    std::cout << "status=error\nerror=" << threadshim::to_string(e.code()) << '\n';
    std::cerr << e.what() << '\n';
    return kExitError;
  } catch (const std::exception& e) {
    std::cout << "status=error\n";
    std::cerr << e.what() << '\n';
    return kExitError;
  }
  return kExitError;
}
