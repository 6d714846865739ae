#include "threadshim/tools/explore_run.hpp"

#include <sstream>

#include "threadshim/error.hpp"

namespace threadshim::tools {

using explorer::SemAction;

ExploreTarget parse_explore_target(std::string_view text) {
  if (text == "SemModel") return ExploreTarget::SemModel;
  if (text == "LockLegacy") return ExploreTarget::LockLegacy;
  if (text == "LockFixed") return ExploreTarget::LockFixed;
  if (text == "LockFlagLess") return ExploreTarget::LockFlagLess;
  throw Error(Errc::ConfigError, "unknown explore target '" + std::string(text) + "'");
}

std::string_view to_string(ExploreTarget target) noexcept {
  switch (target) {
    case ExploreTarget::SemModel: return "SemModel";
    case ExploreTarget::LockLegacy: return "LockLegacy";
    case ExploreTarget::LockFixed: return "LockFixed";
    case ExploreTarget::LockFlagLess: return "LockFlagLess";
  }
  return "unknown";
}

explorer::SemModelConfig standard_sem_config(std::size_t threads) {
  const std::vector<std::vector<SemAction>> programs = {
      {SemAction::p(0), SemAction::v(0)},
      {SemAction::op({{0, -1}, {1, -1}}), SemAction::op({{1, 1}, {0, 1}})},
      {SemAction::p(1, 2), SemAction::v(1), SemAction::v(1)},
      {SemAction::p(1), SemAction::v(1)},
  };
  explorer::SemModelConfig config;
  config.initial = {1, 3};
  for (std::size_t i = 0; i < threads; ++i) config.programs.push_back(programs[i % programs.size()]);
  return config;
}

ExploreReport run_explore(const ExploreRequest& request) {
  ExploreReport report{request, {}};
  if (request.target == ExploreTarget::SemModel) {
    explorer::SemModel model(standard_sem_config(request.threads));
    report.result = explorer::explore(model, request.steps, model.soundness());
    return report;
  }
  LockMode mode = request.target == ExploreTarget::LockLegacy ? LockMode::Legacy
                  : request.target == ExploreTarget::LockFixed ? LockMode::Fixed
                                                               : LockMode::FlagLess;
  explorer::LockModel model({mode, request.threads, request.iterations, 3});
  report.result = explorer::explore(model, request.steps, explorer::LockModel::safety_and_progress());
  return report;
}

std::string format_report(const ExploreReport& report) {
  std::ostringstream out;
  out << "target=" << to_string(report.request.target) << '\n'
      << "threads=" << report.request.threads << '\n'
      << "steps=" << report.request.steps << '\n'
      << "states=" << report.result.states << '\n'
      << "transitions=" << report.result.transitions << '\n'
      << "result=" << (report.result.pass() ? "pass" : "witness") << '\n';
  if (report.result.witness) out << explorer::format_witness(*report.result.witness);
  return out.str();
}

}  // namespace threadshim::tools
