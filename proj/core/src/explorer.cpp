#include "threadshim/explorer.hpp"

#include <cstdio>
#include <sstream>

namespace threadshim::explorer {

std::string state_hash(const std::string& key) {
  std::uint64_t h = 1469598103934665603ULL;  // FNV-1a
  for (unsigned char c : key) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string format_steps(const std::vector<StepLine>& steps) {
  std::ostringstream out;
  for (const auto& s : steps) {
    out << "step " << s.step << " thread " << s.thread << " op " << s.op << " -> " << s.state_hash << '\n';
  }
  return out.str();
}

std::string format_witness(const Witness& w) {
  std::ostringstream out;
  out << "property=" << w.property << '\n';
  out << "detail=" << w.detail << '\n';
  out << "schedule=";
  for (std::size_t i = 0; i < w.schedule.size(); ++i) out << (i ? "," : "") << w.schedule[i];
  out << '\n';
  out << format_steps(w.trace.steps);
  out << "events:\n" << w.trace.events;
  out << "states:\n";
  for (std::size_t i = 0; i < w.trace.states.size(); ++i) out << (i + 1) << ' ' << w.trace.states[i] << '\n';
  out << "final=" << w.final_state << '\n';
  return out.str();
}

}  // namespace threadshim::explorer
