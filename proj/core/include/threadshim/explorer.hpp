#pragma once

// Exhaustive interleaving exploration over deterministic step functions.
// A model exposes its threads' next actions; the explorer enumerates every
// schedule up to a step bound (depth-first, pruning states already reached
// with at least as much remaining budget) and reports the first violation.

#include <algorithm>
#include <concepts>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "threadshim/error.hpp"
#include "threadshim/types.hpp"

namespace threadshim::explorer {

inline constexpr std::size_t kMaxThreads = 4;
inline constexpr std::size_t kMaxSteps = 16;

template <typename M>
concept Model = requires(const M& m, const typename M::State& s, ThreadId t) {
  { m.initial() } -> std::same_as<typename M::State>;
  { m.thread_count() } -> std::convertible_to<std::size_t>;
  { m.runnable(s) } -> std::same_as<std::vector<ThreadId>>;
  { m.op_name(s, t) } -> std::convertible_to<std::string>;
  { m.step(s, t) } -> std::same_as<typename M::State>;
  { m.key(s) } -> std::convertible_to<std::string>;
  { m.describe(s) } -> std::convertible_to<std::string>;
  { m.has_blocked(s) } -> std::convertible_to<bool>;
  { m.event_log(s) } -> std::convertible_to<std::string>;
};

/// `check(state, quiescent)` returns a description of the violation, if any.
/// A state is quiescent when no thread can take a step. A composite property
/// has no check of its own and tests its parts in order.
template <typename S>
struct Property {
  std::string name;
  std::function<std::optional<std::string>(const S&, bool)> check;
  std::vector<Property> parts;
};

template <typename S>
Property<S> all_of(std::string name, std::vector<Property<S>> parts) {
  return {std::move(name), nullptr, std::move(parts)};
}

struct Violation {
  std::string property;
  std::string detail;
};

/// The first violated leaf property, if any.
template <typename S>
std::optional<Violation> check_property(const Property<S>& p, const S& state, bool quiescent) {
  if (p.check) {
    if (auto detail = p.check(state, quiescent)) return Violation{p.name, *detail};
  }
  for (const auto& part : p.parts) {
    if (auto v = check_property(part, state, quiescent)) return v;
  }
  return std::nullopt;
}

std::string state_hash(const std::string& key);

struct StepLine {
  std::size_t step = 0;
  ThreadId thread;
  std::string op;
  std::string state_hash;
};

struct Trace {
  std::vector<StepLine> steps;
  std::vector<std::string> states;  // describe() after each step
  std::string events;               // the model's event log at the end
  std::string final_state;
};

/// `step <n> thread <t> op <name> -> <state-hash>`, one line per step.
std::string format_steps(const std::vector<StepLine>& steps);

struct Witness {
  std::vector<ThreadId> schedule;
  std::string property;
  std::string detail;
  std::string final_state;
  Trace trace;
};

std::string format_witness(const Witness& witness);

struct ExploreResult {
  std::optional<Witness> witness;
  std::size_t states = 0;
  std::size_t transitions = 0;
  bool pass() const noexcept { return !witness.has_value(); }
};

template <typename S>
struct ReplayResult {
  S final_state;
  Trace trace;
};

inline constexpr const char* kDeadlock = "deadlock";

template <Model M>
void check_bounds(const M& model, std::size_t max_steps) {
  if (model.thread_count() > kMaxThreads) {
    throw Error(Errc::BoundExceeded, std::to_string(model.thread_count()) + " threads (max " +
                                         std::to_string(kMaxThreads) + ")");
  }
  if (max_steps > kMaxSteps) {
    throw Error(Errc::BoundExceeded,
                std::to_string(max_steps) + " steps (max " + std::to_string(kMaxSteps) + ")");
  }
}

template <Model M>
ReplayResult<typename M::State> replay(const M& model, const std::vector<ThreadId>& schedule) {
  typename M::State state = model.initial();
  Trace trace;
  for (std::size_t i = 0; i < schedule.size(); ++i) {
    ThreadId t = schedule[i];
    auto runnable = model.runnable(state);
    if (std::find(runnable.begin(), runnable.end(), t) == runnable.end()) {
      throw Error(Errc::InvalidSchedule,
                  "thread " + std::to_string(t.value) + " is not runnable at step " + std::to_string(i + 1));
    }
    std::string op = model.op_name(state, t);
    state = model.step(state, t);
    trace.steps.push_back({i + 1, t, std::move(op), state_hash(model.key(state))});
    trace.states.push_back(model.describe(state));
  }
  trace.events = model.event_log(state);
  trace.final_state = model.describe(state);
  return {std::move(state), std::move(trace)};
}

namespace detail {

template <Model M>
class Search {
 public:
  using State = typename M::State;

  Search(const M& model, std::size_t max_steps, const Property<State>* property)
      : model_(model), max_steps_(max_steps), property_(property) {}

  ExploreResult run() {
    visit(model_.initial(), 0);
    ExploreResult result;
    result.states = visited_.size();
    result.transitions = transitions_;
    if (found_) {
      Witness w = *found_;
      auto replayed = replay(model_, w.schedule);
      w.final_state = replayed.trace.final_state;
      w.trace = std::move(replayed.trace);
      result.witness = std::move(w);
    }
    return result;
  }

 private:
  void visit(const State& state, std::size_t depth) {
    auto key = model_.key(state);
    if (auto it = visited_.find(key); it != visited_.end() && it->second <= depth) return;
    visited_[key] = depth;

    auto runnable = model_.runnable(state);
    const bool quiescent = runnable.empty();
    if (property_ != nullptr) {
      if (auto violation = check_property(*property_, state, quiescent)) {
        found_ = Witness{path_, violation->property, violation->detail, {}, {}};
        return;
      }
      if (quiescent && model_.has_blocked(state)) {
        found_ = Witness{path_, kDeadlock, "every unfinished thread is blocked", {}, {}};
        return;
      }
    }
    if (depth == max_steps_) return;
    for (ThreadId t : runnable) {
      path_.push_back(t);
      ++transitions_;
      visit(model_.step(state, t), depth + 1);
      path_.pop_back();
      if (found_) return;
    }
  }

  const M& model_;
  std::size_t max_steps_;
  const Property<State>* property_;
  std::unordered_map<std::string, std::size_t> visited_;
  std::vector<ThreadId> path_;
  std::size_t transitions_ = 0;
  std::optional<Witness> found_;
};

template <Model M>
std::uint64_t count_paths(const M& model, const typename M::State& state, std::size_t depth,
                          std::size_t max_steps) {
  auto runnable = model.runnable(state);
  if (runnable.empty() || depth == max_steps) return 1;
  std::uint64_t total = 0;
  for (ThreadId t : runnable) total += count_paths(model, model.step(state, t), depth + 1, max_steps);
  return total;
}

}  // namespace detail

/// Pass, or the first violating schedule. A quiescent state with a blocked
/// thread is reported as `deadlock` unless the property flags it first.
template <Model M>
ExploreResult explore(const M& model, std::size_t max_steps, const Property<typename M::State>& property) {
  check_bounds(model, max_steps);
  return detail::Search<M>(model, max_steps, &property).run();
}

/// Distinct states reachable within `max_steps`.
template <Model M>
std::size_t count_states(const M& model, std::size_t max_steps) {
  check_bounds(model, max_steps);
  return detail::Search<M>(model, max_steps, nullptr).run().states;
}

/// Maximal schedules within `max_steps`, without state pruning.
template <Model M>
std::uint64_t count_schedules(const M& model, std::size_t max_steps) {
  check_bounds(model, max_steps);
  return detail::count_paths(model, model.initial(), 0, max_steps);
}

}  // namespace threadshim::explorer
