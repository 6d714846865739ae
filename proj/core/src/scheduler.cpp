#include "threadshim/scheduler.hpp"

#include <algorithm>
#include <memory>

#include "threadshim/error.hpp"

namespace threadshim {

namespace {
thread_local ThreadId tl_current{};
}  // namespace

std::string_view to_string(ScheduleOutcome outcome) noexcept {
  switch (outcome) {
    case ScheduleOutcome::Running: return "running";
    case ScheduleOutcome::Completed: return "completed";
    case ScheduleOutcome::Stalled: return "stalled";
    case ScheduleOutcome::BudgetExhausted: return "budget_exhausted";
    case ScheduleOutcome::Diverged: return "diverged";
  }
  return "unknown";
}

DeterministicScheduler::DeterministicScheduler(Policy policy, std::uint64_t step_budget)
    : policy_(std::move(policy)), budget_(step_budget) {}

void DeterministicScheduler::add(ThreadId thread) {
  std::lock_guard lock(mu_);
  states_.emplace(thread, State::Starting);
}

void DeterministicScheduler::add_idle_hook(IdleHook hook) {
  std::lock_guard lock(mu_);
  idle_hooks_.push_back(std::move(hook));
}

void DeterministicScheduler::enter(ThreadId thread) {
  std::lock_guard lock(mu_);
  if (!states_.contains(thread)) {
    throw Error(Errc::UnknownThread, "participant " + std::to_string(thread.value) + " not added");
  }
  tl_current = thread;
}

ThreadId DeterministicScheduler::current() const { return tl_current; }

void DeterministicScheduler::finish() {
  std::unique_lock lock(mu_);
  ThreadId me = tl_current;
  states_[me] = State::Done;
  if (running_ == me) running_.reset();
  dispatch(lock);
}

void DeterministicScheduler::before_step() {
  std::unique_lock lock(mu_);
  ThreadId me = tl_current;
  if (outcome_ != ScheduleOutcome::Running) throw Error(Errc::Aborted, "schedule stopped");
  states_[me] = State::AtGate;
  if (running_ == me) running_.reset();
  dispatch(lock);
  cv_.wait(lock, [&] { return running_ == me || outcome_ != ScheduleOutcome::Running; });
  if (running_ != me) throw Error(Errc::Aborted, "schedule stopped");
}

void DeterministicScheduler::on_block() {
  std::unique_lock lock(mu_);
  ThreadId me = tl_current;
  // A wakeup may already have arrived between enqueueing and this call.
  if (states_[me] != State::Pending) states_[me] = State::Blocked;
  if (running_ == me) running_.reset();
  dispatch(lock);
}

void DeterministicScheduler::on_wake(ThreadId thread) {
  std::lock_guard lock(mu_);
  auto it = states_.find(thread);
  if (it == states_.end()) return;
  if (it->second == State::Blocked) it->second = State::Pending;
}

void DeterministicScheduler::dispatch(std::unique_lock<std::mutex>& lock) {
  if (outcome_ != ScheduleOutcome::Running || dispatching_) return;
  for (;;) {
    if (running_) return;
    std::vector<ThreadId> ready;
    bool any_blocked = false;
    for (const auto& [id, state] : states_) {
      switch (state) {
        case State::Starting:
        case State::Pending:
        case State::Running:
          return;  // wait for the participant to reach a gate
        case State::AtGate: ready.push_back(id); break;
        case State::Blocked: any_blocked = true; break;
        case State::Done: break;
      }
    }
    if (ready.empty()) {
      if (!any_blocked) {
        stop(lock, ScheduleOutcome::Completed);
        return;
      }
      dispatching_ = true;
      auto hooks = idle_hooks_;
      lock.unlock();
      bool woke = false;
      for (auto& hook : hooks) woke = hook() || woke;
      lock.lock();
      dispatching_ = false;
      if (outcome_ != ScheduleOutcome::Running) return;
      if (woke) continue;
      // Re-check: a participant may have arrived while the hooks ran.
      bool changed = std::any_of(states_.begin(), states_.end(), [](const auto& kv) {
        return kv.second == State::AtGate || kv.second == State::Pending;
      });
      if (changed) continue;
      stop(lock, ScheduleOutcome::Stalled);
      return;
    }
    if (taken_.size() >= budget_) {
      stop(lock, ScheduleOutcome::BudgetExhausted);
      return;
    }
    std::optional<ThreadId> pick = policy_(ready, taken_.size());
    if (!pick || std::find(ready.begin(), ready.end(), *pick) == ready.end()) {
      stop(lock, ScheduleOutcome::Diverged);
      return;
    }
    states_[*pick] = State::Running;
    running_ = *pick;
    taken_.push_back(*pick);
    cv_.notify_all();
    return;
  }
}

void DeterministicScheduler::stop(std::unique_lock<std::mutex>&, ScheduleOutcome outcome) {
  outcome_ = outcome;
  running_.reset();
  cv_.notify_all();
}

ScheduleOutcome DeterministicScheduler::wait() {
  std::unique_lock lock(mu_);
  cv_.wait(lock, [&] { return outcome_ != ScheduleOutcome::Running; });
  return outcome_;
}

ScheduleOutcome DeterministicScheduler::outcome() const {
  std::lock_guard lock(mu_);
  return outcome_;
}

std::vector<ThreadId> DeterministicScheduler::taken() const {
  std::lock_guard lock(mu_);
  return taken_;
}

std::vector<ThreadId> DeterministicScheduler::blocked() const {
  std::lock_guard lock(mu_);
  std::vector<ThreadId> out;
  for (const auto& [id, state] : states_) {
    if (state == State::Blocked) out.push_back(id);
  }
  return out;
}

DeterministicScheduler::Policy DeterministicScheduler::replay(std::vector<ThreadId> schedule,
                                                              Policy then) {
  return [schedule = std::move(schedule), then = std::move(then)](
             const std::vector<ThreadId>& ready, std::uint64_t step) -> std::optional<ThreadId> {
    if (step < schedule.size()) return schedule[step];
    if (then) return then(ready, step);
    return std::nullopt;
  };
}

DeterministicScheduler::Policy DeterministicScheduler::seeded_random(std::uint64_t seed) {
  auto rng = std::make_shared<std::mt19937_64>(seed);
  return [rng](const std::vector<ThreadId>& ready, std::uint64_t) -> std::optional<ThreadId> {
    std::uniform_int_distribution<std::size_t> pick(0, ready.size() - 1);
    return ready[pick(*rng)];
  };
}

DeterministicScheduler::Policy DeterministicScheduler::sticky(
    std::function<std::optional<ThreadId>()> holder, Policy fallback) {
  return [holder = std::move(holder), fallback = std::move(fallback)](
             const std::vector<ThreadId>& ready, std::uint64_t step) -> std::optional<ThreadId> {
    if (auto h = holder(); h && std::find(ready.begin(), ready.end(), *h) != ready.end()) return h;
    return fallback(ready, step);
  };
}

}  // namespace threadshim
