#include "threadshim/shortlock.hpp"

#include <algorithm>
#include <sstream>

#include "threadshim/error.hpp"

namespace threadshim {

std::string_view to_string(LockMode mode) noexcept {
  switch (mode) {
    case LockMode::Legacy: return "legacy";
    case LockMode::Fixed: return "fixed";
    case LockMode::FlagLess: return "flagless";
  }
  return "unknown";
}

LockMode parse_lock_mode(std::string_view text) {
  if (text == "legacy") return LockMode::Legacy;
  if (text == "fixed") return LockMode::Fixed;
  if (text == "flagless") return LockMode::FlagLess;
  throw Error(Errc::ConfigError, "unknown lock mode '" + std::string(text) + "'");
}

std::string_view to_string(LockEventKind kind) noexcept {
  switch (kind) {
    case LockEventKind::Acquire: return "acquire";
    case LockEventKind::Enqueue: return "enqueue";
    case LockEventKind::Release: return "release";
    case LockEventKind::Wake: return "wake";
    case LockEventKind::SelfWake: return "selfwake";
    case LockEventKind::Timeout: return "timeout";
  }
  return "unknown";
}

std::string format_event_log(const std::vector<LockEvent>& events) {
  std::ostringstream out;
  for (const auto& e : events) out << e.step << ' ' << to_string(e.kind) << ' ' << e.thread << '\n';
  return out.str();
}

ShortLockState::ShortLockState(LockMode mode, std::uint64_t self_wake_timeout, LockClock clock)
    : mode_(mode), clock_(clock), timeout_(self_wake_timeout) {
  if (mode == LockMode::Fixed && self_wake_timeout == 0) {
    throw Error(Errc::InvalidTimeout, "fixed mode needs a positive self-wake timeout");
  }
}

ShortLockState::AcquireResult ShortLockState::acquire(ThreadId thread) {
  if (holder_ == thread || std::find(queue_.begin(), queue_.end(), thread) != queue_.end()) {
    throw Error(Errc::Reentrancy, "thread " + std::to_string(thread.value));
  }
  ++step_;
  if (clock_ == LockClock::Virtual) now_ = step_;

  AcquireResult result;
  if (!holder_) {
    holder_ = thread;
    log(LockEventKind::Acquire, thread);
    result.acquired = true;
  } else {
    queue_.push_back(thread);
    log(LockEventKind::Enqueue, thread);
    if (mode_ == LockMode::Legacy) wake_flag_ = true;
    if (mode_ == LockMode::Fixed) alarms_[thread] = now_ + timeout_;
  }
  finish_transition(result.woken);
  return result;
}

std::vector<ThreadId> ShortLockState::release(ThreadId thread) {
  if (holder_ != thread) throw Error(Errc::NotHolder, "thread " + std::to_string(thread.value));
  ++step_;
  if (clock_ == LockClock::Virtual) now_ = step_;

  std::vector<ThreadId> woken;
  holder_.reset();
  log(LockEventKind::Release, thread);
  const bool may_wake = mode_ == LockMode::Legacy ? wake_flag_ : true;
  if (may_wake && !queue_.empty()) {
    ThreadId head = queue_.front();
    queue_.pop_front();
    alarms_.erase(head);
    log(LockEventKind::Wake, head);
    woken.push_back(head);
    if (mode_ == LockMode::Legacy) wake_flag_ = false;
  }
  finish_transition(woken);
  return woken;
}

void ShortLockState::finish_transition(std::vector<ThreadId>& woken) {
  if (clock_ == LockClock::Virtual && mode_ == LockMode::Fixed) tick_into(woken);
}

std::vector<ThreadId> ShortLockState::tick(std::uint64_t now) {
  if (mode_ != LockMode::Fixed) throw Error(Errc::WrongMode, "self-wake alarms exist only in fixed mode");
  now_ = std::max(now_, now);
  std::vector<ThreadId> woken;
  tick_into(woken);
  return woken;
}

void ShortLockState::tick_into(std::vector<ThreadId>& woken) {
  for (auto it = queue_.begin(); it != queue_.end();) {
    ThreadId t = *it;
    auto alarm = alarms_.find(t);
    if (alarm == alarms_.end() || alarm->second > now_) {
      ++it;
      continue;
    }
    if (!holder_) {
      it = queue_.erase(it);
      alarms_.erase(alarm);
      log(LockEventKind::SelfWake, t);
      woken.push_back(t);
    } else {
      alarm->second = now_ + timeout_;
      log(LockEventKind::Timeout, t);
      ++it;
    }
  }
}

std::vector<ThreadId> ShortLockState::advance_idle() {
  std::vector<ThreadId> woken;
  if (alarms_.empty()) return woken;
  std::uint64_t earliest = std::min_element(alarms_.begin(), alarms_.end(), [](const auto& a, const auto& b) {
                             return a.second < b.second;
                           })->second;
  now_ = std::max(now_, earliest);
  tick_into(woken);
  return woken;
}

void ShortLockState::set_now(std::uint64_t now) { now_ = std::max(now_, now); }

std::optional<std::uint64_t> ShortLockState::deadline(ThreadId thread) const {
  auto it = alarms_.find(thread);
  if (it == alarms_.end()) return std::nullopt;
  return it->second;
}

std::string ShortLockState::key() const {
  std::ostringstream out;
  out << 'h' << (holder_ ? static_cast<std::int64_t>(holder_->value) : -1) << 'f' << wake_flag_ << 'q';
  for (ThreadId t : queue_) out << t.value << ',';
  out << 'a';
  // Deadlines relative to now: behavior depends only on the remaining time.
  for (const auto& [t, d] : alarms_) out << t.value << ':' << (d >= now_ ? d - now_ : 0) << ',';
  return out.str();
}

std::string ShortLockState::describe() const {
  std::ostringstream out;
  out << "held=" << (holder_ ? 1 : 0) << " holder=";
  if (holder_) out << *holder_; else out << '-';
  out << " flag=" << (wake_flag_ ? 1 : 0) << " queue=[";
  for (std::size_t i = 0; i < queue_.size(); ++i) out << (i ? "," : "") << queue_[i];
  out << ']';
  return out.str();
}

ShortLock::ShortLock(LockMode mode, std::uint64_t self_wake_timeout, StepGate* gate)
    : gate_(gate),
      origin_(std::chrono::steady_clock::now()),
      state_(mode, self_wake_timeout, gate ? LockClock::Virtual : LockClock::Wall) {}

std::uint64_t ShortLock::wall_now() const {
  return static_cast<std::uint64_t>(
      std::chrono::duration_cast<std::chrono::microseconds>(std::chrono::steady_clock::now() - origin_)
          .count());
}

void ShortLock::notify(const std::vector<ThreadId>& woken) {
  if (woken.empty()) return;
  for (ThreadId t : woken) {
    woken_.insert(t);
    if (gate_) gate_->on_wake(t);
  }
  cv_.notify_all();
}

void ShortLock::acquire(ThreadId thread) {
  std::unique_lock lock(mu_);
  for (;;) {
    if (gate_) {
      lock.unlock();
      gate_->before_step();
      lock.lock();
    }
    if (aborted_) throw Error(Errc::Aborted, "short lock waiters aborted");
    if (!gate_) state_.set_now(wall_now());
    auto result = state_.acquire(thread);
    notify(result.woken);
    if (result.acquired) return;

    if (gate_) {
      lock.unlock();
      gate_->on_block();
      lock.lock();
    }
    while (!aborted_ && !woken_.contains(thread)) {
      auto deadline = gate_ ? std::nullopt : state_.deadline(thread);
      if (deadline) {
        auto when = origin_ + std::chrono::microseconds(*deadline);
        if (cv_.wait_until(lock, when) == std::cv_status::timeout) notify(state_.tick(wall_now()));
      } else {
        cv_.wait(lock);
      }
    }
    if (aborted_) throw Error(Errc::Aborted, "short lock waiters aborted");
    woken_.erase(thread);
  }
}

void ShortLock::release(ThreadId thread) {
  std::unique_lock lock(mu_);
  if (gate_) {
    lock.unlock();
    gate_->before_step();
    lock.lock();
  } else {
    state_.set_now(wall_now());
  }
  notify(state_.release(thread));
}

void ShortLock::abort_waiters() {
  std::lock_guard lock(mu_);
  aborted_ = true;
  cv_.notify_all();
}

bool ShortLock::advance_idle() {
  std::lock_guard lock(mu_);
  auto woken = state_.advance_idle();
  notify(woken);
  return !woken.empty();
}

std::vector<ThreadId> ShortLock::tick() {
  std::lock_guard lock(mu_);
  auto woken = state_.tick(wall_now());
  notify(woken);
  return woken;
}

LockSnapshot ShortLock::snapshot() const {
  std::lock_guard lock(mu_);
  return {state_.held(), state_.holder(), {state_.queue().begin(), state_.queue().end()}, state_.wake_flag()};
}

std::optional<ThreadId> ShortLock::holder() const {
  std::lock_guard lock(mu_);
  return state_.holder();
}

std::vector<LockEvent> ShortLock::events() const {
  std::lock_guard lock(mu_);
  return state_.events();
}

std::string ShortLock::event_log() const { return format_event_log(events()); }

}  // namespace threadshim
