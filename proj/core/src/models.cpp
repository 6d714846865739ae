#include "threadshim/models.hpp"

#include <sstream>

#include "threadshim/error.hpp"

namespace threadshim::explorer {

namespace {

char status_char(ThreadStatus s) {
  switch (s) {
    case ThreadStatus::Runnable: return 'r';
    case ThreadStatus::Blocked: return 'b';
    case ThreadStatus::Done: return 'd';
  }
  return '?';
}

template <typename T>
std::string join(const std::vector<T>& items) {
  std::ostringstream out;
  for (std::size_t i = 0; i < items.size(); ++i) out << (i ? "," : "") << items[i];
  return out.str();
}

}  // namespace

LockModel::LockModel(LockModelConfig config) : config_(config) {
  if (config_.threads == 0) throw Error(Errc::InvalidValue, "lock model needs at least one thread");
}

LockModel::State LockModel::initial() const {
  return {ShortLockState(config_.mode, config_.mode == LockMode::Fixed ? config_.self_wake_timeout : 0),
          std::vector<Thread>(config_.threads)};
}

std::vector<ThreadId> LockModel::runnable(const State& s) const {
  std::vector<ThreadId> out;
  for (std::size_t i = 0; i < s.threads.size(); ++i) {
    if (s.threads[i].status == ThreadStatus::Runnable) out.push_back(ThreadId{static_cast<std::uint32_t>(i)});
  }
  return out;
}

std::string LockModel::op_name(const State& s, ThreadId t) const {
  return s.threads.at(t.value).pc % 2 == 0 ? "acquire" : "release";
}

LockModel::State LockModel::step(const State& s, ThreadId t) const {
  State next = s;
  Thread& th = next.threads.at(t.value);
  std::vector<ThreadId> woken;
  if (th.pc % 2 == 0) {
    auto r = next.lock.acquire(t);
    woken = std::move(r.woken);
    if (r.acquired) {
      ++th.pc;
    } else {
      th.status = ThreadStatus::Blocked;
    }
  } else {
    woken = next.lock.release(t);
    ++th.pc;
    if (th.pc == 2 * config_.iterations) th.status = ThreadStatus::Done;
  }
  for (ThreadId w : woken) next.threads.at(w.value).status = ThreadStatus::Runnable;

  // Idle time passes only when nothing can run.
  while (runnable(next).empty() && next.lock.has_armed_alarms()) {
    auto idle = next.lock.advance_idle();
    if (idle.empty()) break;
    for (ThreadId w : idle) next.threads.at(w.value).status = ThreadStatus::Runnable;
  }
  return next;
}

std::string LockModel::key(const State& s) const {
  std::string k = s.lock.key();
  k += '|';
  for (const auto& th : s.threads) {
    k += std::to_string(th.pc);
    k += status_char(th.status);
  }
  return k;
}

std::string LockModel::describe(const State& s) const {
  std::ostringstream out;
  out << s.lock.describe() << " threads=[";
  for (std::size_t i = 0; i < s.threads.size(); ++i) {
    out << (i ? "," : "") << s.threads[i].pc << status_char(s.threads[i].status);
  }
  out << ']';
  return out.str();
}

bool LockModel::has_blocked(const State& s) const {
  for (const auto& th : s.threads) {
    if (th.status == ThreadStatus::Blocked) return true;
  }
  return false;
}

std::string LockModel::event_log(const State& s) const { return format_event_log(s.lock.events()); }

Property<LockModel::State> LockModel::mutual_exclusion() {
  return {"mutual_exclusion", [](const State& s, bool) -> std::optional<std::string> {
            std::vector<std::uint32_t> inside;
            for (std::size_t i = 0; i < s.threads.size(); ++i) {
              if (s.threads[i].pc % 2 == 1) inside.push_back(static_cast<std::uint32_t>(i));
            }
            if (inside.size() > 1) return "threads " + join(inside) + " hold the lock together";
            return std::nullopt;
          },
          {}};
}

Property<LockModel::State> LockModel::no_starvation() {
  return {"starvation", [](const State& s, bool quiescent) -> std::optional<std::string> {
            if (quiescent && !s.lock.held() && !s.lock.queue().empty()) {
              std::vector<ThreadId> q(s.lock.queue().begin(), s.lock.queue().end());
              return "lock free but threads " + join(q) + " stay queued";
            }
            return std::nullopt;
          },
          {}};
}

Property<LockModel::State> LockModel::safety_and_progress() {
  return all_of<State>("lock", {mutual_exclusion(), no_starvation()});
}

SemAction SemAction::op(std::vector<SemOpRequest> ops) {
  SemAction a;
  a.ops = std::move(ops);
  return a;
}

SemAction SemAction::p(std::size_t sem, int n) { return op({SemOpRequest{sem, -n}}); }

SemAction SemAction::v(std::size_t sem, int n) { return op({SemOpRequest{sem, n}}); }

SemAction SemAction::set_value(std::size_t sem, int value) {
  SemAction a;
  a.kind = Kind::SetVal;
  a.sem = sem;
  a.value = value;
  return a;
}

std::string SemAction::name() const {
  if (kind == Kind::SetVal) return "set" + std::to_string(sem) + "=" + std::to_string(value);
  auto one = [](const SemOpRequest& r) {
    std::string s = r.delta < 0 ? "P" : r.delta > 0 ? "V" : "Z";
    s += std::to_string(r.sem_num);
    int mag = r.delta < 0 ? -r.delta : r.delta;
    if (mag > 1) s += "x" + std::to_string(mag);
    return s;
  };
  if (ops.size() == 1) return one(ops.front());
  std::string s = "{";
  for (std::size_t i = 0; i < ops.size(); ++i) s += (i ? "," : "") + one(ops[i]);
  return s + "}";
}

SemModel::SemModel(SemModelConfig config) : config_(std::move(config)) {
  if (config_.initial.empty()) throw Error(Errc::InvalidValue, "semaphore model needs at least one value");
  SemSetCore probe(config_.initial.size());
  for (const auto& program : config_.programs) {
    for (const auto& a : program) {
      if (a.kind == SemAction::Kind::Op) {
        probe.validate(a.ops);
      } else if (a.sem >= config_.initial.size()) {
        throw Error(Errc::InvalidValue, "SetVal on semaphore " + std::to_string(a.sem));
      }
    }
  }
}

SemModel::State SemModel::initial() const {
  const std::size_t n = config_.initial.size();
  State s{SemSetCore(n, config_.wake), std::vector<Thread>(config_.programs.size()), config_.initial,
          std::vector<int>(n, 0), std::vector<int>(n, 0), {}};
  for (std::size_t i = 0; i < n; ++i) s.core.set_value(i, config_.initial[i]);
  for (std::size_t t = 0; t < config_.programs.size(); ++t) {
    if (config_.programs[t].empty()) s.threads[t].status = ThreadStatus::Done;
  }
  return s;
}

std::vector<ThreadId> SemModel::runnable(const State& s) const {
  std::vector<ThreadId> out;
  for (std::size_t i = 0; i < s.threads.size(); ++i) {
    if (s.threads[i].status == ThreadStatus::Runnable) out.push_back(ThreadId{static_cast<std::uint32_t>(i)});
  }
  return out;
}

std::string SemModel::op_name(const State& s, ThreadId t) const {
  return config_.programs.at(t.value).at(s.threads.at(t.value).pc).name();
}

SemModel::State SemModel::step(const State& s, ThreadId t) const {
  State next = s;
  Thread& th = next.threads.at(t.value);
  const SemAction& action = config_.programs.at(t.value).at(th.pc);
  const std::string who = "thread " + std::to_string(t.value) + " ";
  std::vector<WaiterId> woken;

  if (action.kind == SemAction::Kind::SetVal) {
    woken = next.core.set_value(action.sem, action.value);
    next.base[action.sem] = action.value;
    next.committed[action.sem] = 0;
    ++th.pc;
    next.events.push_back(who + action.name());
  } else {
    auto r = next.core.attempt(t.value + 1, action.ops);
    woken = std::move(r.woken);
    if (r.committed) {
      for (const auto& op : action.ops) {
        next.committed[op.sem_num] += op.delta;
        next.held[op.sem_num] -= op.delta;
      }
      ++th.pc;
      next.events.push_back(who + "commit " + action.name());
    } else {
      th.status = ThreadStatus::Blocked;
      next.events.push_back(who + "block " + action.name());
    }
  }
  if (th.pc == config_.programs[t.value].size()) th.status = ThreadStatus::Done;
  for (WaiterId w : woken) {
    next.threads.at(w - 1).status = ThreadStatus::Runnable;
    next.events.push_back("thread " + std::to_string(w - 1) + " woken");
  }
  return next;
}

std::string SemModel::key(const State& s) const {
  std::string k = s.core.key();
  k += '|';
  for (const auto& th : s.threads) {
    k += std::to_string(th.pc);
    k += status_char(th.status);
  }
  k += '|' + join(s.base) + '|' + join(s.committed) + '|' + join(s.held);
  return k;
}

std::string SemModel::describe(const State& s) const {
  std::ostringstream out;
  out << "values=[" << join(s.core.values()) << "] waiters=[";
  for (std::size_t i = 0; i < s.core.waiters().size(); ++i) out << (i ? "," : "") << s.core.waiters()[i].id - 1;
  out << "] threads=[";
  for (std::size_t i = 0; i < s.threads.size(); ++i) {
    out << (i ? "," : "") << s.threads[i].pc << status_char(s.threads[i].status);
  }
  out << ']';
  return out.str();
}

bool SemModel::has_blocked(const State& s) const {
  for (const auto& th : s.threads) {
    if (th.status == ThreadStatus::Blocked) return true;
  }
  return false;
}

std::string SemModel::event_log(const State& s) const {
  std::string out;
  for (const auto& e : s.events) out += e + '\n';
  return out;
}

Property<SemModel::State> SemModel::non_negative() {
  return {"non_negative", [](const State& s, bool) -> std::optional<std::string> {
            for (std::size_t i = 0; i < s.core.nsems(); ++i) {
              if (s.core.value(i) < 0) return "semaphore " + std::to_string(i) + " is " + std::to_string(s.core.value(i));
            }
            return std::nullopt;
          },
          {}};
}

Property<SemModel::State> SemModel::atomicity() {
  return {"atomicity", [](const State& s, bool) -> std::optional<std::string> {
            for (std::size_t i = 0; i < s.core.nsems(); ++i) {
              if (s.core.value(i) != s.base[i] + s.committed[i]) {
                return "semaphore " + std::to_string(i) + " is " + std::to_string(s.core.value(i)) +
                       ", committed lists account for " + std::to_string(s.base[i] + s.committed[i]);
              }
            }
            return std::nullopt;
          },
          {}};
}

Property<SemModel::State> SemModel::no_lost_wakeup() {
  return {"lost_wakeup", [](const State& s, bool quiescent) -> std::optional<std::string> {
            if (!quiescent) return std::nullopt;
            for (const auto& w : s.core.waiters()) {
              if (s.core.can_commit(w.ops)) {
                return "thread " + std::to_string(w.id - 1) + " sleeps although its request fits";
              }
            }
            return std::nullopt;
          },
          {}};
}

Property<SemModel::State> SemModel::capacity() const {
  return {"capacity", [initial = config_.initial](const State& s, bool) -> std::optional<std::string> {
            for (std::size_t i = 0; i < initial.size(); ++i) {
              if (s.held[i] > initial[i]) {
                return std::to_string(s.held[i]) + " units of semaphore " + std::to_string(i) + " held, capacity " +
                       std::to_string(initial[i]);
              }
            }
            return std::nullopt;
          },
          {}};
}

Property<SemModel::State> SemModel::soundness() const {
  std::vector<Property<State>> parts{non_negative(), atomicity(), no_lost_wakeup()};
  bool has_setval = false;
  for (const auto& program : config_.programs) {
    for (const auto& a : program) has_setval |= a.kind == SemAction::Kind::SetVal;
  }
  if (!has_setval) parts.push_back(capacity());
  return all_of<State>("semaphore", std::move(parts));
}

}  // namespace threadshim::explorer
