#include "threadshim/sem.hpp"

#include <algorithm>
#include <sstream>

#include "threadshim/error.hpp"

namespace threadshim {

// SEMVMX on Linux.
constexpr int kMaxSemValue = 32767;

SemSetCore::SemSetCore(std::size_t nsems, WakePolicy policy)
    : values_(nsems, 0), policy_(policy) {}

int SemSetCore::value(std::size_t sem) const {
  if (sem >= values_.size()) throw Error(Errc::InvalidValue, "sem_num " + std::to_string(sem));
  return values_[sem];
}

std::size_t SemSetCore::waiter_count(std::size_t sem) const {
  return static_cast<std::size_t>(std::count_if(waiters_.begin(), waiters_.end(), [&](const Waiter& w) {
    return std::any_of(w.ops.begin(), w.ops.end(),
                       [&](const SemOpRequest& op) { return op.sem_num == sem; });
  }));
}

void SemSetCore::validate(std::span<const SemOpRequest> ops) const {
  if (ops.empty()) throw Error(Errc::InvalidValue, "empty op list");
  for (const auto& op : ops) {
    if (op.undo) throw Error(Errc::Unsupported, "SEM_UNDO is not emulated");
    if (op.sem_num >= values_.size()) {
      throw Error(Errc::InvalidValue, "sem_num " + std::to_string(op.sem_num) + " out of range");
    }
  }
}

bool SemSetCore::apply(std::vector<int>& values, std::span<const SemOpRequest> ops) {
  for (const auto& op : ops) {
    int& v = values[op.sem_num];
    if (op.delta == 0) {
      if (v != 0) return false;
    } else if (op.delta < 0) {
      if (v + op.delta < 0) return false;
      v += op.delta;
    } else {
      if (v > kMaxSemValue - op.delta) throw Error(Errc::InvalidValue, "semaphore value overflow");
      v += op.delta;
    }
  }
  return true;
}

bool SemSetCore::can_commit(std::span<const SemOpRequest> ops) const {
  std::vector<int> scratch = values_;
  return apply(scratch, ops);
}

bool SemSetCore::try_commit(std::span<const SemOpRequest> ops) {
  std::vector<int> scratch = values_;
  if (!apply(scratch, ops)) return false;
  values_ = std::move(scratch);
  return true;
}

SemSetCore::Attempt SemSetCore::attempt(WaiterId waiter, std::span<const SemOpRequest> ops) {
  Attempt result;
  result.committed = try_commit(ops);
  if (!result.committed) waiters_.push_back({waiter, {ops.begin(), ops.end()}});
  result.woken = wake_pass();
  return result;
}

std::vector<WaiterId> SemSetCore::set_value(std::size_t sem, int value) {
  if (sem >= values_.size()) throw Error(Errc::InvalidValue, "sem_num " + std::to_string(sem));
  if (value < 0 || value > kMaxSemValue) {
    throw Error(Errc::InvalidValue, "value " + std::to_string(value));
  }
  values_[sem] = value;
  return wake_pass();
}

bool SemSetCore::remove_waiter(WaiterId waiter) {
  auto it = std::find_if(waiters_.begin(), waiters_.end(),
                         [&](const Waiter& w) { return w.id == waiter; });
  if (it == waiters_.end()) return false;
  waiters_.erase(it);
  return true;
}

std::vector<WaiterId> SemSetCore::clear_waiters() {
  std::vector<WaiterId> ids;
  for (const auto& w : waiters_) ids.push_back(w.id);
  waiters_.clear();
  return ids;
}

std::vector<WaiterId> SemSetCore::wake_pass() {
  std::vector<WaiterId> woken;
  if (policy_ == WakePolicy::None) return woken;
  std::vector<int> scratch = values_;
  for (auto it = waiters_.begin(); it != waiters_.end();) {
    std::vector<int> trial = scratch;
    if (apply(trial, it->ops)) {
      scratch = std::move(trial);
      woken.push_back(it->id);
      it = waiters_.erase(it);
    } else {
      ++it;
    }
  }
  return woken;
}

std::string SemSetCore::key() const {
  std::ostringstream out;
  out << 'v';
  for (int v : values_) out << v << ',';
  out << "|q";
  for (const auto& w : waiters_) {
    out << w.id << ':';
    for (const auto& op : w.ops) out << op.sem_num << '/' << op.delta << ';';
  }
  return out.str();
}

std::shared_ptr<SemRegistry::Set> SemRegistry::find(SemSetId id) const {
  std::lock_guard lock(mu_);
  auto it = sets_.find(id);
  if (it == sets_.end()) throw Error(Errc::NotFound, "semaphore set " + std::to_string(id));
  return it->second;
}

SemSetId SemRegistry::get(std::int64_t key, std::size_t nsems, bool create, bool exclusive) {
  std::lock_guard lock(mu_);
  if (auto it = by_key_.find(key); it != by_key_.end()) {
    if (create && exclusive) throw Error(Errc::AlreadyExists, "key " + std::to_string(key));
    const auto& set = sets_.at(it->second);
    if (nsems > set->core.nsems()) {
      throw Error(Errc::NsemsMismatch, "requested " + std::to_string(nsems) + " but set has " +
                                           std::to_string(set->core.nsems()));
    }
    return it->second;
  }
  if (!create) throw Error(Errc::NotFound, "key " + std::to_string(key));
  if (nsems == 0) throw Error(Errc::InvalidValue, "nsems must be at least 1");
  SemSetId id = next_id_++;
  sets_.emplace(id, std::make_shared<Set>(key, nsems));
  by_key_.emplace(key, id);
  return id;
}

void SemRegistry::notify(Set& set, const std::vector<WaiterId>& woken) {
  if (woken.empty()) return;
  for (WaiterId w : woken) {
    set.woken.insert(w);
    if (gate_) {
      if (auto it = set.participants.find(w); it != set.participants.end()) gate_->on_wake(it->second);
    }
  }
  set.cv.notify_all();
}

int SemRegistry::control(SemSetId id, std::size_t sem_num, SemCommand cmd, int value) {
  if (cmd == SemCommand::Remove) {
    std::shared_ptr<Set> set;
    {
      std::lock_guard lock(mu_);
      auto it = sets_.find(id);
      if (it == sets_.end()) throw Error(Errc::NotFound, "semaphore set " + std::to_string(id));
      set = it->second;
      by_key_.erase(set->key);
      sets_.erase(it);
    }
    std::lock_guard lock(set->mu);
    set->removed = true;
    std::vector<WaiterId> failed = set->core.clear_waiters();
    for (WaiterId w : failed) {
      if (gate_) {
        if (auto it = set->participants.find(w); it != set->participants.end()) gate_->on_wake(it->second);
      }
    }
    set->cv.notify_all();
    return 0;
  }

  auto set = find(id);
  std::lock_guard lock(set->mu);
  if (cmd == SemCommand::GetVal) return set->core.value(sem_num);
  notify(*set, set->core.set_value(sem_num, value));
  return 0;
}

void SemRegistry::op(SemSetId id, std::span<const SemOpRequest> ops,
                     std::optional<std::chrono::nanoseconds> timeout) {
  auto set = find(id);
  const bool nowait = std::any_of(ops.begin(), ops.end(), [](const auto& o) { return o.nowait; });
  const auto deadline = timeout ? std::optional(std::chrono::steady_clock::now() + *timeout)
                                : std::nullopt;
  std::unique_lock lock(set->mu);
  set->core.validate(ops);

  const WaiterId me = next_waiter_++;
  if (gate_) set->participants[me] = gate_->current();
  struct Cleanup {
    Set& set;
    WaiterId me;
    ~Cleanup() { set.participants.erase(me); }
  } cleanup{*set, me};

  for (;;) {
    if (gate_) {
      lock.unlock();
      gate_->before_step();
      lock.lock();
    }
    if (set->removed) throw Error(Errc::SetRemoved, "semaphore set " + std::to_string(id));

    if (nowait) {
      if (set->core.try_commit(ops)) {
        notify(*set, set->core.wake_pass());
        return;
      }
      throw Error(Errc::WouldBlock, "semaphore set " + std::to_string(id));
    }

    SemSetCore::Attempt result = set->core.attempt(me, ops);
    notify(*set, result.woken);
    if (result.committed) return;

    if (gate_) {
      lock.unlock();
      gate_->on_block();
      lock.lock();
    }
    auto ready = [&] { return set->removed || set->woken.contains(me); };
    if (deadline) {
      if (!set->cv.wait_until(lock, *deadline, ready)) {
        set->core.remove_waiter(me);
        notify(*set, set->core.wake_pass());
        throw Error(Errc::Timeout, "semaphore set " + std::to_string(id));
      }
    } else {
      set->cv.wait(lock, ready);
    }
    if (set->removed) throw Error(Errc::SetRemoved, "semaphore set " + std::to_string(id));
    set->woken.erase(me);
  }
}

std::size_t SemRegistry::waiter_count(SemSetId id, std::size_t sem_num) const {
  auto set = find(id);
  std::lock_guard lock(set->mu);
  return set->core.waiter_count(sem_num);
}

std::string SemRegistry::dump() const {
  std::vector<std::pair<SemSetId, std::shared_ptr<Set>>> sets;
  {
    std::lock_guard lock(mu_);
    sets.assign(sets_.begin(), sets_.end());
  }
  std::ostringstream out;
  for (const auto& [id, set] : sets) {
    std::lock_guard lock(set->mu);
    out << id << ' ' << set->key << " values=[";
    for (std::size_t i = 0; i < set->core.nsems(); ++i) out << (i ? "," : "") << set->core.value(i);
    out << "] waiters=[";
    for (std::size_t i = 0; i < set->core.nsems(); ++i) out << (i ? "," : "") << set->core.waiter_count(i);
    out << "]\n";
  }
  return out.str();
}

}  // namespace threadshim
