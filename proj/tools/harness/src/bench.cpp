#include "threadshim/tools/bench.hpp"

#include <sys/ipc.h>
#include <sys/sem.h>
#include <sys/utsname.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <chrono>
#include <cstring>
#include <numeric>
#include <sstream>
#include <thread>
#include <vector>

#include "threadshim/error.hpp"
#include "threadshim/sem.hpp"

namespace threadshim::tools {

namespace {

using Clock = std::chrono::steady_clock;

double micros(Clock::duration d) { return std::chrono::duration<double, std::micro>(d).count(); }

BenchResult summarize(std::string name, std::vector<double> samples) {
  BenchResult r;
  r.name = std::move(name);
  r.iterations = samples.size();
  r.mean_us = std::accumulate(samples.begin(), samples.end(), 0.0) / static_cast<double>(samples.size());
  std::sort(samples.begin(), samples.end());
  std::size_t idx = (samples.size() * 95 + 99) / 100;
  r.p95_us = samples[std::min(samples.size(), std::max<std::size_t>(idx, 1)) - 1];
  r.note = machine_note();
  return r;
}

}  // namespace

CreateKind parse_create_kind(std::string_view text) {
  if (text == "thread") return CreateKind::Thread;
  if (text == "process") return CreateKind::Process;
  throw Error(Errc::ConfigError, "unknown creation kind '" + std::string(text) + "'");
}

PvKind parse_pv_kind(std::string_view text) {
  if (text == "emulated") return PvKind::Emulated;
  if (text == "os") return PvKind::OsSem;
  throw Error(Errc::ConfigError, "unknown PV kind '" + std::string(text) + "'");
}

std::string machine_note() {
  std::ostringstream out;
  utsname u{};
  if (uname(&u) == 0) out << u.sysname << ' ' << u.release << ' ' << u.machine;
  out << " cpus=" << std::thread::hardware_concurrency();
  return out.str();
}

BenchResult bench_create(CreateKind kind, std::size_t n) {
  if (n < kMinCreateIterations) {
    throw Error(Errc::InvalidValue, "creation benchmarks need at least " + std::to_string(kMinCreateIterations) +
                                        " iterations");
  }
  std::vector<double> samples;
  samples.reserve(n);
  if (kind == CreateKind::Thread) {
    for (std::size_t i = 0; i < n; ++i) {
      auto t0 = Clock::now();
      std::thread t([] {});
      t.join();
      samples.push_back(micros(Clock::now() - t0));
    }
    return summarize("create_thread", std::move(samples));
  }
  for (std::size_t i = 0; i < n; ++i) {
    auto t0 = Clock::now();
    pid_t pid = fork();
    if (pid < 0) throw Error(Errc::Unsupported, std::string("fork: ") + std::strerror(errno));
    if (pid == 0) _exit(0);
    int status = 0;
    while (waitpid(pid, &status, 0) < 0 && errno == EINTR) {
    }
    samples.push_back(micros(Clock::now() - t0));
  }
  return summarize("create_process", std::move(samples));
}

BenchResult bench_pv(PvKind kind, std::size_t n) {
  if (n < kMinPvIterations) {
    throw Error(Errc::InvalidValue, "PV benchmarks need at least " + std::to_string(kMinPvIterations) +
                                        " iterations");
  }
  std::vector<double> samples;
  samples.reserve(n);
  if (kind == PvKind::Emulated) {
    SemRegistry sems;
    SemSetId id = sems.get(0x5e11, 1, true);
    sems.set_value(id, 0, 1);
    const SemOpRequest p[] = {{0, -1}};
    const SemOpRequest v[] = {{0, 1}};
    for (std::size_t i = 0; i < n; ++i) {
      auto t0 = Clock::now();
      sems.op(id, p);
      sems.op(id, v);
      samples.push_back(micros(Clock::now() - t0));
    }
    int final_value = sems.get_value(id, 0);
    sems.remove(id);
    auto r = summarize("pv_emulated", std::move(samples));
    r.note += " final_value=" + std::to_string(final_value);
    return r;
  }

  int id = semget(IPC_PRIVATE, 1, IPC_CREAT | 0600);
  if (id < 0) throw Error(Errc::Unsupported, std::string("semget: ") + std::strerror(errno));
  if (semctl(id, 0, SETVAL, 1) < 0) {
    int err = errno;
    semctl(id, 0, IPC_RMID);
    throw Error(Errc::Unsupported, std::string("semctl: ") + std::strerror(err));
  }
  sembuf p{0, -1, 0};
  sembuf v{0, 1, 0};
  for (std::size_t i = 0; i < n; ++i) {
    auto t0 = Clock::now();
    if (semop(id, &p, 1) < 0 || semop(id, &v, 1) < 0) {
      int err = errno;
      semctl(id, 0, IPC_RMID);
      throw Error(Errc::OsError, std::string("semop: ") + std::strerror(err));
    }
    samples.push_back(micros(Clock::now() - t0));
  }
  int final_value = semctl(id, 0, GETVAL);
  semctl(id, 0, IPC_RMID);
  auto r = summarize("pv_os", std::move(samples));
  r.note += " final_value=" + std::to_string(final_value);
  return r;
}

std::string format_result(const BenchResult& r, double reference_us) {
  std::ostringstream out;
  out << "benchmark=" << r.name << '\n'
      << "iterations=" << r.iterations << '\n'
      << "mean_us=" << r.mean_us << '\n'
      << "p95_us=" << r.p95_us << '\n'
      << "reference_us=" << reference_us << '\n'
      << "machine=" << r.note << '\n';
  return out.str();
}

}  // namespace threadshim::tools
