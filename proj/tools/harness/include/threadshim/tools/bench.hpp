#pragma once

#include <cstddef>
#include <string>
#include <string_view>

namespace threadshim::tools {

enum class CreateKind { Thread, Process };
enum class PvKind { Emulated, OsSem };

CreateKind parse_create_kind(std::string_view text);
PvKind parse_pv_kind(std::string_view text);

struct BenchResult {
  std::string name;
  std::size_t iterations = 0;
  double mean_us = 0;
  double p95_us = 0;
  std::string note;
};

inline constexpr std::size_t kMinCreateIterations = 100;
inline constexpr std::size_t kMinPvIterations = 10'000;

// Published timings from a 2 GHz Pentium 4, for side-by-side printing only.
inline constexpr double kReferenceThreadCreateUs = 52;
inline constexpr double kReferenceProcessCreateUs = 1700;
inline constexpr double kReferenceEmulatedPvUs = 66;
inline constexpr double kReferenceOsPvUs = 200;

/// Create and tear down one thread (or fork and reap one child) per sample.
BenchResult bench_create(CreateKind kind, std::size_t n);
/// One uncontended P+V pair per sample, on an emulated set or a kernel SysV set.
/// OsSem throws Unsupported where SysV semaphores are unavailable.
BenchResult bench_pv(PvKind kind, std::size_t n);

/// `uname` release, machine, and CPU count.
std::string machine_note();

/// key=value lines.
std::string format_result(const BenchResult& result, double reference_us);

}  // namespace threadshim::tools
