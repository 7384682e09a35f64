#pragma once

#include <cstdint>
#include <cstdlib>
#include <stdexcept>
#include <string>

namespace spb {

inline constexpr const char* kVersion = "0.1.0";

// Error taxonomy. All are std::runtime_error so callers can catch broadly.
struct range_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct format_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct resource_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct precondition_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct construction_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct parse_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct io_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

namespace detail {
inline std::uint64_t env_u64(const char* name, std::uint64_t fallback) {
  const char* v = std::getenv(name);
  if (v == nullptr || *v == '\0') return fallback;
  char* end = nullptr;
  unsigned long long parsed = std::strtoull(v, &end, 10);
  if (end == v) return fallback;
  return static_cast<std::uint64_t>(parsed);
}
}  // namespace detail

/// Process-wide resource knobs. Only the memory cap and worker count are read
/// from the environment (SPB_MEMORY_CAP in bytes, SPB_THREADS).
struct Limits {
  std::uint64_t memory_cap_bytes = std::uint64_t{1} << 30;
  unsigned threads = 1;

  // Largest representable element: one bit per integer within the cap.
  std::uint64_t max_capacity() const { return memory_cap_bytes * 8 - 1; }
};

inline Limits& limits() {
  static Limits l = [] {
    Limits x;
    x.memory_cap_bytes = detail::env_u64("SPB_MEMORY_CAP", x.memory_cap_bytes);
    x.threads = static_cast<unsigned>(detail::env_u64("SPB_THREADS", 1));
    if (x.threads == 0) x.threads = 1;
    return x;
  }();
  return l;
}

inline void check_capacity(std::uint64_t capacity) {
  if (capacity > limits().max_capacity())
    throw resource_error("capacity " + std::to_string(capacity) +
                         " exceeds configured cap " +
                         std::to_string(limits().max_capacity()));
}

}  // namespace spb
