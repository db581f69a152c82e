#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <stdexcept>
#include <string>

namespace sgwc {

/// Error type for all library failures (parse errors, contract violations,
/// solver non-convergence). The message carries the context.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Uniform double in [0,1) from the top 53 bits of the generator output.
/// Unlike std::uniform_real_distribution this is bit-portable.
inline double uniform_unit(std::mt19937_64& rng)
{
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// Uniform double in [lo, hi).
inline double uniform_in(std::mt19937_64& rng, double lo, double hi)
{
    return lo + (hi - lo) * uniform_unit(rng);
}

/// Uniform integer in [0, n).
inline std::size_t uniform_index(std::mt19937_64& rng, std::size_t n)
{
    // rejection-free: bias is < 2^-53 for any n we use
    return static_cast<std::size_t>(uniform_unit(rng) * static_cast<double>(n)) % n;
}

/// FNV-1a 64-bit over a byte range.
std::uint64_t fnv1a64(const void* data, std::size_t size,
                      std::uint64_t state = 14695981039346656037ull);

/// Fold a value into a running FNV-1a state.
template <typename T>
std::uint64_t fnv1a64_value(const T& value, std::uint64_t state)
{
    static_assert(std::is_trivially_copyable_v<T>);
    return fnv1a64(&value, sizeof(T), state);
}

std::uint64_t hash_file(const std::string& path);

/// Run fn(i) for i in [0, n) on up to `threads` workers (0 = hardware default).
/// Iterations must be independent; each writes only its own slots.
void parallel_for(int n, int threads, const std::function<void(int)>& fn);

int resolve_thread_count(int requested);

/// Wall-clock seconds.
double now_seconds();

}  // namespace sgwc
