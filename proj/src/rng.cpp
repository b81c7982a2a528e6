#include "vqacl/rng.hpp"

#include <stdexcept>

namespace vqacl {
namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

}  // namespace

std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (char c : s) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::uint64_t derive_seed(std::uint64_t seed, std::string_view purpose) {
    return splitmix64(seed ^ fnv1a64(purpose));
}

std::int64_t RngStream::uniform_int(std::int64_t n) {
    if (n <= 0) throw std::invalid_argument("uniform_int: n must be positive");
    const std::uint64_t un = static_cast<std::uint64_t>(n);
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % un;
    std::uint64_t v;
    do {
        v = eng_();
    } while (v >= limit);
    return static_cast<std::int64_t>(v % un);
}

std::vector<int> RngStream::sample_without_replacement(int n, int k) {
    if (k < 0 || k > n) throw std::invalid_argument("sample_without_replacement: k out of range");
    std::vector<int> pool(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) pool[static_cast<std::size_t>(i)] = i;
    // partial Fisher-Yates: first k entries are the sample
    for (int i = 0; i < k; ++i) {
        const std::int64_t j = i + uniform_int(n - i);
        std::swap(pool[static_cast<std::size_t>(i)], pool[static_cast<std::size_t>(j)]);
    }
    pool.resize(static_cast<std::size_t>(k));
    return pool;
}

}  // namespace vqacl
