#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace vqacl {

// Mixes a base seed with a purpose tag so that independent consumers
// (data generation, shuffling, init, fisher sampling, ...) get decoupled
// streams from one experiment seed.
std::uint64_t derive_seed(std::uint64_t seed, std::string_view purpose);

std::uint64_t fnv1a64(std::string_view s);

// mt19937_64 with hand-rolled value mapping. std::*_distribution is
// implementation-defined; these mappings keep outputs identical across
// standard libraries.
class RngStream {
  public:
    explicit RngStream(std::uint64_t seed) : eng_(seed) {}
    RngStream(std::uint64_t seed, std::string_view purpose)
        : eng_(derive_seed(seed, purpose)) {}

    // uniform in [0,1) with 53-bit resolution
    double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // uniform integer in [0,n), unbiased via rejection
    std::int64_t uniform_int(std::int64_t n);

    template <class T>
    void shuffle(std::vector<T>& v) {
        for (std::int64_t i = static_cast<std::int64_t>(v.size()) - 1; i > 0; --i) {
            const std::int64_t j = uniform_int(i + 1);
            std::swap(v[static_cast<std::size_t>(i)], v[static_cast<std::size_t>(j)]);
        }
    }

    // k distinct indices drawn uniformly from [0,n), in draw order
    std::vector<int> sample_without_replacement(int n, int k);

  private:
    std::mt19937_64 eng_;
};

}  // namespace vqacl
