#ifndef CGMM_RNG_HPP
#define CGMM_RNG_HPP

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace cgmm {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

// Derives the seed of a named sub-stream from the master seed. Every random
// draw in the library flows from the master seed through this function, so
// results do not depend on execution order or thread count.
inline std::uint64_t derive_seed(std::uint64_t master, std::string_view purpose,
                                 std::uint64_t index = 0) {
    std::uint64_t h = 0xcbf29ce484222325ull; // FNV-1a over the purpose string
    for (unsigned char c : purpose) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return splitmix64(splitmix64(master ^ h) ^ index);
}

// mt19937_64 with portable real-valued mappings. The standard distributions
// are implementation-defined, so we map raw bits ourselves.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    std::uint64_t next() { return gen_(); }

    // [0, 1), 53-bit resolution
    double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

    double exponential() { return -std::log1p(-uniform()); }

    // inclusive range
    int uniform_int(int lo, int hi) {
        return lo + static_cast<int>(gen_() % static_cast<std::uint64_t>(hi - lo + 1));
    }

    // symmetric Dirichlet(alpha = 1): normalized iid Exp(1)
    std::vector<double> dirichlet(int n) {
        std::vector<double> v(n);
        double sum = 0.0;
        for (double& x : v) {
            x = exponential();
            sum += x;
        }
        for (double& x : v) x /= sum;
        return v;
    }

    // in-place Fisher-Yates
    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::size_t j = gen_() % i;
            std::swap(v[i - 1], v[j]);
        }
    }

private:
    std::mt19937_64 gen_;
};

} // namespace cgmm

#endif
