#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace fgd {

inline std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

inline std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

// Every stage derives its own stream from the single run seed.
inline std::uint64_t sub_seed(std::uint64_t master, std::string_view tag) {
    return mix64(master ^ fnv1a64(tag));
}

// mt19937_64 has a standardized output sequence; distributions are hand-rolled
// here because the std:: ones are implementation-defined and would break the
// bit-reproducibility contract across toolchains.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}

    std::uint64_t next_u64() { return eng_(); }

    // [0, 1)
    double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    bool bernoulli(double p) { return uniform() < p; }

    // [0, n)
    std::size_t index(std::size_t n) {
        if (n <= 1) return 0;
        // rejection sampling keeps the draw unbiased
        std::uint64_t limit = std::uint64_t(-1) - std::uint64_t(-1) % n;
        std::uint64_t x = eng_();
        while (x >= limit) x = eng_();
        return static_cast<std::size_t>(x % n);
    }

    // inclusive range
    long long uniform_int(long long lo, long long hi) {
        return lo + static_cast<long long>(index(static_cast<std::size_t>(hi - lo + 1)));
    }

    template <class T>
    void shuffle(std::vector<T>& v) {
        if (v.size() < 2) return;
        for (std::size_t i = v.size() - 1; i > 0; --i) {
            std::size_t j = index(i + 1);
            std::swap(v[i], v[j]);
        }
    }

private:
    std::mt19937_64 eng_;
};

}  // namespace fgd
