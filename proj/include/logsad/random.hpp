#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace logsad {

// Seeded generator whose output is identical on every standard library.
// std::*_distribution and std::shuffle are implementation-defined, so the
// draws below are derived from mt19937_64 directly.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next() { return engine_(); }
    // Uniform on [0, 1).
    double uniform();
    // Uniform on [0, n). n must be > 0.
    std::size_t index(std::size_t n);
    // Standard normal via Box-Muller.
    double normal();

    template <class T>
    void shuffle(std::vector<T>& values) {
        for (std::size_t i = values.size(); i > 1; --i) std::swap(values[i - 1], values[index(i)]);
    }

private:
    std::mt19937_64 engine_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace logsad
