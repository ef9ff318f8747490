#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace fairbayes {

// Derive an independent 64-bit seed from a master seed and a stream index
// (splitmix64 finalizer). Used to give each replication and each stage of a
// replication its own generator.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream);

// Seeded generator whose output streams depend only on mt19937_64 (fully
// specified by the standard), never on implementation-defined distributions.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    // Uniform on the open interval (0,1).
    double uniform01();
    // Uniform integer in [0, n).
    std::size_t uniform_index(std::size_t n);
    // Standard normal by inversion of the CDF.
    double normal();
    bool bernoulli(double p) { return uniform01() < p; }
    // Index drawn with probabilities proportional to `weights`.
    std::size_t categorical(std::span<const double> weights);

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::swap(v[i - 1], v[uniform_index(i)]);
        }
    }

private:
    std::mt19937_64 engine_;
};

}  // namespace fairbayes
