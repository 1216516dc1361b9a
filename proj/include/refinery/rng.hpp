#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace refinery {

/// Deterministic random source. All draws are implemented by hand on top of
/// mt19937_64 so that a (seed, draw sequence) pair produces identical values
/// on every platform, independent of standard-library distribution internals.
class Rng {
  public:
    explicit Rng(uint64_t seed) : engine_(seed) {}

    uint64_t next() { return engine_(); }

    /// Uniform double in [0, 1).
    double uniform() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Uniform integer in [lo, hi], inclusive.
    int uniform_int(int lo, int hi) {
        uint64_t span = static_cast<uint64_t>(hi - lo) + 1;
        return lo + static_cast<int>(engine_() % span);
    }

    /// Index sampled proportionally to the (non-negative) weights. The caller
    /// guarantees at least one strictly positive weight.
    size_t categorical(const std::vector<double> &weights) {
        double total = 0.0;
        for (double w : weights) total += w;
        double r = uniform() * total;
        double acc = 0.0;
        for (size_t i = 0; i < weights.size(); ++i) {
            acc += weights[i];
            if (r < acc) return i;
        }
        return weights.size() - 1;
    }

    template <typename T>
    void shuffle(std::vector<T> &values) {
        for (size_t i = values.size(); i > 1; --i) {
            size_t j = static_cast<size_t>(engine_() % i);
            std::swap(values[i - 1], values[j]);
        }
    }

    /// k distinct indices drawn from [0, n), in draw order.
    std::vector<int> sample_indices(int n, int k) {
        std::vector<int> pool(n);
        for (int i = 0; i < n; ++i) pool[i] = i;
        std::vector<int> out;
        for (int i = 0; i < k && !pool.empty(); ++i) {
            size_t j = static_cast<size_t>(engine_() % pool.size());
            out.push_back(pool[j]);
            pool.erase(pool.begin() + static_cast<long>(j));
        }
        return out;
    }

  private:
    std::mt19937_64 engine_;
};

}  // namespace refinery
