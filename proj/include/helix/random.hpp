#ifndef HELIX_RANDOM_HPP
#define HELIX_RANDOM_HPP

// Counter-based Gaussian noise: every draw is a pure function of
// (stream seed, step, slot), so trajectories do not depend on the order in
// which they (or their ions) are processed.

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <utility>

namespace helix
{

inline constexpr std::uint64_t golden_gamma = 0x9e3779b97f4a7c15ULL;

// splitmix64 finalizer; a bijection on 64-bit words.
constexpr std::uint64_t mix64(std::uint64_t z)
{
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Distinct (rate, run) cells under one global seed map to distinct seeds.
constexpr std::uint64_t trajectory_seed(std::uint64_t global_seed, std::uint32_t rate_index, std::uint32_t run_index)
{
    const std::uint64_t cell = (static_cast<std::uint64_t>(rate_index) << 32) | run_index;
    return mix64(global_seed + golden_gamma * (cell + 1));
}

// Uniform in (0, 1]; never returns 0 so it is safe under log.
constexpr double to_unit_open(std::uint64_t bits)
{
    return (static_cast<double>(bits >> 11) + 1.0) * 0x1.0p-53;
}

// Uniform random bit generator over the sequence mix64(key + gamma * i),
// i = 1, 2, ...
class counter_engine
{
public:
    using result_type = std::uint64_t;

    explicit counter_engine(std::uint64_t key) : key_(key) {}

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

    result_type operator()() { return mix64(key_ + golden_gamma * ++count_); }

private:
    std::uint64_t key_;
    std::uint64_t count_ = 0;
};

// Ziggurat sampler for the standard normal with 128 layers (Marsaglia and
// Tsang, in Doornik's formulation). One 64-bit word per draw on the fast
// path: the low 7 bits pick the layer, the top 53 give the abscissa.
class ziggurat
{
public:
    static const ziggurat& instance()
    {
        static const ziggurat z;
        return z;
    }

    template <class Engine>
    double operator()(Engine& eng) const
    {
        for(;;)
        {
            const std::uint64_t bits = eng();
            const double u = static_cast<double>(bits >> 11) * 0x1.0p-52 - 1.0; // [-1, 1)
            const std::size_t i = bits & 0x7f;
            if(std::abs(u) < ratio_[i]) return u * x_[i];
            if(i == 0) return tail(eng, u < 0.0);
            const double x = u * x_[i];
            const double f0 = std::exp(-0.5 * (x_[i] * x_[i] - x * x));
            const double f1 = std::exp(-0.5 * (x_[i + 1] * x_[i + 1] - x * x));
            if(f1 + to_unit_open(eng()) * (f0 - f1) < 1.0) return x;
        }
    }

    const double* abscissae() const { return x_.data(); }
    const double* ratios() const { return ratio_.data(); }

private:
    static constexpr double r_ = 3.442619855899;      // start of the tail
    static constexpr double v_ = 9.91256303526217e-3; // area of each layer

    ziggurat()
    {
        double f = std::exp(-0.5 * r_ * r_);
        x_[0] = v_ / f;
        x_[1] = r_;
        x_[128] = 0.0;
        for(std::size_t i = 2; i < 128; ++i)
        {
            x_[i] = std::sqrt(-2.0 * std::log(v_ / x_[i - 1] + f));
            f = std::exp(-0.5 * x_[i] * x_[i]);
        }
        for(std::size_t i = 0; i < 128; ++i) ratio_[i] = x_[i + 1] / x_[i];
    }

    template <class Engine>
    static double tail(Engine& eng, bool negative)
    {
        double x, y;
        do
        {
            x = std::log(to_unit_open(eng())) / r_;
            y = std::log(to_unit_open(eng()));
        } while(-2.0 * y < x * x);
        return negative ? x - r_ : r_ - x;
    }

    std::array<double, 129> x_{};
    std::array<double, 128> ratio_{};
};

class noise_stream
{
public:
    explicit noise_stream(std::uint64_t seed = 0) : seed_(seed) {}

    std::uint64_t seed() const { return seed_; }

    // Key shared by every draw of one step; hoist it out of per-slot loops.
    std::uint64_t step_key(std::uint64_t step) const { return mix64(seed_ ^ mix64(step + golden_gamma)); }

    // Standard normal number m of a step: the ziggurat run on a counter
    // engine private to m (engines are 64 counter values apart).
    double normal(std::uint64_t step, std::uint64_t m) const { return normal_keyed(step_key(step), m); }

    static double normal_keyed(std::uint64_t step_key, std::uint64_t m)
    {
        counter_engine eng(step_key + golden_gamma * (m << 6));
        return ziggurat::instance()(eng);
    }

    // Normals 2 slot and 2 slot + 1 of a step.
    std::pair<double, double> normal_pair(std::uint64_t step, std::uint64_t slot) const
    {
        const std::uint64_t key = step_key(step);
        return {normal_keyed(key, 2 * slot), normal_keyed(key, 2 * slot + 1)};
    }

    // out[m] = normal(step, m) for all m. The ziggurat fast path (about 99%
    // of draws) runs as a vectorizable loop; rejected draws are redone with
    // the scalar sampler, which repeats the same first word and continues.
    void fill_normals(std::uint64_t step, std::span<double> out) const
    {
        const std::uint64_t key = step_key(step);
        const ziggurat& z = ziggurat::instance();
        const double* xs = z.abscissae();
        const double* ratio = z.ratios();
        double* o = out.data();
        const std::size_t n = out.size();
        const double nan = std::numeric_limits<double>::quiet_NaN();
#pragma omp simd
        for(std::size_t m = 0; m < n; ++m)
        {
            const std::uint64_t bits = mix64(key + golden_gamma * ((static_cast<std::uint64_t>(m) << 6) + 1));
            const double u = static_cast<double>(bits >> 11) * 0x1.0p-52 - 1.0;
            const std::uint64_t i = bits & 0x7f;
            o[m] = std::abs(u) < ratio[i] ? u * xs[i] : nan;
        }
        for(std::size_t m = 0; m < n; ++m)
        {
            if(std::isnan(o[m])) o[m] = normal_keyed(key, m);
        }
    }

    double uniform(std::uint64_t step, std::uint64_t slot) const
    {
        return to_unit_open(mix64(step_key(step) + golden_gamma * (2 * slot + 1)));
    }

private:
    std::uint64_t seed_;
};

} // namespace helix

#endif // HELIX_RANDOM_HPP
