#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace dpar {

// Seeded, replayable random streams. A (seed, stream) pair fully determines
// the generated sequence, and named streams hash the name to a stream id so
// independent pipeline stages (split, appr noise, batching, gradient noise,
// parameter init) never share draws. mt19937_64 output is pinned by the
// standard, so sequences are portable across platforms.
//
// Statistical quality only; not a cryptographic generator.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : Rng(seed, std::uint64_t{0}) {}
    Rng(std::uint64_t seed, std::uint64_t stream);
    Rng(std::uint64_t seed, std::string_view stream_name)
        : Rng(seed, stream_id(stream_name)) {}

    std::uint64_t next_u64() { return engine_(); }

    // Uniform on the open interval (0,1); never returns an endpoint.
    double uniform01();

    // Uniform integer in [0, n), n > 0. Rejection sampling, no modulo bias.
    std::uint64_t uniform_below(std::uint64_t n);

    double gaussian(double sigma);  // zero mean, standard deviation sigma
    double gumbel(double beta);     // location 0, scale beta
    double laplace(double scale);   // location 0, scale b

    static std::uint64_t stream_id(std::string_view name);

private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace dpar
