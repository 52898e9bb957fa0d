#ifndef PMLMC_RNG_HPP
#define PMLMC_RNG_HPP

#include <array>
#include <cmath>
#include <cstdint>
#include <vector>

#include <Eigen/Core>

namespace pmlmc {

// Counter-based generator (Philox 4x32-10, Salmon et al. 2011). A stream is
// addressed by (seed, level, sample index, role) instead of by call order, so
// every sample is reproducible no matter how work is scheduled. MLMC pairs
// the fine and coarse solve of one correction sample on the same key, and
// distinct levels/indices never share a counter.

enum class rng_role : std::uint32_t { field = 0, auxiliary = 1 };

struct rng_key {
    std::uint64_t seed = 0;
    std::uint32_t level = 0;      // estimator level, 1-based
    std::uint64_t index = 0;      // sample index within the level
    rng_role role = rng_role::field;
    std::uint32_t attempt = 0;    // redraw sub-counter for rejected realizations

    friend bool operator==(const rng_key&, const rng_key&) = default;
};

namespace detail {

inline void philox_round(std::array<std::uint32_t, 4>& ctr,
                         std::array<std::uint32_t, 2>& key) {
    constexpr std::uint32_t m0 = 0xD2511F53u, m1 = 0xCD9E8D57u;
    const std::uint64_t p0 = std::uint64_t(m0) * ctr[0];
    const std::uint64_t p1 = std::uint64_t(m1) * ctr[2];
    const std::uint32_t hi0 = std::uint32_t(p0 >> 32), lo0 = std::uint32_t(p0);
    const std::uint32_t hi1 = std::uint32_t(p1 >> 32), lo1 = std::uint32_t(p1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    key[0] += 0x9E3779B9u;
    key[1] += 0xBB67AE85u;
}

inline std::array<std::uint32_t, 4> philox10(std::array<std::uint32_t, 4> ctr,
                                             std::array<std::uint32_t, 2> key) {
    for (int round = 0; round < 10; ++round) philox_round(ctr, key);
    return ctr;
}

// 53-bit mantissa uniform in [0,1)
inline double to_unit(std::uint64_t z) {
    return double(z >> 11) * 0x1.0p-53;
}

} // namespace detail

// One keyed stream of standard normal variates. Consumes Philox blocks
// sequentially; each block yields a Box-Muller pair.
class rng_stream {
public:
    explicit rng_stream(const rng_key& k) : key_(k) {}

    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        const auto words = block(block_counter_++);
        const std::uint64_t z0 = (std::uint64_t(words[0]) << 32) | words[1];
        const std::uint64_t z1 = (std::uint64_t(words[2]) << 32) | words[3];
        // u1 in (0,1]: avoids log(0)
        const double u1 = 1.0 - detail::to_unit(z0);
        const double u2 = detail::to_unit(z1);
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

    Eigen::VectorXd normals(int n) {
        Eigen::VectorXd out(n);
        for (int i = 0; i < n; ++i) out[i] = normal();
        return out;
    }

    const rng_key& key() const { return key_; }

private:
    std::array<std::uint32_t, 4> block(std::uint32_t counter) const {
        // c3 packs role(4) | attempt(8) | block(20): injective over the
        // key fields, 2^20 blocks (2^21 normals) per stream.
        const std::uint32_t c3 = (std::uint32_t(key_.role) << 28) |
                                 ((key_.attempt & 0xFFu) << 20) |
                                 (counter & 0xFFFFFu);
        return detail::philox10(
            {std::uint32_t(key_.index), std::uint32_t(key_.index >> 32),
             key_.level, c3},
            {std::uint32_t(key_.seed), std::uint32_t(key_.seed >> 32)});
    }

    rng_key key_;
    std::uint32_t block_counter_ = 0;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

// M independent standard normal draws for a key; identical key, identical
// output.
inline Eigen::VectorXd draw_xi(const rng_key& key, int m) {
    rng_stream s(key);
    return s.normals(m);
}

} // namespace pmlmc

#endif
