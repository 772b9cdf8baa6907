/*
   Copyright 2026 The slowfast Authors

   Licensed under the Apache License, Version 2.0 (the "License");
   you may not use this file except in compliance with the License.
   You may obtain a copy of the License at

       http://www.apache.org/licenses/LICENSE-2.0

   Unless required by applicable law or agreed to in writing, software
   distributed under the License is distributed on an "AS IS" BASIS,
   WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
   See the License for the specific language governing permissions and
   limitations under the License.
*/

#pragma once

// Philox4x32-10 counter-based generator (Salmon et al., SC'11). Every draw
// is a pure function of (counter, key), so streams can be consumed in any
// order and on any number of threads with identical results.

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>

namespace slowfast {

class Philox4x32 {
public:
    using Counter = std::array<std::uint32_t, 4>;
    using Key = std::array<std::uint32_t, 2>;

    static constexpr Counter generate(Counter ctr, Key key)
    {
        ctr = round(ctr, key);
        for (int r = 1; r < 10; ++r) {
            key[0] += kW0;
            key[1] += kW1;
            ctr = round(ctr, key);
        }
        return ctr;
    }

private:
    static constexpr std::uint32_t kM0 = 0xD2511F53u;
    static constexpr std::uint32_t kM1 = 0xCD9E8D57u;
    static constexpr std::uint32_t kW0 = 0x9E3779B9u;
    static constexpr std::uint32_t kW1 = 0xBB67AE85u;

    static constexpr Counter round(Counter const& c, Key const& k)
    {
        std::uint64_t const p0 = std::uint64_t{kM0} * c[0];
        std::uint64_t const p1 = std::uint64_t{kM1} * c[2];
        auto const hi0 = static_cast<std::uint32_t>(p0 >> 32);
        auto const lo0 = static_cast<std::uint32_t>(p0);
        auto const hi1 = static_cast<std::uint32_t>(p1 >> 32);
        auto const lo1 = static_cast<std::uint32_t>(p1);
        return {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
    }
};

/// Uniform double in the open interval (0, 1) from the top 52 of 64 bits.
/// With 53 bits the largest value would round to 1.
inline double uniform_open(std::uint32_t hi, std::uint32_t lo)
{
    std::uint64_t const bits = (std::uint64_t{hi} << 32 | lo) >> 12;
    return (static_cast<double>(bits) + 0.5) * 0x1.0p-52;
}

/// Two independent standard normals from one Philox block (Box-Muller).
inline std::array<double, 2> box_muller(Philox4x32::Counter const& block)
{
    double const u1 = uniform_open(block[0], block[1]);
    double const u2 = uniform_open(block[2], block[3]);
    double const r = std::sqrt(-2.0 * std::log(u1));
    double const phi = 2.0 * std::numbers::pi * u2;
    return {r * std::cos(phi), r * std::sin(phi)};
}

}  // namespace slowfast
