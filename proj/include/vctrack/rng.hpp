// SPDX-License-Identifier: Apache-2.0
//
// vctrack - virtual-channel tracking for time-varying massive MIMO links
// Copyright (C) 2026 the vctrack authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#ifndef VCTRACK_RNG_HPP
#define VCTRACK_RNG_HPP

#include "vctrack/linalg.hpp"

#include <cmath>
#include <cstdint>
#include <initializer_list>

namespace vct
{

// splitmix64 step (Steele/Lea/Flood). Used both as the core generator and
// to derive independent substreams from a master seed, so results are
// reproducible bit-for-bit regardless of platform or standard library.
inline std::uint64_t splitmix64(std::uint64_t &state)
{
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Derives a substream seed from (master, path...). Streams for different
// paths are independent for practical purposes.
inline std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> path)
{
    std::uint64_t s = master;
    for (std::uint64_t p : path)
    {
        s ^= 0x9e3779b97f4a7c15ULL + p;
        (void)splitmix64(s);
        s = splitmix64(s);
    }
    return s;
}

class Rng
{
  public:
    explicit Rng(std::uint64_t seed) : state_(seed)
    {
        // decorrelate trivially related seeds
        (void)splitmix64(state_);
    }

    std::uint64_t next_u64() { return splitmix64(state_); }

    // uniform in [0, 1)
    double uniform()
    {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // standard normal, Box-Muller (no cached spare: keeps the stream
    // position a pure function of the draw count)
    double normal()
    {
        double u1 = uniform();
        while (u1 <= 0.0)
            u1 = uniform();
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
    }

    // CN(0, 1): real and imaginary parts N(0, 1/2)
    Cplx cnormal()
    {
        double u1 = uniform();
        while (u1 <= 0.0)
            u1 = uniform();
        const double u2 = uniform();
        const double r = std::sqrt(-std::log(u1));
        return Cplx(r * std::cos(2.0 * M_PI * u2), r * std::sin(2.0 * M_PI * u2));
    }

    VecC cnormal_vec(Eigen::Index n)
    {
        VecC v(n);
        for (Eigen::Index i = 0; i < n; ++i)
            v(i) = cnormal();
        return v;
    }

    VecD normal_vec(Eigen::Index n)
    {
        VecD v(n);
        for (Eigen::Index i = 0; i < n; ++i)
            v(i) = normal();
        return v;
    }

  private:
    std::uint64_t state_;
};

} // namespace vct

#endif
