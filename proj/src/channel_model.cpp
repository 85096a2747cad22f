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

#include "vctrack/channel_model.hpp"

#include <algorithm>
#include <cmath>

namespace vct
{

namespace
{
constexpr double kSpeedOfLight = 299792458.0;
}

void SystemConfig::validate() const
{
    require(n_antennas >= 1, "config: n_antennas must be positive");
    require(n_users >= 1 && group_size >= 1, "config: n_users and group_size must be positive");
    require(n_users % group_size == 0, "config: n_users must be a multiple of group_size");
    require(train_len >= group_size, "config: train_len must be >= group_size");
    require(block_len >= 1, "config: block_len must be positive");
    require(symbol_period > 0.0, "config: symbol_period must be positive");
    require(carrier_ul > 0.0 && carrier_dl > 0.0, "config: carriers must be positive");
    require(antenna_spacing_over_lambda > 0.0 && antenna_spacing_over_lambda <= 0.5,
            "config: antenna spacing d/lambda must be in (0, 1/2]");
    require(pilot_power > 0.0, "config: pilot_power must be positive");
    require(std::isfinite(snr_db), "config: snr_db must be finite");
}

double SystemConfig::noise_var() const
{
    return pilot_power * std::pow(10.0, -snr_db / 10.0);
}

void UserGeometry::validate() const
{
    require(angle_min < angle_max, "geometry: angle_min must be below angle_max");
    require(std::abs(angle_min) < M_PI / 2 && std::abs(angle_max) < M_PI / 2,
            "geometry: angles must lie in (-pi/2, pi/2)");
    require(n_paths >= 1, "geometry: n_paths must be positive");
    require(velocity >= 0.0, "geometry: velocity must be nonnegative");
}

VecC steering_vector(double theta, int n_antennas, double spacing_over_lambda)
{
    require(std::abs(theta) < M_PI / 2, "steering_vector: |theta| must be below pi/2");
    VecC a(n_antennas);
    const double step = 2.0 * M_PI * spacing_over_lambda * std::sin(theta);
    for (int n = 0; n < n_antennas; ++n)
        a(n) = std::polar(1.0, step * n);
    a(0) = Cplx(1.0, 0.0);
    return a;
}

MatC dft_basis(int n_antennas)
{
    require(n_antennas >= 1, "dft_basis: n_antennas must be positive");
    MatC f(n_antennas, n_antennas);
    const double scale = 1.0 / std::sqrt(static_cast<double>(n_antennas));
    for (int p = 0; p < n_antennas; ++p)
        for (int q = 0; q < n_antennas; ++q)
            f(p, q) = scale * std::polar(1.0, -2.0 * M_PI * p * q / n_antennas);
    return f;
}

MatC derivative_basis(int n_antennas)
{
    require(n_antennas >= 1, "derivative_basis: n_antennas must be positive");
    MatC b = dft_basis(n_antennas);
    for (int q = 0; q < n_antennas; ++q)
        b.col(q) *= Cplx(0.0, -2.0 * M_PI * q / n_antennas);
    return b;
}

MatC phi_hermitian(const MatC &a, const MatC &b, const VecD &bias)
{
    require(a.rows() == b.rows() && a.cols() == b.cols() && bias.size() == a.rows(),
            "phi_hermitian: dimension mismatch");
    return a.adjoint() + b.adjoint() * bias.cast<Cplx>().asDiagonal();
}

std::pair<int, int> support_range(const UserGeometry &geom, const SystemConfig &cfg)
{
    geom.validate();
    const double scale = cfg.n_antennas * cfg.antenna_spacing_over_lambda;
    const int lo = static_cast<int>(std::floor(scale * std::sin(geom.angle_min)));
    const int hi = static_cast<int>(std::floor(scale * std::sin(geom.angle_max)));
    if (lo < 0 && hi >= 0)
        throw ValidationError("support_range: angle spread straddles broadside; the grid "
                              "image would wrap across the index boundary");
    return {lo, hi};
}

OffGridSupport off_grid_support(const UserGeometry &geom, const SystemConfig &cfg, Rng *rng)
{
    const auto [lo, hi] = support_range(geom, cfg);
    const int n = cfg.n_antennas;

    OffGridSupport out;
    out.support = VecI::Zero(n);
    out.bias = VecD::Zero(n);
    for (int p = lo; p <= hi; ++p)
        out.support(((p % n) + n) % n) = 1;

    const double scale = n * cfg.antenna_spacing_over_lambda;
    std::vector<int> hits(static_cast<size_t>(n), 0);
    for (int l = 0; l < geom.n_paths; ++l)
    {
        double theta;
        if (rng != nullptr)
            theta = rng->uniform(geom.angle_min, geom.angle_max);
        else if (geom.n_paths == 1)
            theta = 0.5 * (geom.angle_min + geom.angle_max);
        else
            theta = geom.angle_min +
                    (geom.angle_max - geom.angle_min) * l / (geom.n_paths - 1.0);

        const double v = scale * std::sin(theta);
        const int p = static_cast<int>(std::floor(v + 0.5)); // nearest grid bin
        const double rho = v - p;                             // in [-1/2, 1/2)
        const int pm = ((p % n) + n) % n;
        out.paths.emplace_back(pm, rho);
        // collisions: average the bias of rays landing on the same bin
        out.bias(pm) = (out.bias(pm) * hits[pm] + rho) / (hits[pm] + 1);
        ++hits[pm];
    }
    return out;
}

double bessel_j0(double x)
{
    x = std::abs(x);
    if (x < 8.0)
    {
        // power series sum_k (-x^2/4)^k / (k!)^2
        const double q = -0.25 * x * x;
        double term = 1.0, sum = 1.0;
        for (int k = 1; k < 64; ++k)
        {
            term *= q / (static_cast<double>(k) * k);
            sum += term;
            if (std::abs(term) < 1e-18 * std::abs(sum))
                break;
        }
        return sum;
    }
    // Hankel asymptotic expansion, good to ~1e-13 for x >= 8
    const double z = 8.0 / x;
    const double y = z * z;
    const double p0 = 1.0 + y * (-0.1098628627e-2 +
                                 y * (0.2734510407e-4 +
                                      y * (-0.2073370639e-5 + y * 0.2093887211e-6)));
    const double q0 = z * 0.125 *
                      (-0.1562499995e-1 +
                       y * (0.1430488765e-3 +
                            y * (-0.6911147651e-5 +
                                 y * (0.7621095161e-6 + y * -0.934935152e-7))));
    const double xx = x - 0.785398164;
    return std::sqrt(0.636619772 / x) * (std::cos(xx) * p0 - std::sin(xx) * q0);
}

double max_doppler(double velocity, double carrier_hz)
{
    require(velocity >= 0.0, "max_doppler: velocity must be nonnegative");
    return velocity * carrier_hz / kSpeedOfLight;
}

double time_correlation(double velocity, double carrier_hz, int block_len, double symbol_period)
{
    const double nu = max_doppler(velocity, carrier_hz);
    return bessel_j0(2.0 * M_PI * nu * block_len * symbol_period);
}

ModelParams make_ground_truth(const UserGeometry &geom, const SystemConfig &cfg, Rng &rng,
                              double power_scale)
{
    const int n = cfg.n_antennas;
    OffGridSupport og = off_grid_support(geom, cfg, &rng);

    ModelParams p;
    p.support = og.support;
    p.bias = VecD::Zero(n);
    p.lambda_diag = VecD::Zero(n);
    for (int j = 0; j < n; ++j)
    {
        if (!og.support(j))
            continue;
        p.bias(j) = rng.uniform(-0.45, 0.45);
        p.lambda_diag(j) = power_scale * std::exp(rng.uniform(std::log(0.5), std::log(2.0)));
    }
    p.alpha = time_correlation(geom.velocity, cfg.carrier_ul, cfg.block_len, cfg.symbol_period);
    p.noise_var = cfg.noise_var();
    return p;
}

VirtualChannelTrajectory simulate_trajectory(const ModelParams &params, int n_blocks,
                                             std::uint64_t seed, const MatC &a, const MatC &b)
{
    require(n_blocks >= 1, "simulate_trajectory: n_blocks must be positive");
    const int n = static_cast<int>(params.lambda_diag.size());
    require(params.support.size() == n && params.bias.size() == n,
            "simulate_trajectory: parameter length mismatch");

    Rng rng(seed);
    const MatC phi_h = phi_hermitian(a, b, params.bias);
    const MatC mix = phi_h * params.support.cast<Cplx>().asDiagonal();

    VirtualChannelTrajectory out;
    out.states.reserve(n_blocks);
    out.physical.reserve(n_blocks);

    VecD init_sd(n);
    const bool stationary = params.alpha < 1.0;
    for (int j = 0; j < n; ++j)
    {
        const double var = stationary
                               ? params.lambda_diag(j) / (1.0 - params.alpha * params.alpha)
                               : params.lambda_diag(j);
        init_sd(j) = std::sqrt(var);
    }

    VecC r = init_sd.cast<Cplx>().asDiagonal() * rng.cnormal_vec(n);
    out.states.push_back(r);
    out.physical.push_back(mix * r);
    for (int m = 1; m < n_blocks; ++m)
    {
        VecC noise = rng.cnormal_vec(n);
        for (int j = 0; j < n; ++j)
            noise(j) *= std::sqrt(params.lambda_diag(j));
        r = params.alpha * r + noise;
        out.states.push_back(r);
        out.physical.push_back(mix * r);
    }
    return out;
}

VirtualChannelTrajectory ray_sum_trajectory(const UserGeometry &geom, const SystemConfig &cfg,
                                            int n_blocks, std::uint64_t seed)
{
    geom.validate();
    Rng rng(seed);
    const int n = cfg.n_antennas;
    const int nl = geom.n_paths;
    const double nu_max = max_doppler(geom.velocity, cfg.carrier_ul);

    std::vector<VecC> steer(static_cast<size_t>(nl));
    std::vector<Cplx> gain(static_cast<size_t>(nl));
    std::vector<double> doppler(static_cast<size_t>(nl));
    for (int l = 0; l < nl; ++l)
    {
        const double theta = rng.uniform(geom.angle_min, geom.angle_max);
        steer[l] = steering_vector(theta, n, cfg.antenna_spacing_over_lambda);
        gain[l] = rng.cnormal() * std::sqrt(geom.path_gain_scale / nl);
        doppler[l] = nu_max * std::sin(2.0 * M_PI * rng.uniform());
    }

    const MatC f = dft_basis(n);
    VirtualChannelTrajectory out;
    for (int m = 0; m < n_blocks; ++m)
    {
        VecC h = VecC::Zero(n);
        for (int l = 0; l < nl; ++l)
        {
            const double phase = 2.0 * M_PI * doppler[l] * (m + 1) * cfg.block_len * cfg.symbol_period;
            h += steer[l] * (gain[l] * std::polar(1.0, phase));
        }
        out.physical.push_back(h);
        out.states.push_back(f * h); // beamspace view; no AR structure implied
    }
    return out;
}

MatC make_training(int tau, int train_len, double pilot_power)
{
    require(tau >= 1 && tau <= train_len, "make_training: needs 1 <= tau <= train_len");
    MatC s(train_len, tau);
    const double amp = std::sqrt(pilot_power);
    for (int k = 0; k < tau; ++k)
        for (int n = 0; n < train_len; ++n)
            s(n, k) = amp * std::polar(1.0, -2.0 * M_PI * n * k / train_len);
    return s;
}

std::vector<MatC> synthesize_ul_observations(const std::vector<VirtualChannelTrajectory> &users,
                                             const MatC &training, const SystemConfig &cfg,
                                             std::uint64_t seed)
{
    require(!users.empty(), "synthesize_ul_observations: needs at least one user");
    require(training.cols() >= static_cast<Eigen::Index>(users.size()),
            "synthesize_ul_observations: one training column per user required");
    const size_t n_blocks = users.front().physical.size();
    for (const auto &u : users)
        require(u.physical.size() == n_blocks,
                "synthesize_ul_observations: users must share the block count");

    const int n = cfg.n_antennas;
    const int ls = static_cast<int>(training.rows());
    const double noise_sd = std::sqrt(cfg.noise_var());

    Rng rng(seed);
    std::vector<MatC> out;
    out.reserve(n_blocks);
    for (size_t m = 0; m < n_blocks; ++m)
    {
        MatC y = MatC::Zero(n, ls);
        for (size_t k = 0; k < users.size(); ++k)
        {
            require(users[k].physical[m].size() == n,
                    "synthesize_ul_observations: channel length mismatch");
            y.noalias() += users[k].physical[m] * training.col(static_cast<int>(k)).transpose();
        }
        for (int j = 0; j < n; ++j)
            for (int t = 0; t < ls; ++t)
                y(j, t) += noise_sd * rng.cnormal();
        out.push_back(std::move(y));
    }
    return out;
}

} // namespace vct
