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

#ifndef VCTRACK_CHANNEL_MODEL_HPP
#define VCTRACK_CHANNEL_MODEL_HPP

#include "vctrack/linalg.hpp"
#include "vctrack/rng.hpp"

#include <utility>
#include <vector>

namespace vct
{

struct SystemConfig
{
    int n_antennas = 128;                       // base-station ULA size
    int n_users = 4;                            // K, must be a multiple of group_size
    int group_size = 4;                         // users per training segment (tau)
    int train_len = 4;                          // training sequence length (L_s)
    int block_len = 160;                        // channel uses per block (L_c)
    double symbol_period = 1e-6;                // seconds
    double carrier_ul = 2e9;                    // Hz
    double carrier_dl = 2e9;                    // Hz
    double antenna_spacing_over_lambda = 0.5;   // d / lambda, <= 1/2
    double pilot_power = 1.0;                   // sigma_p^2
    double snr_db = 30.0;

    void validate() const;
    double noise_var() const; // sigma_n^2 = sigma_p^2 * 10^(-snr/10)
    double wavelength_ratio_dl_over_ul() const { return carrier_ul / carrier_dl; }
};

struct UserGeometry
{
    double angle_min = 0.0; // radians, in (-pi/2, pi/2)
    double angle_max = 0.0;
    int n_paths = 6;
    double velocity = 10.0;        // m/s
    double path_gain_scale = 1.0;  // per-path gain variance multiplier (ray-sum mode)

    void validate() const;
};

// Per-user AR virtual-channel parameter set: what the uplink learner
// estimates and angle reciprocity remaps.
struct ModelParams
{
    double alpha = 0.0;   // time-correlation factor, in [0, 1]
    VecD lambda_diag;     // process-noise diagonal, length N_t, >= 0
    VecI support;         // 0/1 spatial signature, length N_t
    VecD bias;            // off-grid bias per bin, in [-1/2, 1/2]
    double noise_var = 0.0;
};

struct VirtualChannelTrajectory
{
    std::vector<VecC> states;   // r_m
    std::vector<VecC> physical; // h_m = Phi(rho)^H diag(c) r_m
};

// entry n = exp(j 2 pi (d/lambda) n sin theta); entry 0 is exactly 1
VecC steering_vector(double theta, int n_antennas, double spacing_over_lambda);

// normalized DFT matrix A, [A]_pq = exp(-j 2 pi p q / N) / sqrt(N); unitary
MatC dft_basis(int n_antennas);

// derivative of A w.r.t. the grid index: [B]_pq = (-j 2 pi q / N) [A]_pq,
// so that column p of A^H + eps B^H equals the conjugate-DFT column at
// fractional index p + eps to first order
MatC derivative_basis(int n_antennas);

// Phi(rho)^H = A^H + B^H diag(rho)
MatC phi_hermitian(const MatC &a, const MatC &b, const VecD &bias);

// Signed grid range [lo, hi] for an angle interval per the floor rule;
// throws if the mod-N_t image would wrap across the index boundary.
std::pair<int, int> support_range(const UserGeometry &geom, const SystemConfig &cfg);

struct OffGridSupport
{
    VecI support;                            // 0/1 mask, length N_t
    VecD bias;                               // per-bin fractional offset
    std::vector<std::pair<int, double>> paths; // (bin mod N_t, rho) per path
};

// Maps each path direction to its nearest grid bin plus fractional bias
// and builds the contiguous support mask for the user's angle spread.
// Path directions are drawn uniformly in the angle interval when an rng
// is supplied, else spaced evenly across it.
OffGridSupport off_grid_support(const UserGeometry &geom, const SystemConfig &cfg,
                                Rng *rng = nullptr);

double bessel_j0(double x);

double max_doppler(double velocity, double carrier_hz);

// alpha = J0(2 pi nu_max L_c T_s)
double time_correlation(double velocity, double carrier_hz, int block_len,
                        double symbol_period);

// Ground-truth synthesis for one user: support from the angle spread,
// per-bin bias uniform in [-0.45, 0.45], on-support process power
// log-uniform in [0.5, 2] * power_scale, exact zeros off support.
ModelParams make_ground_truth(const UserGeometry &geom, const SystemConfig &cfg, Rng &rng,
                              double power_scale = 1.0);

// r_m = alpha r_{m-1} + CN(0, Lambda); r_1 from the stationary law when
// alpha < 1, else CN(0, Lambda). Physical channel assembled through
// Phi(rho)^H diag(c). Deterministic given the seed.
VirtualChannelTrajectory simulate_trajectory(const ModelParams &params, int n_blocks,
                                             std::uint64_t seed, const MatC &a, const MatC &b);

// Ray-sum generator (mismatched-truth mode): per-path complex gains
// CN(0, scale/L), per-path Doppler nu = nu_max * sin(uniform phase).
VirtualChannelTrajectory ray_sum_trajectory(const UserGeometry &geom, const SystemConfig &cfg,
                                            int n_blocks, std::uint64_t seed);

// L_s x tau training matrix, columns s_i with s_i^H s_j = L_s sigma_p^2 delta(i-j)
MatC make_training(int tau, int train_len, double pilot_power);

// Y_m = sum_k h_{k,m} s_k^T + N_m with i.i.d. CN(0, sigma_n^2) noise.
std::vector<MatC> synthesize_ul_observations(const std::vector<VirtualChannelTrajectory> &users,
                                             const MatC &training, const SystemConfig &cfg,
                                             std::uint64_t seed);

inline VecC vectorize(const MatC &y)
{
    return Eigen::Map<const VecC>(y.data(), y.size());
}

} // namespace vct

#endif
