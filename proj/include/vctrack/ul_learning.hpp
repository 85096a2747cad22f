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

#ifndef VCTRACK_UL_LEARNING_HPP
#define VCTRACK_UL_LEARNING_HPP

#include "vctrack/channel_model.hpp"
#include "vctrack/kalman.hpp"

#include <vector>

namespace vct
{

// Stacked state-space over the tau users sharing one training segment:
//   r_m = (diag(alpha_k) (x) I) r_{m-1} + CN(0, blkdiag(Lambda_k))
//   y_m = [J_1 ... J_tau] r_m + CN(0, noise_var I),
// J_k = (s_k (x) Phi(rho_k)^H) diag(c_k). Off-support columns of J_k are
// exactly zero.
struct JointStateSpace
{
    int n_ant = 0;
    int train_len = 0;
    std::vector<double> alphas;
    std::vector<VecD> lambdas;
    std::vector<MatC> mix; // M_k = Phi(rho_k)^H diag(c_k), N_t x N_t
    MatC training;         // L_s x tau, column k = s_k
    double noise_var = 0.0;

    int n_users() const { return static_cast<int>(alphas.size()); }
    MatC obs_block(int k) const;    // J_k = s_k (x) M_k
    MatC observation() const;       // horizontal concat of the J_k
    DiagStateSpace to_state_space() const;
};

JointStateSpace build_joint_state_space(const std::vector<ModelParams> &params,
                                        const MatC &training, const MatC &a, const MatC &b);

// Smoothed posterior statistics for one user: r_hat (first moment),
// Theta (second moment) and Pi (lag-one cross moment), everything
// conditioned on the full observation record.
struct UserPosterior
{
    std::vector<VecC> mean;    // per block
    std::vector<MatC> second;  // Theta_m = cov + mean mean^H
    std::vector<MatC> cross;   // Pi_{m-1,m}, entry m-1 couples blocks m-1 and m
};

using PosteriorStats = std::vector<UserPosterior>;

// Exact linear-Gaussian smoothing on the joint model. Initial prior is the
// per-entry stationary law (Lambda / (1 - alpha^2)) when alpha < 1.
PosteriorStats kalman_rts_posteriors(const JointStateSpace &model,
                                     const std::vector<VecC> &observations,
                                     double *loglik = nullptr);

// alpha_hat = sum_m Re tr(L^-1 Pi) / sum_m tr(L^-1 Theta_{m-1}), clamped
// to [0,1]. Entries of lambda below 1e-6 * max are left out of the traces.
double update_alpha(const UserPosterior &stats, const VecD &lambda_diag);

// per-entry average of Theta_m + a^2 Theta_{m-1} - 2 a Re Pi, clipped at 0
VecD update_lambda(const UserPosterior &stats, double alpha);

struct SupportSearch
{
    VecI mask;
    bool flat_warning = false; // no detectable support; mask came back all ones
    int start = 0;
    int end = 0;
};

// Windowed edge search over the learned process-power diagonal: the
// log-ratio of two adjacent 3-bin windows peaks at the rising edge of the
// support and bottoms at the falling edge.
SupportSearch update_support(const VecD &lambda_estimate);

// Per-entry zero-derivative solution for the off-grid bias, clamped to
// [-1/2, 1/2]. Off-support entries are forced to zero; a vanishing
// denominator keeps the previous value.
VecD update_bias(const UserPosterior &stats, const VecI &support, const VecC &train_col,
                 const std::vector<MatC> &observations, const VecD &prev_bias,
                 const MatC &a, const MatC &b);

double update_noise_var(const PosteriorStats &stats, const JointStateSpace &model,
                        const std::vector<MatC> &observations);

struct EmOptions
{
    int n_iters = 5;
    bool keep_history = true;
};

struct EmResult
{
    std::vector<ModelParams> params;
    PosteriorStats posteriors;
    std::vector<std::vector<ModelParams>> history; // snapshot after every iteration
    std::vector<double> loglik_trace;
    int iterations_run = 0;
    bool stopped_early = false;
};

std::vector<ModelParams> em_default_init(const std::vector<MatC> &observations,
                                         const SystemConfig &cfg);

// Coordinate-wise-maximization EM: smoothing E-step, then per user
// support -> bias -> alpha -> lambda and finally the shared noise power,
// each update consuming the freshest values. Stops early if the
// innovations log-likelihood drops by more than 1% twice in a row.
EmResult em_learn(const std::vector<MatC> &observations, const SystemConfig &cfg,
                  const MatC &training, std::vector<ModelParams> init,
                  const EmOptions &opts);

} // namespace vct

#endif
