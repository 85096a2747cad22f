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

#ifndef VCTRACK_OBKF_HPP
#define VCTRACK_OBKF_HPP

#include "vctrack/kalman.hpp"
#include "vctrack/rng.hpp"

#include <vector>

namespace vct
{

// The downlink unknowns: observation noise power and the supported
// process-noise diagonal.
struct NoiseHypothesis
{
    double sigma_dl_sq = 0.0;
    VecD lambda_dl_diag;

    void validate() const;
};

// Independent log-normal prior over the unknowns, with the random-walk
// proposal scale bundled in. Index 0 is ln sigma', the rest ln lambda'_j.
struct NoisePrior
{
    VecD log_loc;
    double log_scale = 0.5;
    double proposal_scale = 0.15;

    Eigen::Index dim() const { return log_loc.size(); }
    double sigma_mean() const; // log-normal mean exp(loc + scale^2/2)
    VecD lambda_mean() const;
    double logpdf_log_space(const VecD &eta) const;
    NoiseHypothesis from_log(const VecD &eta) const;
};

// Forward sum-product message along the AR chain, a scaled Gaussian in the
// next state variable.
struct ChainMessage
{
    double log_weight = 0.0;
    VecC mean;
    MatC cov;
};

ChainMessage fg_initial_message(const NoiseHypothesis &theta);

// One chain step: consumes the message into w_i plus the observation of
// block i, emits the message into w_{i+1}. Throws NumericalError when the
// hypothesis is numerically inconsistent (caller treats it as -inf).
ChainMessage fg_forward_message(const ChainMessage &prev, const VecC &y_i,
                                const NoiseHypothesis &theta, double alpha_dl,
                                double pilot_power);

// log p(y'(m) | theta) via the forward recursion and the terminal
// marginalization.
double fg_likelihood(const std::vector<VecC> &observations, const NoiseHypothesis &theta,
                     double alpha_dl, double pilot_power);

struct MhResult
{
    double sigma_mean = 0.0;
    VecD lambda_mean;
    std::vector<VecD> samples; // post-burn-in chain states in log space
    double acceptance_rate = 0.0;
    bool degenerate = false; // nothing accepted; prior means returned
};

struct McmcOptions
{
    int n_iters = 200;
    int burn_in = 50;
};

// Random-walk Metropolis-Hastings in log-parameter space. The proposal
// scale adapts toward 25-40% acceptance during burn-in only. Posterior
// means are sample means over the post-burn-in chain. Deterministic for a
// fixed seed.
MhResult mh_posterior_means(const std::vector<VecC> &observations, const NoisePrior &prior,
                            const McmcOptions &opts, std::uint64_t seed, double alpha_dl,
                            double pilot_power);

// One-step-prediction form of the tracker state: g_hat predicts the next
// block, err_cov is E[P_m | y(m-1)], and the posterior noise means carry
// the latest MCMC output.
struct ObkfState
{
    VecC g_hat;
    MatC err_cov;
    MatC gain;
    VecC innovation;
    VecC filtered; // g_hat + gain * innovation, the block-m estimate
    VecD lambda_post;
    double sigma_post = 0.0;
};

ObkfState obkf_init(const VecD &lambda_prior_mean, double sigma_prior_mean, double alpha_dl);

ObkfState obkf_step(const ObkfState &state, const VecC &y_m, double alpha_dl,
                    const VecD &lambda_post_new, double sigma_post_new, double pilot_power);

struct KfTrajectory
{
    std::vector<VecC> filtered;  // per-block estimate after the update
    std::vector<VecC> predicted; // E[w_m | y(m-1)]
    std::vector<MatC> pred_cov;
    double loglik = 0.0;
};

// Classical Kalman filter on the identity-observation DL model, used for
// the perfect/weak baselines and the OBKF degeneracy checks.
KfTrajectory classical_kf(const std::vector<VecC> &observations, const VecD &lambda_diag,
                          double sigma_sq, double alpha_dl, double pilot_power);

struct TrackDlOptions
{
    int obkf_blocks = 10; // M_d
    McmcOptions mcmc;
};

struct TrackDlResult
{
    std::vector<VecC> filtered;        // per-block channel estimate
    std::vector<VecD> lambda_post;     // posterior mean after each block (1..M_d)
    std::vector<double> sigma_post;    //   "
    std::vector<double> acceptance;    //   "
    std::vector<ObkfState> states;     // state entering each block (for forks)
    VecD lambda_final;
    double sigma_final = 0.0;
};

// Blocks 1..M_d run Metropolis-Hastings on the growing observation prefix
// followed by one OBKF step; later blocks keep the block-M_d posterior
// means frozen.
TrackDlResult track_dl(const std::vector<VecC> &observations, double alpha_dl,
                       const NoisePrior &prior, const TrackDlOptions &opts, std::uint64_t seed,
                       double pilot_power);

} // namespace vct

#endif
