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

#ifndef VCTRACK_KALMAN_HPP
#define VCTRACK_KALMAN_HPP

#include "vctrack/linalg.hpp"

#include <vector>

namespace vct
{

// Complex linear-Gaussian state space with per-entry real transition and
// diagonal process covariance:
//   r_m = diag(trans) r_{m-1} + CN(0, diag(proc_cov))
//   y_m = obs r_m + CN(0, noise_var I)
// r_1 ~ CN(0, diag(prior_cov)).
struct DiagStateSpace
{
    VecD trans;
    VecD proc_cov;
    VecD prior_cov;
    MatC obs;
    double noise_var = 0.0;

    Eigen::Index state_dim() const { return trans.size(); }
    void validate() const;
};

// stationary AR(1) variance lambda / (1 - a^2) when |a| < 1, else lambda
VecD stationary_prior(const VecD &trans, const VecD &proc_cov);

struct KalmanMoments
{
    std::vector<VecC> pred_mean, filt_mean, smooth_mean;
    std::vector<MatC> pred_cov, filt_cov, smooth_cov;
    // lag_cov[m] = Cov(r_{m+1-1}, r_{m+1} | y_1..M) i.e. the smoothed
    // lag-one cross-covariance between blocks m and m+1 (0-based)
    std::vector<MatC> lag_cov;
    double loglik = 0.0; // innovations log density of the observation set
};

// Forward filter, optionally followed by the RTS backward pass with the
// lag-one smoothed cross-covariances needed by the EM statistics.
KalmanMoments kalman_filter(const DiagStateSpace &model, const std::vector<VecC> &obs,
                            bool smooth);

} // namespace vct

#endif
