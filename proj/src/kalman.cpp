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

#include "vctrack/kalman.hpp"

#include <cmath>

namespace vct
{

void DiagStateSpace::validate() const
{
    const Eigen::Index n = trans.size();
    require(n >= 1, "state space: empty state");
    require(proc_cov.size() == n && prior_cov.size() == n,
            "state space: diagonal length mismatch");
    require(obs.cols() == n, "state space: observation column count mismatch");
    require(noise_var > 0.0, "state space: observation noise variance must be positive");
    require((proc_cov.array() >= 0.0).all() && (prior_cov.array() >= 0.0).all(),
            "state space: negative variance entry");
}

VecD stationary_prior(const VecD &trans, const VecD &proc_cov)
{
    VecD prior(trans.size());
    for (Eigen::Index i = 0; i < trans.size(); ++i)
    {
        const double a = trans(i);
        prior(i) = std::abs(a) < 1.0 ? proc_cov(i) / (1.0 - a * a) : proc_cov(i);
    }
    return prior;
}

KalmanMoments kalman_filter(const DiagStateSpace &model, const std::vector<VecC> &obs,
                            bool smooth)
{
    model.validate();
    require(!obs.empty(), "kalman_filter: no observations");
    const Eigen::Index n = model.state_dim();
    const Eigen::Index p = model.obs.rows();
    const int m_blocks = static_cast<int>(obs.size());
    const MatC &h = model.obs;
    const VecD &a = model.trans;

    KalmanMoments out;
    out.pred_mean.resize(m_blocks);
    out.pred_cov.resize(m_blocks);
    out.filt_mean.resize(m_blocks);
    out.filt_cov.resize(m_blocks);

    VecC x = VecC::Zero(n);
    MatC pcov = model.prior_cov.cast<Cplx>().asDiagonal();

    for (int m = 0; m < m_blocks; ++m)
    {
        require(obs[m].size() == p, "kalman_filter: observation length mismatch");
        if (m > 0)
        {
            x = a.cast<Cplx>().asDiagonal() * x;
            pcov = a.cast<Cplx>().asDiagonal() * pcov * a.cast<Cplx>().asDiagonal();
            pcov.diagonal().real() += model.proc_cov;
            pcov = hermitianize(pcov);
        }
        out.pred_mean[m] = x;
        out.pred_cov[m] = pcov;

        const MatC hp = h * pcov; // p x n
        MatC s = hp * h.adjoint();
        s.diagonal().array() += Cplx(model.noise_var, 0.0);
        s = hermitianize(s);
        HermChol chol(s, "kalman innovation covariance");

        const VecC innov = obs[m] - h * x;
        out.loglik += -static_cast<double>(p) * std::log(M_PI) - chol.log_det() -
                      innov.dot(chol.solve(innov)).real();

        const MatC gain = chol.solve(hp).adjoint(); // n x p, K = P H^H S^-1
        x = x + gain * innov;
        pcov = hermitianize(pcov - gain * hp);
        out.filt_mean[m] = x;
        out.filt_cov[m] = pcov;
    }

    if (!smooth)
        return out;

    out.smooth_mean.resize(m_blocks);
    out.smooth_cov.resize(m_blocks);
    out.lag_cov.resize(m_blocks > 0 ? m_blocks - 1 : 0);
    out.smooth_mean[m_blocks - 1] = out.filt_mean[m_blocks - 1];
    out.smooth_cov[m_blocks - 1] = out.filt_cov[m_blocks - 1];

    for (int m = m_blocks - 2; m >= 0; --m)
    {
        HermChol chol(out.pred_cov[m + 1], "kalman predicted covariance (smoother)");
        // G = P_f diag(a) P_pred^-1; all factors Hermitian or real-diagonal
        const MatC g =
            chol.solve(a.cast<Cplx>().asDiagonal() * out.filt_cov[m]).adjoint();
        out.smooth_mean[m] =
            out.filt_mean[m] + g * (out.smooth_mean[m + 1] - out.pred_mean[m + 1]);
        out.smooth_cov[m] = hermitianize(
            out.filt_cov[m] + g * (out.smooth_cov[m + 1] - out.pred_cov[m + 1]) * g.adjoint());
        out.lag_cov[m] = g * out.smooth_cov[m + 1];
    }
    return out;
}

} // namespace vct
