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

#include "vctrack/ul_learning.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace vct
{

MatC JointStateSpace::obs_block(int k) const
{
    const VecC s = training.col(k);
    MatC j(static_cast<Eigen::Index>(n_ant) * train_len, n_ant);
    for (int t = 0; t < train_len; ++t)
        j.middleRows(static_cast<Eigen::Index>(t) * n_ant, n_ant) = s(t) * mix[k];
    return j;
}

MatC JointStateSpace::observation() const
{
    MatC j(static_cast<Eigen::Index>(n_ant) * train_len,
           static_cast<Eigen::Index>(n_ant) * n_users());
    for (int k = 0; k < n_users(); ++k)
        j.middleCols(static_cast<Eigen::Index>(k) * n_ant, n_ant) = obs_block(k);
    return j;
}

DiagStateSpace JointStateSpace::to_state_space() const
{
    const int tau = n_users();
    DiagStateSpace ss;
    ss.trans.resize(static_cast<Eigen::Index>(tau) * n_ant);
    ss.proc_cov.resize(ss.trans.size());
    for (int k = 0; k < tau; ++k)
    {
        ss.trans.segment(static_cast<Eigen::Index>(k) * n_ant, n_ant).setConstant(alphas[k]);
        ss.proc_cov.segment(static_cast<Eigen::Index>(k) * n_ant, n_ant) = lambdas[k];
    }
    ss.prior_cov = stationary_prior(ss.trans, ss.proc_cov);
    ss.obs = observation();
    ss.noise_var = noise_var;
    return ss;
}

JointStateSpace build_joint_state_space(const std::vector<ModelParams> &params,
                                        const MatC &training, const MatC &a, const MatC &b)
{
    require(!params.empty(), "build_joint_state_space: no users");
    require(training.cols() == static_cast<Eigen::Index>(params.size()),
            "build_joint_state_space: one training column per user required");
    JointStateSpace joint;
    joint.n_ant = static_cast<int>(a.rows());
    joint.train_len = static_cast<int>(training.rows());
    joint.training = training;
    joint.noise_var = params.front().noise_var;
    for (const auto &p : params)
    {
        joint.alphas.push_back(p.alpha);
        joint.lambdas.push_back(p.lambda_diag);
        joint.mix.push_back(phi_hermitian(a, b, p.bias) *
                            p.support.cast<Cplx>().asDiagonal());
    }
    return joint;
}

namespace
{

PosteriorStats split_posteriors(const KalmanMoments &km, int n_users, int n_ant)
{
    const int m_blocks = static_cast<int>(km.smooth_mean.size());
    PosteriorStats stats(static_cast<size_t>(n_users));
    for (int k = 0; k < n_users; ++k)
    {
        auto &u = stats[static_cast<size_t>(k)];
        const Eigen::Index off = static_cast<Eigen::Index>(k) * n_ant;
        for (int m = 0; m < m_blocks; ++m)
        {
            const VecC mean = km.smooth_mean[m].segment(off, n_ant);
            u.mean.push_back(mean);
            u.second.push_back(
                hermitianize(km.smooth_cov[m].block(off, off, n_ant, n_ant) +
                             mean * mean.adjoint()));
            if (m > 0)
            {
                const VecC prev = km.smooth_mean[m - 1].segment(off, n_ant);
                u.cross.push_back(km.lag_cov[m - 1].block(off, off, n_ant, n_ant) +
                                  prev * mean.adjoint());
            }
        }
    }
    return stats;
}

} // namespace

PosteriorStats kalman_rts_posteriors(const JointStateSpace &model,
                                     const std::vector<VecC> &observations, double *loglik)
{
    require(observations.size() >= 1, "kalman_rts_posteriors: no observations");
    const KalmanMoments km = kalman_filter(model.to_state_space(), observations, true);
    if (loglik != nullptr)
        *loglik = km.loglik;
    return split_posteriors(km, model.n_users(), model.n_ant);
}

double update_alpha(const UserPosterior &stats, const VecD &lambda_diag)
{
    require(stats.mean.size() >= 2, "update_alpha: needs at least two blocks");
    const Eigen::Index n = lambda_diag.size();
    const double lam_max = lambda_diag.maxCoeff();
    const double floor = 1e-6 * lam_max;

    double num = 0.0, den = 0.0;
    const size_t m_blocks = stats.mean.size();
    for (size_t m = 1; m < m_blocks; ++m)
    {
        const MatC &pi = stats.cross[m - 1];
        const MatC &th = stats.second[m - 1];
        for (Eigen::Index j = 0; j < n; ++j)
        {
            if (lambda_diag(j) <= floor || lambda_diag(j) <= 0.0)
                continue;
            num += pi(j, j).real() / lambda_diag(j);
            den += th(j, j).real() / lambda_diag(j);
        }
    }
    if (den <= 0.0)
        throw NumericalError("update_alpha: degenerate prior power");
    return std::clamp(num / den, 0.0, 1.0);
}

VecD update_lambda(const UserPosterior &stats, double alpha)
{
    require(stats.mean.size() >= 2, "update_lambda: needs at least two blocks");
    const Eigen::Index n = stats.mean.front().size();
    const size_t m_blocks = stats.mean.size();
    VecD lam = VecD::Zero(n);
    for (size_t m = 1; m < m_blocks; ++m)
    {
        for (Eigen::Index j = 0; j < n; ++j)
        {
            lam(j) += stats.second[m](j, j).real() +
                      alpha * alpha * stats.second[m - 1](j, j).real() -
                      2.0 * alpha * stats.cross[m - 1](j, j).real();
        }
    }
    lam /= static_cast<double>(m_blocks - 1);
    return lam.cwiseMax(0.0);
}

SupportSearch update_support(const VecD &lambda_estimate)
{
    const int n = static_cast<int>(lambda_estimate.size());
    require(n >= 6, "update_support: needs at least 6 bins");

    SupportSearch out;
    out.mask = VecI::Ones(n);
    const double lam_max = lambda_estimate.maxCoeff();
    const double lam_min = lambda_estimate.minCoeff();
    if (lam_max <= 0.0 || (lam_min > 0.0 && lam_max / lam_min < 10.0))
    {
        out.flat_warning = true; // no detectable support
        out.start = 0;
        out.end = n - 1;
        return out;
    }

    const double tiny = 1e-300;
    VecD d(n - 5);
    for (int j = 0; j + 5 < n; ++j)
    {
        const double s1 = lambda_estimate.segment(j, 3).sum();
        const double s2 = lambda_estimate.segment(j + 3, 3).sum();
        d(j) = std::log(std::max(s2, tiny)) - std::log(std::max(s1, tiny));
    }

    int j_max = 0, j_min = 0;
    for (int j = 1; j < d.size(); ++j)
    {
        if (d(j) >= d(j_max))
            j_max = j; // rising edge: last index attaining the maximum
        if (d(j) < d(j_min))
            j_min = j; // falling edge: first index attaining the minimum
    }
    // the right window of j_max is the first on-support triple, the left
    // window of j_min the last one
    out.start = j_max + 3;
    out.end = j_min + 2;
    if (out.end < out.start)
    {
        out.flat_warning = true;
        out.start = 0;
        out.end = n - 1;
        return out;
    }
    out.mask = VecI::Zero(n);
    for (int p = out.start; p <= out.end; ++p)
        out.mask(p) = 1;
    return out;
}

VecD update_bias(const UserPosterior &stats, const VecI &support, const VecC &train_col,
                 const std::vector<MatC> &observations, const VecD &prev_bias,
                 const MatC &a, const MatC &b)
{
    const Eigen::Index n = a.rows();
    require(support.size() == n && prev_bias.size() == n, "update_bias: length mismatch");
    require(stats.mean.size() == observations.size(), "update_bias: block count mismatch");

    const double s_norm2 = train_col.squaredNorm();
    // diagonals of B A^H and B B^H
    const VecD diag_ba_re =
        b.cwiseProduct(a.conjugate()).rowwise().sum().real();
    const VecD diag_bb = b.cwiseAbs2().rowwise().sum();

    VecD num = VecD::Zero(n), den = VecD::Zero(n);
    const VecC s_conj = train_col.conjugate();
    for (size_t m = 0; m < observations.size(); ++m)
    {
        const VecC u = b * (observations[m] * s_conj); // (s^H (x) B) y_m
        const VecC &r = stats.mean[m];
        for (Eigen::Index j = 0; j < n; ++j)
        {
            if (!support(j))
                continue;
            const double theta_jj = stats.second[m](j, j).real();
            num(j) += (std::conj(r(j)) * u(j)).real() - s_norm2 * diag_ba_re(j) * theta_jj;
            den(j) += s_norm2 * diag_bb(j) * theta_jj;
        }
    }

    const double den_floor = 1e-12 * (1.0 + den.maxCoeff());
    VecD rho = VecD::Zero(n);
    for (Eigen::Index j = 0; j < n; ++j)
    {
        if (!support(j))
            continue;
        rho(j) = den(j) > den_floor ? std::clamp(num(j) / den(j), -0.5, 0.5) : prev_bias(j);
    }
    return rho;
}

double update_noise_var(const PosteriorStats &stats, const JointStateSpace &model,
                        const std::vector<MatC> &observations)
{
    const int tau = model.n_users();
    require(static_cast<int>(stats.size()) == tau, "update_noise_var: user count mismatch");
    const size_t m_blocks = observations.size();
    const double n_obs = static_cast<double>(model.n_ant) * model.train_len;

    std::vector<MatC> psi(static_cast<size_t>(tau));
    std::vector<double> s_norm2(static_cast<size_t>(tau));
    for (int k = 0; k < tau; ++k)
    {
        psi[k] = model.mix[k].adjoint() * model.mix[k];
        s_norm2[k] = model.training.col(k).squaredNorm();
    }

    double acc = 0.0;
    for (size_t m = 0; m < m_blocks; ++m)
    {
        const MatC &y = observations[m];
        acc += y.squaredNorm();
        for (int k = 0; k < tau; ++k)
        {
            const auto &u = stats[static_cast<size_t>(k)];
            acc += s_norm2[k] *
                   psi[k].cwiseProduct(u.second[m].transpose()).sum().real();
            const VecC v = model.mix[k] * u.mean[m];
            const Cplx dot = (y.adjoint() * v).transpose() * model.training.col(k);
            acc -= 2.0 * dot.real();
        }
    }
    const double est = acc / (static_cast<double>(m_blocks) * n_obs);
    return std::max(est, std::numeric_limits<double>::epsilon());
}

std::vector<ModelParams> em_default_init(const std::vector<MatC> &observations,
                                         const SystemConfig &cfg)
{
    require(!observations.empty(), "em_default_init: no observations");
    const int n = cfg.n_antennas;
    const int tau = cfg.group_size;
    const MatC s = make_training(tau, cfg.train_len, cfg.pilot_power);

    double y_pow = 0.0;
    for (const auto &y : observations)
        y_pow += y.squaredNorm();
    y_pow /= static_cast<double>(observations.size());

    std::vector<ModelParams> init(static_cast<size_t>(tau));
    for (int k = 0; k < tau; ++k)
    {
        const double sn2 = s.col(k).squaredNorm();
        double p_k = 0.0;
        for (const auto &y : observations)
            p_k += (y * s.col(k).conjugate()).squaredNorm() / (sn2 * sn2);
        p_k /= static_cast<double>(observations.size());

        auto &p = init[static_cast<size_t>(k)];
        p.alpha = 0.9;
        p.lambda_diag = VecD::Constant(n, p_k / n);
        p.support = VecI::Ones(n);
        p.bias = VecD::Zero(n);
        p.noise_var = 0.1 * y_pow / (n * cfg.train_len);
    }
    return init;
}

EmResult em_learn(const std::vector<MatC> &observations, const SystemConfig &cfg,
                  const MatC &training, std::vector<ModelParams> init, const EmOptions &opts)
{
    cfg.validate();
    require(opts.n_iters >= 1, "em_learn: n_iters must be positive");
    require(observations.size() >= 2, "em_learn: needs at least two blocks");
    const int tau = static_cast<int>(init.size());
    require(training.cols() == tau, "em_learn: one training column per user required");
    const int n = cfg.n_antennas;
    const int m_blocks = static_cast<int>(observations.size());

    const MatC a = dft_basis(n);
    const MatC b = derivative_basis(n);

    // per-user matched-filter observations; exact sufficient reduction of
    // the joint model thanks to the orthogonal training
    std::vector<double> s_norm2(static_cast<size_t>(tau));
    std::vector<std::vector<VecC>> z(static_cast<size_t>(tau));
    double perp_pow = 0.0; // energy outside the training span, per run
    const double perp_dim = static_cast<double>(n) * (training.rows() - tau);
    for (int k = 0; k < tau; ++k)
    {
        s_norm2[k] = training.col(k).squaredNorm();
        z[k].reserve(observations.size());
    }
    for (const auto &y : observations)
    {
        double captured = 0.0;
        for (int k = 0; k < tau; ++k)
        {
            VecC zk = y * training.col(k).conjugate() / s_norm2[k];
            captured += zk.squaredNorm() * s_norm2[k];
            z[static_cast<size_t>(k)].push_back(std::move(zk));
        }
        perp_pow += y.squaredNorm() - captured;
    }
    perp_pow = std::max(perp_pow, 0.0);

    EmResult out;
    std::vector<ModelParams> params = std::move(init);
    PosteriorStats stats(static_cast<size_t>(tau));

    double best_loglik = -std::numeric_limits<double>::infinity();
    std::vector<ModelParams> best_params = params;
    int declines = 0;

    for (int iter = 0; iter < opts.n_iters; ++iter)
    {
        // E-step
        double loglik = 0.0;
        for (int k = 0; k < tau; ++k)
        {
            const auto &p = params[static_cast<size_t>(k)];
            DiagStateSpace ss;
            ss.trans = VecD::Constant(n, p.alpha);
            ss.proc_cov = p.lambda_diag;
            ss.prior_cov = stationary_prior(ss.trans, ss.proc_cov);
            ss.obs = phi_hermitian(a, b, p.bias) * p.support.cast<Cplx>().asDiagonal();
            ss.noise_var = p.noise_var / s_norm2[k];
            const KalmanMoments km = kalman_filter(ss, z[static_cast<size_t>(k)], true);
            loglik += km.loglik;
            auto &u = stats[static_cast<size_t>(k)];
            u.mean.assign(km.smooth_mean.begin(), km.smooth_mean.end());
            u.second.clear();
            u.cross.clear();
            for (int m = 0; m < m_blocks; ++m)
            {
                u.second.push_back(hermitianize(km.smooth_cov[m] +
                                                km.smooth_mean[m] *
                                                    km.smooth_mean[m].adjoint()));
                if (m > 0)
                    u.cross.push_back(km.lag_cov[m - 1] +
                                      km.smooth_mean[m - 1] * km.smooth_mean[m].adjoint());
            }
        }
        const double sigma2 = params.front().noise_var;
        loglik += -perp_dim * m_blocks * std::log(M_PI * sigma2) - perp_pow / sigma2;
        // the matched-filter change of variables adds a data constant that
        // is dropped here; only likelihood differences are monitored
        out.loglik_trace.push_back(loglik);

        if (loglik > best_loglik)
        {
            best_loglik = loglik;
            best_params = params;
        }
        if (out.loglik_trace.size() >= 2)
        {
            const double prev = out.loglik_trace[out.loglik_trace.size() - 2];
            declines = (prev - loglik) > 0.01 * std::abs(prev) ? declines + 1 : 0;
            if (declines >= 2)
            {
                out.stopped_early = true;
                params = best_params;
                break;
            }
        }

        // M-step, Gauss-Seidel order: support, bias, alpha, lambda, noise
        for (int k = 0; k < tau; ++k)
        {
            auto &p = params[static_cast<size_t>(k)];
            const auto &u = stats[static_cast<size_t>(k)];
            const SupportSearch sup = update_support(p.lambda_diag);
            p.support = sup.mask;
            p.bias = update_bias(u, p.support, training.col(k), observations, p.bias, a, b);
            p.alpha = update_alpha(u, p.lambda_diag);
            p.lambda_diag = update_lambda(u, p.alpha);
        }
        const JointStateSpace fresh = build_joint_state_space(params, training, a, b);
        const double sigma2_new = update_noise_var(stats, fresh, observations);
        for (auto &p : params)
            p.noise_var = sigma2_new;

        out.iterations_run = iter + 1;
        if (opts.keep_history)
            out.history.push_back(params);
    }

    out.params = std::move(params);
    out.posteriors = std::move(stats);
    return out;
}

} // namespace vct
