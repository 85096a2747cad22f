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

#include "vctrack/obkf.hpp"

#include "vctrack/cgauss.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace vct
{

void NoiseHypothesis::validate() const
{
    require(sigma_dl_sq > 0.0, "NoiseHypothesis: sigma must be positive");
    require(lambda_dl_diag.size() > 0 && (lambda_dl_diag.array() > 0.0).all(),
            "NoiseHypothesis: lambda entries must be positive");
}

double NoisePrior::sigma_mean() const
{
    return std::exp(log_loc(0) + 0.5 * log_scale * log_scale);
}

VecD NoisePrior::lambda_mean() const
{
    return (log_loc.tail(log_loc.size() - 1).array() + 0.5 * log_scale * log_scale)
        .exp()
        .matrix();
}

double NoisePrior::logpdf_log_space(const VecD &eta) const
{
    require(eta.size() == log_loc.size(), "NoisePrior: dimension mismatch");
    if (log_scale <= 0.0)
        return (eta - log_loc).norm() == 0.0 ? 0.0
                                             : -std::numeric_limits<double>::infinity();
    const double n = static_cast<double>(eta.size());
    const double q = (eta - log_loc).squaredNorm() / (log_scale * log_scale);
    return -0.5 * q - n * std::log(log_scale) - 0.5 * n * std::log(2.0 * M_PI);
}

NoiseHypothesis NoisePrior::from_log(const VecD &eta) const
{
    NoiseHypothesis t;
    t.sigma_dl_sq = std::exp(eta(0));
    t.lambda_dl_diag = eta.tail(eta.size() - 1).array().exp().matrix();
    return t;
}

ChainMessage fg_initial_message(const NoiseHypothesis &theta)
{
    theta.validate();
    const Eigen::Index n = theta.lambda_dl_diag.size();
    ChainMessage msg;
    msg.log_weight = 0.0;
    msg.mean = VecC::Zero(n);
    msg.cov = theta.lambda_dl_diag.cast<Cplx>().asDiagonal();
    return msg;
}

ChainMessage fg_forward_message(const ChainMessage &prev, const VecC &y_i,
                                const NoiseHypothesis &theta, double alpha_dl,
                                double pilot_power)
{
    const Eigen::Index n = prev.mean.size();
    require(y_i.size() == n && theta.lambda_dl_diag.size() == n,
            "fg_forward_message: dimension mismatch");

    const double r = theta.sigma_dl_sq / pilot_power; // observation noise, per entry
    const VecD lam_inv = theta.lambda_dl_diag.cwiseInverse();
    const double a2 = alpha_dl * alpha_dl;

    HermChol chol_prev(prev.cov, "chain message covariance");
    const MatC sigma_prev_inv = hermitianize(chol_prev.inverse());

    const VecC nu = y_i / r + sigma_prev_inv * prev.mean;
    MatC gamma_inv = sigma_prev_inv;
    gamma_inv.diagonal().array() += (a2 * lam_inv.array() + 1.0 / r).cast<Cplx>();
    HermChol chol_gamma_inv(hermitianize(gamma_inv), "Gamma precision");
    const MatC gamma = hermitianize(chol_gamma_inv.inverse());

    // Sigma_{i+1} = (L^-1 - a^2 L^-1 Gamma L^-1)^-1
    MatC sigma_next_inv =
        -a2 * (lam_inv.cast<Cplx>().asDiagonal() * gamma * lam_inv.cast<Cplx>().asDiagonal());
    sigma_next_inv.diagonal().array() += lam_inv.cast<Cplx>().array();
    HermChol chol_next_inv(hermitianize(sigma_next_inv), "forward message precision");
    const MatC sigma_next = hermitianize(chol_next_inv.inverse());

    ChainMessage out;
    out.cov = sigma_next;
    out.mean = alpha_dl * (sigma_next * (lam_inv.cast<Cplx>().asDiagonal() * (gamma * nu)));

    // weight update, all determinant ratios as log-determinant differences
    const MatC glg = gamma * lam_inv.cast<Cplx>().asDiagonal() * sigma_next *
                     lam_inv.cast<Cplx>().asDiagonal() * gamma;
    const MatC c_mat = hermitianize(gamma + a2 * glg);
    HermChol chol_c(c_mat, "weight-term covariance");

    ComplexGaussian obs_part{y_i, MatC::Identity(n, n) * r};
    ComplexGaussian msg_part{prev.mean, prev.cov};
    const VecC zero = VecC::Zero(n);

    const double log_det_gamma = -chol_gamma_inv.log_det();
    const double log_det_sigma_next = -chol_next_inv.log_det();
    const double log_det_lambda = theta.lambda_dl_diag.array().log().sum();
    // log CN(nu; 0, C^-1) = -n ln pi + ln|C| - nu^H C nu
    const double log_cn_nu = -static_cast<double>(n) * std::log(M_PI) + chol_c.log_det() -
                             nu.dot(c_mat * nu).real();

    out.log_weight = prev.log_weight + cn_logpdf(zero, obs_part) + cn_logpdf(zero, msg_part) +
                     log_det_gamma + log_det_sigma_next + chol_c.log_det() - log_det_lambda -
                     log_cn_nu;
    return out;
}

double fg_likelihood(const std::vector<VecC> &observations, const NoiseHypothesis &theta,
                     double alpha_dl, double pilot_power)
{
    require(!observations.empty(), "fg_likelihood: no observations");
    ChainMessage msg = fg_initial_message(theta);
    const size_t m = observations.size();
    for (size_t i = 0; i + 1 < m; ++i)
        msg = fg_forward_message(msg, observations[i], theta, alpha_dl, pilot_power);

    const Eigen::Index n = msg.mean.size();
    const double r = theta.sigma_dl_sq / pilot_power;

    HermChol chol_sigma(msg.cov, "terminal message covariance");
    MatC delta_inv = hermitianize(chol_sigma.inverse());
    delta_inv.diagonal().array() += Cplx(1.0 / r, 0.0);
    HermChol chol_delta_inv(hermitianize(delta_inv), "terminal Delta precision");
    const MatC delta = hermitianize(chol_delta_inv.inverse());
    const VecC g_m =
        delta * (observations[m - 1] / r + chol_sigma.solve(msg.mean));

    const VecC zero = VecC::Zero(n);
    ComplexGaussian obs_part{observations[m - 1], MatC::Identity(n, n) * r};
    ComplexGaussian msg_part{msg.mean, msg.cov};
    ComplexGaussian term_part{g_m, delta};
    return msg.log_weight + cn_logpdf(zero, obs_part) + cn_logpdf(zero, msg_part) -
           cn_logpdf(zero, term_part);
}

MhResult mh_posterior_means(const std::vector<VecC> &observations, const NoisePrior &prior,
                            const McmcOptions &opts, std::uint64_t seed, double alpha_dl,
                            double pilot_power)
{
    require(opts.n_iters > opts.burn_in && opts.burn_in >= 0,
            "mh_posterior_means: need n_iters > burn_in >= 0");
    Rng rng(seed);
    const Eigen::Index dim = prior.dim();

    const auto log_target = [&](const VecD &eta) -> double {
        const double lp = prior.logpdf_log_space(eta);
        if (!std::isfinite(lp))
            return -std::numeric_limits<double>::infinity();
        try
        {
            return fg_likelihood(observations, prior.from_log(eta), alpha_dl, pilot_power) + lp;
        }
        catch (const NumericalError &)
        {
            return -std::numeric_limits<double>::infinity();
        }
    };

    VecD eta = prior.log_loc;
    double lt = log_target(eta);
    double step = prior.proposal_scale;

    MhResult out;
    out.lambda_mean = VecD::Zero(dim - 1);
    int accepted = 0;
    int window_acc = 0, window_n = 0;
    VecD post_sum = VecD::Zero(dim);
    int post_n = 0;

    for (int it = 0; it < opts.n_iters; ++it)
    {
        VecD cand = eta;
        if (step > 0.0)
            cand += step * rng.normal_vec(dim);
        const double lt_cand = log_target(cand);
        const double log_r = lt_cand - lt;
        const bool take = log_r >= 0.0 || std::log(rng.uniform() + 1e-300) < log_r;
        if (take)
        {
            eta = cand;
            lt = lt_cand;
            ++accepted;
            ++window_acc;
        }
        ++window_n;

        // during burn-in only: halve/double the walk toward 25-40% acceptance
        if (it < opts.burn_in && window_n == 25)
        {
            const double rate = static_cast<double>(window_acc) / window_n;
            if (rate < 0.25)
                step *= 0.5;
            else if (rate > 0.40)
                step *= 2.0;
            window_acc = 0;
            window_n = 0;
        }

        if (it >= opts.burn_in)
        {
            out.samples.push_back(eta);
            post_sum += eta.array().exp().matrix();
            ++post_n;
        }
    }

    out.acceptance_rate = static_cast<double>(accepted) / opts.n_iters;
    if (accepted == 0)
    {
        out.degenerate = true;
        out.sigma_mean = prior.sigma_mean();
        out.lambda_mean = prior.lambda_mean();
        return out;
    }
    const VecD mean = post_sum / post_n;
    out.sigma_mean = mean(0);
    out.lambda_mean = mean.tail(dim - 1);
    return out;
}

ObkfState obkf_init(const VecD &lambda_prior_mean, double sigma_prior_mean, double alpha_dl)
{
    const Eigen::Index n = lambda_prior_mean.size();
    ObkfState s;
    s.g_hat = VecC::Zero(n);
    VecD prior = lambda_prior_mean;
    if (alpha_dl < 1.0)
        prior /= (1.0 - alpha_dl * alpha_dl);
    s.err_cov = prior.cast<Cplx>().asDiagonal();
    s.gain = MatC::Zero(n, n);
    s.innovation = VecC::Zero(n);
    s.filtered = VecC::Zero(n);
    s.lambda_post = lambda_prior_mean;
    s.sigma_post = sigma_prior_mean;
    return s;
}

ObkfState obkf_step(const ObkfState &state, const VecC &y_m, double alpha_dl,
                    const VecD &lambda_post_new, double sigma_post_new, double pilot_power)
{
    const Eigen::Index n = y_m.size();
    require(state.g_hat.size() == n && lambda_post_new.size() == n,
            "obkf_step: dimension mismatch");
    require((lambda_post_new.array() >= 0.0).all() && sigma_post_new > 0.0,
            "obkf_step: posterior noise means must be nonnegative");

    ObkfState next;
    next.innovation = y_m - state.g_hat;

    // gain from the expectations conditioned on y(m-1), carried in `state`
    MatC s_mat = state.err_cov;
    s_mat.diagonal().array() += Cplx(state.sigma_post / pilot_power, 0.0);
    HermChol chol(hermitianize(s_mat), "obkf innovation covariance");
    next.gain = chol.solve(state.err_cov).adjoint(); // P (P + R)^-1, P Hermitian

    next.filtered = state.g_hat + next.gain * next.innovation;
    next.g_hat = alpha_dl * next.filtered;
    next.err_cov = hermitianize(
        alpha_dl * alpha_dl *
            ((MatC::Identity(n, n) - next.gain) * state.err_cov) +
        MatC(lambda_post_new.cast<Cplx>().asDiagonal()));
    next.lambda_post = lambda_post_new;
    next.sigma_post = sigma_post_new;
    return next;
}

KfTrajectory classical_kf(const std::vector<VecC> &observations, const VecD &lambda_diag,
                          double sigma_sq, double alpha_dl, double pilot_power)
{
    require(!observations.empty(), "classical_kf: no observations");
    const Eigen::Index n = observations.front().size();
    DiagStateSpace ss;
    ss.trans = VecD::Constant(n, alpha_dl);
    ss.proc_cov = lambda_diag;
    ss.prior_cov = stationary_prior(ss.trans, ss.proc_cov);
    ss.obs = MatC::Identity(n, n);
    ss.noise_var = sigma_sq / pilot_power;

    const KalmanMoments km = kalman_filter(ss, observations, false);
    KfTrajectory out;
    out.filtered = km.filt_mean;
    out.predicted = km.pred_mean;
    out.pred_cov = km.pred_cov;
    out.loglik = km.loglik;
    return out;
}

TrackDlResult track_dl(const std::vector<VecC> &observations, double alpha_dl,
                       const NoisePrior &prior, const TrackDlOptions &opts, std::uint64_t seed,
                       double pilot_power)
{
    require(!observations.empty(), "track_dl: no observations");
    require(opts.obkf_blocks >= 1, "track_dl: obkf_blocks must be >= 1");
    const int m_total = static_cast<int>(observations.size());
    const int m_d = std::min(opts.obkf_blocks, m_total);

    TrackDlResult out;
    ObkfState state = obkf_init(prior.lambda_mean(), prior.sigma_mean(), alpha_dl);

    std::vector<VecC> prefix;
    prefix.reserve(static_cast<size_t>(m_d));
    VecD lambda_frozen = state.lambda_post;
    double sigma_frozen = state.sigma_post;

    for (int m = 0; m < m_total; ++m)
    {
        out.states.push_back(state);
        VecD lam_new = lambda_frozen;
        double sig_new = sigma_frozen;
        if (m < m_d)
        {
            prefix.push_back(observations[static_cast<size_t>(m)]);
            const MhResult mh =
                mh_posterior_means(prefix, prior, opts.mcmc,
                                   derive_seed(seed, {0xDBu, static_cast<std::uint64_t>(m)}),
                                   alpha_dl, pilot_power);
            lam_new = mh.lambda_mean;
            sig_new = mh.sigma_mean;
            out.lambda_post.push_back(lam_new);
            out.sigma_post.push_back(sig_new);
            out.acceptance.push_back(mh.acceptance_rate);
            lambda_frozen = lam_new;
            sigma_frozen = sig_new;
        }
        state = obkf_step(state, observations[static_cast<size_t>(m)], alpha_dl, lam_new,
                          sig_new, pilot_power);
        out.filtered.push_back(state.filtered);
    }
    out.lambda_final = lambda_frozen;
    out.sigma_final = sigma_frozen;
    return out;
}

} // namespace vct
