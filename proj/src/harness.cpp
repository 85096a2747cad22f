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

#include "vctrack/harness.hpp"

#include "vctrack/dl_reconstruction.hpp"
#include "vctrack/ul_learning.hpp"
#include "vctrack/ul_tracking.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <chrono>
#include <cmath>
#include <fstream>
#include <map>
#include <thread>

namespace vct
{

void Scenario::validate() const
{
    config.validate();
    require(static_cast<int>(users.size()) == config.group_size,
            "scenario: one geometry per user of the studied segment required");
    for (const auto &u : users)
        u.validate();
    // disjoint-spread check happens implicitly through grouping later
}

Scenario desk_profile()
{
    Scenario s;
    s.config.n_antennas = 32;
    s.config.n_users = 2;
    s.config.group_size = 2;
    s.config.train_len = 4;
    s.config.block_len = 160;
    s.config.symbol_period = 1e-6;
    s.config.carrier_ul = 2e9;
    s.config.carrier_dl = 2e9;
    s.config.antenna_spacing_over_lambda = 0.5;
    s.config.pilot_power = 1.0;
    s.config.snr_db = 30.0;

    UserGeometry u1;
    u1.angle_min = 20.0 * M_PI / 180.0;
    u1.angle_max = 26.0 * M_PI / 180.0;
    u1.velocity = 10.0;
    UserGeometry u2;
    u2.angle_min = -49.0 * M_PI / 180.0;
    u2.angle_max = -43.0 * M_PI / 180.0;
    u2.velocity = 10.0;
    s.users = {u1, u2};
    return s;
}

Scenario table1_profile()
{
    Scenario s;
    s.config.n_antennas = 128;
    s.config.n_users = 4;
    s.config.group_size = 4;
    s.config.train_len = 4;
    s.config.block_len = 160;
    s.config.symbol_period = 1e-6;
    s.config.carrier_ul = 2e9;
    s.config.carrier_dl = 2e9;
    s.config.antenna_spacing_over_lambda = 0.5;
    s.config.pilot_power = 1.0;
    s.config.snr_db = 30.0;

    const double deg = M_PI / 180.0;
    const double spans[4][2] = {{-49, -43}, {-26, -20}, {20, 26}, {43, 49}};
    for (const auto &sp : spans)
    {
        UserGeometry u;
        u.angle_min = sp[0] * deg;
        u.angle_max = sp[1] * deg;
        u.velocity = 10.0;
        s.users.push_back(u);
    }
    return s;
}

void ExperimentSpec::validate() const
{
    scenario.validate();
    require(!snr_db_list.empty(), "experiment: snr_db_list must not be empty");
    for (double s : snr_db_list)
        require(std::isfinite(s), "experiment: snr values must be finite");
    require(trials >= 1, "experiment: trials must be >= 1");
    require(m_u >= 2, "experiment: m_u must be >= 2");
    require(m_d >= 1 && restore_blocks >= m_d, "experiment: need restore_blocks >= m_d >= 1");
    require(track_blocks >= restore_blocks, "experiment: track_blocks >= restore_blocks");
    require(em_iters >= 1, "experiment: em_iters >= 1");
    require(workers >= 1, "experiment: workers >= 1");
}

std::vector<ModelParams> segment_ground_truth(const std::vector<UserGeometry> &users,
                                              const SystemConfig &cfg, std::uint64_t seed)
{
    std::vector<ModelParams> truth(users.size());
    for (size_t k = 0; k < users.size(); ++k)
    {
        Rng rng(derive_seed(seed, {1, static_cast<std::uint64_t>(k)}));
        truth[k] = make_ground_truth(users[k], cfg, rng);
    }
    return truth;
}

double mse(const std::vector<VecC> &estimates, const std::vector<VecC> &truths)
{
    require(estimates.size() == truths.size() && !truths.empty(), "mse: size mismatch");
    double acc = 0.0;
    for (size_t i = 0; i < truths.size(); ++i)
    {
        const double denom = truths[i].squaredNorm();
        require(denom > 0.0, "mse: zero-norm truth");
        acc += (estimates[i] - truths[i]).squaredNorm() / denom;
    }
    return acc / static_cast<double>(truths.size());
}

double mse(const std::vector<VecD> &estimates, const std::vector<VecD> &truths)
{
    require(estimates.size() == truths.size() && !truths.empty(), "mse: size mismatch");
    double acc = 0.0;
    for (size_t i = 0; i < truths.size(); ++i)
    {
        const double denom = truths[i].squaredNorm();
        require(denom > 0.0, "mse: zero-norm truth");
        acc += (estimates[i] - truths[i]).squaredNorm() / denom;
    }
    return acc / static_cast<double>(truths.size());
}

double mse_scalar(const std::vector<double> &estimates, const std::vector<double> &truths)
{
    require(estimates.size() == truths.size() && !truths.empty(), "mse: size mismatch");
    double acc = 0.0;
    for (size_t i = 0; i < truths.size(); ++i)
    {
        require(truths[i] != 0.0, "mse: zero-norm truth");
        const double d = estimates[i] - truths[i];
        acc += d * d / (truths[i] * truths[i]);
    }
    return acc / static_cast<double>(truths.size());
}

namespace
{

VecD mask_to_vec(const VecI &mask)
{
    return mask.cast<double>();
}

// full-length virtual-channel truth: the AR state with off-support zeros
VecC masked_state(const VecC &state, const VecI &support)
{
    VecC v = state;
    for (Eigen::Index j = 0; j < v.size(); ++j)
        if (!support(j))
            v(j) = Cplx(0.0, 0.0);
    return v;
}

VecC embed(const std::vector<int> &bins, const VecC &values, int n)
{
    VecC full = VecC::Zero(n);
    for (size_t i = 0; i < bins.size(); ++i)
        full(bins[i]) = values(static_cast<Eigen::Index>(i));
    return full;
}

VecD embed_real(const std::vector<int> &bins, const VecD &values, int n)
{
    VecD full = VecD::Zero(n);
    for (size_t i = 0; i < bins.size(); ++i)
        full(bins[i]) = values(static_cast<Eigen::Index>(i));
    return full;
}

std::vector<int> mask_bins(const VecI &mask)
{
    std::vector<int> bins;
    for (Eigen::Index j = 0; j < mask.size(); ++j)
        if (mask(j))
            bins.push_back(static_cast<int>(j));
    return bins;
}

// tracking-phase uplink observations: every group sends its shared
// sequence, Y_m = sum_g sum_k h_{k,m} s_g^H + N_m
std::vector<MatC> synthesize_tracking_obs(const std::vector<VirtualChannelTrajectory> &trajs,
                                          const GroupAssignment &grouping,
                                          const SystemConfig &cfg, std::uint64_t seed)
{
    const int n = cfg.n_antennas;
    const int g_total = grouping.n_groups();
    const size_t blocks = trajs.front().physical.size();
    const double noise_sd = std::sqrt(cfg.noise_var());
    Rng rng(seed);

    std::vector<MatC> out;
    out.reserve(blocks);
    for (size_t m = 0; m < blocks; ++m)
    {
        MatC y = MatC::Zero(n, g_total);
        for (int g = 0; g < g_total; ++g)
            for (int k : grouping.groups[static_cast<size_t>(g)])
                y.noalias() += trajs[static_cast<size_t>(k)].physical[m] *
                               grouping.training.col(g).adjoint();
        for (Eigen::Index i = 0; i < y.size(); ++i)
            y(i) += noise_sd * rng.cnormal();
        out.push_back(std::move(y));
    }
    return out;
}

} // namespace

TrialRecord run_trial(const Scenario &scenario, double snr_db, double velocity, int trial_index,
                      const ExperimentSpec &spec)
{
    const auto t0 = std::chrono::steady_clock::now();
    TrialRecord rec;
    rec.snr_db = snr_db;
    rec.velocity = velocity;
    rec.trial = trial_index;

    SystemConfig cfg = scenario.config;
    cfg.snr_db = snr_db;
    std::vector<UserGeometry> users = scenario.users;
    if (velocity > 0.0)
        for (auto &u : users)
            u.velocity = velocity;

    const int tau = cfg.group_size;
    const int n = cfg.n_antennas;
    const std::uint64_t seed =
        derive_seed(spec.master_seed,
                    {std::bit_cast<std::uint64_t>(snr_db), std::bit_cast<std::uint64_t>(velocity),
                     static_cast<std::uint64_t>(trial_index)});

    const MatC a = dft_basis(n);
    const MatC b = derivative_basis(n);
    const MatC training = make_training(tau, cfg.train_len, cfg.pilot_power);

    // ---- ground truth and uplink learning -------------------------------
    const std::vector<ModelParams> truth = segment_ground_truth(users, cfg, seed);
    std::vector<VirtualChannelTrajectory> trajs(static_cast<size_t>(tau));
    for (int k = 0; k < tau; ++k)
        trajs[static_cast<size_t>(k)] =
            simulate_trajectory(truth[static_cast<size_t>(k)], spec.m_u,
                                derive_seed(seed, {2, static_cast<std::uint64_t>(k)}), a, b);
    const std::vector<MatC> obs =
        synthesize_ul_observations(trajs, training, cfg, derive_seed(seed, {3}));

    EmOptions em_opts;
    em_opts.n_iters = spec.em_iters;
    const EmResult em = em_learn(obs, cfg, training, em_default_init(obs, cfg), em_opts);

    for (const auto &snapshot : em.history)
    {
        std::vector<double> ahat, atru, shat, stru;
        std::vector<VecD> lhat, ltru, chat, ctru, rhat, rtru;
        for (int k = 0; k < tau; ++k)
        {
            const auto &e = snapshot[static_cast<size_t>(k)];
            const auto &t = truth[static_cast<size_t>(k)];
            ahat.push_back(e.alpha);
            atru.push_back(t.alpha);
            shat.push_back(e.noise_var);
            stru.push_back(t.noise_var);
            lhat.push_back(e.lambda_diag);
            ltru.push_back(t.lambda_diag);
            chat.push_back(mask_to_vec(e.support));
            ctru.push_back(mask_to_vec(t.support));
            rhat.push_back(e.bias);
            rtru.push_back(t.bias);
        }
        rec.em.alpha.push_back(mse_scalar(ahat, atru));
        rec.em.sigma.push_back(mse_scalar(shat, stru));
        rec.em.lambda.push_back(mse(lhat, ltru));
        rec.em.support.push_back(mse(chat, ctru));
        rec.em.bias.push_back(mse(rhat, rtru));
    }

    double match = 0.0, bias_se = 0.0;
    int bias_n = 0;
    for (int k = 0; k < tau; ++k)
    {
        const auto &e = em.params[static_cast<size_t>(k)];
        const auto &t = truth[static_cast<size_t>(k)];
        match += (e.support.array() == t.support.array()).cast<double>().sum() / n;
        for (int j = 0; j < n; ++j)
            if (t.support(j))
            {
                const double d = e.bias(j) - t.bias(j);
                bias_se += d * d;
                ++bias_n;
            }
    }
    rec.support_match_frac = match / tau;
    rec.bias_rmse_on_support = bias_n > 0 ? std::sqrt(bias_se / bias_n) : 0.0;

    // ---- uplink tracking on learned parameters --------------------------
    {
        std::vector<VecI> learned_masks;
        for (const auto &p : em.params)
            learned_masks.push_back(p.support);
        const GroupAssignment grouping = group_users(learned_masks, cfg.pilot_power);

        std::vector<VirtualChannelTrajectory> track_trajs(static_cast<size_t>(tau));
        for (int k = 0; k < tau; ++k)
            track_trajs[static_cast<size_t>(k)] =
                simulate_trajectory(truth[static_cast<size_t>(k)], spec.ul_track_blocks,
                                    derive_seed(seed, {4, static_cast<std::uint64_t>(k)}), a, b);
        const std::vector<MatC> track_obs =
            synthesize_tracking_obs(track_trajs, grouping, cfg, derive_seed(seed, {5}));

        rec.ul_mse_h.assign(static_cast<size_t>(spec.ul_track_blocks), 0.0);
        rec.ul_mse_virtual.assign(static_cast<size_t>(spec.ul_track_blocks), 0.0);
        for (int g = 0; g < grouping.n_groups(); ++g)
        {
            const auto &members = grouping.groups[static_cast<size_t>(g)];
            const ReducedStateSpace red =
                build_reduced_state_space(em.params, members, a, b, grouping.n_groups(),
                                          cfg.pilot_power);
            std::vector<VecC> ys;
            for (const auto &y : track_obs)
                ys.push_back(extract_group_signal(y, g, grouping.training, cfg.pilot_power));
            const UlTrackResult tr = reduced_kf_track(red, ys);
            for (size_t i = 0; i < members.size(); ++i)
            {
                const int k = members[i];
                for (int m = 0; m < spec.ul_track_blocks; ++m)
                {
                    const VecC &h_true = track_trajs[static_cast<size_t>(k)].physical[m];
                    rec.ul_mse_h[static_cast<size_t>(m)] +=
                        (tr.h_hat[i][static_cast<size_t>(m)] - h_true).squaredNorm() /
                        h_true.squaredNorm() / tau;
                    const VecC v_true =
                        masked_state(track_trajs[static_cast<size_t>(k)].states[m],
                                     truth[static_cast<size_t>(k)].support);
                    const int nq = static_cast<int>(red.q_bins[i].size());
                    const VecC v_est =
                        embed(red.q_bins[i],
                              tr.r_hat[static_cast<size_t>(m)].segment(red.offsets[i], nq), n);
                    rec.ul_mse_virtual[static_cast<size_t>(m)] +=
                        (v_est - v_true).squaredNorm() / v_true.squaredNorm() / tau;
                }
            }
        }
    }

    // ---- downlink reconstruction + restoration --------------------------
    const double ratio_dl_over_ul = cfg.wavelength_ratio_dl_over_ul(); // lambda'/lambda
    const double ratio_ul_over_dl = 1.0 / ratio_dl_over_ul;            // lambda/lambda'

    std::vector<DlModelPartial> recon(static_cast<size_t>(tau));
    std::vector<DlModelPartial> dl_true(static_cast<size_t>(tau));
    std::vector<ModelParams> dl_truth_params(static_cast<size_t>(tau));
    for (int k = 0; k < tau; ++k)
    {
        const auto &e = em.params[static_cast<size_t>(k)];
        auto &r = recon[static_cast<size_t>(k)];
        r = map_support_bias(e.support, e.bias, ratio_ul_over_dl, &e.lambda_diag);
        const double nu_hat =
            doppler_from_alpha(std::max(e.alpha, 1e-6), cfg.block_len, cfg.symbol_period);
        r.alpha_dl = map_alpha_dl(nu_hat, cfg.block_len, cfg.symbol_period, ratio_dl_over_ul);

        const auto &t = truth[static_cast<size_t>(k)];
        auto &dt = dl_true[static_cast<size_t>(k)];
        dt = map_support_bias(t.support, t.bias, ratio_ul_over_dl);
        dt.alpha_dl = map_alpha_dl(max_doppler(users[static_cast<size_t>(k)].velocity,
                                               cfg.carrier_ul),
                                   cfg.block_len, cfg.symbol_period, ratio_dl_over_ul);

        // carrier-dependent process power: drawn fresh, unknown to the tracker
        Rng rng(derive_seed(seed, {6, static_cast<std::uint64_t>(k)}));
        auto &dp = dl_truth_params[static_cast<size_t>(k)];
        dp.alpha = dt.alpha_dl;
        dp.support = dt.support_dl;
        dp.bias = dt.bias_dl;
        dp.lambda_diag = VecD::Zero(n);
        for (int j : dt.bins)
            dp.lambda_diag(j) = std::exp(rng.uniform(std::log(0.5), std::log(2.0)));
        dp.noise_var = cfg.noise_var();
    }

    std::vector<VecI> dl_masks;
    for (const auto &r : recon)
        dl_masks.push_back(r.support_dl);
    const GroupAssignment dl_grouping = group_users(dl_masks, cfg.pilot_power);

    const int blocks = spec.track_blocks;
    rec.dl_mse_obkf.assign(static_cast<size_t>(blocks), 0.0);
    rec.dl_mse_perfect.assign(static_cast<size_t>(blocks), 0.0);
    rec.dl_mse_weak.assign(static_cast<size_t>(blocks), 0.0);
    rec.dl_mse_lambda.assign(static_cast<size_t>(spec.restore_blocks), 0.0);
    rec.dl_mse_sigma.assign(static_cast<size_t>(spec.restore_blocks), 0.0);
    rec.dl_acceptance.assign(static_cast<size_t>(spec.restore_blocks), 0.0);

    for (int g = 0; g < dl_grouping.n_groups(); ++g)
    {
        const auto &members = dl_grouping.groups[static_cast<size_t>(g)];
        std::vector<std::vector<int>> q_bins;
        std::vector<VecD> biases;
        for (int k : members)
        {
            q_bins.push_back(recon[static_cast<size_t>(k)].bins);
            biases.push_back(recon[static_cast<size_t>(k)].bias_dl);
        }
        const DlTraining dl_train =
            build_dl_training(q_bins, biases, n, cfg.pilot_power, a, b);

        for (size_t pos = 0; pos < members.size(); ++pos)
        {
            const int k = members[pos];
            const auto &r = recon[static_cast<size_t>(k)];
            const auto &dp = dl_truth_params[static_cast<size_t>(k)];
            const VirtualChannelTrajectory dl_traj =
                simulate_trajectory(dp, blocks,
                                    derive_seed(seed, {7, static_cast<std::uint64_t>(k)}), a, b);

            Rng obs_rng(derive_seed(seed, {8, static_cast<std::uint64_t>(k)}));
            std::vector<VecC> ys;
            for (int m = 0; m < blocks; ++m)
                ys.push_back(dl_observe_despread(dl_traj.physical[static_cast<size_t>(m)],
                                                 dl_train, static_cast<int>(pos),
                                                 dp.noise_var, cfg.pilot_power, obs_rng));

            // prior anchored at the remapped uplink estimates
            NoisePrior prior;
            prior.log_loc.resize(static_cast<Eigen::Index>(r.bins.size()) + 1);
            prior.log_loc(0) = std::log(std::max(em.params[static_cast<size_t>(k)].noise_var,
                                                 1e-12));
            const double anchor_max = r.lambda_anchor.maxCoeff();
            for (size_t i = 0; i < r.bins.size(); ++i)
                prior.log_loc(static_cast<Eigen::Index>(i) + 1) =
                    std::log(std::max(r.lambda_anchor(r.bins[i]), 1e-4 * anchor_max + 1e-12));

            TrackDlOptions topts;
            topts.obkf_blocks = spec.restore_blocks;
            topts.mcmc = spec.mcmc;
            const TrackDlResult track =
                track_dl(ys, r.alpha_dl, prior, topts,
                         derive_seed(seed, {9, static_cast<std::uint64_t>(k)}), cfg.pilot_power);

            // restoration error after each OBKF block
            const VecD lam_true_full = dp.lambda_diag;
            for (int m = 0; m < spec.restore_blocks && m < static_cast<int>(track.lambda_post.size()); ++m)
            {
                const VecD lam_est_full =
                    embed_real(r.bins, track.lambda_post[static_cast<size_t>(m)], n);
                rec.dl_mse_lambda[static_cast<size_t>(m)] +=
                    (lam_est_full - lam_true_full).squaredNorm() / lam_true_full.squaredNorm() /
                    tau;
                const double ds = track.sigma_post[static_cast<size_t>(m)] - dp.noise_var;
                rec.dl_mse_sigma[static_cast<size_t>(m)] +=
                    ds * ds / (dp.noise_var * dp.noise_var) / tau;
                rec.dl_acceptance[static_cast<size_t>(m)] +=
                    track.acceptance[static_cast<size_t>(m)] / tau;
            }

            // channel trajectory of the M_d-block run: identical prefix, then
            // a classical continuation frozen at the block-M_d posterior
            std::vector<VecC> obkf_traj(track.filtered.begin(),
                                        track.filtered.begin() + spec.m_d);
            ObkfState st = track.states[static_cast<size_t>(spec.m_d)];
            for (int m = spec.m_d; m < blocks; ++m)
            {
                st = obkf_step(st, ys[static_cast<size_t>(m)], r.alpha_dl, st.lambda_post,
                               st.sigma_post, cfg.pilot_power);
                obkf_traj.push_back(st.filtered);
            }

            // baselines share the observations
            std::vector<int> tracked = r.bins;
            VecD lam_true_tracked(static_cast<Eigen::Index>(tracked.size()));
            for (size_t i = 0; i < tracked.size(); ++i)
                lam_true_tracked(static_cast<Eigen::Index>(i)) = dp.lambda_diag(tracked[i]);
            KfTrajectory perfect, weak;
            if (spec.baseline_perfect || spec.baseline_weak)
                perfect = classical_kf(ys, lam_true_tracked, dp.noise_var, dp.alpha,
                                       cfg.pilot_power);
            if (spec.baseline_weak)
            {
                Rng wrng(derive_seed(seed, {10, static_cast<std::uint64_t>(k)}));
                VecD lam_weak = lam_true_tracked;
                for (Eigen::Index i = 0; i < lam_weak.size(); ++i)
                    lam_weak(i) *= std::exp(wrng.uniform(std::log(0.25), std::log(4.0)));
                const double sig_weak =
                    dp.noise_var * std::exp(wrng.uniform(std::log(0.25), std::log(4.0)));
                weak = classical_kf(ys, lam_weak, sig_weak, dp.alpha, cfg.pilot_power);
            }

            for (int m = 0; m < blocks; ++m)
            {
                const VecC g_true = masked_state(dl_traj.states[static_cast<size_t>(m)],
                                                 dp.support);
                const double denom = g_true.squaredNorm();
                const VecC est = embed(r.bins, obkf_traj[static_cast<size_t>(m)], n);
                rec.dl_mse_obkf[static_cast<size_t>(m)] +=
                    (est - g_true).squaredNorm() / denom / tau;
                if (spec.baseline_perfect)
                {
                    const VecC pe = embed(r.bins, perfect.filtered[static_cast<size_t>(m)], n);
                    rec.dl_mse_perfect[static_cast<size_t>(m)] +=
                        (pe - g_true).squaredNorm() / denom / tau;
                }
                if (spec.baseline_weak)
                {
                    const VecC we = embed(r.bins, weak.filtered[static_cast<size_t>(m)], n);
                    rec.dl_mse_weak[static_cast<size_t>(m)] +=
                        (we - g_true).squaredNorm() / denom / tau;
                }
            }
        }
    }

    rec.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
                      .count();
    return rec;
}

ExperimentResult run_experiment(const ExperimentSpec &spec)
{
    spec.validate();
    struct Task
    {
        double snr;
        double velocity;
        int trial;
    };
    std::vector<Task> tasks;
    const std::vector<double> velocities =
        spec.velocity_list.empty() ? std::vector<double>{0.0} : spec.velocity_list;
    for (double snr : spec.snr_db_list)
        for (double v : velocities)
            for (int t = 0; t < spec.trials; ++t)
                tasks.push_back({snr, v, t});

    ExperimentResult result;
    result.records.resize(tasks.size());

    std::atomic<size_t> next{0};
    const int n_workers = std::min<int>(spec.workers, static_cast<int>(tasks.size()));
    auto worker = [&]() {
        for (;;)
        {
            const size_t i = next.fetch_add(1);
            if (i >= tasks.size())
                return;
            const Task &t = tasks[i];
            TrialRecord rec;
            try
            {
                rec = run_trial(spec.scenario, t.snr, t.velocity, t.trial, spec);
            }
            catch (const std::exception &e)
            {
                rec.snr_db = t.snr;
                rec.velocity = t.velocity;
                rec.trial = t.trial;
                rec.failed = true;
                rec.error = e.what();
            }
            result.records[i] = std::move(rec);
        }
    };

    if (n_workers <= 1)
    {
        worker();
    }
    else
    {
        std::vector<std::thread> pool;
        pool.reserve(static_cast<size_t>(n_workers));
        for (int w = 0; w < n_workers; ++w)
            pool.emplace_back(worker);
        for (auto &th : pool)
            th.join();
    }
    return result;
}

namespace
{

void write_rows(std::ofstream &out, const TrialRecord &r, const char *stage, const char *key,
                const std::vector<double> &values)
{
    for (size_t i = 0; i < values.size(); ++i)
        out << r.snr_db << ',' << r.velocity << ',' << r.trial << ',' << stage << ',' << key
            << ',' << i << ',' << values[i] << '\n';
}

} // namespace

void emit_csv(const ExperimentResult &result, const std::string &path)
{
    std::ofstream out(path);
    if (!out)
        throw ValidationError("emit_csv: cannot open output file: " + path);
    out.precision(17);
    out << "schema_version,1\n";
    out << "snr_db,velocity,trial,stage,key,index,value\n";
    for (const auto &r : result.records)
    {
        if (r.failed)
        {
            out << r.snr_db << ',' << r.velocity << ',' << r.trial << ",error,message,0,nan\n";
            continue;
        }
        write_rows(out, r, "em", "mse_alpha", r.em.alpha);
        write_rows(out, r, "em", "mse_c", r.em.support);
        write_rows(out, r, "em", "mse_lambda", r.em.lambda);
        write_rows(out, r, "em", "mse_rho", r.em.bias);
        write_rows(out, r, "em", "mse_sigma", r.em.sigma);
        write_rows(out, r, "em", "support_match", {r.support_match_frac});
        write_rows(out, r, "em", "bias_rmse", {r.bias_rmse_on_support});
        write_rows(out, r, "ul", "mse_h", r.ul_mse_h);
        write_rows(out, r, "ul", "mse_virtual", r.ul_mse_virtual);
        write_rows(out, r, "dl", "mse_g_obkf", r.dl_mse_obkf);
        write_rows(out, r, "dl", "mse_g_perfect", r.dl_mse_perfect);
        write_rows(out, r, "dl", "mse_g_weak", r.dl_mse_weak);
        write_rows(out, r, "dl", "mse_lambda_dl", r.dl_mse_lambda);
        write_rows(out, r, "dl", "mse_sigma_dl", r.dl_mse_sigma);
        write_rows(out, r, "dl", "acceptance_rate", r.dl_acceptance);
        write_rows(out, r, "meta", "wall_ms", {r.wall_ms});
    }
    if (!out)
        throw NumericalError("emit_csv: write failure on " + path);
}

void emit_summary(const ExperimentResult &result, const std::string &path)
{
    // median and inter-quartile range across trials, keyed by
    // (snr, velocity, stage, key, index)
    struct KeyCmp
    {
        double snr, vel;
        std::string stage, key;
        size_t index;
        bool operator<(const KeyCmp &o) const
        {
            if (snr != o.snr)
                return snr < o.snr;
            if (vel != o.vel)
                return vel < o.vel;
            if (stage != o.stage)
                return stage < o.stage;
            if (key != o.key)
                return key < o.key;
            return index < o.index;
        }
    };
    std::map<KeyCmp, std::vector<double>> cells;
    auto add = [&](const TrialRecord &r, const char *stage, const char *key,
                   const std::vector<double> &values) {
        for (size_t i = 0; i < values.size(); ++i)
            cells[{r.snr_db, r.velocity, stage, key, i}].push_back(values[i]);
    };
    for (const auto &r : result.records)
    {
        if (r.failed)
            continue;
        add(r, "em", "mse_alpha", r.em.alpha);
        add(r, "em", "mse_c", r.em.support);
        add(r, "em", "mse_lambda", r.em.lambda);
        add(r, "em", "mse_rho", r.em.bias);
        add(r, "em", "mse_sigma", r.em.sigma);
        add(r, "em", "support_match", {r.support_match_frac});
        add(r, "em", "bias_rmse", {r.bias_rmse_on_support});
        add(r, "ul", "mse_h", r.ul_mse_h);
        add(r, "dl", "mse_g_obkf", r.dl_mse_obkf);
        add(r, "dl", "mse_g_perfect", r.dl_mse_perfect);
        add(r, "dl", "mse_g_weak", r.dl_mse_weak);
        add(r, "dl", "mse_lambda_dl", r.dl_mse_lambda);
        add(r, "dl", "mse_sigma_dl", r.dl_mse_sigma);
    }

    std::ofstream out(path);
    if (!out)
        throw ValidationError("emit_summary: cannot open output file: " + path);
    out.precision(17);
    out << "schema_version,1\n";
    out << "snr_db,velocity,stage,key,index,median,q1,q3,count\n";
    for (auto &[key, values] : cells)
    {
        std::sort(values.begin(), values.end());
        const auto quantile = [&](double q) {
            const double pos = q * (values.size() - 1);
            const size_t lo = static_cast<size_t>(pos);
            const size_t hi = std::min(lo + 1, values.size() - 1);
            const double frac = pos - lo;
            return values[lo] * (1.0 - frac) + values[hi] * frac;
        };
        out << key.snr << ',' << key.vel << ',' << key.stage << ',' << key.key << ','
            << key.index << ',' << quantile(0.5) << ',' << quantile(0.25) << ','
            << quantile(0.75) << ',' << values.size() << '\n';
    }
    if (!out)
        throw NumericalError("emit_summary: write failure on " + path);
}

} // namespace vct
