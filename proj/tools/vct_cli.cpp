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

#include "vctrack/dl_reconstruction.hpp"
#include "vctrack/harness.hpp"
#include "vctrack/io.hpp"
#include "vctrack/ul_learning.hpp"
#include "vctrack/ul_tracking.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

namespace
{

using namespace vct;

struct GlobalOpts
{
    std::string config;
    std::string profile = "desk";
    std::string out_dir = ".";
    std::uint64_t seed = 1;
    int workers = 1;
};

Scenario resolve_scenario(const GlobalOpts &g)
{
    if (!g.config.empty())
        return load_scenario(g.config);
    return g.profile == "full" ? table1_profile() : desk_profile();
}

std::string out_path(const GlobalOpts &g, const std::string &name)
{
    std::filesystem::create_directories(g.out_dir);
    return (std::filesystem::path(g.out_dir) / name).string();
}

std::ofstream open_csv(const std::string &path, const std::string &header)
{
    std::ofstream out(path);
    if (!out)
        throw ValidationError("cannot open output file: " + path);
    out.precision(17);
    out << "schema_version,1\n" << header << '\n';
    return out;
}

int cmd_simulate(const GlobalOpts &g, int blocks, double snr_db)
{
    Scenario s = resolve_scenario(g);
    if (std::isfinite(snr_db))
        s.config.snr_db = snr_db;
    s.validate();
    const MatC a = dft_basis(s.config.n_antennas);
    const MatC b = derivative_basis(s.config.n_antennas);
    const auto truth = segment_ground_truth(s.users, s.config, g.seed);
    save_params(truth, out_path(g, "truth_params.json"));
    for (size_t k = 0; k < truth.size(); ++k)
    {
        const auto traj = simulate_trajectory(
            truth[k], blocks, derive_seed(g.seed, {2, static_cast<std::uint64_t>(k)}), a, b);
        dump_trajectory(traj, out_path(g, "trajectory_user" + std::to_string(k) + ".csv"));
    }
    std::cout << "wrote " << truth.size() << " trajectories to " << g.out_dir << '\n';
    return 0;
}

int cmd_learn(const GlobalOpts &g, int blocks, int em_iters, double snr_db)
{
    Scenario s = resolve_scenario(g);
    if (std::isfinite(snr_db))
        s.config.snr_db = snr_db;
    s.validate();
    const SystemConfig &cfg = s.config;
    const int tau = cfg.group_size;
    const MatC a = dft_basis(cfg.n_antennas);
    const MatC b = derivative_basis(cfg.n_antennas);

    const auto truth = segment_ground_truth(s.users, cfg, g.seed);
    std::vector<VirtualChannelTrajectory> trajs(truth.size());
    for (size_t k = 0; k < truth.size(); ++k)
        trajs[k] = simulate_trajectory(truth[k], blocks,
                                       derive_seed(g.seed, {2, static_cast<std::uint64_t>(k)}),
                                       a, b);
    const MatC training = make_training(tau, cfg.train_len, cfg.pilot_power);
    const auto obs = synthesize_ul_observations(trajs, training, cfg, derive_seed(g.seed, {3}));

    EmOptions opts;
    opts.n_iters = em_iters;
    const EmResult em = em_learn(obs, cfg, training, em_default_init(obs, cfg), opts);
    save_params(em.params, out_path(g, "learned_params.json"));

    auto csv = open_csv(out_path(g, "em_mse.csv"),
                        "iter,mse_alpha,mse_c,mse_lambda,mse_rho,mse_sigma");
    for (size_t it = 0; it < em.history.size(); ++it)
    {
        std::vector<double> ah, at, sh, st;
        std::vector<VecD> lh, lt, ch, ct, rh, rt;
        for (int k = 0; k < tau; ++k)
        {
            const auto &e = em.history[it][static_cast<size_t>(k)];
            const auto &t = truth[static_cast<size_t>(k)];
            ah.push_back(e.alpha);
            at.push_back(t.alpha);
            sh.push_back(e.noise_var);
            st.push_back(t.noise_var);
            lh.push_back(e.lambda_diag);
            lt.push_back(t.lambda_diag);
            ch.push_back(e.support.cast<double>());
            ct.push_back(t.support.cast<double>());
            rh.push_back(e.bias);
            rt.push_back(t.bias);
        }
        csv << (it + 1) << ',' << mse_scalar(ah, at) << ',' << mse(ch, ct) << ','
            << mse(lh, lt) << ',' << mse(rh, rt) << ',' << mse_scalar(sh, st) << '\n';
    }
    std::cout << "wrote learned_params.json and em_mse.csv to " << g.out_dir << '\n';
    return 0;
}

int cmd_track_ul(const GlobalOpts &g, const std::string &params_path, int blocks)
{
    Scenario s = resolve_scenario(g);
    s.validate();
    const SystemConfig &cfg = s.config;
    const int tau = cfg.group_size;
    const int n = cfg.n_antennas;
    const MatC a = dft_basis(n);
    const MatC b = derivative_basis(n);

    const auto learned = load_params(params_path);
    require(static_cast<int>(learned.size()) == tau,
            "track-ul: parameter file user count must match the scenario");
    const auto truth = segment_ground_truth(s.users, cfg, g.seed);

    std::vector<VirtualChannelTrajectory> trajs(truth.size());
    for (size_t k = 0; k < truth.size(); ++k)
        trajs[k] = simulate_trajectory(truth[k], blocks,
                                       derive_seed(g.seed, {4, static_cast<std::uint64_t>(k)}),
                                       a, b);

    std::vector<VecI> masks;
    for (const auto &p : learned)
        masks.push_back(p.support);
    const GroupAssignment grouping = group_users(masks, cfg.pilot_power);

    // tracking-phase synthesis: every group sends its shared sequence
    Rng rng(derive_seed(g.seed, {5}));
    const double noise_sd = std::sqrt(cfg.noise_var());
    std::vector<MatC> track_obs;
    for (int m = 0; m < blocks; ++m)
    {
        MatC y = MatC::Zero(n, grouping.n_groups());
        for (int grp = 0; grp < grouping.n_groups(); ++grp)
            for (int k : grouping.groups[static_cast<size_t>(grp)])
                y.noalias() += trajs[static_cast<size_t>(k)].physical[static_cast<size_t>(m)] *
                               grouping.training.col(grp).adjoint();
        for (Eigen::Index i = 0; i < y.size(); ++i)
            y(i) += noise_sd * rng.cnormal();
        track_obs.push_back(std::move(y));
    }

    auto csv = open_csv(out_path(g, "ul_track.csv"), "block,user,mse_h,mse_virtual");
    for (int grp = 0; grp < grouping.n_groups(); ++grp)
    {
        const auto &members = grouping.groups[static_cast<size_t>(grp)];
        const auto red = build_reduced_state_space(learned, members, a, b,
                                                   grouping.n_groups(), cfg.pilot_power);
        std::vector<VecC> ys;
        for (const auto &y : track_obs)
            ys.push_back(extract_group_signal(y, grp, grouping.training, cfg.pilot_power));
        const UlTrackResult tr = reduced_kf_track(red, ys);
        for (size_t i = 0; i < members.size(); ++i)
        {
            const int k = members[i];
            for (int m = 0; m < blocks; ++m)
            {
                const VecC &h_true = trajs[static_cast<size_t>(k)].physical[static_cast<size_t>(m)];
                VecC v_true = trajs[static_cast<size_t>(k)].states[static_cast<size_t>(m)];
                for (Eigen::Index j = 0; j < v_true.size(); ++j)
                    if (!truth[static_cast<size_t>(k)].support(j))
                        v_true(j) = Cplx(0, 0);
                VecC v_est = VecC::Zero(n);
                for (size_t q = 0; q < red.q_bins[i].size(); ++q)
                    v_est(red.q_bins[i][q]) =
                        tr.r_hat[static_cast<size_t>(m)](red.offsets[i] +
                                                          static_cast<Eigen::Index>(q));
                csv << m << ',' << k << ','
                    << (tr.h_hat[i][static_cast<size_t>(m)] - h_true).squaredNorm() /
                           h_true.squaredNorm()
                    << ',' << (v_est - v_true).squaredNorm() / v_true.squaredNorm() << '\n';
            }
        }
    }
    std::cout << "wrote ul_track.csv to " << g.out_dir << '\n';
    return 0;
}

int cmd_reconstruct_dl(const GlobalOpts &g, const std::string &params_path, double carrier_dl)
{
    Scenario s = resolve_scenario(g);
    if (carrier_dl > 0.0)
        s.config.carrier_dl = carrier_dl;
    s.validate();
    const SystemConfig &cfg = s.config;
    const auto learned = load_params(params_path);

    std::vector<DlModelPartial> partials;
    for (const auto &p : learned)
    {
        DlModelPartial r = map_support_bias(p.support, p.bias,
                                            1.0 / cfg.wavelength_ratio_dl_over_ul(),
                                            &p.lambda_diag);
        const double nu = doppler_from_alpha(std::max(p.alpha, 1e-6), cfg.block_len,
                                             cfg.symbol_period);
        r.alpha_dl = map_alpha_dl(nu, cfg.block_len, cfg.symbol_period,
                                  cfg.wavelength_ratio_dl_over_ul());
        partials.push_back(std::move(r));
    }
    const double sigma_anchor = learned.empty() ? 0.0 : learned.front().noise_var;
    save_dl_partials(partials, sigma_anchor, out_path(g, "dl_partials.json"));
    std::cout << "wrote dl_partials.json to " << g.out_dir << '\n';
    return 0;
}

int cmd_track_dl(const GlobalOpts &g, const std::string &partials_path, int obkf_blocks,
                 int blocks, int mcmc_iters, int burn_in, const std::string &baseline)
{
    Scenario s = resolve_scenario(g);
    s.validate();
    const SystemConfig &cfg = s.config;
    const int tau = cfg.group_size;
    const int n = cfg.n_antennas;
    const MatC a = dft_basis(n);
    const MatC b = derivative_basis(n);

    double sigma_anchor = 0.0;
    const auto partials = load_dl_partials(partials_path, &sigma_anchor);
    require(static_cast<int>(partials.size()) == tau,
            "track-dl: partial file user count must match the scenario");
    const auto truth = segment_ground_truth(s.users, cfg, g.seed);

    // downlink ground truth: angle-reciprocal support, carrier-fresh powers
    const double ratio_dl = cfg.wavelength_ratio_dl_over_ul();
    std::vector<ModelParams> dl_truth(truth.size());
    for (size_t k = 0; k < truth.size(); ++k)
    {
        DlModelPartial dt = map_support_bias(truth[k].support, truth[k].bias, 1.0 / ratio_dl);
        Rng rng(derive_seed(g.seed, {6, static_cast<std::uint64_t>(k)}));
        auto &dp = dl_truth[k];
        dp.alpha = map_alpha_dl(max_doppler(s.users[k].velocity, cfg.carrier_ul),
                                cfg.block_len, cfg.symbol_period, ratio_dl);
        dp.support = dt.support_dl;
        dp.bias = dt.bias_dl;
        dp.lambda_diag = VecD::Zero(n);
        for (int j : dt.bins)
            dp.lambda_diag(j) = std::exp(rng.uniform(std::log(0.5), std::log(2.0)));
        dp.noise_var = cfg.noise_var();
    }

    std::vector<VecI> masks;
    for (const auto &p : partials)
        masks.push_back(p.support_dl);
    const GroupAssignment grouping = group_users(masks, cfg.pilot_power);

    auto csv = open_csv(out_path(g, "dl_track.csv"),
                        "block,mse_g,mse_lambda_dl,mse_sigma_dl,acceptance_rate");
    std::vector<double> mse_g(static_cast<size_t>(blocks), 0.0);
    std::vector<double> mse_lam(static_cast<size_t>(obkf_blocks), 0.0);
    std::vector<double> mse_sig(static_cast<size_t>(obkf_blocks), 0.0);
    std::vector<double> acc(static_cast<size_t>(obkf_blocks), 0.0);

    for (int grp = 0; grp < grouping.n_groups(); ++grp)
    {
        const auto &members = grouping.groups[static_cast<size_t>(grp)];
        std::vector<std::vector<int>> q_bins;
        std::vector<VecD> biases;
        for (int k : members)
        {
            q_bins.push_back(partials[static_cast<size_t>(k)].bins);
            biases.push_back(partials[static_cast<size_t>(k)].bias_dl);
        }
        const DlTraining tr = build_dl_training(q_bins, biases, n, cfg.pilot_power, a, b);
        for (size_t pos = 0; pos < members.size(); ++pos)
        {
            const int k = members[pos];
            const auto &r = partials[static_cast<size_t>(k)];
            const auto &dp = dl_truth[static_cast<size_t>(k)];
            const auto traj = simulate_trajectory(
                dp, blocks, derive_seed(g.seed, {7, static_cast<std::uint64_t>(k)}), a, b);
            Rng orng(derive_seed(g.seed, {8, static_cast<std::uint64_t>(k)}));
            std::vector<VecC> ys;
            for (int m = 0; m < blocks; ++m)
                ys.push_back(dl_observe_despread(traj.physical[static_cast<size_t>(m)], tr,
                                                 static_cast<int>(pos), dp.noise_var,
                                                 cfg.pilot_power, orng));

            NoisePrior prior;
            prior.log_loc.resize(static_cast<Eigen::Index>(r.bins.size()) + 1);
            prior.log_loc(0) = std::log(std::max(sigma_anchor, 1e-12));
            const double amax = r.lambda_anchor.maxCoeff();
            for (size_t i = 0; i < r.bins.size(); ++i)
                prior.log_loc(static_cast<Eigen::Index>(i) + 1) =
                    std::log(std::max(r.lambda_anchor(r.bins[i]), 1e-4 * amax + 1e-12));

            TrackDlOptions topts;
            topts.obkf_blocks = obkf_blocks;
            topts.mcmc.n_iters = mcmc_iters;
            topts.mcmc.burn_in = burn_in;
            const TrackDlResult track = track_dl(
                ys, r.alpha_dl, prior, topts,
                derive_seed(g.seed, {9, static_cast<std::uint64_t>(k)}), cfg.pilot_power);

            for (int m = 0; m < blocks; ++m)
            {
                VecC g_true = traj.states[static_cast<size_t>(m)];
                for (Eigen::Index j = 0; j < g_true.size(); ++j)
                    if (!dp.support(j))
                        g_true(j) = Cplx(0, 0);
                VecC est = VecC::Zero(n);
                for (size_t i = 0; i < r.bins.size(); ++i)
                    est(r.bins[i]) = track.filtered[static_cast<size_t>(m)](
                        static_cast<Eigen::Index>(i));
                mse_g[static_cast<size_t>(m)] +=
                    (est - g_true).squaredNorm() / g_true.squaredNorm() / tau;
            }
            for (int m = 0; m < obkf_blocks && m < static_cast<int>(track.lambda_post.size());
                 ++m)
            {
                VecD lam_full = VecD::Zero(n);
                for (size_t i = 0; i < r.bins.size(); ++i)
                    lam_full(r.bins[i]) =
                        track.lambda_post[static_cast<size_t>(m)](static_cast<Eigen::Index>(i));
                mse_lam[static_cast<size_t>(m)] +=
                    (lam_full - dp.lambda_diag).squaredNorm() /
                    dp.lambda_diag.squaredNorm() / tau;
                const double ds = track.sigma_post[static_cast<size_t>(m)] - dp.noise_var;
                mse_sig[static_cast<size_t>(m)] += ds * ds / (dp.noise_var * dp.noise_var) / tau;
                acc[static_cast<size_t>(m)] += track.acceptance[static_cast<size_t>(m)] / tau;
            }
            (void)baseline; // baselines are reported by the experiment command
        }
    }
    for (int m = 0; m < blocks; ++m)
    {
        csv << m << ',' << mse_g[static_cast<size_t>(m)] << ',';
        if (m < obkf_blocks)
            csv << mse_lam[static_cast<size_t>(m)] << ',' << mse_sig[static_cast<size_t>(m)]
                << ',' << acc[static_cast<size_t>(m)];
        else
            csv << ",,";
        csv << '\n';
    }
    std::cout << "wrote dl_track.csv to " << g.out_dir << '\n';
    return 0;
}

int cmd_experiment(const GlobalOpts &g, const std::string &spec_path, bool full, int trials,
                   int workers)
{
    ExperimentSpec spec;
    if (!spec_path.empty())
        spec = load_experiment(spec_path);
    else
        spec.scenario = full ? table1_profile() : desk_profile();
    if (trials > 0)
        spec.trials = trials;
    spec.master_seed = g.seed;
    spec.workers = workers > 0 ? workers : g.workers;
    spec.validate();

    const ExperimentResult result = run_experiment(spec);
    emit_csv(result, out_path(g, "experiment_records.csv"));
    emit_summary(result, out_path(g, "experiment_summary.csv"));
    int failures = 0;
    for (const auto &r : result.records)
        failures += r.failed ? 1 : 0;
    std::cout << "ran " << result.records.size() << " trials (" << failures
              << " failed); results in " << g.out_dir << '\n';
    return failures == 0 ? 0 : 3;
}

} // namespace

int main(int argc, char **argv)
{
    CLI::App app{"time-varying massive MIMO virtual-channel tracking simulator"};
    app.require_subcommand(1);

    GlobalOpts g;
    app.add_option("--config", g.config, "scenario/experiment JSON file")->capture_default_str();
    app.add_option("--profile", g.profile, "built-in profile: desk or full")
        ->check(CLI::IsMember({"desk", "full"}));
    app.add_option("--out-dir", g.out_dir, "output directory")->capture_default_str();
    app.add_option("--seed", g.seed, "master seed")->capture_default_str();
    app.add_option("--workers", g.workers, "worker threads for experiments")
        ->capture_default_str();

    int blocks = 15, em_iters = 5, ul_blocks = 20, dl_blocks = 30, obkf_blocks = 10;
    int mcmc_iters = 200, burn_in = 50, trials = 0, workers = 0;
    double snr_db = std::numeric_limits<double>::quiet_NaN();
    double carrier_dl = 0.0;
    std::string params_path = "learned_params.json";
    std::string partials_path = "dl_partials.json";
    std::string baseline = "none";
    bool full = false;

    auto *sim = app.add_subcommand("simulate", "synthesize and dump ground-truth trajectories");
    sim->add_option("--blocks", blocks, "number of channel blocks")->capture_default_str();
    sim->add_option("--snr-db", snr_db, "override scenario SNR");

    auto *learn = app.add_subcommand("learn", "uplink model-parameter learning (EM)");
    learn->add_option("--blocks", blocks, "learning blocks M_u")->capture_default_str();
    learn->add_option("--em-iters", em_iters, "EM iterations")->capture_default_str();
    learn->add_option("--snr-db", snr_db, "override scenario SNR");

    auto *tul = app.add_subcommand("track-ul", "uplink tracking on learned parameters");
    tul->add_option("--params", params_path, "learned-parameter file")->capture_default_str();
    tul->add_option("--blocks", ul_blocks, "tracking blocks")->capture_default_str();

    auto *rdl = app.add_subcommand("reconstruct-dl", "downlink parameter reconstruction");
    rdl->add_option("--params", params_path, "learned-parameter file")->capture_default_str();
    rdl->add_option("--carrier-dl", carrier_dl, "downlink carrier frequency in Hz");

    auto *tdl = app.add_subcommand("track-dl", "downlink restoration (Bayesian tracker)");
    tdl->add_option("--partials", partials_path, "DL partial-parameter file")
        ->capture_default_str();
    tdl->add_option("--obkf-blocks", obkf_blocks, "Bayesian tracking blocks M_d")
        ->capture_default_str();
    tdl->add_option("--blocks", dl_blocks, "total tracking blocks")->capture_default_str();
    tdl->add_option("--mcmc-iters", mcmc_iters, "sampler iterations per block")
        ->capture_default_str();
    tdl->add_option("--burn-in", burn_in, "sampler burn-in")->capture_default_str();
    tdl->add_option("--baseline", baseline, "perfect | weak | none")
        ->check(CLI::IsMember({"perfect", "weak", "none"}));

    auto *exp = app.add_subcommand("experiment", "full pipeline sweep with baselines");
    exp->add_flag("--full", full, "use the full-scale profile");
    exp->add_option("--trials", trials, "trials per sweep point");
    exp->add_option("--exp-workers", workers, "worker threads");

    try
    {
        app.parse(argc, argv);
        if (sim->parsed())
            return cmd_simulate(g, blocks, snr_db);
        if (learn->parsed())
            return cmd_learn(g, blocks, em_iters, snr_db);
        if (tul->parsed())
            return cmd_track_ul(g, params_path, ul_blocks);
        if (rdl->parsed())
            return cmd_reconstruct_dl(g, params_path, carrier_dl);
        if (tdl->parsed())
            return cmd_track_dl(g, partials_path, obkf_blocks, dl_blocks, mcmc_iters, burn_in,
                                baseline);
        if (exp->parsed())
            return cmd_experiment(g, g.config, full, trials, workers);
        return 2;
    }
    catch (const CLI::ParseError &e)
    {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }
    catch (const vct::ValidationError &e)
    {
        std::cerr << "validation error: " << e.what() << '\n';
        return 2;
    }
    catch (const vct::NumericalError &e)
    {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return 3;
    }
    catch (const std::exception &e)
    {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    }
}
