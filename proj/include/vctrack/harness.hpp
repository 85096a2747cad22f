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

#ifndef VCTRACK_HARNESS_HPP
#define VCTRACK_HARNESS_HPP

#include "vctrack/channel_model.hpp"
#include "vctrack/obkf.hpp"

#include <string>
#include <vector>

namespace vct
{

// One training segment: the tau users learned and tracked together.
struct Scenario
{
    SystemConfig config;
    std::vector<UserGeometry> users; // size must equal config.group_size

    void validate() const;
};

// CI-scale profile: 32 antennas, two users on disjoint spreads (one on the
// negative-angle side to exercise the signed grid mapping).
Scenario desk_profile();

// Full-scale profile: 128 antennas, four users, training length 4.
Scenario table1_profile();

struct ExperimentSpec
{
    Scenario scenario;
    std::vector<double> snr_db_list{30.0};
    std::vector<double> velocity_list{}; // empty: keep the scenario velocities
    int m_u = 15;           // learning blocks
    int m_d = 10;           // OBKF blocks for the channel-tracking run
    int restore_blocks = 15; // OBKF blocks monitored for parameter restoration
    int track_blocks = 30;  // total DL tracking horizon
    int ul_track_blocks = 20;
    int trials = 10;
    int em_iters = 5;
    McmcOptions mcmc;
    bool baseline_perfect = true;
    bool baseline_weak = true;
    std::uint64_t master_seed = 1;
    int workers = 1;

    void validate() const;
};

struct EmMseTrace
{
    std::vector<double> alpha, support, lambda, bias, sigma; // one entry per iteration
};

struct TrialRecord
{
    double snr_db = 0.0;
    double velocity = 0.0;
    int trial = 0;
    bool failed = false;
    std::string error;

    EmMseTrace em;
    double support_match_frac = 0.0;  // fraction of bins agreeing with truth
    double bias_rmse_on_support = 0.0;

    std::vector<double> ul_mse_h;       // per tracked block
    std::vector<double> ul_mse_virtual; // per tracked block

    std::vector<double> dl_mse_obkf;    // channel MSE per block (M_d run + continuation)
    std::vector<double> dl_mse_perfect;
    std::vector<double> dl_mse_weak;
    std::vector<double> dl_mse_lambda;  // restoration MSE after blocks 1..restore_blocks
    std::vector<double> dl_mse_sigma;
    std::vector<double> dl_acceptance;

    double wall_ms = 0.0;
};

struct ExperimentResult
{
    std::vector<TrialRecord> records;
};

// Per-user ground truth for one training segment, reproducible from
// (scenario, seed): the CLI stages share truth with the experiment runner
// through this derivation.
std::vector<ModelParams> segment_ground_truth(const std::vector<UserGeometry> &users,
                                              const SystemConfig &cfg, std::uint64_t seed);

// normalized average (1/n) sum_i ||est_i - truth_i||^2 / ||truth_i||^2
double mse(const std::vector<VecC> &estimates, const std::vector<VecC> &truths);
double mse(const std::vector<VecD> &estimates, const std::vector<VecD> &truths);
double mse_scalar(const std::vector<double> &estimates, const std::vector<double> &truths);

TrialRecord run_trial(const Scenario &scenario, double snr_db, double velocity, int trial_index,
                      const ExperimentSpec &spec);

// Sweeps (snr x velocity x trial) with a bounded worker pool. Records are
// keyed by axis values; aggregation does not depend on completion order.
// Stage failures are recorded per trial, not fatal.
ExperimentResult run_experiment(const ExperimentSpec &spec);

void emit_csv(const ExperimentResult &result, const std::string &path);
void emit_summary(const ExperimentResult &result, const std::string &path);

} // namespace vct

#endif
