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

#ifndef VCTRACK_UL_TRACKING_HPP
#define VCTRACK_UL_TRACKING_HPP

#include "vctrack/channel_model.hpp"
#include "vctrack/kalman.hpp"

#include <vector>

namespace vct
{

// Users whose spatial signatures do not overlap share one training
// sequence; groups get mutually orthogonal sequences.
struct GroupAssignment
{
    std::vector<std::vector<int>> groups; // original user indices
    MatC training;                        // S_G, G x G with S_G^H S_G = G sigma_p^2 I

    int n_groups() const { return static_cast<int>(groups.size()); }
};

// Greedy first-fit over users sorted by support start index. Deterministic.
GroupAssignment group_users(const std::vector<VecI> &supports, double pilot_power);

bool supports_disjoint(const VecI &a, const VecI &b);

// y_{g,m} = Y_m s_g / (G sigma_p^2)
VecC extract_group_signal(const MatC &y_m, int g, const MatC &s_g_mat, double pilot_power);

// On-support state space for one group: state is the concatenation of the
// users' supported virtual-channel entries.
struct ReducedStateSpace
{
    VecD trans_diag;      // alpha*, per state entry
    VecD proc_cov_diag;   // Lambda*
    MatC observation;     // D_Q, N_t x sum |Q_k|
    double obs_noise_var; // sigma_n^2 / (G sigma_p^2)
    std::vector<std::vector<int>> q_bins; // per user in group
    std::vector<int> offsets;             // column offset per user

    DiagStateSpace to_state_space() const;
};

ReducedStateSpace build_reduced_state_space(const std::vector<ModelParams> &params,
                                            const std::vector<int> &group, const MatC &a,
                                            const MatC &b, int n_groups, double pilot_power);

struct UlTrackResult
{
    std::vector<VecC> r_hat;              // filtered reduced state per block
    std::vector<std::vector<VecC>> h_hat; // [user-in-group][block] physical channel
};

UlTrackResult reduced_kf_track(const ReducedStateSpace &model, const std::vector<VecC> &ys);

} // namespace vct

#endif
