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

#include "vctrack/ul_tracking.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace vct
{

bool supports_disjoint(const VecI &a, const VecI &b)
{
    require(a.size() == b.size(), "supports_disjoint: length mismatch");
    return (a.array() * b.array()).sum() == 0;
}

namespace
{

int support_start(const VecI &mask)
{
    for (Eigen::Index j = 0; j < mask.size(); ++j)
        if (mask(j))
            return static_cast<int>(j);
    return -1; // empty support sorts first; it overlaps nothing
}

} // namespace

GroupAssignment group_users(const std::vector<VecI> &supports, double pilot_power)
{
    require(!supports.empty(), "group_users: no users");
    std::vector<int> order(supports.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int i, int j) {
        return support_start(supports[static_cast<size_t>(i)]) <
               support_start(supports[static_cast<size_t>(j)]);
    });

    GroupAssignment out;
    for (int idx : order)
    {
        bool placed = false;
        for (auto &grp : out.groups)
        {
            const bool ok = std::all_of(grp.begin(), grp.end(), [&](int member) {
                return supports_disjoint(supports[static_cast<size_t>(idx)],
                                         supports[static_cast<size_t>(member)]);
            });
            if (ok)
            {
                grp.push_back(idx);
                placed = true;
                break;
            }
        }
        if (!placed)
            out.groups.push_back({idx});
    }
    for (auto &grp : out.groups)
        std::sort(grp.begin(), grp.end());

    const int g = out.n_groups();
    out.training = make_training(g, g, pilot_power); // G x G, S^H S = G sigma_p^2 I
    return out;
}

VecC extract_group_signal(const MatC &y_m, int g, const MatC &s_g_mat, double pilot_power)
{
    require(g >= 0 && g < s_g_mat.cols(), "extract_group_signal: bad group index");
    const double scale = static_cast<double>(s_g_mat.cols()) * pilot_power;
    return (y_m * s_g_mat.col(g)) / scale;
}

DiagStateSpace ReducedStateSpace::to_state_space() const
{
    DiagStateSpace ss;
    ss.trans = trans_diag;
    ss.proc_cov = proc_cov_diag;
    ss.prior_cov = stationary_prior(trans_diag, proc_cov_diag);
    ss.obs = observation;
    ss.noise_var = obs_noise_var;
    return ss;
}

ReducedStateSpace build_reduced_state_space(const std::vector<ModelParams> &params,
                                            const std::vector<int> &group, const MatC &a,
                                            const MatC &b, int n_groups, double pilot_power)
{
    require(!group.empty(), "build_reduced_state_space: empty group");
    const int n = static_cast<int>(a.rows());

    ReducedStateSpace out;
    int total = 0;
    for (int u : group)
    {
        const auto &p = params[static_cast<size_t>(u)];
        std::vector<int> bins;
        for (int j = 0; j < n; ++j)
            if (p.support(j))
                bins.push_back(j);
        out.offsets.push_back(total);
        total += static_cast<int>(bins.size());
        out.q_bins.push_back(std::move(bins));
    }

    out.trans_diag.resize(total);
    out.proc_cov_diag.resize(total);
    out.observation.resize(n, total);
    for (size_t i = 0; i < group.size(); ++i)
    {
        const auto &p = params[static_cast<size_t>(group[i])];
        const MatC phi_h = phi_hermitian(a, b, p.bias);
        int col = out.offsets[i];
        for (int j : out.q_bins[i])
        {
            out.trans_diag(col) = p.alpha;
            out.proc_cov_diag(col) = p.lambda_diag(j);
            out.observation.col(col) = phi_h.col(j);
            ++col;
        }
    }
    out.obs_noise_var = params[static_cast<size_t>(group.front())].noise_var /
                        (static_cast<double>(n_groups) * pilot_power);
    return out;
}

UlTrackResult reduced_kf_track(const ReducedStateSpace &model, const std::vector<VecC> &ys)
{
    const KalmanMoments km = kalman_filter(model.to_state_space(), ys, false);

    UlTrackResult out;
    out.r_hat = km.filt_mean;
    out.h_hat.resize(model.q_bins.size());
    for (size_t i = 0; i < model.q_bins.size(); ++i)
    {
        const int nq = static_cast<int>(model.q_bins[i].size());
        const auto cols = model.observation.middleCols(model.offsets[i], nq);
        for (const VecC &r : km.filt_mean)
            out.h_hat[i].push_back(cols * r.segment(model.offsets[i], nq));
    }
    return out;
}

} // namespace vct
