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

#ifndef VCTRACK_DL_RECONSTRUCTION_HPP
#define VCTRACK_DL_RECONSTRUCTION_HPP

#include "vctrack/channel_model.hpp"
#include "vctrack/rng.hpp"

#include <vector>

namespace vct
{

// Downlink parameters reconstructed from the uplink estimates by angle
// reciprocity. Process power and noise power stay unknown; the tracker
// restores them.
struct DlModelPartial
{
    double alpha_dl = 0.0;
    VecI support_dl;        // 0/1, length N_t
    VecD bias_dl;           // length N_t, in [-1/2, 1/2]
    std::vector<int> bins;  // ordered support bins (mod N_t)
    VecD lambda_anchor;     // per bin: remapped UL power, prior anchoring only
};

// nu_dl = wavelength_ratio_dl_over_ul * nu_max, alpha' = J0(2 pi nu' Lc Ts)
double map_alpha_dl(double nu_max, int block_len, double symbol_period,
                    double wavelength_ratio_dl_over_ul);

// Inverse of alpha = J0(2 pi nu Lc Ts) on the first monotone branch.
double doppler_from_alpha(double alpha, int block_len, double symbol_period);

// Remaps (support, bias) through p' + rho' = (p + rho) * lambda_ul/lambda_dl.
// Bins colliding after the remap merge by averaging their bias; single-bin
// holes inside [min Q', max Q'] are filled to keep the support contiguous.
// Upper-half indices are treated as negative grid frequencies. lambda_ul,
// when given, is carried through the same map (merge-averaged, holes filled
// with the geometric mean) for use as a prior anchor.
DlModelPartial map_support_bias(const VecI &support_ul, const VecD &bias_ul,
                                double ratio_ul_over_dl, const VecD *lambda_ul = nullptr);

// One user's downlink training: rows of T_g reused inside a group, beams
// separate the users. T_g T_g^H = M_g sigma_p^2 I, so despreading by
// S_k / (M_g sigma_p^2) reproduces the supported virtual channel.
struct DlTraining
{
    MatC t_g;               // M_g x M_g
    std::vector<MatC> s_k;  // per user, |Q'_k| x M_g
    MatC beam;              // Gamma_g = sum_k [Phi(rho'_k)^H]_{:,Q'_k} S_k, N_t x M_g
    int m_g = 0;
};

DlTraining build_dl_training(const std::vector<std::vector<int>> &q_bins,
                             const std::vector<VecD> &biases, int n_ant, double pilot_power,
                             const MatC &a, const MatC &b);

// Physical receive-and-despread chain for user k of the group:
// y' = Gamma_g^H g + n', then y_tilde = S_k y' / (M_g sigma_p^2).
// Noise is injected ahead of the despreader, scaled so the despread
// observation carries CN(0, (sigma_dl^2 / sigma_p^2) I) exactly.
VecC dl_observe_despread(const VecC &g_physical, const DlTraining &training, int user_in_group,
                         double sigma_dl_sq, double pilot_power, Rng &rng);

} // namespace vct

#endif
