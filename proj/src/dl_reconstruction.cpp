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

#include <algorithm>
#include <cmath>
#include <map>

namespace vct
{

double map_alpha_dl(double nu_max, int block_len, double symbol_period,
                    double wavelength_ratio_dl_over_ul)
{
    require(wavelength_ratio_dl_over_ul > 0.0, "map_alpha_dl: wavelength ratio must be positive");
    const double nu_dl = wavelength_ratio_dl_over_ul * nu_max;
    return bessel_j0(2.0 * M_PI * nu_dl * block_len * symbol_period);
}

double doppler_from_alpha(double alpha, int block_len, double symbol_period)
{
    require(alpha > 0.0 && alpha <= 1.0, "doppler_from_alpha: alpha must be in (0, 1]");
    if (alpha >= 1.0)
        return 0.0;
    // bisection on [0, x1) where x1 is the first zero of J0
    double lo = 0.0, hi = 2.404825557695772;
    for (int it = 0; it < 200; ++it)
    {
        const double mid = 0.5 * (lo + hi);
        if (bessel_j0(mid) > alpha)
            lo = mid;
        else
            hi = mid;
    }
    return 0.5 * (lo + hi) / (2.0 * M_PI * block_len * symbol_period);
}

namespace
{

// mod-Nt index -> signed grid frequency
int unwrap_index(int p, int n)
{
    return p >= n / 2 ? p - n : p;
}

int wrap_index(int p, int n)
{
    return ((p % n) + n) % n;
}

} // namespace

DlModelPartial map_support_bias(const VecI &support_ul, const VecD &bias_ul,
                                double ratio_ul_over_dl, const VecD *lambda_ul)
{
    require(ratio_ul_over_dl > 0.0, "map_support_bias: wavelength ratio must be positive");
    const int n = static_cast<int>(support_ul.size());
    require(bias_ul.size() == n, "map_support_bias: length mismatch");

    struct Hit
    {
        double bias_sum = 0.0;
        double lam_sum = 0.0;
        int count = 0;
    };
    std::map<int, Hit> mapped; // signed DL bin -> merged rays

    for (int p = 0; p < n; ++p)
    {
        if (!support_ul(p))
            continue;
        const double v = (unwrap_index(p, n) + bias_ul(p)) * ratio_ul_over_dl;
        int p_dl = static_cast<int>(std::floor(v));
        double rho = v - p_dl; // in [0, 1)
        if (rho > 0.5)
        {
            p_dl += 1;
            rho -= 1.0;
        }
        if (p_dl < -n / 2 || p_dl >= n / 2)
            throw ValidationError("map_support_bias: remapped bin falls outside the grid");
        auto &h = mapped[p_dl];
        h.bias_sum += rho;
        if (lambda_ul != nullptr)
            h.lam_sum += (*lambda_ul)(p);
        h.count += 1;
    }
    require(!mapped.empty(), "map_support_bias: empty uplink support");

    const int lo = mapped.begin()->first;
    const int hi = mapped.rbegin()->first;

    DlModelPartial out;
    out.support_dl = VecI::Zero(n);
    out.bias_dl = VecD::Zero(n);
    out.lambda_anchor = VecD::Zero(n);

    // geometric mean of the mapped powers, used to fill holes
    double log_lam_mean = 0.0;
    if (lambda_ul != nullptr)
    {
        int cnt = 0;
        for (const auto &[bin, h] : mapped)
        {
            const double lam = h.lam_sum / h.count;
            if (lam > 0.0)
            {
                log_lam_mean += std::log(lam);
                ++cnt;
            }
        }
        log_lam_mean = cnt > 0 ? log_lam_mean / cnt : 0.0;
    }

    for (int p = lo; p <= hi; ++p)
    {
        const int pw = wrap_index(p, n);
        out.support_dl(pw) = 1;
        out.bins.push_back(pw);
        const auto it = mapped.find(p);
        if (it != mapped.end())
        {
            out.bias_dl(pw) = it->second.bias_sum / it->second.count;
            if (lambda_ul != nullptr)
                out.lambda_anchor(pw) = it->second.lam_sum / it->second.count;
        }
        else if (lambda_ul != nullptr)
        {
            out.lambda_anchor(pw) = std::exp(log_lam_mean); // filled hole
        }
    }
    return out;
}

DlTraining build_dl_training(const std::vector<std::vector<int>> &q_bins,
                             const std::vector<VecD> &biases, int n_ant, double pilot_power,
                             const MatC &a, const MatC &b)
{
    require(!q_bins.empty() && q_bins.size() == biases.size(),
            "build_dl_training: one bin list and bias vector per user");
    DlTraining out;
    size_t m_g = 0;
    for (const auto &bins : q_bins)
        m_g = std::max(m_g, bins.size());
    require(m_g >= 1, "build_dl_training: all supports empty");
    out.m_g = static_cast<int>(m_g);

    // T_g = sqrt(M_g sigma_p^2) F with F unitary, so T_g T_g^H = M_g sigma_p^2 I
    out.t_g = std::sqrt(static_cast<double>(out.m_g) * pilot_power) *
              dft_basis(out.m_g).adjoint().eval();

    out.beam = MatC::Zero(n_ant, out.m_g);
    for (size_t u = 0; u < q_bins.size(); ++u)
    {
        const int nq = static_cast<int>(q_bins[u].size());
        MatC s = out.t_g.topRows(nq);
        const MatC phi_h = phi_hermitian(a, b, biases[u]);
        for (int i = 0; i < nq; ++i)
            out.beam.noalias() += phi_h.col(q_bins[u][static_cast<size_t>(i)]) * s.row(i);
        out.s_k.push_back(std::move(s));
    }
    return out;
}

VecC dl_observe_despread(const VecC &g_physical, const DlTraining &training, int user_in_group,
                         double sigma_dl_sq, double pilot_power, Rng &rng)
{
    require(user_in_group >= 0 && user_in_group < static_cast<int>(training.s_k.size()),
            "dl_observe_despread: bad user index");
    require(g_physical.size() == training.beam.rows(),
            "dl_observe_despread: channel length mismatch");

    // received at the user: y'^H = g^H Gamma + n'^H. The pre-despread noise
    // is scaled by sqrt(M_g) so the despread noise lands exactly at the
    // observation-model covariance (sigma_dl^2 / sigma_p^2) I.
    const double noise_sd = std::sqrt(static_cast<double>(training.m_g) * sigma_dl_sq);
    VecC y = training.beam.adjoint() * g_physical;
    for (Eigen::Index i = 0; i < y.size(); ++i)
        y(i) += noise_sd * rng.cnormal();

    const MatC &s = training.s_k[static_cast<size_t>(user_in_group)];
    return (s * y) / (static_cast<double>(training.m_g) * pilot_power);
}

} // namespace vct
