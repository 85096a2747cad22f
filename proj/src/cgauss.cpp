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

#include "vctrack/cgauss.hpp"

#include <cmath>

namespace vct
{

void cn_validate(const ComplexGaussian &g)
{
    require(g.mean.size() == g.cov.rows() && g.cov.rows() == g.cov.cols(),
            "ComplexGaussian: mean length must equal covariance dimension");
    const double scale = g.cov.norm();
    const double asym = (g.cov - g.cov.adjoint()).norm();
    if (scale > 0.0 && asym > 1e-12 * scale)
        throw ValidationError("ComplexGaussian: covariance not Hermitian within 1e-12");
    HermChol chol(g.cov, "ComplexGaussian covariance"); // throws if not PD
}

double cn_logpdf(const VecC &x, const ComplexGaussian &g)
{
    require(x.size() == g.mean.size(), "cn_logpdf: dimension mismatch");
    require(g.mean.size() == g.cov.rows() && g.cov.rows() == g.cov.cols(),
            "cn_logpdf: covariance dimension mismatch");
    HermChol chol(g.cov, "cn_logpdf covariance");
    const VecC d = x - g.mean;
    const double quad = d.dot(chol.solve(d)).real();
    const double n = static_cast<double>(x.size());
    return -n * std::log(M_PI) - chol.log_det() - quad;
}

ScaledGaussian cn_product(const std::vector<ComplexGaussian> &factors)
{
    require(!factors.empty(), "cn_product: needs at least one factor");
    const Eigen::Index n = factors.front().dim();
    for (const auto &f : factors)
        require(f.dim() == n && f.cov.rows() == n, "cn_product: dimension mismatch");

    MatC prec_sum = MatC::Zero(n, n);
    VecC info_sum = VecC::Zero(n);
    double zeta_sum = 0.0;
    const VecC zero = VecC::Zero(n);
    for (const auto &f : factors)
    {
        HermChol chol(f.cov, "cn_product factor covariance");
        prec_sum += chol.inverse();
        info_sum += chol.solve(f.mean);
        // zeta_i = log CN(0; mu_i, S_i)
        zeta_sum += -static_cast<double>(n) * std::log(M_PI) - chol.log_det() -
                    f.mean.dot(chol.solve(f.mean)).real();
    }
    prec_sum = hermitianize(prec_sum);

    HermChol chol_prec(prec_sum, "cn_product precision sum");
    ComplexGaussian out;
    out.cov = hermitianize(chol_prec.inverse());
    out.mean = chol_prec.solve(info_sum);

    const double zeta_bar = cn_logpdf(zero, out);
    return ScaledGaussian{zeta_sum - zeta_bar, std::move(out)};
}

QuotientResult cn_quotient(const ComplexGaussian &numerator, const ComplexGaussian &denominator)
{
    const Eigen::Index n = numerator.dim();
    require(denominator.dim() == n, "cn_quotient: dimension mismatch");

    HermChol chol_num(numerator.cov, "cn_quotient numerator covariance");
    HermChol chol_den(denominator.cov, "cn_quotient denominator covariance");
    const MatC prec = hermitianize(chol_num.inverse() - chol_den.inverse());
    const VecC info = chol_num.solve(numerator.mean) - chol_den.solve(denominator.mean);

    QuotientResult out;
    out.precision = prec;

    const double prec_scale = chol_num.inverse().norm() + chol_den.inverse().norm();
    if (prec.norm() <= 1e-12 * prec_scale && info.norm() <= 1e-12 * (1.0 + prec_scale))
    {
        // numerator == denominator: the ratio is identically 1
        out.flat = true;
        out.log_weight = 0.0;
        out.mean = VecC::Zero(n);
        out.cov = MatC::Zero(n, n);
        return out;
    }

    Eigen::SelfAdjointEigenSolver<MatC> es(prec);
    const VecD evals = es.eigenvalues();
    const double emax = evals.cwiseAbs().maxCoeff();
    if (evals.cwiseAbs().minCoeff() <= 1e-13 * emax)
        throw NumericalError("cn_quotient: singular precision difference; caller must regularize");

    out.positive_definite = evals.minCoeff() > 0.0;
    double logabsdet_prec = 0.0;
    int sign = 1;
    for (Eigen::Index i = 0; i < n; ++i)
    {
        logabsdet_prec += std::log(std::abs(evals(i)));
        if (evals(i) < 0.0)
            sign = -sign;
    }
    out.det_sign = sign; // det(cov) and det(prec) share the sign pattern parity

    // mean and covariance of the formal result
    const MatC prec_inv = es.eigenvectors() *
                          evals.cwiseInverse().cast<Cplx>().asDiagonal() *
                          es.eigenvectors().adjoint();
    out.cov = hermitianize(prec_inv);
    out.mean = prec_inv * info;

    // zeta form of the Eq. prefactor: logCN(0;num) - logCN(0;den) - zeta_q,
    // with zeta_q built from ln|det| so it stays real for indefinite results.
    const VecC zero = VecC::Zero(n);
    const double zeta_num = cn_logpdf(zero, numerator);
    const double zeta_den = cn_logpdf(zero, denominator);
    const double quad_q = out.mean.dot(prec * out.mean).real();
    const double zeta_q = -static_cast<double>(n) * std::log(M_PI) + logabsdet_prec - quad_q;
    out.log_weight = zeta_num - zeta_den - zeta_q;
    return out;
}

ScaledGaussian cn_rescale(const ComplexGaussian &g, double a)
{
    require(a != 0.0, "cn_rescale: scale must be nonzero");
    const double n = static_cast<double>(g.dim());
    ScaledGaussian out;
    out.log_weight = -2.0 * n * std::log(std::abs(a));
    out.density.mean = g.mean / a;
    out.density.cov = g.cov / (a * a);
    return out;
}

} // namespace vct
