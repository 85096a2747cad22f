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

#ifndef VCTRACK_CGAUSS_HPP
#define VCTRACK_CGAUSS_HPP

#include "vctrack/linalg.hpp"

#include <vector>

namespace vct
{

// Circularly-symmetric complex Gaussian density CN(x; mean, cov).
// cov must be Hermitian positive definite.
struct ComplexGaussian
{
    VecC mean;
    MatC cov;

    Eigen::Index dim() const { return mean.size(); }
};

// weight * CN(x; ...), with the weight kept in natural-log scale. Products
// of many sub-unity densities underflow in linear scale, so every scale
// factor in this library lives in the log domain.
struct ScaledGaussian
{
    double log_weight = 0.0;
    ComplexGaussian density;
};

// Checks the ComplexGaussian invariants: mean/cov dimensions agree, cov
// Hermitian within 1e-12 relative, all eigenvalues positive.
void cn_validate(const ComplexGaussian &g);

// log CN(x; mean, cov) = -N ln pi - ln|cov| - (x-mean)^H cov^-1 (x-mean),
// evaluated through a Cholesky factor.
double cn_logpdf(const VecC &x, const ComplexGaussian &g);

// Product of same-dimension densities collapsed to a single scaled
// Gaussian:  prod_i CN(x; mu_i, S_i) = e^lw * CN(x; mu_bar, S_bar).
ScaledGaussian cn_product(const std::vector<ComplexGaussian> &factors);

// Quotient CN(x; mu2, S2) / CN(x; mu1, S1). The resulting "covariance"
// (S2^-1 - S1^-1)^-1 is Hermitian but may be indefinite; callers that
// need a proper density must check positive_definite themselves.
struct QuotientResult
{
    double log_weight = 0.0; // uses ln|det| of the precision difference
    VecC mean;
    MatC cov;
    MatC precision; // S2^-1 - S1^-1
    bool positive_definite = false;
    int det_sign = 1; // sign of det(cov); the identity carries it separately
    bool flat = false; // numerator == denominator: the quotient is constant 1
};

QuotientResult cn_quotient(const ComplexGaussian &numerator, const ComplexGaussian &denominator);

// Affine rescaling identity: CN(x; a*w, S), read as a density in w, equals
// a^(-2N) * CN(w; x/a, S/a^2). Input g carries (x, S); a must be nonzero.
ScaledGaussian cn_rescale(const ComplexGaussian &g, double a);

} // namespace vct

#endif
