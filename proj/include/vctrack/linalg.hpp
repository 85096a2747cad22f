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

#ifndef VCTRACK_LINALG_HPP
#define VCTRACK_LINALG_HPP

#include <Eigen/Dense>
#include <complex>
#include <stdexcept>
#include <string>

namespace vct
{

using Cplx = std::complex<double>;
using VecC = Eigen::VectorXcd;
using MatC = Eigen::MatrixXcd;
using VecD = Eigen::VectorXd;
using VecI = Eigen::VectorXi;
using MatD = Eigen::MatrixXd;

// Bad inputs (dimensions, ranges, config); CLI exit code 2.
struct ValidationError : std::invalid_argument
{
    using std::invalid_argument::invalid_argument;
};

// Numerical breakdown (non-PD covariance after jitter retry, singular
// precision, ...); CLI exit code 3.
struct NumericalError : std::runtime_error
{
    using std::runtime_error::runtime_error;
};

inline MatC hermitianize(const MatC &a)
{
    return 0.5 * (a + a.adjoint());
}

// Cholesky factorization of a Hermitian matrix with one diagonal-jitter
// retry (1e-12 * trace / n) before giving up. The failure message carries
// the smallest eigenvalue of the offending matrix.
class HermChol
{
  public:
    explicit HermChol(const MatC &a, const char *context = "covariance")
    {
        llt_.compute(a);
        if (llt_.info() != Eigen::Success)
        {
            const double jitter = 1e-12 * a.real().trace() / static_cast<double>(a.rows());
            MatC aj = a;
            aj.diagonal().array() += Cplx(jitter > 0.0 ? jitter : 1e-300, 0.0);
            llt_.compute(aj);
            if (llt_.info() != Eigen::Success)
            {
                Eigen::SelfAdjointEigenSolver<MatC> es(a, Eigen::EigenvaluesOnly);
                const double lam_min = es.eigenvalues().minCoeff();
                throw NumericalError(std::string(context) +
                                     " is not positive definite (smallest eigenvalue " +
                                     std::to_string(lam_min) + ")");
            }
        }
    }

    double log_det() const
    {
        return 2.0 * llt_.matrixLLT().diagonal().real().array().log().sum();
    }

    VecC solve(const VecC &b) const { return llt_.solve(b); }
    MatC solve(const MatC &b) const { return llt_.solve(b); }

    MatC inverse() const
    {
        const Eigen::Index n = llt_.matrixLLT().rows();
        return llt_.solve(MatC::Identity(n, n));
    }

  private:
    Eigen::LLT<MatC> llt_;
};

inline void require(bool cond, const char *msg)
{
    if (!cond)
        throw ValidationError(msg);
}

} // namespace vct

#endif
