#pragma once

#include <Eigen/Core>

namespace das {

// Principal square root of a symmetric positive semi-definite matrix via a
// symmetric eigen-decomposition. Slightly negative eigenvalues (rounding) are
// clamped to zero.
Eigen::MatrixXd sqrtm_psd(const Eigen::MatrixXd& x);

// Tr((A B)^{1/2}) for symmetric PSD A and B, evaluated as
// Tr((A^{1/2} B A^{1/2})^{1/2}).
double trace_sqrt_product(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b);

// Unbiased sample covariance of the rows of `samples` (n x d, n >= 2).
Eigen::MatrixXd sample_covariance(const Eigen::MatrixXd& samples);

}  // namespace das
