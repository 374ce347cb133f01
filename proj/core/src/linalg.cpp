#include "das/linalg.hpp"

#include <Eigen/Eigenvalues>

#include "das/error.hpp"

namespace das {

Eigen::MatrixXd sqrtm_psd(const Eigen::MatrixXd& x) {
  if (x.rows() != x.cols()) throw Error(ErrorCode::DimMismatch, "sqrtm of a non-square matrix");
  const Eigen::MatrixXd sym = 0.5 * (x + x.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sym);
  const Eigen::VectorXd roots = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return eig.eigenvectors() * roots.asDiagonal() * eig.eigenvectors().transpose();
}

double trace_sqrt_product(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  const Eigen::MatrixXd root_a = sqrtm_psd(a);
  const Eigen::MatrixXd inner = root_a * b * root_a;
  const Eigen::MatrixXd sym = 0.5 * (inner + inner.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sym, Eigen::EigenvaluesOnly);
  return eig.eigenvalues().cwiseMax(0.0).cwiseSqrt().sum();
}

Eigen::MatrixXd sample_covariance(const Eigen::MatrixXd& samples) {
  if (samples.rows() < 2) throw Error(ErrorCode::InsufficientSamples, "covariance needs >= 2 samples");
  const Eigen::RowVectorXd mean = samples.colwise().mean();
  const Eigen::MatrixXd centered = samples.rowwise() - mean;
  return (centered.transpose() * centered) / static_cast<double>(samples.rows() - 1);
}

}  // namespace das
