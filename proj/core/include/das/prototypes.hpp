#pragma once

// Soft class prototypes and the Prototypical Distance Ratio.

#include <cstddef>
#include <optional>

#include <Eigen/Core>

#include "das/types.hpp"

namespace das {

inline constexpr double kPdrEpsilon = 1e-12;

struct PrototypeSet {
  Eigen::MatrixXd matrix;  // K x d, row k is the prototype of foreground class k
  Domain domain = Domain::target;
  std::size_t images_used = 0;
  std::size_t images_skipped = 0;  // listed without proposals

  std::size_t num_classes() const { return static_cast<std::size_t>(matrix.rows()); }
  std::size_t feature_dim() const { return static_cast<std::size_t>(matrix.cols()); }
};

using DistanceMatrix = Eigen::MatrixXd;

struct PrototypeOptions {
  // Keep only the top-N proposals per image by max foreground probability.
  std::optional<std::size_t> top_n;
};

// P_k = mean over images of (1/n_i) * sum_j F_ij * p_ij^k. The background
// entry is never used as a weight. Images without proposals are skipped.
// Throws EmptyPass, ImageWithoutProposals (every image empty), InconsistentDims.
PrototypeSet soft_prototypes(const PassDump& pass, std::size_t num_classes, std::size_t feature_dim,
                             const PrototypeOptions& options = {});

// M(k, k') = ||P_k - Q_k'||_2. Throws DimMismatch.
DistanceMatrix pairwise_distance_matrix(const Eigen::MatrixXd& p, const Eigen::MatrixXd& q);
DistanceMatrix pairwise_distance_matrix(const PrototypeSet& p, const PrototypeSet& q);

// trace(M) / K
double intra_distance(const DistanceMatrix& cross);

// Mean of the K^2 - K off-diagonal entries. Throws SingleClass for K = 1.
double mean_offdiagonal(const DistanceMatrix& m);

// delta(S, T) * delta(S, S) * delta(T, T)
double inter_distance(const PrototypeSet& source, const PrototypeSet& target);

struct PdrTerms {
  double intra = 0.0;
  double inter = 0.0;
  double pdr = 0.0;
};

PdrTerms pdr_terms(const PrototypeSet& source, const PrototypeSet& target);

// inter / max(intra, kPdrEpsilon). Throws SingleClass for K = 1.
double pdr(const PrototypeSet& source, const PrototypeSet& target);

}  // namespace das
