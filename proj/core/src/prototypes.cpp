#include "das/prototypes.hpp"

#include <algorithm>
#include <numeric>

#include "das/error.hpp"

namespace das {

PrototypeSet soft_prototypes(const PassDump& pass, std::size_t num_classes, std::size_t feature_dim,
                             const PrototypeOptions& options) {
  if (pass.images.empty()) throw Error(ErrorCode::EmptyPass, "pass lists no images");
  const auto k_rows = static_cast<Eigen::Index>(num_classes);
  const auto d_cols = static_cast<Eigen::Index>(feature_dim);

  PrototypeSet out;
  out.domain = pass.domain;
  out.matrix = Eigen::MatrixXd::Zero(k_rows, d_cols);

  Eigen::MatrixXd image_sum(k_rows, d_cols);
  std::vector<std::size_t> picked;
  for (std::size_t idx : pass.sorted_order()) {
    const auto& proposals = pass.images[idx].proposals;
    if (proposals.empty()) {
      ++out.images_skipped;
      continue;
    }
    picked.resize(proposals.size());
    std::iota(picked.begin(), picked.end(), std::size_t{0});
    if (options.top_n && *options.top_n < proposals.size()) {
      auto fg_max = [&](std::size_t j) {
        const auto p = proposals[j].probs.values();
        return *std::max_element(p.begin(), p.begin() + static_cast<std::ptrdiff_t>(num_classes));
      };
      std::stable_sort(picked.begin(), picked.end(),
                       [&](std::size_t a, std::size_t b) { return fg_max(a) > fg_max(b); });
      picked.resize(*options.top_n);
    }

    image_sum.setZero();
    for (std::size_t j : picked) {
      const auto& prop = proposals[j];
      if (prop.feature.size() != feature_dim || prop.probs.size() != num_classes + 1) {
        throw Error(ErrorCode::InconsistentDims, "image '" + pass.images[idx].image_id +
                                                     "' has a proposal with mismatched dimensions");
      }
      const Eigen::Map<const Eigen::RowVectorXd> f(prop.feature.data(), d_cols);
      for (Eigen::Index k = 0; k < k_rows; ++k) {
        image_sum.row(k).noalias() += prop.probs[static_cast<std::size_t>(k)] * f;
      }
    }
    out.matrix += image_sum / static_cast<double>(picked.size());
    ++out.images_used;
  }
  if (out.images_used == 0) {
    throw Error(ErrorCode::ImageWithoutProposals, "no image in the pass carries proposals");
  }
  out.matrix /= static_cast<double>(out.images_used);
  return out;
}

DistanceMatrix pairwise_distance_matrix(const Eigen::MatrixXd& p, const Eigen::MatrixXd& q) {
  if (p.cols() != q.cols()) {
    throw Error(ErrorCode::DimMismatch, "prototype dims " + std::to_string(p.cols()) + " vs " +
                                            std::to_string(q.cols()));
  }
  DistanceMatrix m(p.rows(), q.rows());
  for (Eigen::Index a = 0; a < p.rows(); ++a) {
    for (Eigen::Index b = 0; b < q.rows(); ++b) m(a, b) = (p.row(a) - q.row(b)).norm();
  }
  return m;
}

DistanceMatrix pairwise_distance_matrix(const PrototypeSet& p, const PrototypeSet& q) {
  return pairwise_distance_matrix(p.matrix, q.matrix);
}

double intra_distance(const DistanceMatrix& cross) {
  return cross.diagonal().sum() / static_cast<double>(cross.rows());
}

double mean_offdiagonal(const DistanceMatrix& m) {
  const auto k = m.rows();
  if (k < 2) throw Error(ErrorCode::SingleClass, "off-diagonal mean needs K >= 2");
  double sum = 0.0;
  for (Eigen::Index a = 0; a < k; ++a) {
    for (Eigen::Index b = 0; b < m.cols(); ++b) {
      if (a != b) sum += m(a, b);
    }
  }
  return sum / static_cast<double>(k * k - k);
}

double inter_distance(const PrototypeSet& source, const PrototypeSet& target) {
  return mean_offdiagonal(pairwise_distance_matrix(source, target)) *
         mean_offdiagonal(pairwise_distance_matrix(source, source)) *
         mean_offdiagonal(pairwise_distance_matrix(target, target));
}

PdrTerms pdr_terms(const PrototypeSet& source, const PrototypeSet& target) {
  if (source.num_classes() < 2 || target.num_classes() < 2) {
    throw Error(ErrorCode::SingleClass, "PDR needs K >= 2");
  }
  PdrTerms t;
  t.intra = intra_distance(pairwise_distance_matrix(source, target));
  t.inter = inter_distance(source, target);
  t.pdr = t.inter / std::max(t.intra, kPdrEpsilon);
  return t;
}

double pdr(const PrototypeSet& source, const PrototypeSet& target) { return pdr_terms(source, target).pdr; }

}  // namespace das
