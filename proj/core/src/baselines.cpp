#include "das/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

#include "das/error.hpp"
#include "das/linalg.hpp"

namespace das {

namespace {

// Visits every detection that passes the confidence filter, in pass order.
std::size_t for_each_surviving(const PassDump& dump, double conf_thresh,
                               const std::function<void(const Detection&)>& fn) {
  std::size_t n = 0;
  for (const auto& image : dump.images) {
    for (const auto& det : image.detections) {
      if (det.confidence() >= conf_thresh) {
        fn(det);
        ++n;
      }
    }
  }
  if (n == 0) {
    throw Error(ErrorCode::NoDetections,
                "no detection with confidence >= " + std::to_string(conf_thresh));
  }
  return n;
}

Eigen::MatrixXd pooled_features(const PassDump& pass) {
  const auto n = pass.proposal_count();
  std::size_t d = 0;
  for (const auto& image : pass.images) {
    if (!image.proposals.empty()) {
      d = image.proposals.front().feature.size();
      break;
    }
  }
  Eigen::MatrixXd out(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  Eigen::Index row = 0;
  for (const auto& image : pass.images) {
    for (const auto& prop : image.proposals) {
      if (prop.feature.size() != d) throw Error(ErrorCode::InconsistentDims, "proposal feature lengths differ");
      out.row(row++) = Eigen::Map<const Eigen::RowVectorXd>(prop.feature.data(), static_cast<Eigen::Index>(d));
    }
  }
  return out;
}

}  // namespace

double baseline_ps(const PassDump& dump, double conf_thresh) {
  double sum = 0.0;
  const auto n = for_each_surviving(dump, conf_thresh, [&](const Detection& d) { sum += d.confidence(); });
  return sum / static_cast<double>(n);
}

double baseline_es(const PassDump& dump, double conf_thresh) {
  double sum = 0.0;
  const auto n = for_each_surviving(dump, conf_thresh, [&](const Detection& d) {
    const auto p = d.probs.values();
    double norm = 0.0;
    for (double v : p) norm += std::max(v, kKlEpsilon);
    double h = 0.0;
    for (double v : p) {
      const double c = std::max(v, kKlEpsilon) / norm;
      h -= c * std::log(c);
    }
    sum += h;
  });
  return -sum / static_cast<double>(n);
}

double baseline_atc(const PassDump& dump, double threshold, double conf_thresh) {
  std::size_t above = 0;
  const auto n = for_each_surviving(dump, conf_thresh, [&](const Detection& d) {
    if (d.confidence() > threshold) ++above;
  });
  return static_cast<double>(above) / static_cast<double>(n);
}

FrechetResult frechet(const PassDump& source_props, const PassDump& target_props, FdMode mode) {
  const Eigen::MatrixXd xs = pooled_features(source_props);
  const Eigen::MatrixXd xt = pooled_features(target_props);
  if (xs.rows() < 2 || xt.rows() < 2) {
    throw Error(ErrorCode::InsufficientSamples, "Frechet distance needs >= 2 proposal features per domain (have " +
                                                    std::to_string(xs.rows()) + " and " +
                                                    std::to_string(xt.rows()) + ")");
  }
  if (xs.cols() != xt.cols()) throw Error(ErrorCode::DimMismatch, "source and target feature dims differ");

  const auto d = xs.cols();
  FrechetResult out;
  out.mode_used = mode;
  if (mode == FdMode::full && (xs.rows() < d + 1 || xt.rows() < d + 1)) out.mode_used = FdMode::diagonal;

  const Eigen::RowVectorXd mu_s = xs.colwise().mean();
  const Eigen::RowVectorXd mu_t = xt.colwise().mean();
  const double mean_term = (mu_s - mu_t).squaredNorm();

  double cov_term = 0.0;
  if (out.mode_used == FdMode::full) {
    const Eigen::MatrixXd cs = sample_covariance(xs);
    const Eigen::MatrixXd ct = sample_covariance(xt);
    cov_term = cs.trace() + ct.trace() - 2.0 * trace_sqrt_product(cs, ct);
  } else {
    const Eigen::RowVectorXd var_s =
        (xs.rowwise() - mu_s).colwise().squaredNorm() / static_cast<double>(xs.rows() - 1);
    const Eigen::RowVectorXd var_t =
        (xt.rowwise() - mu_t).colwise().squaredNorm() / static_cast<double>(xt.rows() - 1);
    for (Eigen::Index j = 0; j < d; ++j) {
      cov_term += var_s(j) + var_t(j) - 2.0 * std::sqrt(var_s(j) * var_t(j));
    }
  }
  out.score = -(mean_term + cov_term);
  return out;
}

double baseline_fd(const PassDump& source_props, const PassDump& target_props, FdMode mode) {
  return frechet(source_props, target_props, mode).score;
}

}  // namespace das
