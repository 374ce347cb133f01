#include "das/matching.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <unordered_map>

#include "das/error.hpp"

namespace das {

double iou(const BoundingBox& a, const BoundingBox& b) {
  const double iw = std::min(a.x2, b.x2) - std::max(a.x1, b.x1);
  const double ih = std::min(a.y2, b.y2) - std::max(a.y1, b.y1);
  if (iw <= 0.0 || ih <= 0.0) return 0.0;
  const double inter = iw * ih;
  return inter / (a.area() + b.area() - inter);
}

namespace {

// Clamped, renormalized copy of a probability vector together with its logs.
struct ClampedDistribution {
  std::vector<double> p;
  std::vector<double> log_p;
  double neg_entropy = 0.0;  // sum p log p
};

ClampedDistribution clamp_distribution(std::span<const double> values) {
  ClampedDistribution out;
  out.p.resize(values.size());
  double sum = 0.0;
  for (std::size_t k = 0; k < values.size(); ++k) {
    out.p[k] = std::max(values[k], kKlEpsilon);
    sum += out.p[k];
  }
  out.log_p.resize(values.size());
  for (std::size_t k = 0; k < values.size(); ++k) {
    out.p[k] /= sum;
    out.log_p[k] = std::log(out.p[k]);
    out.neg_entropy += out.p[k] * out.log_p[k];
  }
  return out;
}

}  // namespace

double kl_divergence(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size()) {
    throw Error(ErrorCode::LengthMismatch, "KL over vectors of length " + std::to_string(p.size()) +
                                               " and " + std::to_string(q.size()));
  }
  const auto cp = clamp_distribution(p);
  const auto cq = clamp_distribution(q);
  double cross = 0.0;
  for (std::size_t k = 0; k < p.size(); ++k) cross += cp.p[k] * cq.log_p[k];
  // Tiny negative values come only from rounding.
  return std::max(0.0, cp.neg_entropy - cross);
}

double kl_divergence(const ProbabilityVector& p, const ProbabilityVector& q) {
  return kl_divergence(p.values(), q.values());
}

double pair_cost(const Detection& a, const Detection& b) {
  return kl_divergence(a.probs, b.probs) - iou(a.bbox, b.bbox);
}

Assignment hungarian_assign(const CostMatrix& costs) {
  if (costs.rows() == 0 || costs.cols() == 0) {
    throw Error(ErrorCode::EmptyMatrix, "cost matrix is " + std::to_string(costs.rows()) + "x" +
                                            std::to_string(costs.cols()));
  }
  const bool transposed = costs.rows() > costs.cols();
  const Eigen::MatrixXd a = transposed ? Eigen::MatrixXd(costs.transpose()) : costs;
  const auto n = static_cast<std::size_t>(a.rows());
  const auto m = static_cast<std::size_t>(a.cols());
  constexpr double kInf = std::numeric_limits<double>::infinity();

  // Shortest augmenting path with row/column potentials; 1-based, column 0 is
  // the virtual source.
  std::vector<double> u(n + 1, 0.0), v(m + 1, 0.0), minv(m + 1);
  std::vector<std::size_t> match(m + 1, 0), way(m + 1, 0);
  std::vector<char> used(m + 1);
  for (std::size_t i = 1; i <= n; ++i) {
    match[0] = i;
    std::size_t j0 = 0;
    std::fill(minv.begin(), minv.end(), kInf);
    std::fill(used.begin(), used.end(), 0);
    do {
      used[j0] = 1;
      const std::size_t i0 = match[j0];
      double delta = kInf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= m; ++j) {
        if (used[j]) continue;
        const double cur = a(static_cast<Eigen::Index>(i0 - 1), static_cast<Eigen::Index>(j - 1)) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= m; ++j) {
        if (used[j]) {
          u[match[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (match[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      match[j0] = match[j1];
      j0 = j1;
    } while (j0 != 0);
  }

  Assignment out;
  out.pairs.reserve(n);
  for (std::size_t j = 1; j <= m; ++j) {
    if (match[j] == 0) continue;
    const std::size_t row = match[j] - 1;
    const std::size_t col = j - 1;
    out.pairs.emplace_back(transposed ? col : row, transposed ? row : col);
  }
  std::sort(out.pairs.begin(), out.pairs.end());
  for (const auto& [r, c] : out.pairs) {
    out.total_cost += costs(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
  }
  return out;
}

CostMatrix build_cost_matrix(std::span<const Detection> orig, std::span<const Detection> pert) {
  std::vector<ClampedDistribution> po, pp;
  po.reserve(orig.size());
  pp.reserve(pert.size());
  for (const auto& d : orig) po.push_back(clamp_distribution(d.probs.values()));
  for (const auto& d : pert) pp.push_back(clamp_distribution(d.probs.values()));

  CostMatrix costs(static_cast<Eigen::Index>(orig.size()), static_cast<Eigen::Index>(pert.size()));
  for (std::size_t r = 0; r < orig.size(); ++r) {
    for (std::size_t c = 0; c < pert.size(); ++c) {
      if (po[r].p.size() != pp[c].p.size()) {
        throw Error(ErrorCode::LengthMismatch, "detections carry probability vectors of different lengths");
      }
      double cross = 0.0;
      for (std::size_t k = 0; k < po[r].p.size(); ++k) cross += po[r].p[k] * pp[c].log_p[k];
      const double kl = std::max(0.0, po[r].neg_entropy - cross);
      costs(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = kl - iou(orig[r].bbox, pert[c].bbox);
    }
  }
  return costs;
}

std::optional<double> image_flatness_cost(std::span<const Detection> orig, std::span<const Detection> pert) {
  if (orig.empty() || pert.empty()) return std::nullopt;
  const auto assignment = hungarian_assign(build_cost_matrix(orig, pert));
  return assignment.total_cost / static_cast<double>(assignment.pairs.size());
}

std::vector<Detection> filter_by_confidence(std::span<const Detection> dets, double conf_thresh) {
  std::vector<Detection> out;
  for (const auto& d : dets) {
    if (d.confidence() >= conf_thresh) out.push_back(d);
  }
  return out;
}

FlatnessBreakdown flatness(const CheckpointRecord& ckpt, double conf_thresh) {
  if (ckpt.target_perturbed.empty()) {
    throw Error(ErrorCode::MissingPass, "checkpoint '" + ckpt.checkpoint_id + "' has no perturbed pass");
  }
  const auto& original = ckpt.target_original;
  const auto order = original.sorted_order();

  std::vector<std::vector<Detection>> kept(original.images.size());
  for (std::size_t i = 0; i < original.images.size(); ++i) {
    kept[i] = filter_by_confidence(original.images[i].detections, conf_thresh);
  }

  FlatnessBreakdown out;
  for (const auto& pass : ckpt.target_perturbed) {
    if (pass.images.size() != original.images.size()) {
      throw Error(ErrorCode::PassMismatch, "checkpoint '" + ckpt.checkpoint_id +
                                               "': perturbed pass has " + std::to_string(pass.images.size()) +
                                               " images, original has " + std::to_string(original.images.size()));
    }
    std::unordered_map<std::string, const ImageInference*> by_id;
    by_id.reserve(pass.images.size());
    for (const auto& image : pass.images) by_id.emplace(image.image_id, &image);

    double sum = 0.0;
    std::size_t contributing = 0;
    for (std::size_t i : order) {
      const auto& image = original.images[i];
      auto it = by_id.find(image.image_id);
      if (it == by_id.end()) {
        throw Error(ErrorCode::PassMismatch, "checkpoint '" + ckpt.checkpoint_id + "': image '" +
                                                 image.image_id + "' missing from perturbed pass");
      }
      const auto pert = filter_by_confidence(it->second->detections, conf_thresh);
      if (auto cost = image_flatness_cost(kept[i], pert)) {
        sum += *cost;
        ++contributing;
      }
    }
    if (contributing == 0) {
      throw Error(ErrorCode::NoContributingImages,
                  "checkpoint '" + ckpt.checkpoint_id + "': perturbed pass " + std::to_string(pass.kind.index) +
                      " has no image with detections on both sides at conf >= " + std::to_string(conf_thresh));
    }
    out.pass_mean_cost.push_back(sum / static_cast<double>(contributing));
    out.pass_images.push_back(contributing);
  }
  const double mean = std::accumulate(out.pass_mean_cost.begin(), out.pass_mean_cost.end(), 0.0) /
                      static_cast<double>(out.pass_mean_cost.size());
  out.fis = -mean;
  return out;
}

double fis(const CheckpointRecord& ckpt, double conf_thresh) { return flatness(ckpt, conf_thresh).fis; }

}  // namespace das
