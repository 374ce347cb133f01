#include "das/types.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "das/error.hpp"

namespace das {

bool BoundingBox::valid() const {
  return std::isfinite(x1) && std::isfinite(y1) && std::isfinite(x2) && std::isfinite(y2) &&
         x2 > x1 && y2 > y1;
}

BoundingBox make_box(double x1, double y1, double x2, double y2) {
  BoundingBox box{x1, y1, x2, y2};
  if (!box.valid()) {
    throw Error(ErrorCode::BoxViolation,
                "box [" + std::to_string(x1) + ", " + std::to_string(y1) + ", " +
                    std::to_string(x2) + ", " + std::to_string(y2) + "] is degenerate or non-finite");
  }
  return box;
}

ProbabilityVector ProbabilityVector::from_values(std::vector<double> values, double tolerance) {
  if (values.empty()) {
    throw Error(ErrorCode::ProbabilityViolation, "empty probability vector");
  }
  double sum = 0.0;
  for (double v : values) {
    if (!std::isfinite(v) || v < 0.0) {
      throw Error(ErrorCode::ProbabilityViolation,
                  "negative or non-finite probability " + std::to_string(v));
    }
    sum += v;
  }
  if (std::abs(sum - 1.0) > tolerance) {
    throw Error(ErrorCode::ProbabilityViolation,
                "probabilities sum to " + std::to_string(sum));
  }
  if (sum != 1.0) {
    for (double& v : values) v /= sum;
  }
  return ProbabilityVector(std::move(values));
}

double ProbabilityVector::max() const {
  return values_.empty() ? 0.0 : *std::max_element(values_.begin(), values_.end());
}

std::size_t ProbabilityVector::argmax() const {
  return static_cast<std::size_t>(std::max_element(values_.begin(), values_.end()) -
                                  values_.begin());
}

std::vector<std::size_t> PassDump::sorted_order() const {
  std::vector<std::size_t> order(images.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [this](std::size_t a, std::size_t b) {
    return images[a].image_id < images[b].image_id;
  });
  return order;
}

const ImageInference* PassDump::find(const std::string& image_id) const {
  for (const auto& image : images) {
    if (image.image_id == image_id) return &image;
  }
  return nullptr;
}

std::size_t PassDump::proposal_count() const {
  std::size_t n = 0;
  for (const auto& image : images) n += image.proposals.size();
  return n;
}

std::size_t PassDump::detection_count() const {
  std::size_t n = 0;
  for (const auto& image : images) n += image.detections.size();
  return n;
}

std::size_t GroundTruthSet::object_count() const {
  std::size_t n = 0;
  for (const auto& [id, objects] : images) n += objects.size();
  return n;
}

std::filesystem::path RunManifest::resolve(const std::filesystem::path& p) const {
  if (p.is_absolute() || base_dir.empty()) return p;
  return base_dir / p;
}

}  // namespace das
