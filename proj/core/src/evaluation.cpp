#include "das/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "das/error.hpp"
#include "das/matching.hpp"

namespace das {

namespace {

struct Candidate {
  double confidence;
  const std::string* image_id;
  std::size_t det_index;
  const BoundingBox* box;
};

}  // namespace

PRCurve pr_curve(const PassDump& dump, const GroundTruthSet& gt, std::size_t class_index,
                 double iou_threshold) {
  const int class_id = static_cast<int>(class_index) + 1;
  PRCurve curve;

  std::vector<Candidate> candidates;
  for (const auto& image : dump.images) {
    for (std::size_t j = 0; j < image.detections.size(); ++j) {
      const auto& det = image.detections[j];
      if (det.label() == class_index) {
        candidates.push_back({det.confidence(), &image.image_id, j, &det.bbox});
      }
    }
  }
  std::sort(candidates.begin(), candidates.end(), [](const Candidate& a, const Candidate& b) {
    if (a.confidence != b.confidence) return a.confidence > b.confidence;
    if (*a.image_id != *b.image_id) return *a.image_id < *b.image_id;
    return a.det_index < b.det_index;
  });

  std::map<std::string, std::vector<const BoundingBox*>> truth;
  for (const auto& [id, objects] : gt.images) {
    for (const auto& o : objects) {
      if (o.class_id == class_id) {
        truth[id].push_back(&o.bbox);
        ++curve.num_ground_truth;
      }
    }
  }
  std::map<std::string, std::vector<char>> taken;
  for (const auto& [id, boxes] : truth) taken[id].assign(boxes.size(), 0);

  std::size_t tp = 0;
  std::size_t fp = 0;
  for (const auto& c : candidates) {
    bool hit = false;
    if (auto it = truth.find(*c.image_id); it != truth.end()) {
      auto& used = taken[*c.image_id];
      double best = -1.0;
      std::size_t best_g = 0;
      for (std::size_t g = 0; g < it->second.size(); ++g) {
        if (used[g]) continue;
        const double o = iou(*c.box, *it->second[g]);
        if (o > best) {
          best = o;
          best_g = g;
        }
      }
      if (best >= iou_threshold) {
        used[best_g] = 1;
        hit = true;
      }
    }
    hit ? ++tp : ++fp;
    curve.confidence.push_back(c.confidence);
    curve.true_positive.push_back(hit ? 1 : 0);
    curve.precision.push_back(static_cast<double>(tp) / static_cast<double>(tp + fp));
    curve.recall.push_back(curve.num_ground_truth == 0
                               ? 0.0
                               : static_cast<double>(tp) / static_cast<double>(curve.num_ground_truth));
  }
  return curve;
}

double average_precision(const PRCurve& curve) {
  if (curve.num_ground_truth == 0 || curve.precision.empty()) return 0.0;
  // Sentinel-padded envelope: mrec = [0, r..., 1], mpre = [0, p..., 0].
  std::vector<double> mrec{0.0};
  std::vector<double> mpre{0.0};
  mrec.insert(mrec.end(), curve.recall.begin(), curve.recall.end());
  mpre.insert(mpre.end(), curve.precision.begin(), curve.precision.end());
  mrec.push_back(1.0);
  mpre.push_back(0.0);
  for (std::size_t i = mpre.size() - 1; i > 0; --i) mpre[i - 1] = std::max(mpre[i - 1], mpre[i]);
  double ap = 0.0;
  for (std::size_t i = 1; i < mrec.size(); ++i) {
    if (mrec[i] != mrec[i - 1]) ap += (mrec[i] - mrec[i - 1]) * mpre[i];
  }
  return ap;
}

MapResult map50(const PassDump& dump, const GroundTruthSet& gt, std::size_t num_classes) {
  MapResult out;
  out.ap_per_class.resize(num_classes);
  double sum = 0.0;
  std::size_t counted = 0;
  for (std::size_t k = 0; k < num_classes; ++k) {
    const auto curve = pr_curve(dump, gt, k);
    if (curve.num_ground_truth == 0) continue;
    out.ap_per_class[k] = average_precision(curve);
    sum += *out.ap_per_class[k];
    ++counted;
  }
  if (counted == 0) throw Error(ErrorCode::NoGroundTruth, "no class has a ground-truth instance");
  out.map = sum / static_cast<double>(counted);
  return out;
}

CorrelationResult pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw Error(ErrorCode::LengthMismatch, "pearson over series of different lengths");
  if (x.size() < 2) throw Error(ErrorCode::InvalidArgument, "pearson needs at least two samples");
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) throw Error(ErrorCode::DegenerateVariance, "a series is constant");
  const double r = sxy / std::sqrt(sxx * syy);
  return {std::clamp(r, -1.0, 1.0), x.size()};
}

ComparisonRow compare_selection(std::span<const double> maps, std::size_t selected_index) {
  if (maps.empty()) throw Error(ErrorCode::EmptyList, "no mAP values");
  if (selected_index >= maps.size()) {
    throw Error(ErrorCode::InvalidArgument, "selected index " + std::to_string(selected_index) + " out of range");
  }
  ComparisonRow row;
  row.last = maps.back();
  row.selected = maps[selected_index];
  row.selected_index = selected_index;
  row.oracle_index = static_cast<std::size_t>(std::max_element(maps.begin(), maps.end()) - maps.begin());
  row.oracle = maps[row.oracle_index];
  row.improvement = row.selected - row.last;
  return row;
}

std::string format_improvement(double delta) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%+.2f", delta);
  std::string s(buf);
  if (s == "-0.00") s = "+0.00";
  return s;
}

}  // namespace das
