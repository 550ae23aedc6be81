#include "scout/metrics.hpp"

#include <cmath>

#include <nlohmann/json.hpp>

#include "scout/error.hpp"

namespace scout {

namespace {

struct DispSums {
  double all = 0.0;
  long long steps = 0;
  double final = 0.0;
  long long agents = 0;
};

DispSums displacement_sums(const Tensor& pred, const Tensor& gt,
                           const std::vector<uint8_t>& mask) {
  require_same_shape(pred, gt, "displacement");
  require(mask.size() == static_cast<size_t>(pred.rows), ErrorCode::ShapeMismatch,
          "displacement: mask size");
  require(pred.cols % 2 == 0, ErrorCode::ShapeMismatch, "displacement: odd column count");
  const int t_pred = pred.cols / 2;
  DispSums s;
  for (int i = 0; i < pred.rows; ++i) {
    if (!mask[static_cast<size_t>(i)]) continue;
    ++s.agents;
    for (int t = 0; t < t_pred; ++t) {
      const double d = std::hypot(pred.at(i, 2 * t) - gt.at(i, 2 * t),
                                  pred.at(i, 2 * t + 1) - gt.at(i, 2 * t + 1));
      s.all += d;
      ++s.steps;
      if (t == t_pred - 1) s.final += d;
    }
  }
  return s;
}

}  // namespace

double ade(const Tensor& pred, const Tensor& gt, const std::vector<uint8_t>& mask) {
  const DispSums s = displacement_sums(pred, gt, mask);
  require(s.agents > 0, ErrorCode::NoEligibleNodes, "ade: no eligible agents");
  return s.all / static_cast<double>(s.steps);
}

double fde(const Tensor& pred, const Tensor& gt, const std::vector<uint8_t>& mask) {
  const DispSums s = displacement_sums(pred, gt, mask);
  require(s.agents > 0, ErrorCode::NoEligibleNodes, "fde: no eligible agents");
  return s.final / static_cast<double>(s.agents);
}

double weighted_class_sum(std::optional<double> vehicle, std::optional<double> pedestrian,
                          std::optional<double> bicycle) {
  require(vehicle.has_value(), ErrorCode::MissingClass, "vehicle metric missing");
  require(pedestrian.has_value(), ErrorCode::MissingClass, "pedestrian metric missing");
  require(bicycle.has_value(), ErrorCode::MissingClass, "bicycle metric missing");
  return kClassWeights[0] * *vehicle + kClassWeights[1] * *pedestrian + kClassWeights[2] * *bicycle;
}

void MetricAccumulator::add_scene(const Tensor& pred, const Tensor& gt,
                                  const std::vector<uint8_t>& mask,
                                  const std::vector<AgentType>& types, double overlap_hits,
                                  double overlap_slots) {
  require(types.size() == static_cast<size_t>(pred.rows), ErrorCode::ShapeMismatch,
          "add_scene: types size");
  ++scenes_;
  overlap_hits_ += overlap_hits;
  overlap_slots_ += overlap_slots;

  const int t_pred = pred.cols / 2;
  for (int i = 0; i < pred.rows; ++i) {
    if (!mask[static_cast<size_t>(i)]) continue;
    Bucket& cls = by_class_[static_cast<size_t>(types[static_cast<size_t>(i)])];
    ++total_.agents;
    ++cls.agents;
    for (int t = 0; t < t_pred; ++t) {
      const double d = std::hypot(pred.at(i, 2 * t) - gt.at(i, 2 * t),
                                  pred.at(i, 2 * t + 1) - gt.at(i, 2 * t + 1));
      total_.sum_disp += d;
      ++total_.steps;
      cls.sum_disp += d;
      ++cls.steps;
      if (t == t_pred - 1) {
        total_.sum_final += d;
        cls.sum_final += d;
      }
    }
  }
}

MetricReport MetricAccumulator::report() const {
  require(total_.agents > 0, ErrorCode::NoEligibleNodes, "report: no eligible agents seen");
  MetricReport r;
  r.ade = total_.sum_disp / static_cast<double>(total_.steps);
  r.fde = total_.sum_final / static_cast<double>(total_.agents);
  bool all_classes = true;
  for (size_t c = 0; c < 3; ++c) {
    const Bucket& b = by_class_[c];
    r.per_class[c].count = b.agents;
    if (b.agents > 0) {
      r.per_class[c].ade = b.sum_disp / static_cast<double>(b.steps);
      r.per_class[c].fde = b.sum_final / static_cast<double>(b.agents);
    } else {
      all_classes = false;
    }
  }
  if (all_classes) {
    r.wsade = weighted_class_sum(r.per_class[0].ade, r.per_class[1].ade, r.per_class[2].ade);
    r.wsfde = weighted_class_sum(r.per_class[0].fde, r.per_class[1].fde, r.per_class[2].fde);
  }
  r.overlap_rate = overlap_slots_ > 0.0 ? overlap_hits_ / overlap_slots_ : 0.0;
  r.num_scenes = scenes_;
  r.num_eligible_agents = total_.agents;
  return r;
}

std::string MetricReport::to_json() const {
  nlohmann::json j;
  j["ade"] = ade;
  j["fde"] = fde;
  const char* names[3] = {"vehicle", "pedestrian", "bicycle"};
  for (size_t c = 0; c < 3; ++c) {
    j["per_class"][names[c]] = {{"ade", per_class[c].ade},
                                {"fde", per_class[c].fde},
                                {"count", per_class[c].count}};
  }
  j["wsade"] = wsade.has_value() ? nlohmann::json(*wsade) : nlohmann::json(nullptr);
  j["wsfde"] = wsfde.has_value() ? nlohmann::json(*wsfde) : nlohmann::json(nullptr);
  j["overlap_rate"] = overlap_rate;
  j["num_scenes"] = num_scenes;
  j["num_eligible_agents"] = num_eligible_agents;
  j["zero_shot"] = zero_shot;
  if (!split.empty()) j["split"] = split;
  if (!config_hash.empty()) j["config_hash"] = config_hash;
  return j.dump(1, '\t');
}

}  // namespace scout
