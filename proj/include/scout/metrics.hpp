#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "scout/tensor.hpp"
#include "scout/traj_data.hpp"

namespace scout {

// ApolloScape class weights (reciprocals of average class velocities):
// vehicle, pedestrian, bicycle. They sum to 1.
constexpr std::array<double, 3> kClassWeights = {0.20, 0.58, 0.22};

// Mean Euclidean displacement over loss-eligible agents and all predicted
// steps (ADE) / at the final step only (FDE).
double ade(const Tensor& pred, const Tensor& gt, const std::vector<uint8_t>& mask);
double fde(const Tensor& pred, const Tensor& gt, const std::vector<uint8_t>& mask);

// Weighted class sum; every class metric must be present.
double weighted_class_sum(std::optional<double> vehicle, std::optional<double> pedestrian,
                          std::optional<double> bicycle);

struct ClassMetrics {
  double ade = 0.0;
  double fde = 0.0;
  long long count = 0;  // eligible agents of this class
};

struct MetricReport {
  double ade = 0.0;
  double fde = 0.0;
  std::array<ClassMetrics, 3> per_class;  // indexed by AgentType
  std::optional<double> wsade;
  std::optional<double> wsfde;
  double overlap_rate = 0.0;
  long long num_scenes = 0;
  long long num_eligible_agents = 0;
  bool zero_shot = false;
  std::string split;
  std::string config_hash;

  std::string to_json() const;
};

// Streaming accumulator so evaluation can run scene by scene. Displacements
// accumulate per (agent, step); overlap accumulates (hits, slots).
class MetricAccumulator {
 public:
  // pred/gt are (N, T_pred*2); mask marks loss-eligible agents.
  void add_scene(const Tensor& pred, const Tensor& gt, const std::vector<uint8_t>& mask,
                 const std::vector<AgentType>& types, double overlap_hits, double overlap_slots);
  MetricReport report() const;

 private:
  struct Bucket {
    double sum_disp = 0.0;
    long long steps = 0;
    double sum_final = 0.0;
    long long agents = 0;
  };
  Bucket total_;
  std::array<Bucket, 3> by_class_;
  double overlap_hits_ = 0.0;
  double overlap_slots_ = 0.0;
  long long scenes_ = 0;
};

}  // namespace scout
