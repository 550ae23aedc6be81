#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "scout/tensor.hpp"

namespace scout {

// Three coarse agent categories. Vehicle covers cars, vans and trucks;
// pedestrian includes scooters; bicycle covers motorcycles as well.
enum class AgentType { Vehicle, Pedestrian, Bicycle };

const char* agent_type_name(AgentType t);
AgentType parse_agent_type(const std::string& raw);  // throws UnknownAgentType

struct TrackPoint {
  int frame = 0;
  double x = 0.0;
  double y = 0.0;
  double heading = 0.0;  // radians in [-pi, pi)
};

struct AgentTrack {
  std::string recording_id;
  int64_t agent_id = 0;
  AgentType type = AgentType::Vehicle;
  std::vector<TrackPoint> frames;  // strictly increasing frame indices
};

struct AgentRef {
  int64_t agent_id = 0;
  AgentType type = AgentType::Vehicle;
};

// One training example: N agents around an anchor frame, T_obs observed
// steps and T_pred future steps. Feature layout per observed step is
// [x, y, heading, onehot_vehicle, onehot_pedestrian, onehot_bicycle]
// flattened time-major, so obs has shape (N, T_obs * kFeatureDim).
//
// Agents only need to exist at the anchor frame. Missing observed steps are
// zero-padded with presence=0; agents missing any future step stay in the
// scene graph but are excluded from the loss (loss_mask=0).
struct SequenceSample {
  static constexpr int kFeatureDim = 6;

  std::string recording_id;
  int anchor_frame = 0;
  int t_obs = 0;
  int t_pred = 0;
  std::vector<AgentRef> agents;
  Tensor obs;                         // (N, T_obs * kFeatureDim)
  Tensor fut;                         // (N, T_pred * 2), zero where absent
  std::vector<uint8_t> presence;      // N * T_obs
  std::vector<uint8_t> fut_presence;  // N * T_pred
  std::vector<uint8_t> loss_mask;     // N
  std::array<double, 2> origin{0.0, 0.0};
  bool normalized = false;

  int num_agents() const { return static_cast<int>(agents.size()); }
  bool present(int agent, int t) const {
    return presence[static_cast<size_t>(agent) * t_obs + t] != 0;
  }
  // Position of an agent at the anchor (last observed) frame.
  std::array<double, 2> anchor_position(int agent) const;
};

struct DatasetSplit {
  std::vector<SequenceSample> train;
  std::vector<SequenceSample> val;
  std::vector<SequenceSample> test;
  std::vector<std::string> train_recordings;
  std::vector<std::string> val_recordings;
  std::vector<std::string> test_recordings;
};

// Column names expected in the input CSV; remap to match other layouts.
struct ColumnMap {
  std::string recording_id = "recording_id";
  std::string frame = "frame";
  std::string track_id = "track_id";
  std::string x = "x";
  std::string y = "y";
  std::string heading = "heading";
  std::string agent_type = "agent_type";
};

// Reads a UTF-8 CSV with a header row into per-track trajectories, sorted
// by frame. Duplicate (track, frame) rows raise NonMonotoneFrames.
std::vector<AgentTrack> load_trajectories(const std::string& path,
                                          const ColumnMap& columns = ColumnMap());

// Keeps every (source_hz/target_hz)-th frame counted from each track's
// first frame and renumbers kept frames to the target rate (frame/k with
// floor semantics). The first frame of every track is always kept.
std::vector<AgentTrack> resample(const std::vector<AgentTrack>& tracks, double source_hz,
                                 double target_hz);

// Slides a window of T_obs + T_pred frames through each recording with the
// given stride. A window yields a sample iff at least one agent is present
// at its anchor frame (windows without one are skipped).
std::vector<SequenceSample> window_sequences(const std::vector<AgentTrack>& tracks, int t_obs,
                                             int t_pred, int stride);

// Translates all positions so the scene centroid at the anchor frame is the
// origin; headings are untouched. The inverse restores coordinates exactly.
SequenceSample normalize_sample(const SequenceSample& sample);
SequenceSample denormalize_sample(const SequenceSample& sample);

// Splits by recording id (never by sample), so no recording leaks across
// splits. Fractions apply to the shuffled recording list.
DatasetSplit split_by_recording(const std::vector<SequenceSample>& samples, double train_frac,
                                double val_frac, uint64_t seed);
// Held-out-scenario protocol: named recordings go to test/val, rest train.
DatasetSplit split_explicit(const std::vector<SequenceSample>& samples,
                            const std::vector<std::string>& test_recordings,
                            const std::vector<std::string>& val_recordings);

// JSON cache (documented in the README). Round-trips samples exactly.
void save_samples_json(const std::vector<SequenceSample>& samples, const std::string& path);
std::vector<SequenceSample> load_samples_json(const std::string& path);

}  // namespace scout
