#include "scout/traj_data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include <nlohmann/json.hpp>

#include "scout/error.hpp"
#include "scout/rng.hpp"

namespace scout {

using nlohmann::json;

const char* agent_type_name(AgentType t) {
  switch (t) {
    case AgentType::Vehicle: return "vehicle";
    case AgentType::Pedestrian: return "pedestrian";
    case AgentType::Bicycle: return "bicycle";
  }
  return "vehicle";
}

AgentType parse_agent_type(const std::string& raw) {
  std::string s;
  s.reserve(raw.size());
  for (char c : raw) s.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  if (s == "vehicle" || s == "car" || s == "van" || s == "truck" || s == "truck_bus" ||
      s == "bus")
    return AgentType::Vehicle;
  if (s == "pedestrian" || s == "person" || s == "scooter")
    return AgentType::Pedestrian;
  if (s == "bicycle" || s == "bike" || s == "cyclist" || s == "motorcycle")
    return AgentType::Bicycle;
  fail(ErrorCode::UnknownAgentType, "unrecognized agent type '" + raw + "'");
}

std::array<double, 2> SequenceSample::anchor_position(int agent) const {
  const int base = (t_obs - 1) * kFeatureDim;
  return {obs.at(agent, base), obs.at(agent, base + 1)};
}

namespace {

double wrap_heading(double h) {
  constexpr double kTwoPi = 6.283185307179586476925286766559;
  double r = std::fmod(h + M_PI, kTwoPi);
  if (r < 0.0) r += kTwoPi;
  return r - M_PI;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      fields.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  fields.push_back(cur);
  for (std::string& f : fields) {
    const size_t b = f.find_first_not_of(" \t");
    const size_t e = f.find_last_not_of(" \t");
    f = b == std::string::npos ? std::string() : f.substr(b, e - b + 1);
  }
  return fields;
}

}  // namespace

std::vector<AgentTrack> load_trajectories(const std::string& path, const ColumnMap& columns) {
  std::ifstream in(path);
  require(in.good(), ErrorCode::IoFailure, "cannot open " + path);

  std::string line;
  require(static_cast<bool>(std::getline(in, line)), ErrorCode::EmptyDataset,
          path + " is empty");
  const std::vector<std::string> header = split_csv_line(line);

  auto col = [&](const std::string& name) {
    for (size_t i = 0; i < header.size(); ++i)
      if (header[i] == name) return static_cast<int>(i);
    fail(ErrorCode::MissingColumn, "column '" + name + "' not found in " + path);
  };
  const int c_rec = col(columns.recording_id);
  const int c_frame = col(columns.frame);
  const int c_track = col(columns.track_id);
  const int c_x = col(columns.x);
  const int c_y = col(columns.y);
  const int c_heading = col(columns.heading);
  const int c_type = col(columns.agent_type);

  // Keyed by (recording, track) in first-seen order.
  std::vector<AgentTrack> tracks;
  std::map<std::pair<std::string, int64_t>, size_t> index;

  int row_number = 1;
  while (std::getline(in, line)) {
    ++row_number;
    if (line.empty() || line == "\r") continue;
    const std::vector<std::string> f = split_csv_line(line);
    const int needed = std::max({c_rec, c_frame, c_track, c_x, c_y, c_heading, c_type});
    require(static_cast<int>(f.size()) > needed, ErrorCode::MissingColumn,
            "row " + std::to_string(row_number) + " has " + std::to_string(f.size()) +
                " fields, expected at least " + std::to_string(needed + 1));
    TrackPoint pt;
    int64_t track_id = 0;
    std::string rec;
    try {
      rec = f[static_cast<size_t>(c_rec)];
      pt.frame = std::stoi(f[static_cast<size_t>(c_frame)]);
      track_id = std::stoll(f[static_cast<size_t>(c_track)]);
      pt.x = std::stod(f[static_cast<size_t>(c_x)]);
      pt.y = std::stod(f[static_cast<size_t>(c_y)]);
      pt.heading = wrap_heading(std::stod(f[static_cast<size_t>(c_heading)]));
    } catch (const std::exception&) {
      fail(ErrorCode::IoFailure, "row " + std::to_string(row_number) + " of " + path +
                                     " is not parseable");
    }
    AgentType type;
    try {
      type = parse_agent_type(f[static_cast<size_t>(c_type)]);
    } catch (const Error&) {
      fail(ErrorCode::UnknownAgentType,
           "row " + std::to_string(row_number) + ": unrecognized agent type '" +
               f[static_cast<size_t>(c_type)] + "'");
    }

    const auto key = std::make_pair(rec, track_id);
    auto it = index.find(key);
    if (it == index.end()) {
      index[key] = tracks.size();
      tracks.push_back(AgentTrack{rec, track_id, type, {pt}});
    } else {
      tracks[it->second].frames.push_back(pt);
    }
  }
  require(!tracks.empty(), ErrorCode::EmptyDataset, path + " contains no data rows");

  for (AgentTrack& t : tracks) {
    std::stable_sort(t.frames.begin(), t.frames.end(),
                     [](const TrackPoint& a, const TrackPoint& b) { return a.frame < b.frame; });
    for (size_t i = 1; i < t.frames.size(); ++i)
      require(t.frames[i].frame > t.frames[i - 1].frame, ErrorCode::NonMonotoneFrames,
              "track " + std::to_string(t.agent_id) + " in recording " + t.recording_id +
                  " has duplicate frame " + std::to_string(t.frames[i].frame));
  }
  return tracks;
}

std::vector<AgentTrack> resample(const std::vector<AgentTrack>& tracks, double source_hz,
                                 double target_hz) {
  require(source_hz > 0.0 && target_hz > 0.0, ErrorCode::NonDivisibleRates,
          "rates must be positive");
  const double ratio = source_hz / target_hz;
  const long long k = std::llround(ratio);
  require(k >= 1 && std::fabs(ratio - static_cast<double>(k)) < 1e-9,
          ErrorCode::NonDivisibleRates,
          "source rate " + std::to_string(source_hz) + " Hz is not an integer multiple of " +
              std::to_string(target_hz) + " Hz");
  if (k == 1) return tracks;

  auto floordiv = [](long long a, long long b) {
    long long q = a / b;
    if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
    return q;
  };

  std::vector<AgentTrack> out;
  out.reserve(tracks.size());
  for (const AgentTrack& t : tracks) {
    AgentTrack r{t.recording_id, t.agent_id, t.type, {}};
    if (!t.frames.empty()) {
      const long long t0 = t.frames.front().frame;
      for (const TrackPoint& p : t.frames) {
        if ((p.frame - t0) % k != 0) continue;
        TrackPoint q = p;
        q.frame = static_cast<int>(floordiv(p.frame, k));
        r.frames.push_back(q);
      }
    }
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<SequenceSample> window_sequences(const std::vector<AgentTrack>& tracks, int t_obs,
                                             int t_pred, int stride) {
  require(t_obs >= 1 && t_pred >= 1, ErrorCode::InvalidConfig,
          "window_sequences: t_obs and t_pred must be >= 1");
  require(stride >= 1, ErrorCode::InvalidConfig, "window_sequences: stride must be >= 1");
  constexpr int C = SequenceSample::kFeatureDim;

  // Group tracks by recording, preserving input order.
  std::map<std::string, std::vector<const AgentTrack*>> by_recording;
  for (const AgentTrack& t : tracks)
    if (!t.frames.empty()) by_recording[t.recording_id].push_back(&t);

  std::vector<SequenceSample> samples;
  for (const auto& [rec, rec_tracks] : by_recording) {
    int min_frame = rec_tracks.front()->frames.front().frame;
    int max_frame = rec_tracks.front()->frames.back().frame;
    for (const AgentTrack* t : rec_tracks) {
      min_frame = std::min(min_frame, t->frames.front().frame);
      max_frame = std::max(max_frame, t->frames.back().frame);
    }

    auto find_point = [](const AgentTrack* t, int frame) -> const TrackPoint* {
      auto it = std::lower_bound(t->frames.begin(), t->frames.end(), frame,
                                 [](const TrackPoint& p, int f) { return p.frame < f; });
      return (it != t->frames.end() && it->frame == frame) ? &*it : nullptr;
    };

    for (int start = min_frame; start + t_obs + t_pred - 1 <= max_frame; start += stride) {
      const int anchor = start + t_obs - 1;

      std::vector<const AgentTrack*> active;
      for (const AgentTrack* t : rec_tracks)
        if (find_point(t, anchor)) active.push_back(t);
      if (active.empty()) continue;
      std::sort(active.begin(), active.end(),
                [](const AgentTrack* a, const AgentTrack* b) { return a->agent_id < b->agent_id; });

      const int n = static_cast<int>(active.size());
      SequenceSample s;
      s.recording_id = rec;
      s.anchor_frame = anchor;
      s.t_obs = t_obs;
      s.t_pred = t_pred;
      s.obs = Tensor::zeros(n, t_obs * C);
      s.fut = Tensor::zeros(n, t_pred * 2);
      s.presence.assign(static_cast<size_t>(n) * t_obs, 0);
      s.fut_presence.assign(static_cast<size_t>(n) * t_pred, 0);
      s.loss_mask.assign(static_cast<size_t>(n), 1);

      for (int a = 0; a < n; ++a) {
        const AgentTrack* t = active[static_cast<size_t>(a)];
        s.agents.push_back(AgentRef{t->agent_id, t->type});
        double onehot[3] = {0.0, 0.0, 0.0};
        onehot[static_cast<int>(t->type)] = 1.0;
        for (int step = 0; step < t_obs; ++step) {
          const TrackPoint* p = find_point(t, start + step);
          if (!p) continue;
          s.presence[static_cast<size_t>(a) * t_obs + step] = 1;
          double* row = &s.obs.at(a, step * C);
          row[0] = p->x;
          row[1] = p->y;
          row[2] = p->heading;
          row[3] = onehot[0];
          row[4] = onehot[1];
          row[5] = onehot[2];
        }
        for (int step = 0; step < t_pred; ++step) {
          const TrackPoint* p = find_point(t, anchor + 1 + step);
          if (!p) {
            s.loss_mask[static_cast<size_t>(a)] = 0;
            continue;
          }
          s.fut_presence[static_cast<size_t>(a) * t_pred + step] = 1;
          s.fut.at(a, step * 2) = p->x;
          s.fut.at(a, step * 2 + 1) = p->y;
        }
      }
      samples.push_back(std::move(s));
    }
  }
  return samples;
}

SequenceSample normalize_sample(const SequenceSample& sample) {
  require(sample.num_agents() >= 1, ErrorCode::EmptyWindow, "sample has no agents");
  constexpr int C = SequenceSample::kFeatureDim;
  SequenceSample out = sample;

  double cx = 0.0, cy = 0.0;
  for (int a = 0; a < sample.num_agents(); ++a) {
    const auto p = sample.anchor_position(a);
    cx += p[0];
    cy += p[1];
  }
  cx /= sample.num_agents();
  cy /= sample.num_agents();

  for (int a = 0; a < out.num_agents(); ++a) {
    for (int t = 0; t < out.t_obs; ++t) {
      if (!out.present(a, t)) continue;
      out.obs.at(a, t * C) -= cx;
      out.obs.at(a, t * C + 1) -= cy;
    }
    for (int t = 0; t < out.t_pred; ++t) {
      if (!out.fut_presence[static_cast<size_t>(a) * out.t_pred + t]) continue;
      out.fut.at(a, t * 2) -= cx;
      out.fut.at(a, t * 2 + 1) -= cy;
    }
  }
  out.origin = {sample.origin[0] + cx, sample.origin[1] + cy};
  out.normalized = true;
  return out;
}

SequenceSample denormalize_sample(const SequenceSample& sample) {
  constexpr int C = SequenceSample::kFeatureDim;
  SequenceSample out = sample;
  const double cx = sample.origin[0];
  const double cy = sample.origin[1];
  for (int a = 0; a < out.num_agents(); ++a) {
    for (int t = 0; t < out.t_obs; ++t) {
      if (!out.present(a, t)) continue;
      out.obs.at(a, t * C) += cx;
      out.obs.at(a, t * C + 1) += cy;
    }
    for (int t = 0; t < out.t_pred; ++t) {
      if (!out.fut_presence[static_cast<size_t>(a) * out.t_pred + t]) continue;
      out.fut.at(a, t * 2) += cx;
      out.fut.at(a, t * 2 + 1) += cy;
    }
  }
  out.origin = {0.0, 0.0};
  out.normalized = false;
  return out;
}

namespace {

std::vector<std::string> recording_ids(const std::vector<SequenceSample>& samples) {
  std::vector<std::string> ids;
  for (const SequenceSample& s : samples)
    if (std::find(ids.begin(), ids.end(), s.recording_id) == ids.end())
      ids.push_back(s.recording_id);
  std::sort(ids.begin(), ids.end());
  return ids;
}

void assign_split(const std::vector<SequenceSample>& samples, DatasetSplit& out) {
  auto in = [](const std::vector<std::string>& ids, const std::string& id) {
    return std::find(ids.begin(), ids.end(), id) != ids.end();
  };
  for (const SequenceSample& s : samples) {
    if (in(out.test_recordings, s.recording_id))
      out.test.push_back(s);
    else if (in(out.val_recordings, s.recording_id))
      out.val.push_back(s);
    else if (in(out.train_recordings, s.recording_id))
      out.train.push_back(s);
  }
}

}  // namespace

DatasetSplit split_by_recording(const std::vector<SequenceSample>& samples, double train_frac,
                                double val_frac, uint64_t seed) {
  require(train_frac > 0.0 && val_frac >= 0.0 && train_frac + val_frac <= 1.0,
          ErrorCode::InvalidConfig, "split fractions out of range");
  std::vector<std::string> ids = recording_ids(samples);
  require(!ids.empty(), ErrorCode::EmptyDataset, "no recordings to split");
  Rng rng(seed);
  rng.shuffle(ids);

  const int n = static_cast<int>(ids.size());
  int n_train = std::max(1, static_cast<int>(std::floor(train_frac * n)));
  int n_val = static_cast<int>(std::floor(val_frac * n));
  n_train = std::min(n_train, n);
  n_val = std::min(n_val, n - n_train);

  DatasetSplit out;
  for (int i = 0; i < n; ++i) {
    if (i < n_train)
      out.train_recordings.push_back(ids[static_cast<size_t>(i)]);
    else if (i < n_train + n_val)
      out.val_recordings.push_back(ids[static_cast<size_t>(i)]);
    else
      out.test_recordings.push_back(ids[static_cast<size_t>(i)]);
  }
  std::sort(out.train_recordings.begin(), out.train_recordings.end());
  std::sort(out.val_recordings.begin(), out.val_recordings.end());
  std::sort(out.test_recordings.begin(), out.test_recordings.end());
  assign_split(samples, out);
  return out;
}

DatasetSplit split_explicit(const std::vector<SequenceSample>& samples,
                            const std::vector<std::string>& test_recordings,
                            const std::vector<std::string>& val_recordings) {
  DatasetSplit out;
  out.test_recordings = test_recordings;
  out.val_recordings = val_recordings;
  for (const std::string& id : recording_ids(samples)) {
    const bool is_test =
        std::find(test_recordings.begin(), test_recordings.end(), id) != test_recordings.end();
    const bool is_val =
        std::find(val_recordings.begin(), val_recordings.end(), id) != val_recordings.end();
    require(!(is_test && is_val), ErrorCode::InvalidConfig,
            "recording " + id + " assigned to both test and val");
    if (!is_test && !is_val) out.train_recordings.push_back(id);
  }
  assign_split(samples, out);
  return out;
}

// ---------------------------------------------------------------------------
// JSON cache
// ---------------------------------------------------------------------------

namespace {

constexpr int kCacheFormatVersion = 1;

json sample_to_json(const SequenceSample& s) {
  json agents = json::array();
  for (const AgentRef& a : s.agents)
    agents.push_back({{"id", a.agent_id}, {"type", agent_type_name(a.type)}});
  auto matrix = [](const Tensor& t) {
    json rows = json::array();
    for (int i = 0; i < t.rows; ++i) {
      json row = json::array();
      for (int j = 0; j < t.cols; ++j) row.push_back(t.at(i, j));
      rows.push_back(std::move(row));
    }
    return rows;
  };
  auto flags = [](const std::vector<uint8_t>& v) {
    json arr = json::array();
    for (uint8_t b : v) arr.push_back(static_cast<int>(b));
    return arr;
  };
  return json{{"recording_id", s.recording_id},
              {"anchor_frame", s.anchor_frame},
              {"agents", std::move(agents)},
              {"obs", matrix(s.obs)},
              {"fut", matrix(s.fut)},
              {"presence", flags(s.presence)},
              {"fut_presence", flags(s.fut_presence)},
              {"loss_mask", flags(s.loss_mask)},
              {"origin", {s.origin[0], s.origin[1]}},
              {"normalized", s.normalized}};
}

SequenceSample sample_from_json(const json& j, int t_obs, int t_pred) {
  constexpr int C = SequenceSample::kFeatureDim;
  SequenceSample s;
  s.recording_id = j.at("recording_id").get<std::string>();
  s.anchor_frame = j.at("anchor_frame").get<int>();
  s.t_obs = t_obs;
  s.t_pred = t_pred;
  for (const json& a : j.at("agents"))
    s.agents.push_back(
        AgentRef{a.at("id").get<int64_t>(), parse_agent_type(a.at("type").get<std::string>())});
  const int n = s.num_agents();
  auto matrix = [](const json& rows, int r, int c) {
    Tensor t(r, c);
    require(static_cast<int>(rows.size()) == r, ErrorCode::IoFailure, "cache matrix rows");
    for (int i = 0; i < r; ++i) {
      const json& row = rows[static_cast<size_t>(i)];
      require(static_cast<int>(row.size()) == c, ErrorCode::IoFailure, "cache matrix cols");
      for (int jx = 0; jx < c; ++jx) t.at(i, jx) = row[static_cast<size_t>(jx)].get<double>();
    }
    return t;
  };
  auto flags = [](const json& arr) {
    std::vector<uint8_t> v;
    v.reserve(arr.size());
    for (const json& b : arr) v.push_back(static_cast<uint8_t>(b.get<int>()));
    return v;
  };
  s.obs = matrix(j.at("obs"), n, t_obs * C);
  s.fut = matrix(j.at("fut"), n, t_pred * 2);
  s.presence = flags(j.at("presence"));
  s.fut_presence = flags(j.at("fut_presence"));
  s.loss_mask = flags(j.at("loss_mask"));
  s.origin = {j.at("origin")[0].get<double>(), j.at("origin")[1].get<double>()};
  s.normalized = j.at("normalized").get<bool>();
  return s;
}

}  // namespace

void save_samples_json(const std::vector<SequenceSample>& samples, const std::string& path) {
  json j;
  j["format_version"] = kCacheFormatVersion;
  j["t_obs"] = samples.empty() ? 0 : samples.front().t_obs;
  j["t_pred"] = samples.empty() ? 0 : samples.front().t_pred;
  j["feature_dim"] = SequenceSample::kFeatureDim;
  json arr = json::array();
  for (const SequenceSample& s : samples) arr.push_back(sample_to_json(s));
  j["samples"] = std::move(arr);
  std::ofstream out(path);
  require(out.good(), ErrorCode::IoFailure, "cannot write " + path);
  out << j.dump(1, '\t') << "\n";
  require(out.good(), ErrorCode::IoFailure, "write failed for " + path);
}

std::vector<SequenceSample> load_samples_json(const std::string& path) {
  std::ifstream in(path);
  require(in.good(), ErrorCode::IoFailure, "cannot open " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    fail(ErrorCode::IoFailure, path + ": " + e.what());
  }
  require(j.at("format_version").get<int>() == kCacheFormatVersion, ErrorCode::SchemaMismatch,
          "unsupported cache format version in " + path);
  require(j.at("feature_dim").get<int>() == SequenceSample::kFeatureDim,
          ErrorCode::SchemaMismatch, "feature_dim mismatch in " + path);
  const int t_obs = j.at("t_obs").get<int>();
  const int t_pred = j.at("t_pred").get<int>();
  std::vector<SequenceSample> samples;
  for (const json& js : j.at("samples")) samples.push_back(sample_from_json(js, t_obs, t_pred));
  return samples;
}

}  // namespace scout
