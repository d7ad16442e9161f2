#include "streetinv/pipeline.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <memory>
#include <set>

namespace streetinv {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

double parse_double(const std::string& key, const std::string& v) {
  double out = 0.0;
  const auto* end = v.data() + v.size();
  const auto [ptr, ec] = std::from_chars(v.data(), end, out);
  if (ec != std::errc() || ptr != end || !std::isfinite(out)) {
    throw UsageError("invalid number for " + key + ": '" + v + "'");
  }
  return out;
}

long long parse_int(const std::string& key, const std::string& v) {
  long long out = 0;
  const auto* end = v.data() + v.size();
  const auto [ptr, ec] = std::from_chars(v.data(), end, out);
  if (ec != std::errc() || ptr != end) {
    throw UsageError("invalid integer for " + key + ": '" + v + "'");
  }
  return out;
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw UsageError("invalid boolean for " + key + ": '" + v + "'");
}

}  // namespace

void RunConfig::validate() const {
  if (window < 2) throw UsageError("window must be at least 2");
  if (!std::isfinite(tau)) throw UsageError("tau must be finite");
  if (!(sigma_g > 0.0)) throw UsageError("sigma_g must be positive");
  try {
    refine.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  if (scorer != "geometric" && scorer.rfind("file:", 0) != 0) {
    throw UsageError("scorer must be 'geometric' or 'file:PATH'");
  }
}

std::map<std::string, std::string> parse_key_values(std::istream& in,
                                                    const std::string& source) {
  std::map<std::string, std::string> out;
  std::string line;
  int n = 0;
  while (std::getline(in, line)) {
    ++n;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw UsageError(source + ":" + std::to_string(n) + ": expected key = value");
    }
    const std::string key = trim(line.substr(0, eq));
    if (key.empty()) throw UsageError(source + ":" + std::to_string(n) + ": empty key");
    out[key] = trim(line.substr(eq + 1));
  }
  return out;
}

void apply_setting(RunConfig& cfg, const std::string& key, const std::string& value) {
  const auto category_suffix = [&](const std::string& prefix) -> std::optional<std::string> {
    if (key.rfind(prefix, 0) == 0 && key.size() > prefix.size()) {
      return key.substr(prefix.size());
    }
    return std::nullopt;
  };

  if (key == "window") cfg.window = static_cast<int>(parse_int(key, value));
  else if (key == "tau") cfg.tau = parse_double(key, value);
  else if (key == "sigma_g") cfg.sigma_g = parse_double(key, value);
  else if (key == "tau_split") cfg.refine.tau_split = parse_double(key, value);
  else if (key == "tau_merge") cfg.refine.tau_merge = parse_double(key, value);
  else if (key == "tau_scale") cfg.refine.tau_scale = parse_double(key, value);
  else if (auto cat = category_suffix("tau_split.")) {
    cfg.refine.tau_split_by_category[*cat] = parse_double(key, value);
  } else if (auto cat2 = category_suffix("tau_merge.")) {
    cfg.refine.tau_merge_by_category[*cat2] = parse_double(key, value);
  } else if (key == "refine") cfg.refine_enabled = parse_bool(key, value);
  else if (key == "scorer") cfg.scorer = value;
  else if (key == "coordinates") {
    if (value == "local") cfg.coordinates = CoordinateMode::kLocal;
    else if (value == "geodetic") cfg.coordinates = CoordinateMode::kGeodetic;
    else throw UsageError("coordinates must be 'local' or 'geodetic'");
  } else if (key == "seed") {
    const long long s = parse_int(key, value);
    if (s < 0) throw UsageError("seed must be nonnegative");
    cfg.seed = static_cast<std::uint64_t>(s);
  }
  else if (key == "poses") cfg.poses = value;
  else if (key == "detections") cfg.detections = value;
  else if (key == "observations") cfg.observations = value;
  else if (key == "clusters") cfg.clusters = value;
  else if (key == "pairs") cfg.pairs = value;
  else if (key == "inventory") cfg.inventory = value;
  else if (key == "truth_objects") cfg.truth_objects = value;
  else if (key == "truth_labels") cfg.truth_labels = value;
  else if (key == "out") cfg.out = value;
  else if (key == "scene.length") cfg.layout.length = parse_double(key, value);
  else if (key == "scene.spacing") cfg.layout.spacing = parse_double(key, value);
  else if (key == "scene.objects") cfg.layout.n_objects = static_cast<int>(parse_int(key, value));
  else if (key == "scene.lateral_min") cfg.layout.lateral_min = parse_double(key, value);
  else if (key == "scene.lateral_max") cfg.layout.lateral_max = parse_double(key, value);
  else if (key == "scene.min_separation") cfg.layout.min_separation = parse_double(key, value);
  else if (key == "scene.camera_height") cfg.layout.camera_height = parse_double(key, value);
  else if (key == "scene.max_range") cfg.max_range = parse_double(key, value);
  else if (key == "scene.sigma_dir") cfg.noise.direction_sigma = parse_double(key, value);
  else if (key == "scene.sigma_pose") cfg.noise.pose_sigma = parse_double(key, value);
  else if (key == "scene.drop") cfg.noise.drop_probability = parse_double(key, value);
  else if (key == "scene.clutter") cfg.noise.clutter_rate = parse_double(key, value);
  else throw UsageError("unknown configuration key '" + key + "'");
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open config " + path.string());
  RunConfig cfg;
  for (const auto& [k, v] : parse_key_values(in, path.string())) apply_setting(cfg, k, v);
  return cfg;
}

std::vector<FrameId> frame_order(const std::vector<CameraPose>& poses) {
  std::vector<FrameId> frames;
  for (const auto& p : poses) frames.push_back(p.frame_id);
  std::sort(frames.begin(), frames.end());
  frames.erase(std::unique(frames.begin(), frames.end()), frames.end());
  return frames;
}

std::vector<FrameId> frame_order(const ObservationStore& obs) {
  std::vector<FrameId> frames;
  for (const auto& o : obs) frames.push_back(o.frame_id);
  std::sort(frames.begin(), frames.end());
  frames.erase(std::unique(frames.begin(), frames.end()), frames.end());
  return frames;
}

PairScorer make_scorer(const RunConfig& cfg) {
  if (cfg.scorer == "geometric") {
    const double sigma = cfg.sigma_g;
    return [sigma](const Observation& a, const Observation& b) {
      return geometric_score(a, b, sigma);
    };
  }
  if (cfg.scorer.rfind("file:", 0) == 0) {
    const std::filesystem::path path = cfg.scorer.substr(5);
    std::ifstream in(path);
    if (!in) throw DataError("cannot open score file " + path.string());
    auto table = std::make_shared<const ScoreTable>(read_scores(in, path.string()));
    return [table](const Observation& a, const Observation& b) {
      if (a.category != b.category || a.frame_id == b.frame_id) return 0.0;
      const auto it = table->find({std::min(a.obs_id, b.obs_id), std::max(a.obs_id, b.obs_id)});
      return it == table->end() ? 0.0 : it->second;
    };
  }
  throw UsageError("unknown scorer '" + cfg.scorer + "'");
}

std::vector<PairMatch> associate(const ObservationStore& obs,
                                 const std::vector<FrameId>& frames, int window,
                                 double tau, const PairScorer& scorer) {
  if (window < 2) throw std::invalid_argument("window must be at least 2");
  std::unordered_map<ObsId, FrameId> frame_of;
  std::map<FrameId, std::vector<const Observation*>> by_frame;
  for (const auto& o : obs) {
    frame_of[o.obs_id] = o.frame_id;
    by_frame[o.frame_id].push_back(&o);
  }

  std::map<std::pair<ObsId, ObsId>, PairMatch> found;
  const std::size_t k = static_cast<std::size_t>(window);
  const std::size_t n_windows = frames.size() <= k ? 1 : frames.size() - k + 1;
  for (std::size_t start = 0; start < n_windows && frames.size() >= 2; ++start) {
    const std::size_t stop = std::min(frames.size(), start + k);
    const std::vector<FrameId> win(frames.begin() + static_cast<long>(start),
                                   frames.begin() + static_cast<long>(stop));
    std::vector<const Observation*> members;
    for (FrameId f : win) {
      const auto it = by_frame.find(f);
      if (it != by_frame.end()) members.insert(members.end(), it->second.begin(), it->second.end());
    }
    if (members.size() < 2) continue;
    const MatchMatrix m = score_observations(members, scorer);
    for (const PairMatch& p : assign_pairs(m, frame_of, win, tau)) {
      found.emplace(std::make_pair(p.obs_a, p.obs_b), p);
    }
  }
  std::vector<PairMatch> out;
  out.reserve(found.size());
  for (const auto& [key, p] : found) out.push_back(p);
  return out;
}

PipelineResult run_pipeline(const RunConfig& cfg, const ObservationStore& obs,
                            const std::vector<FrameId>& frames, const PairScorer& scorer) {
  cfg.validate();
  PipelineResult r;
  r.frames = frames;
  r.pairs = associate(obs, frames, cfg.window, cfg.tau, scorer);
  const auto ids = obs.ids();
  r.initial_clusters = transitive_cluster(r.pairs, ids);
  if (cfg.refine_enabled) {
    r.clusters = refine(r.initial_clusters, obs, cfg.refine);
  } else {
    r.clusters = canonicalize(localize_clusters(r.initial_clusters, obs));
  }
  r.inventory = build_inventory(r.clusters, obs);
  return r;
}

EvaluationReport evaluate_pipeline(const PipelineResult& result, const ObservationStore& obs,
                                   const std::vector<TruthObject>& objects,
                                   const TruthLabels& labels, int window) {
  EvaluationInput in;
  in.observations = &obs;
  in.labels = &labels;
  in.objects = &objects;
  in.predicted_pairs = result.pairs;
  in.clusters = result.clusters;
  in.frame_order = result.frames;
  in.window = window;
  return evaluate_run(in);
}

SceneSpec scene_from_config(const RunConfig& cfg) {
  SceneSpec spec;
  spec.trajectory = straight_trajectory(cfg.layout.length, cfg.layout.spacing,
                                        cfg.layout.camera_height);
  spec.objects = random_objects(cfg.layout, cfg.seed ^ 0x9e3779b97f4a7c15ULL);
  spec.noise = cfg.noise;
  spec.seed = cfg.seed;
  spec.max_range = cfg.max_range;
  return spec;
}

}  // namespace streetinv
