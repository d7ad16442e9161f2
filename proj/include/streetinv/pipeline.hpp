#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "streetinv/association.hpp"
#include "streetinv/io.hpp"
#include "streetinv/metrics.hpp"
#include "streetinv/refinement.hpp"
#include "streetinv/simulator.hpp"

namespace streetinv {

// Bad command line or configuration.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct RunConfig {
  int window = kDefaultWindow;
  double tau = kDefaultTau;
  double sigma_g = kDefaultSigmaG;
  RefineConfig refine;
  bool refine_enabled = true;
  std::string scorer = "geometric";  // or "file:PATH"
  CoordinateMode coordinates = CoordinateMode::kLocal;
  std::uint64_t seed = 0;

  std::filesystem::path poses;
  std::filesystem::path detections;
  std::filesystem::path observations;
  std::filesystem::path clusters;
  std::filesystem::path pairs;
  std::filesystem::path inventory;
  std::filesystem::path truth_objects;
  std::filesystem::path truth_labels;
  std::filesystem::path out = "out";

  SceneLayout layout;
  NoiseModel noise{0.2 * 3.14159265358979323846 / 180.0, 0.02, 0.0, 0.0};
  double max_range = 25.0;

  // Throws UsageError.
  void validate() const;
};

// Flat "key = value" text; '#' starts a comment. Throws UsageError with the
// line number on a malformed line.
std::map<std::string, std::string> parse_key_values(std::istream& in,
                                                    const std::string& source = "config");

// Throws UsageError on an unknown key or unparsable value. Per-category
// thresholds use keys like "tau_split.street_light".
void apply_setting(RunConfig& cfg, const std::string& key, const std::string& value);

RunConfig load_config(const std::filesystem::path& path);

// Frames in ascending id order among the poses that carry observations.
std::vector<FrameId> frame_order(const std::vector<CameraPose>& poses);
std::vector<FrameId> frame_order(const ObservationStore& obs);

// Scorer selected by cfg.scorer. File scores are keyed by obs id; pairs
// across categories or within a frame always score 0.
PairScorer make_scorer(const RunConfig& cfg);

// Sliding K-frame windows over frame_order, union of assign_pairs results.
std::vector<PairMatch> associate(const ObservationStore& obs,
                                 const std::vector<FrameId>& frames, int window,
                                 double tau, const PairScorer& scorer);

struct PipelineResult {
  std::vector<FrameId> frames;
  std::vector<PairMatch> pairs;
  std::vector<Cluster> initial_clusters;  // transitive chaining, unlocalized
  std::vector<Cluster> clusters;          // final, localized where possible
  std::vector<InventoryRecord> inventory;
};

PipelineResult run_pipeline(const RunConfig& cfg, const ObservationStore& obs,
                            const std::vector<FrameId>& frames, const PairScorer& scorer);

EvaluationReport evaluate_pipeline(const PipelineResult& result, const ObservationStore& obs,
                                   const std::vector<TruthObject>& objects,
                                   const TruthLabels& labels, int window);

// Scene specification for the simulate subcommand.
SceneSpec scene_from_config(const RunConfig& cfg);

}  // namespace streetinv
