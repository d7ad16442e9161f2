#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "streetinv/association.hpp"
#include "streetinv/cluster.hpp"
#include "streetinv/geometry.hpp"
#include "streetinv/metrics.hpp"
#include "streetinv/observation_store.hpp"
#include "streetinv/truth.hpp"

namespace streetinv {

// JSON-lines readers and writers. Readers throw DataError naming the source and
// line number; blank lines are skipped.

enum class CoordinateMode { kLocal, kGeodetic };

// Poses: {frame_id, x, y, z, heading, pitch, roll} in local mode, or
// {frame_id, lat, lon, alt, heading, pitch, roll} in geodetic mode (radians).
// Geodetic positions are converted to ENU about the first pose.
std::vector<CameraPose> read_poses(std::istream& in, CoordinateMode mode,
                                   const std::string& source = "poses");
// Detections: {frame_id, cx, cy, w, h, img_w, img_h, category, confidence}.
std::vector<Detection2D> read_detections(std::istream& in,
                                         const std::string& source = "detections");

struct IngestResult {
  std::vector<CameraPose> poses;
  std::vector<Detection2D> detections;
  ObservationStore observations;
};

// Joins detections to poses by frame id and assigns obs ids 0.. in file order.
// Throws DataError listing every frame id without a pose.
IngestResult ingest(std::istream& poses, std::istream& detections,
                    CoordinateMode mode);
IngestResult ingest(const std::filesystem::path& poses,
                    const std::filesystem::path& detections, CoordinateMode mode);

using ScoreTable = std::map<std::pair<ObsId, ObsId>, double>;  // key: (min, max)

// External matchability scores: {obs_a, obs_b, score}; unlisted pairs score 0.
ScoreTable read_scores(std::istream& in, const std::string& source = "scores");

// One record per cluster: {object_id, category, center?, n_observations,
// max_residual?, members}. center and max_residual are omitted when the
// cluster is unlocalized.
struct InventoryRecord {
  int object_id = 0;
  std::string category;
  std::optional<Vec3> center;
  std::size_t n_observations = 0;
  std::optional<double> max_residual;
  std::vector<ObsId> members;
};

std::vector<InventoryRecord> build_inventory(const std::vector<Cluster>& clusters,
                                             const ObservationStore& obs);
std::string inventory_jsonl(const std::vector<InventoryRecord>& records);
std::vector<InventoryRecord> read_inventory(std::istream& in,
                                            const std::string& source = "inventory");
// Membership only; centers are dropped and recomputed by the caller.
std::vector<Cluster> read_clusters(std::istream& in, const std::string& source = "clusters");

std::string pairs_jsonl(const std::vector<PairMatch>& pairs);
std::vector<PairMatch> read_pairs(std::istream& in, const std::string& source = "pairs");

std::string observations_jsonl(const ObservationStore& obs);
ObservationStore read_observations(std::istream& in,
                                   const std::string& source = "observations");

std::string poses_jsonl(const std::vector<CameraPose>& poses);
std::string detections_jsonl(const std::vector<Detection2D>& detections);

// Truth objects: {object_id, category, center, height}.
// Truth labels: {obs_id, object_id}, object_id -1 for clutter.
std::string truth_objects_jsonl(const std::vector<TruthObject>& objects);
std::string truth_labels_jsonl(const TruthLabels& labels);
std::vector<TruthObject> read_truth_objects(std::istream& in,
                                            const std::string& source = "truth_objects");
TruthLabels read_truth_labels(std::istream& in, const std::string& source = "truth_labels");

std::string report_text(const EvaluationReport& report);
std::string report_csv(const EvaluationReport& report);

// Writes via a sibling temporary file and rename.
void atomic_write(const std::filesystem::path& path, const std::string& content);

std::string read_file(const std::filesystem::path& path);

}  // namespace streetinv
