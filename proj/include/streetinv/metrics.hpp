#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "streetinv/association.hpp"
#include "streetinv/cluster.hpp"
#include "streetinv/observation_store.hpp"
#include "streetinv/truth.hpp"

namespace streetinv {

using BinaryMatrix =
    Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic>;

struct RateCounts {
  long tp = 0;
  long fp = 0;
  long fn = 0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

// Precision/recall/F1 from raw counts. A zero denominator yields 0 when the
// complementary error count is positive and 1 otherwise; F1 is 0 when both
// rates are 0.
RateCounts rates_from_counts(long tp, long fp, long fn);

// Counts each unordered pair once over the strict upper triangle. Throws
// std::invalid_argument on a size mismatch.
RateCounts pairwise_metrics(const BinaryMatrix& truth, const BinaryMatrix& predicted);

// n_km = |C_k ∩ G_m| over predicted clusters k and ground-truth labels m.
class ContingencyTable {
 public:
  ContingencyTable(std::span<const std::int64_t> truth,
                   std::span<const std::int64_t> predicted);

  const Eigen::MatrixXd& counts() const { return counts_; }  // rows k, cols m
  Eigen::VectorXd cluster_totals() const { return counts_.rowwise().sum(); }
  Eigen::VectorXd class_totals() const { return counts_.colwise().sum(); }
  double total() const { return total_; }

  double truth_entropy() const;            // H(y)
  double cluster_entropy() const;          // H(c)
  double truth_given_cluster() const;      // H(y|c)
  double cluster_given_truth() const;      // H(c|y)

 private:
  Eigen::MatrixXd counts_;
  double total_ = 0.0;
};

struct ClusteringScores {
  double homogeneity = 1.0;
  double completeness = 1.0;
  double v_measure = 1.0;
};

// Natural-log entropies. Homogeneity is 1 when H(y) = 0, completeness is 1 when
// H(c) = 0, V is 0 when homogeneity + completeness = 0.
ClusteringScores clustering_metrics(std::span<const std::int64_t> truth,
                                    std::span<const std::int64_t> predicted);

struct LocatedObject {
  Vec3 center = Vec3::Zero();
  std::string category;
};

struct IdentificationResult {
  RateCounts counts;
  std::optional<double> loc_err;  // absent when there are no true positives
  std::vector<std::pair<std::size_t, std::size_t>> matches;  // (pred, gt)
  std::vector<double> distances;                             // per match
};

// Per category, repeatedly pairs the closest unmatched (prediction, truth)
// with distance < tol; that pair is always mutually nearest.
IdentificationResult identification_metrics(std::span<const LocatedObject> pred,
                                            std::span<const LocatedObject> gt,
                                            double tol = 1.0);

struct CategoryReport {
  std::string category;  // "ALL" for the aggregate row
  std::size_t n_observations = 0;
  std::size_t n_objects = 0;
  RateCounts matching;
  ClusteringScores clustering;
  IdentificationResult identification;
};

struct EvaluationReport {
  std::vector<CategoryReport> categories;  // sorted by name
  CategoryReport aggregate;
};

struct EvaluationInput {
  const ObservationStore* observations = nullptr;
  const TruthLabels* labels = nullptr;
  const std::vector<TruthObject>* objects = nullptr;
  std::span<const PairMatch> predicted_pairs;
  std::span<const Cluster> clusters;
  // Frame order along the trajectory and the association window size; pairs
  // are scored only between frames less than `window` positions apart.
  std::span<const FrameId> frame_order;
  int window = kDefaultWindow;
  // Ground-truth objects need at least this many distinct observing frames.
  int min_views = 2;
  double identification_tolerance = 1.0;
};

EvaluationReport evaluate_run(const EvaluationInput& input);

}  // namespace streetinv
