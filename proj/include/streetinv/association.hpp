#pragma once

#include <functional>
#include <span>
#include <unordered_map>
#include <vector>

#include <Eigen/Core>

#include "streetinv/cluster.hpp"
#include "streetinv/geometry.hpp"
#include "streetinv/observation_store.hpp"

namespace streetinv {

// Pairwise matchability scores over an ordered list of observations.
// Symmetric, zero diagonal, entries in [0,1].
class MatchMatrix {
 public:
  // Throws std::invalid_argument when the invariants do not hold.
  MatchMatrix(std::vector<ObsId> obs_ids, Eigen::MatrixXd scores);

  const std::vector<ObsId>& obs_ids() const { return obs_ids_; }
  const Eigen::MatrixXd& scores() const { return scores_; }
  std::size_t size() const { return obs_ids_.size(); }
  double score(std::size_t i, std::size_t j) const { return scores_(i, j); }

 private:
  std::vector<ObsId> obs_ids_;
  Eigen::MatrixXd scores_;
};

struct PairMatch {
  ObsId obs_a = 0;  // obs_a < obs_b
  ObsId obs_b = 0;
  double score = 0.0;

  friend bool operator==(const PairMatch&, const PairMatch&) = default;
};

inline constexpr double kDefaultSigmaG = 0.5;
inline constexpr double kDefaultTau = 0.5;
inline constexpr int kDefaultWindow = 3;

// Closest approach between two half-line rays (parameters clamped to >= 0).
double ray_ray_distance(const Observation& a, const Observation& b);

// exp(-g / sigma_g) for the ray gap g; 0 across categories or within a frame.
double geometric_score(const Observation& a, const Observation& b,
                       double sigma_g = kDefaultSigmaG);

using PairScorer = std::function<double(const Observation&, const Observation&)>;

// Builds the matrix for the given observations (in order) from a pair scorer.
// The scorer's output is symmetrized and clamped into [0,1].
MatchMatrix score_observations(std::span<const Observation* const> observations,
                               const PairScorer& scorer);

// For every unordered frame pair in the window, solves max-weight one-to-one
// assignment between the two frames' observations, and keeps matches whose
// score is >= tau. Observations of m missing from frame_of are an error
// (std::invalid_argument); observations outside the window are ignored.
std::vector<PairMatch> assign_pairs(
    const MatchMatrix& m, const std::unordered_map<ObsId, FrameId>& frame_of,
    std::span<const FrameId> window, double tau);

// Connected components of the match graph. Every id in all_obs ends up in
// exactly one cluster; ids are numbered by ascending smallest member.
std::vector<Cluster> transitive_cluster(std::span<const PairMatch> pairs,
                                        std::span<const ObsId> all_obs);

}  // namespace streetinv
