#include "streetinv/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>
#include <stdexcept>
#include <tuple>

namespace streetinv {

namespace {

std::vector<std::int64_t> sorted_unique(std::span<const std::int64_t> v) {
  std::vector<std::int64_t> out(v.begin(), v.end());
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::size_t rank_of(const std::vector<std::int64_t>& keys, std::int64_t v) {
  return static_cast<std::size_t>(std::lower_bound(keys.begin(), keys.end(), v) -
                                  keys.begin());
}

double entropy_of(const Eigen::VectorXd& totals, double n) {
  double h = 0.0;
  for (Eigen::Index i = 0; i < totals.size(); ++i) {
    if (totals(i) > 0.0) {
      const double p = totals(i) / n;
      h -= p * std::log(p);
    }
  }
  return h;
}

}  // namespace

RateCounts rates_from_counts(long tp, long fp, long fn) {
  RateCounts r;
  r.tp = tp;
  r.fp = fp;
  r.fn = fn;
  if (tp + fp > 0) {
    r.precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
  } else {
    r.precision = fn > 0 ? 0.0 : 1.0;
  }
  if (tp + fn > 0) {
    r.recall = static_cast<double>(tp) / static_cast<double>(tp + fn);
  } else {
    r.recall = fp > 0 ? 0.0 : 1.0;
  }
  const double sum = r.precision + r.recall;
  r.f1 = sum > 0.0 ? 2.0 * r.precision * r.recall / sum : 0.0;
  return r;
}

RateCounts pairwise_metrics(const BinaryMatrix& truth, const BinaryMatrix& predicted) {
  if (truth.rows() != truth.cols() || predicted.rows() != predicted.cols() ||
      truth.rows() != predicted.rows()) {
    throw std::invalid_argument("pairwise_metrics: matrices must be square and equal size");
  }
  long tp = 0, fp = 0, fn = 0;
  const Eigen::Index n = truth.rows();
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const bool y = truth(i, j) != 0;
      const bool yh = predicted(i, j) != 0;
      if (y && yh) ++tp;
      else if (yh) ++fp;
      else if (y) ++fn;
    }
  }
  return rates_from_counts(tp, fp, fn);
}

ContingencyTable::ContingencyTable(std::span<const std::int64_t> truth,
                                   std::span<const std::int64_t> predicted) {
  if (truth.size() != predicted.size()) {
    throw std::invalid_argument("contingency table: label vectors differ in length");
  }
  const auto classes = sorted_unique(truth);
  const auto clusters = sorted_unique(predicted);
  counts_ = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(clusters.size()),
                                  static_cast<Eigen::Index>(classes.size()));
  for (std::size_t i = 0; i < truth.size(); ++i) {
    counts_(static_cast<Eigen::Index>(rank_of(clusters, predicted[i])),
            static_cast<Eigen::Index>(rank_of(classes, truth[i]))) += 1.0;
  }
  total_ = static_cast<double>(truth.size());
}

double ContingencyTable::truth_entropy() const {
  return entropy_of(class_totals(), total_);
}

double ContingencyTable::cluster_entropy() const {
  return entropy_of(cluster_totals(), total_);
}

double ContingencyTable::truth_given_cluster() const {
  const Eigen::VectorXd nk = cluster_totals();
  double h = 0.0;
  for (Eigen::Index k = 0; k < counts_.rows(); ++k) {
    for (Eigen::Index m = 0; m < counts_.cols(); ++m) {
      const double n = counts_(k, m);
      if (n > 0.0) h -= (n / total_) * std::log(n / nk(k));
    }
  }
  return h;
}

double ContingencyTable::cluster_given_truth() const {
  const Eigen::VectorXd nm = class_totals();
  double h = 0.0;
  for (Eigen::Index k = 0; k < counts_.rows(); ++k) {
    for (Eigen::Index m = 0; m < counts_.cols(); ++m) {
      const double n = counts_(k, m);
      if (n > 0.0) h -= (n / total_) * std::log(n / nm(m));
    }
  }
  return h;
}

ClusteringScores clustering_metrics(std::span<const std::int64_t> truth,
                                    std::span<const std::int64_t> predicted) {
  ClusteringScores s;
  if (truth.empty()) return s;
  const ContingencyTable table(truth, predicted);
  const double hy = table.truth_entropy();
  const double hc = table.cluster_entropy();
  s.homogeneity = hy > 0.0 ? 1.0 - table.truth_given_cluster() / hy : 1.0;
  s.completeness = hc > 0.0 ? 1.0 - table.cluster_given_truth() / hc : 1.0;
  // Rounding can leave values a few ulps outside [0,1].
  s.homogeneity = std::clamp(s.homogeneity, 0.0, 1.0);
  s.completeness = std::clamp(s.completeness, 0.0, 1.0);
  const double sum = s.homogeneity + s.completeness;
  s.v_measure = sum > 0.0 ? 2.0 * s.homogeneity * s.completeness / sum : 0.0;
  return s;
}

IdentificationResult identification_metrics(std::span<const LocatedObject> pred,
                                            std::span<const LocatedObject> gt,
                                            double tol) {
  if (!(tol > 0.0)) throw std::invalid_argument("identification tolerance must be positive");

  struct Candidate {
    double distance;
    std::size_t pred;
    std::size_t gt;
  };
  std::vector<Candidate> candidates;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    for (std::size_t j = 0; j < gt.size(); ++j) {
      if (pred[i].category != gt[j].category) continue;
      const double d = (pred[i].center - gt[j].center).norm();
      if (d < tol) candidates.push_back({d, i, j});
    }
  }
  std::sort(candidates.begin(), candidates.end(),
            [](const Candidate& a, const Candidate& b) {
              return std::tie(a.distance, a.pred, a.gt) <
                     std::tie(b.distance, b.pred, b.gt);
            });

  IdentificationResult out;
  std::vector<bool> pred_used(pred.size(), false);
  std::vector<bool> gt_used(gt.size(), false);
  double sum = 0.0;
  for (const Candidate& c : candidates) {
    if (pred_used[c.pred] || gt_used[c.gt]) continue;
    pred_used[c.pred] = true;
    gt_used[c.gt] = true;
    out.matches.emplace_back(c.pred, c.gt);
    out.distances.push_back(c.distance);
    sum += c.distance;
  }
  const long tp = static_cast<long>(out.matches.size());
  out.counts = rates_from_counts(tp, static_cast<long>(pred.size()) - tp,
                                 static_cast<long>(gt.size()) - tp);
  if (tp > 0) out.loc_err = sum / static_cast<double>(tp);
  return out;
}

namespace {

std::string category_of(const Cluster& c, const ObservationStore& obs) {
  // Majority category; ties resolved alphabetically.
  std::map<std::string, int> votes;
  for (ObsId id : c.members) ++votes[obs.at(id).category];
  std::string best;
  int best_n = -1;
  for (const auto& [cat, n] : votes) {
    if (n > best_n) {
      best = cat;
      best_n = n;
    }
  }
  return best;
}

CategoryReport evaluate_subset(const EvaluationInput& in,
                               const std::vector<ObsId>& ids,
                               const std::optional<std::string>& category) {
  const ObservationStore& obs = *in.observations;
  CategoryReport rep;
  rep.category = category.value_or("ALL");
  rep.n_observations = ids.size();

  const auto truth_of = [&](ObsId id) {
    const auto it = in.labels->find(id);
    return it == in.labels->end() ? kClutter : it->second;
  };

  std::map<FrameId, std::size_t> frame_pos;
  for (std::size_t i = 0; i < in.frame_order.size(); ++i) frame_pos[in.frame_order[i]] = i;
  const auto pos_of = [&](ObsId id) -> long {
    const auto it = frame_pos.find(obs.at(id).frame_id);
    return it == frame_pos.end() ? -1 : static_cast<long>(it->second);
  };

  // Pairwise matching over window-adjacent frame pairs.
  const auto n = static_cast<Eigen::Index>(ids.size());
  BinaryMatrix y = BinaryMatrix::Zero(n, n);
  BinaryMatrix yhat = BinaryMatrix::Zero(n, n);
  std::map<ObsId, Eigen::Index> local;
  for (Eigen::Index i = 0; i < n; ++i) local[ids[static_cast<std::size_t>(i)]] = i;
  const auto candidate = [&](ObsId a, ObsId b) {
    const long pa = pos_of(a), pb = pos_of(b);
    return pa >= 0 && pb >= 0 && pa != pb && std::abs(pa - pb) < in.window;
  };
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const ObsId a = ids[static_cast<std::size_t>(i)];
      const ObsId b = ids[static_cast<std::size_t>(j)];
      const ObjectId ta = truth_of(a);
      if (ta != kClutter && ta == truth_of(b) && candidate(a, b)) {
        y(i, j) = y(j, i) = 1;
      }
    }
  }
  for (const PairMatch& p : in.predicted_pairs) {
    const auto ia = local.find(p.obs_a);
    const auto ib = local.find(p.obs_b);
    if (ia == local.end() || ib == local.end()) continue;
    if (!candidate(p.obs_a, p.obs_b)) continue;
    yhat(ia->second, ib->second) = yhat(ib->second, ia->second) = 1;
  }
  rep.matching = pairwise_metrics(y, yhat);

  // Clustering over observations; clutter observations are their own class.
  std::map<ObsId, int> cluster_of;
  for (const Cluster& c : in.clusters) {
    for (ObsId id : c.members) cluster_of[id] = c.cluster_id;
  }
  std::vector<std::int64_t> truth_labels, cluster_labels;
  int next_unclustered = -1;
  for (ObsId id : ids) {
    const ObjectId t = truth_of(id);
    truth_labels.push_back(t == kClutter ? -(id + 1) : t);
    const auto it = cluster_of.find(id);
    cluster_labels.push_back(it == cluster_of.end() ? next_unclustered-- : it->second);
  }
  rep.clustering = clustering_metrics(truth_labels, cluster_labels);

  // Identification over localized clusters and sufficiently observed objects.
  std::map<ObjectId, std::set<FrameId>> views;
  for (const Observation& o : obs) {
    const ObjectId t = truth_of(o.obs_id);
    if (t != kClutter) views[t].insert(o.frame_id);
  }
  std::vector<LocatedObject> gt;
  for (const TruthObject& t : *in.objects) {
    if (category && t.category != *category) continue;
    const auto it = views.find(t.object_id);
    const std::size_t n_views = it == views.end() ? 0 : it->second.size();
    if (static_cast<int>(n_views) < in.min_views) continue;
    gt.push_back({t.center, t.category});
  }
  std::vector<LocatedObject> pred;
  for (const Cluster& c : in.clusters) {
    if (!c.center) continue;
    const std::string cat = category_of(c, obs);
    if (category && cat != *category) continue;
    pred.push_back({*c.center, cat});
  }
  rep.n_objects = gt.size();
  rep.identification = identification_metrics(pred, gt, in.identification_tolerance);
  return rep;
}

}  // namespace

EvaluationReport evaluate_run(const EvaluationInput& input) {
  if (input.observations == nullptr || input.labels == nullptr || input.objects == nullptr) {
    throw std::invalid_argument("evaluate_run: missing observations or ground truth");
  }
  std::map<std::string, std::vector<ObsId>> by_category;
  std::vector<ObsId> all;
  for (const Observation& o : *input.observations) {
    by_category[o.category].push_back(o.obs_id);
    all.push_back(o.obs_id);
  }
  for (const TruthObject& t : *input.objects) by_category[t.category];

  EvaluationReport report;
  for (const auto& [cat, ids] : by_category) {
    report.categories.push_back(evaluate_subset(input, ids, cat));
  }
  report.aggregate = evaluate_subset(input, all, std::nullopt);
  return report;
}

}  // namespace streetinv
