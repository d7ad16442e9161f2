#include <map>
#include <set>

#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "streetinv/io.hpp"
#include "streetinv/simulator.hpp"
#include "streetinv/triangulation.hpp"

using namespace streetinv;
using streetinv::testing::kPi;

namespace {

SceneSpec tiny_spec() {
  SceneSpec spec;
  spec.trajectory = straight_trajectory(10.0, 10.0);
  spec.objects = {TruthObject{0, "traffic_sign", Vec3(5, 6, 2.8), 0.9}};
  return spec;
}

}  // namespace

TEST(Trajectory, StraightAlongX) {
  const auto t = straight_trajectory(40.0, 10.0, 2.0);
  ASSERT_EQ(t.size(), 5u);
  for (std::size_t i = 0; i < t.size(); ++i) {
    EXPECT_EQ(t[i].frame_id, static_cast<FrameId>(i));
    EXPECT_EQ(t[i].position, Vec3(10.0 * i, 0, 2.0));
    EXPECT_EQ(t[i].heading, 0.0);
  }
  EXPECT_THROW(straight_trajectory(10.0, 0.0), std::invalid_argument);
}

TEST(GenerateScene, ZeroNoiseRaysMeetAtTheObject) {
  const SimulatedScene s = generate_scene(tiny_spec());
  ASSERT_EQ(s.observations.size(), 2u);
  for (const auto& o : s.observations) {
    EXPECT_LT(point_ray_distance(Vec3(5, 6, 2.8), ray_of(o)), 1e-9);
    EXPECT_EQ(s.truth.labels.at(o.obs_id), 0);
    EXPECT_NEAR(o.box_h_norm, 0.9 / ((Vec3(5, 6, 2.8) - o.exposure).norm() * kPi), 1e-12);
  }
}

TEST(GenerateScene, DropEverything) {
  SceneSpec spec = tiny_spec();
  spec.noise.drop_probability = 1.0;
  EXPECT_TRUE(generate_scene(spec).observations.empty());
}

TEST(GenerateScene, RejectsInvalidSpecs) {
  SceneSpec spec = tiny_spec();
  spec.objects.clear();
  EXPECT_THROW(generate_scene(spec), std::invalid_argument);
  spec = tiny_spec();
  spec.trajectory.clear();
  EXPECT_THROW(generate_scene(spec), std::invalid_argument);
  spec = tiny_spec();
  spec.noise.drop_probability = 1.5;
  EXPECT_THROW(generate_scene(spec), std::invalid_argument);
  spec = tiny_spec();
  spec.noise.direction_sigma = -1;
  EXPECT_THROW(generate_scene(spec), std::invalid_argument);
}

TEST(GenerateScene, DeterministicForSeed) {
  SceneSpec spec = default_scene_spec(42);
  spec.noise.clutter_rate = 0.5;
  spec.noise.drop_probability = 0.1;
  const auto a = generate_scene(spec), b = generate_scene(spec);
  EXPECT_EQ(detections_jsonl(a.detections), detections_jsonl(b.detections));
  EXPECT_EQ(poses_jsonl(a.poses), poses_jsonl(b.poses));
  EXPECT_EQ(truth_labels_jsonl(a.truth.labels), truth_labels_jsonl(b.truth.labels));
  spec.seed = 43;
  EXPECT_NE(detections_jsonl(generate_scene(spec).detections), detections_jsonl(a.detections));
}

TEST(GenerateScene, TruthMatrixIsBlockDiagonal) {
  SceneSpec spec = default_scene_spec(7);
  spec.noise.clutter_rate = 1.0;
  const auto s = generate_scene(spec);
  const auto& t = s.truth;
  const Eigen::Index n = static_cast<Eigen::Index>(t.obs_ids.size());
  ASSERT_EQ(t.pair_matrix.rows(), n);
  bool has_clutter = false;
  for (Eigen::Index i = 0; i < n; ++i) {
    const ObjectId li = t.labels.at(t.obs_ids[i]);
    has_clutter = has_clutter || li == kClutter;
    EXPECT_EQ(t.pair_matrix(i, i), 0);
    for (Eigen::Index j = 0; j < n; ++j) {
      const ObjectId lj = t.labels.at(t.obs_ids[j]);
      const bool same = i != j && li == lj && li != kClutter;
      EXPECT_EQ(t.pair_matrix(i, j), same ? 1 : 0);
      EXPECT_EQ(t.pair_matrix(i, j), t.pair_matrix(j, i));
    }
  }
  EXPECT_TRUE(has_clutter);
}

TEST(GenerateScene, DetectionsMatchObservations) {
  const auto s = generate_scene(default_scene_spec(8));
  ASSERT_EQ(s.detections.size(), s.observations.size());
  std::map<FrameId, CameraPose> poses;
  for (const auto& p : s.poses) poses[p.frame_id] = p;
  for (std::size_t i = 0; i < s.detections.size(); ++i) {
    EXPECT_NO_THROW(validate(s.detections[i]));
    const Observation rebuilt =
        build_observation(s.detections[i], poses.at(s.detections[i].frame_id), i);
    const Observation& o = s.observations.at(static_cast<ObsId>(i));
    EXPECT_LT((rebuilt.direction - o.direction).norm(), 1e-12);
    EXPECT_EQ(rebuilt.exposure, o.exposure);
  }
}

TEST(RandomObjects, SeparatedAndVaried) {
  const SceneLayout layout;
  const auto objs = random_objects(layout, 5);
  ASSERT_EQ(objs.size(), 30u);
  std::set<std::string> cats;
  for (std::size_t i = 0; i < objs.size(); ++i) {
    cats.insert(objs[i].category);
    const double lateral = std::abs(objs[i].center.y());
    EXPECT_GE(lateral, layout.lateral_min);
    EXPECT_LE(lateral, layout.lateral_max);
    for (std::size_t j = 0; j < i; ++j) {
      EXPECT_GE((objs[i].center - objs[j].center).head<2>().norm(), layout.min_separation);
    }
  }
  EXPECT_GE(cats.size(), 4u);
}

TEST(CorruptLinks, FractionAndDeterminism) {
  const auto s = generate_scene(default_scene_spec(9));
  std::vector<PairMatch> truth_pairs;
  const auto ids = s.observations.ids();
  for (std::size_t i = 0; i < ids.size(); ++i)
    for (std::size_t j = i + 1; j < ids.size(); ++j)
      if (s.truth.labels.at(ids[i]) == s.truth.labels.at(ids[j]) &&
          s.observations.at(ids[i]).frame_id != s.observations.at(ids[j]).frame_id)
        truth_pairs.push_back({ids[i], ids[j], 1.0});
  const auto bad = corrupt_links(truth_pairs, s.observations, s.truth.labels, 0.1, 3);
  EXPECT_EQ(bad, corrupt_links(truth_pairs, s.observations, s.truth.labels, 0.1, 3));
  int wrong = 0;
  for (const auto& p : bad) {
    const auto& a = s.observations.at(p.obs_a);
    const auto& b = s.observations.at(p.obs_b);
    EXPECT_EQ(a.category, b.category);
    EXPECT_NE(a.frame_id, b.frame_id);
    wrong += s.truth.labels.at(p.obs_a) != s.truth.labels.at(p.obs_b) ? 1 : 0;
  }
  EXPECT_GT(wrong, 0);
  EXPECT_LE(wrong, static_cast<int>(0.1 * truth_pairs.size()) + 1);
  EXPECT_LT(bad.size(), truth_pairs.size());
  EXPECT_EQ(corrupt_links(truth_pairs, s.observations, s.truth.labels, 0.0, 3), truth_pairs);
}
