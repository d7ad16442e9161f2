#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "streetinv/geodetic.hpp"
#include "streetinv/io.hpp"
#include "streetinv/pipeline.hpp"
#include "streetinv/simulator.hpp"

using namespace streetinv;
namespace fs = std::filesystem;

namespace {

constexpr double kA = LocalEnuFrame::kSemiMajor;
constexpr double kE2 = LocalEnuFrame::kFlattening * (2.0 - LocalEnuFrame::kFlattening);

std::string message_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const std::exception& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST(Geodetic, OriginMapsToZero) {
  const LocalEnuFrame f(0.5, 2.0, 30.0);
  EXPECT_LT(f.forward(0.5, 2.0, 30.0).norm(), 1e-9);
}

TEST(Geodetic, EquatorEcef) {
  EXPECT_LT((LocalEnuFrame::to_ecef(0, 0, 0) - Vec3(kA, 0, 0)).norm(), 1e-9);
  const double b = kA * (1 - LocalEnuFrame::kFlattening);
  EXPECT_LT((LocalEnuFrame::to_ecef(streetinv::testing::kPi / 2, 0, 0) - Vec3(0, 0, b)).norm(), 1e-6);
}

TEST(Geodetic, SmallOffsetsFollowLocalRadii) {
  for (double lat0 : {0.1, 0.53, 1.1, -0.7}) {
    const double lon0 = 1.99, s2 = std::sin(lat0) * std::sin(lat0);
    const double meridian = kA * (1 - kE2) / std::pow(1 - kE2 * s2, 1.5);
    const double normal = kA / std::sqrt(1 - kE2 * s2);
    const LocalEnuFrame f(lat0, lon0, 12.0);
    const double d = 1e-6;
    const Vec3 north = f.forward(lat0 + d, lon0, 12.0);
    EXPECT_NEAR(north.y(), meridian * d, 1e-4);
    EXPECT_NEAR(north.x(), 0.0, 1e-6);
    const Vec3 east = f.forward(lat0, lon0 + d, 12.0);
    EXPECT_NEAR(east.x(), normal * std::cos(lat0) * d, 1e-4);
    EXPECT_NEAR(east.y(), 0.0, 1e-4);
    const Vec3 up = f.forward(lat0, lon0, 17.0);
    EXPECT_LT((up - Vec3(0, 0, 5)).norm(), 1e-8);
  }
}

TEST(Io, PosesAndDetectionsRoundTrip) {
  const auto scene = generate_scene(default_scene_spec(4));
  std::istringstream pin(poses_jsonl(scene.poses)), din(detections_jsonl(scene.detections));
  const IngestResult r = ingest(pin, din, CoordinateMode::kLocal);
  ASSERT_EQ(r.observations.size(), scene.observations.size());
  for (const auto& o : scene.observations) {
    const Observation& p = r.observations.at(o.obs_id);
    EXPECT_LT((p.direction - o.direction).norm(), 1e-12);
    EXPECT_EQ(p.exposure, o.exposure);
    EXPECT_EQ(p.category, o.category);
  }
  std::istringstream oin(observations_jsonl(r.observations));
  const ObservationStore back = read_observations(oin);
  EXPECT_EQ(observations_jsonl(back), observations_jsonl(r.observations));
}

TEST(Io, MissingFramesAreListed) {
  std::istringstream pin(R"({"frame_id":1,"x":0,"y":0,"z":2,"heading":0,"pitch":0,"roll":0})");
  std::istringstream din(
      R"({"frame_id":3,"cx":10,"cy":10,"w":4,"h":4,"img_w":100,"img_h":50,"category":"a","confidence":0.9}
{"frame_id":5,"cx":10,"cy":10,"w":4,"h":4,"img_w":100,"img_h":50,"category":"a","confidence":0.9})");
  const std::string msg = message_of([&] { ingest(pin, din, CoordinateMode::kLocal); });
  EXPECT_NE(msg.find("3 5"), std::string::npos) << msg;
}

TEST(Io, MalformedLinesNameSourceAndLine) {
  std::istringstream in("\n{\"frame_id\":1,\"x\":0}\n");
  const std::string msg = message_of([&] { read_poses(in, CoordinateMode::kLocal, "p.jsonl"); });
  EXPECT_NE(msg.find("p.jsonl:2"), std::string::npos) << msg;
  std::istringstream bad("not json\n");
  EXPECT_THROW(read_detections(bad), DataError);
  std::istringstream dup(
      "{\"frame_id\":1,\"x\":0,\"y\":0,\"z\":0,\"heading\":0,\"pitch\":0,\"roll\":0}\n"
      "{\"frame_id\":1,\"x\":0,\"y\":0,\"z\":0,\"heading\":0,\"pitch\":0,\"roll\":0}\n");
  EXPECT_THROW(read_poses(dup, CoordinateMode::kLocal), DataError);
}

TEST(Io, GeodeticPosesBecomeEnu) {
  const double lat = 0.532, lon = 1.995;
  std::ostringstream text;
  text.precision(17);
  text << R"({"frame_id":0,"lat":)" << lat << R"(,"lon":)" << lon
       << R"(,"alt":20,"heading":0,"pitch":0,"roll":0})" << "\n"
       << R"({"frame_id":1,"lat":)" << lat << R"(,"lon":)" << lon + 1e-6
       << R"(,"alt":20,"heading":0,"pitch":0,"roll":0})" << "\n";
  std::istringstream in(text.str());
  const auto poses = read_poses(in, CoordinateMode::kGeodetic);
  EXPECT_LT(poses[0].position.norm(), 1e-9);
  EXPECT_GT(poses[1].position.x(), 5.0);
  EXPECT_LT(std::abs(poses[1].position.y()), 1e-3);
}

TEST(Io, InventoryPairsAndTruthRoundTrip) {
  const std::vector<InventoryRecord> inv = {
      {0, "sign", Vec3(1.5, -2.25, 3.0), 3, 0.125, {1, 4, 9}},
      {1, "sign", std::nullopt, 1, std::nullopt, {2}}};
  std::istringstream iin(inventory_jsonl(inv));
  const auto back = read_inventory(iin);
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(*back[0].center, Vec3(1.5, -2.25, 3.0));
  EXPECT_EQ(*back[0].max_residual, 0.125);
  EXPECT_FALSE(back[1].center);
  EXPECT_EQ(inventory_jsonl(back), inventory_jsonl(inv));
  std::istringstream cin(inventory_jsonl(inv));
  const auto clusters = read_clusters(cin);
  EXPECT_EQ(clusters[0].members, (std::vector<ObsId>{1, 4, 9}));
  EXPECT_FALSE(clusters[0].center);

  const std::vector<PairMatch> pairs = {{1, 4, 0.75}, {4, 9, 0.5}};
  std::istringstream pin(pairs_jsonl(pairs));
  EXPECT_EQ(read_pairs(pin), pairs);

  const std::vector<TruthObject> objs = {{3, "sign", Vec3(1, 2, 3), 0.9}};
  std::istringstream oin(truth_objects_jsonl(objs));
  const auto objs_back = read_truth_objects(oin);
  EXPECT_EQ(objs_back[0].center, objs[0].center);
  EXPECT_EQ(objs_back[0].height, 0.9);
  const TruthLabels labels = {{0, 3}, {1, kClutter}};
  std::istringstream lin(truth_labels_jsonl(labels));
  EXPECT_EQ(read_truth_labels(lin), labels);
}

TEST(Io, AtomicWriteLeavesNoTemporary) {
  const fs::path dir = fs::temp_directory_path() / "streetinv_io_test";
  fs::remove_all(dir);
  atomic_write(dir / "a" / "x.txt", "hello\n");
  EXPECT_EQ(read_file(dir / "a" / "x.txt"), "hello\n");
  EXPECT_FALSE(fs::exists(dir / "a" / "x.txt.tmp"));
  fs::remove_all(dir);
}

TEST(Config, ParsesAndOverrides) {
  std::istringstream in("# comment\nwindow = 4\n tau=0.6 # trailing\n\ntau_split.street_light = 1.2\n");
  const auto kv = parse_key_values(in);
  RunConfig cfg;
  for (const auto& [k, v] : kv) apply_setting(cfg, k, v);
  EXPECT_EQ(cfg.window, 4);
  EXPECT_EQ(cfg.tau, 0.6);
  EXPECT_EQ(cfg.refine.split_threshold("street_light"), 1.2);
  apply_setting(cfg, "refine", "false");
  EXPECT_FALSE(cfg.refine_enabled);
  apply_setting(cfg, "coordinates", "geodetic");
  EXPECT_EQ(cfg.coordinates, CoordinateMode::kGeodetic);

  EXPECT_THROW(apply_setting(cfg, "no_such_key", "1"), UsageError);
  EXPECT_THROW(apply_setting(cfg, "window", "three"), UsageError);
  std::istringstream broken("window 3\n");
  EXPECT_THROW(parse_key_values(broken), UsageError);
  cfg.window = 1;
  EXPECT_THROW(cfg.validate(), UsageError);
}

TEST(Pipeline, FileScorerMatchesGeometricOnSameScores) {
  const auto scene = generate_scene(default_scene_spec(6));
  const auto frames = frame_order(scene.poses);
  RunConfig cfg;
  const auto geometric = associate(scene.observations, frames, cfg.window, cfg.tau,
                                   make_scorer(cfg));
  // Dump every geometric score and read it back through the file scorer.
  const fs::path path = fs::temp_directory_path() / "streetinv_scores.jsonl";
  {
    std::ofstream out(path);
    out.precision(17);
    for (const auto& a : scene.observations)
      for (const auto& b : scene.observations)
        if (a.obs_id < b.obs_id)
          out << "{\"obs_a\":" << a.obs_id << ",\"obs_b\":" << b.obs_id
              << ",\"score\":" << geometric_score(a, b) << "}\n";
  }
  cfg.scorer = "file:" + path.string();
  const auto from_file = associate(scene.observations, frames, cfg.window, cfg.tau,
                                   make_scorer(cfg));
  fs::remove(path);
  ASSERT_EQ(from_file.size(), geometric.size());
  for (std::size_t i = 0; i < geometric.size(); ++i) {
    EXPECT_EQ(from_file[i].obs_a, geometric[i].obs_a);
    EXPECT_EQ(from_file[i].obs_b, geometric[i].obs_b);
  }
}

TEST(Pipeline, NoRefineBaselineIsTransitiveChaining) {
  const auto scene = generate_scene(default_scene_spec(11));
  RunConfig cfg;
  cfg.refine_enabled = false;
  const auto frames = frame_order(scene.poses);
  const auto r = run_pipeline(cfg, scene.observations, frames, make_scorer(cfg));
  ASSERT_EQ(r.clusters.size(), r.initial_clusters.size());
  for (std::size_t i = 0; i < r.clusters.size(); ++i) {
    EXPECT_EQ(r.clusters[i].members, r.initial_clusters[i].members);
    EXPECT_EQ(r.clusters[i].localized(), r.clusters[i].size() >= 2);
  }
  EXPECT_EQ(r.inventory.size(), r.clusters.size());
}

TEST(Pipeline, EmptyInputGivesEmptyInventory) {
  const ObservationStore empty;
  RunConfig cfg;
  const auto r = run_pipeline(cfg, empty, {}, make_scorer(cfg));
  EXPECT_TRUE(r.pairs.empty());
  EXPECT_TRUE(r.inventory.empty());
  EXPECT_EQ(inventory_jsonl(r.inventory), "");
}

TEST(Pipeline, ZeroNoiseSceneRecoveredExactly) {
  SceneSpec spec = default_scene_spec(12, 25);
  spec.noise = NoiseModel{};
  const auto scene = generate_scene(spec);
  RunConfig cfg;
  const auto r =
      run_pipeline(cfg, scene.observations, frame_order(scene.poses), make_scorer(cfg));
  const auto report = evaluate_pipeline(r, scene.observations, scene.truth.objects,
                                        scene.truth.labels, cfg.window);
  const auto& id = report.aggregate.identification;
  EXPECT_EQ(id.counts.fp, 0);
  EXPECT_EQ(id.counts.fn, 0);
  ASSERT_TRUE(id.loc_err);
  EXPECT_LT(*id.loc_err, 1e-6);
  EXPECT_NEAR(report.aggregate.clustering.v_measure, 1.0, 1e-12);
}

TEST(Report, TextAndCsvShape) {
  const auto scene = generate_scene(default_scene_spec(13));
  RunConfig cfg;
  const auto r =
      run_pipeline(cfg, scene.observations, frame_order(scene.poses), make_scorer(cfg));
  const auto report = evaluate_pipeline(r, scene.observations, scene.truth.objects,
                                        scene.truth.labels, cfg.window);
  const std::string csv = report_csv(report);
  EXPECT_EQ(csv.rfind("category,n_observations,n_objects,pre_mat", 0), 0u);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'),
            static_cast<long>(report.categories.size()) + 2);
  EXPECT_NE(report_text(report).find("[ALL]"), std::string::npos);
}
