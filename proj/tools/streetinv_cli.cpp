// Command-line front end: simulate, ingest, associate, localize, refine,
// evaluate and run (full pipeline).

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>

#include <CLI11.hpp>

#include "streetinv/io.hpp"
#include "streetinv/pipeline.hpp"

namespace fs = std::filesystem;
using namespace streetinv;

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitNumerical = 3;

struct CommonOptions {
  std::string config;
  std::map<std::string, std::string> values;
  bool no_refine = false;
};

void add_common(CLI::App* sub, CommonOptions& o) {
  sub->add_option("--config", o.config, "Flat key = value run configuration");
  const auto setting = [&](const std::string& flag, const std::string& key,
                           const std::string& help) {
    sub->add_option_function<std::string>(
        flag, [&o, key](const std::string& v) { o.values[key] = v; }, help);
  };
  setting("--window", "window", "Association window size K (>= 2)");
  setting("--tau", "tau", "Match confidence threshold");
  setting("--tau-split", "tau_split", "Split distance threshold, meters");
  setting("--tau-merge", "tau_merge", "Merge distance threshold, meters");
  setting("--tau-scale", "tau_scale", "Physical size ratio threshold (> 1)");
  setting("--scorer", "scorer", "geometric | file:PATH");
  setting("--seed", "seed", "Random seed");
  setting("--out", "out", "Output directory");
  setting("--coordinates", "coordinates", "local | geodetic");
  setting("--poses", "poses", "Poses JSON-lines file");
  setting("--detections", "detections", "Detections JSON-lines file");
  setting("--observations", "observations", "Observations JSON-lines file");
  setting("--clusters", "clusters", "Cluster membership JSON-lines file");
  setting("--pairs", "pairs", "Pair matches JSON-lines file");
  setting("--inventory", "inventory", "Inventory JSON-lines file");
  setting("--truth-objects", "truth_objects", "Ground-truth objects file");
  setting("--truth-labels", "truth_labels", "Ground-truth labels file");
  sub->add_flag("--no-refine", o.no_refine,
                "Skip geometry-guided refinement (association chaining baseline)");
}

void require_file(const fs::path& p, const char* what) {
  if (p.empty()) throw UsageError(std::string("missing required input: ") + what);
  if (!fs::is_regular_file(p)) throw DataError(std::string(what) + " not found: " + p.string());
}

RunConfig resolve_config(const CommonOptions& o) {
  RunConfig cfg = o.config.empty() ? RunConfig{} : load_config(o.config);
  for (const auto& [k, v] : o.values) apply_setting(cfg, k, v);
  if (o.no_refine) cfg.refine_enabled = false;
  cfg.validate();
  if (cfg.scorer.rfind("file:", 0) == 0) require_file(cfg.scorer.substr(5), "score file");
  return cfg;
}


std::ifstream open(const fs::path& p) {
  std::ifstream in(p);
  if (!in) throw DataError("cannot open " + p.string());
  return in;
}

struct LoadedObservations {
  ObservationStore store;
  std::vector<FrameId> frames;
};

LoadedObservations load_observations(const RunConfig& cfg) {
  LoadedObservations out;
  if (!cfg.observations.empty()) {
    require_file(cfg.observations, "observations");
    auto in = open(cfg.observations);
    out.store = read_observations(in, cfg.observations.string());
    out.frames = frame_order(out.store);
  } else {
    require_file(cfg.poses, "poses");
    require_file(cfg.detections, "detections");
    IngestResult r = ingest(cfg.poses, cfg.detections, cfg.coordinates);
    out.store = std::move(r.observations);
    out.frames = frame_order(r.poses);
  }
  if (out.store.empty()) std::cerr << "warning: no detections to process\n";
  return out;
}

bool has_truth(const RunConfig& cfg) {
  return !cfg.truth_objects.empty() || !cfg.truth_labels.empty();
}

struct Truth {
  std::vector<TruthObject> objects;
  TruthLabels labels;
};

Truth load_truth(const RunConfig& cfg) {
  require_file(cfg.truth_objects, "truth objects");
  require_file(cfg.truth_labels, "truth labels");
  Truth t;
  auto oin = open(cfg.truth_objects);
  t.objects = read_truth_objects(oin, cfg.truth_objects.string());
  auto lin = open(cfg.truth_labels);
  t.labels = read_truth_labels(lin, cfg.truth_labels.string());
  return t;
}

void write_all(const std::vector<std::pair<fs::path, std::string>>& files) {
  for (const auto& [path, content] : files) atomic_write(path, content);
}

int cmd_simulate(const RunConfig& cfg) {
  const SimulatedScene scene = generate_scene(scene_from_config(cfg));
  write_all({{cfg.out / "poses.jsonl", poses_jsonl(scene.poses)},
             {cfg.out / "detections.jsonl", detections_jsonl(scene.detections)},
             {cfg.out / "truth_objects.jsonl", truth_objects_jsonl(scene.truth.objects)},
             {cfg.out / "truth_labels.jsonl", truth_labels_jsonl(scene.truth.labels)}});
  std::cout << "simulated " << scene.truth.objects.size() << " objects, "
            << scene.poses.size() << " frames, " << scene.detections.size()
            << " detections -> " << cfg.out.string() << "\n";
  return 0;
}

int cmd_ingest(const RunConfig& cfg) {
  const auto loaded = load_observations(cfg);
  write_all({{cfg.out / "observations.jsonl", observations_jsonl(loaded.store)}});
  std::cout << "ingested " << loaded.store.size() << " observations\n";
  return 0;
}

int cmd_associate(const RunConfig& cfg) {
  const auto loaded = load_observations(cfg);
  const auto pairs = associate(loaded.store, loaded.frames, cfg.window, cfg.tau, make_scorer(cfg));
  const auto clusters = transitive_cluster(pairs, loaded.store.ids());
  write_all({{cfg.out / "pairs.jsonl", pairs_jsonl(pairs)},
             {cfg.out / "clusters.jsonl",
              inventory_jsonl(build_inventory(clusters, loaded.store))}});
  std::cout << pairs.size() << " pairs, " << clusters.size() << " clusters\n";
  return 0;
}

std::vector<Cluster> load_clusters(const RunConfig& cfg) {
  require_file(cfg.clusters, "clusters");
  auto in = open(cfg.clusters);
  return read_clusters(in, cfg.clusters.string());
}

int cmd_localize(const RunConfig& cfg) {
  const auto loaded = load_observations(cfg);
  const auto clusters = canonicalize(localize_clusters(load_clusters(cfg), loaded.store));
  write_all({{cfg.out / "inventory.jsonl",
              inventory_jsonl(build_inventory(clusters, loaded.store))}});
  return 0;
}

int cmd_refine(const RunConfig& cfg) {
  const auto loaded = load_observations(cfg);
  const auto clusters = refine(load_clusters(cfg), loaded.store, cfg.refine);
  write_all({{cfg.out / "inventory.jsonl",
              inventory_jsonl(build_inventory(clusters, loaded.store))}});
  return 0;
}

int cmd_evaluate(const RunConfig& cfg) {
  const auto loaded = load_observations(cfg);
  const Truth truth = load_truth(cfg);
  require_file(cfg.inventory, "inventory");
  auto iin = open(cfg.inventory);
  PipelineResult result;
  result.frames = loaded.frames;
  for (const auto& r : read_inventory(iin, cfg.inventory.string())) {
    Cluster c;
    c.cluster_id = r.object_id;
    c.members = r.members;
    if (r.center) {
      c.center = r.center;
      std::vector<double> residuals;
      for (ObsId id : c.members) {
        residuals.push_back(point_ray_distance(*r.center, ray_of(loaded.store.at(id))));
      }
      c.residuals = std::move(residuals);
    }
    result.clusters.push_back(std::move(c));
  }
  if (!cfg.pairs.empty()) {
    require_file(cfg.pairs, "pairs");
    auto pin = open(cfg.pairs);
    result.pairs = read_pairs(pin, cfg.pairs.string());
  } else {
    std::cerr << "warning: no --pairs given; matching metrics see no predictions\n";
  }
  const auto report =
      evaluate_pipeline(result, loaded.store, truth.objects, truth.labels, cfg.window);
  write_all({{cfg.out / "report.txt", report_text(report)},
             {cfg.out / "report.csv", report_csv(report)}});
  std::cout << report_text(report);
  return 0;
}

int cmd_run(const RunConfig& cfg) {
  const auto loaded = load_observations(cfg);
  std::optional<Truth> truth;
  if (has_truth(cfg)) truth = load_truth(cfg);
  const auto result = run_pipeline(cfg, loaded.store, loaded.frames, make_scorer(cfg));

  std::vector<std::pair<fs::path, std::string>> files = {
      {cfg.out / "pairs.jsonl", pairs_jsonl(result.pairs)},
      {cfg.out / "inventory.jsonl", inventory_jsonl(result.inventory)}};
  if (truth) {
    const auto report =
        evaluate_pipeline(result, loaded.store, truth->objects, truth->labels, cfg.window);
    files.emplace_back(cfg.out / "report.txt", report_text(report));
    files.emplace_back(cfg.out / "report.csv", report_csv(report));
    std::cout << report_text(report);
  }
  write_all(files);
  std::size_t localized = 0;
  for (const auto& r : result.inventory) localized += r.center ? 1 : 0;
  std::cout << result.inventory.size() << " inventory records, " << localized
            << " localized\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-view street-level infrastructure localization"};
  app.require_subcommand(1);
  CommonOptions opts;

  const std::map<std::string, std::pair<std::string, int (*)(const RunConfig&)>> commands = {
      {"simulate", {"Generate a synthetic scene with ground truth", cmd_simulate}},
      {"ingest", {"Convert poses and detections into observations", cmd_ingest}},
      {"associate", {"Pairwise window matching and transitive chaining", cmd_associate}},
      {"localize", {"Triangulate given clusters without refinement", cmd_localize}},
      {"refine", {"Split, merge and re-triangulate given clusters", cmd_refine}},
      {"evaluate", {"Score an inventory against ground truth", cmd_evaluate}},
      {"run", {"Full pipeline: associate, triangulate, refine, evaluate", cmd_run}},
  };
  std::map<std::string, CLI::App*> subs;
  for (const auto& [name, entry] : commands) {
    CLI::App* sub = app.add_subcommand(name, entry.first);
    add_common(sub, opts);
    subs[name] = sub;
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    const RunConfig cfg = resolve_config(opts);
    for (const auto& [name, sub] : subs) {
      if (sub->parsed()) return commands.at(name).second(cfg);
    }
    return kExitUsage;
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  }
}
