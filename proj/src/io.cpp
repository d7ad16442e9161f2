#include "streetinv/io.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <optional>
#include <fstream>
#include <istream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "streetinv/geodetic.hpp"

namespace streetinv {

using json = nlohmann::json;

namespace {

struct LineContext {
  const std::string& source;
  int line;

  [[noreturn]] void fail(const std::string& what) const {
    throw DataError(source + ":" + std::to_string(line) + ": " + what);
  }
};

template <typename Fn>
void for_each_record(std::istream& in, const std::string& source, Fn&& fn) {
  std::string text;
  int line = 0;
  while (std::getline(in, text)) {
    ++line;
    if (std::all_of(text.begin(), text.end(), [](unsigned char c) { return std::isspace(c); })) {
      continue;
    }
    const LineContext ctx{source, line};
    json record;
    try {
      record = json::parse(text);
    } catch (const json::parse_error& e) {
      ctx.fail(std::string("malformed JSON: ") + e.what());
    }
    if (!record.is_object()) ctx.fail("expected a JSON object");
    fn(record, ctx);
  }
}

double number(const json& j, const char* key, const LineContext& ctx) {
  const auto it = j.find(key);
  if (it == j.end()) ctx.fail(std::string("missing field '") + key + "'");
  if (!it->is_number()) ctx.fail(std::string("field '") + key + "' is not a number");
  return it->get<double>();
}

std::int64_t integer(const json& j, const char* key, const LineContext& ctx) {
  const auto it = j.find(key);
  if (it == j.end()) ctx.fail(std::string("missing field '") + key + "'");
  if (!it->is_number_integer()) ctx.fail(std::string("field '") + key + "' is not an integer");
  return it->get<std::int64_t>();
}

std::string text_field(const json& j, const char* key, const LineContext& ctx) {
  const auto it = j.find(key);
  if (it == j.end()) ctx.fail(std::string("missing field '") + key + "'");
  if (!it->is_string()) ctx.fail(std::string("field '") + key + "' is not a string");
  return it->get<std::string>();
}

Vec3 vec3_field(const json& j, const char* key, const LineContext& ctx) {
  const auto it = j.find(key);
  if (it == j.end() || !it->is_array() || it->size() != 3) {
    ctx.fail(std::string("field '") + key + "' must be a 3-element array");
  }
  Vec3 v;
  for (int k = 0; k < 3; ++k) {
    if (!(*it)[k].is_number()) ctx.fail(std::string("field '") + key + "' is not numeric");
    v(k) = (*it)[k].get<double>();
  }
  return v;
}

json vec3_json(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

std::string jsonl(const std::vector<json>& records) {
  std::string out;
  for (const auto& r : records) {
    out += r.dump();
    out += '\n';
  }
  return out;
}

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  return in;
}

std::string fmt(const char* spec, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

}  // namespace

std::vector<CameraPose> read_poses(std::istream& in, CoordinateMode mode,
                                   const std::string& source) {
  std::vector<CameraPose> poses;
  std::optional<LocalEnuFrame> enu;
  std::set<FrameId> seen;
  for_each_record(in, source, [&](const json& j, const LineContext& ctx) {
    CameraPose p;
    p.frame_id = integer(j, "frame_id", ctx);
    if (mode == CoordinateMode::kLocal) {
      p.position = Vec3(number(j, "x", ctx), number(j, "y", ctx), number(j, "z", ctx));
    } else {
      const double lat = number(j, "lat", ctx);
      const double lon = number(j, "lon", ctx);
      const double alt = number(j, "alt", ctx);
      if (!enu) enu.emplace(lat, lon, alt);
      p.position = enu->forward(lat, lon, alt);
    }
    p.heading = number(j, "heading", ctx);
    p.pitch = number(j, "pitch", ctx);
    p.roll = number(j, "roll", ctx);
    try {
      validate(p);
    } catch (const DataError& e) {
      ctx.fail(e.what());
    }
    if (!seen.insert(p.frame_id).second) {
      ctx.fail("duplicate pose for frame " + std::to_string(p.frame_id));
    }
    poses.push_back(p);
  });
  return poses;
}

std::vector<Detection2D> read_detections(std::istream& in, const std::string& source) {
  std::vector<Detection2D> dets;
  for_each_record(in, source, [&](const json& j, const LineContext& ctx) {
    Detection2D d;
    d.frame_id = integer(j, "frame_id", ctx);
    d.center_x = number(j, "cx", ctx);
    d.center_y = number(j, "cy", ctx);
    d.box_w = number(j, "w", ctx);
    d.box_h = number(j, "h", ctx);
    d.image_w = number(j, "img_w", ctx);
    d.image_h = number(j, "img_h", ctx);
    d.category = text_field(j, "category", ctx);
    d.confidence = number(j, "confidence", ctx);
    try {
      validate(d);
    } catch (const DataError& e) {
      ctx.fail(e.what());
    }
    dets.push_back(std::move(d));
  });
  return dets;
}

IngestResult ingest(std::istream& poses, std::istream& detections, CoordinateMode mode) {
  IngestResult out;
  out.poses = read_poses(poses, mode);
  out.detections = read_detections(detections);

  std::map<FrameId, const CameraPose*> by_frame;
  for (const auto& p : out.poses) by_frame[p.frame_id] = &p;
  std::set<FrameId> missing;
  for (const auto& d : out.detections) {
    if (by_frame.count(d.frame_id) == 0) missing.insert(d.frame_id);
  }
  if (!missing.empty()) {
    std::ostringstream msg;
    msg << "detections reference frames without a pose:";
    for (FrameId f : missing) msg << ' ' << f;
    throw DataError(msg.str());
  }
  ObsId next = 0;
  for (const auto& d : out.detections) {
    out.observations.add(build_observation(d, *by_frame.at(d.frame_id), next++));
  }
  return out;
}

IngestResult ingest(const std::filesystem::path& poses,
                    const std::filesystem::path& detections, CoordinateMode mode) {
  auto pin = open_input(poses);
  auto din = open_input(detections);
  return ingest(pin, din, mode);
}

ScoreTable read_scores(std::istream& in, const std::string& source) {
  ScoreTable table;
  for_each_record(in, source, [&](const json& j, const LineContext& ctx) {
    const ObsId a = integer(j, "obs_a", ctx);
    const ObsId b = integer(j, "obs_b", ctx);
    const double s = number(j, "score", ctx);
    if (a == b) ctx.fail("self-pair score");
    if (!(s >= 0.0 && s <= 1.0)) ctx.fail("score outside [0,1]");
    table[{std::min(a, b), std::max(a, b)}] = s;
  });
  return table;
}

std::vector<InventoryRecord> build_inventory(const std::vector<Cluster>& clusters,
                                             const ObservationStore& obs) {
  std::vector<InventoryRecord> out;
  out.reserve(clusters.size());
  for (const Cluster& c : clusters) {
    InventoryRecord r;
    r.object_id = c.cluster_id;
    r.category = c.members.empty() ? std::string() : obs.at(c.members.front()).category;
    r.center = c.center;
    r.n_observations = c.members.size();
    if (c.residuals && !c.residuals->empty()) {
      r.max_residual = *std::max_element(c.residuals->begin(), c.residuals->end());
    }
    r.members = c.members;
    out.push_back(std::move(r));
  }
  return out;
}

std::string inventory_jsonl(const std::vector<InventoryRecord>& records) {
  std::vector<json> lines;
  for (const auto& r : records) {
    json j;
    j["object_id"] = r.object_id;
    j["category"] = r.category;
    if (r.center) j["center"] = vec3_json(*r.center);
    j["n_observations"] = r.n_observations;
    if (r.max_residual) j["max_residual"] = *r.max_residual;
    j["members"] = r.members;
    lines.push_back(std::move(j));
  }
  return jsonl(lines);
}

std::vector<InventoryRecord> read_inventory(std::istream& in, const std::string& source) {
  std::vector<InventoryRecord> out;
  for_each_record(in, source, [&](const json& j, const LineContext& ctx) {
    InventoryRecord r;
    r.object_id = static_cast<int>(integer(j, "object_id", ctx));
    r.category = j.contains("category") ? text_field(j, "category", ctx) : std::string();
    if (j.contains("center")) r.center = vec3_field(j, "center", ctx);
    if (j.contains("max_residual")) r.max_residual = number(j, "max_residual", ctx);
    const auto it = j.find("members");
    if (it == j.end() || !it->is_array() || it->empty()) ctx.fail("missing members");
    for (const auto& m : *it) {
      if (!m.is_number_integer()) ctx.fail("member id is not an integer");
      r.members.push_back(m.get<ObsId>());
    }
    std::sort(r.members.begin(), r.members.end());
    r.n_observations = r.members.size();
    out.push_back(std::move(r));
  });
  return out;
}

std::vector<Cluster> read_clusters(std::istream& in, const std::string& source) {
  std::vector<Cluster> out;
  for (auto& r : read_inventory(in, source)) {
    Cluster c;
    c.cluster_id = r.object_id;
    c.members = std::move(r.members);
    out.push_back(std::move(c));
  }
  return out;
}

std::string pairs_jsonl(const std::vector<PairMatch>& pairs) {
  std::vector<json> lines;
  for (const auto& p : pairs) {
    lines.push_back({{"obs_a", p.obs_a}, {"obs_b", p.obs_b}, {"score", p.score}});
  }
  return jsonl(lines);
}

std::vector<PairMatch> read_pairs(std::istream& in, const std::string& source) {
  std::vector<PairMatch> out;
  for_each_record(in, source, [&](const json& j, const LineContext& ctx) {
    const ObsId a = integer(j, "obs_a", ctx);
    const ObsId b = integer(j, "obs_b", ctx);
    out.push_back({std::min(a, b), std::max(a, b), number(j, "score", ctx)});
  });
  return out;
}

std::string observations_jsonl(const ObservationStore& obs) {
  std::vector<json> lines;
  for (const auto& o : obs) {
    lines.push_back({{"obs_id", o.obs_id},
                     {"frame_id", o.frame_id},
                     {"category", o.category},
                     {"exposure", vec3_json(o.exposure)},
                     {"direction", vec3_json(o.direction)},
                     {"box_w_norm", o.box_w_norm},
                     {"box_h_norm", o.box_h_norm}});
  }
  return jsonl(lines);
}

ObservationStore read_observations(std::istream& in, const std::string& source) {
  ObservationStore store;
  for_each_record(in, source, [&](const json& j, const LineContext& ctx) {
    Observation o;
    o.obs_id = integer(j, "obs_id", ctx);
    o.frame_id = integer(j, "frame_id", ctx);
    o.category = text_field(j, "category", ctx);
    o.exposure = vec3_field(j, "exposure", ctx);
    o.direction = vec3_field(j, "direction", ctx);
    o.box_w_norm = number(j, "box_w_norm", ctx);
    o.box_h_norm = number(j, "box_h_norm", ctx);
    if (std::abs(o.direction.norm() - 1.0) > 1e-9) ctx.fail("direction is not unit length");
    try {
      store.add(std::move(o));
    } catch (const DataError& e) {
      ctx.fail(e.what());
    }
  });
  return store;
}

std::string poses_jsonl(const std::vector<CameraPose>& poses) {
  std::vector<json> lines;
  for (const auto& p : poses) {
    lines.push_back({{"frame_id", p.frame_id},
                     {"x", p.position.x()},
                     {"y", p.position.y()},
                     {"z", p.position.z()},
                     {"heading", p.heading},
                     {"pitch", p.pitch},
                     {"roll", p.roll}});
  }
  return jsonl(lines);
}

std::string detections_jsonl(const std::vector<Detection2D>& detections) {
  std::vector<json> lines;
  for (const auto& d : detections) {
    lines.push_back({{"frame_id", d.frame_id},
                     {"cx", d.center_x},
                     {"cy", d.center_y},
                     {"w", d.box_w},
                     {"h", d.box_h},
                     {"img_w", d.image_w},
                     {"img_h", d.image_h},
                     {"category", d.category},
                     {"confidence", d.confidence}});
  }
  return jsonl(lines);
}

std::string truth_objects_jsonl(const std::vector<TruthObject>& objects) {
  std::vector<json> lines;
  for (const auto& o : objects) {
    lines.push_back({{"object_id", o.object_id},
                     {"category", o.category},
                     {"center", vec3_json(o.center)},
                     {"height", o.height}});
  }
  return jsonl(lines);
}

std::string truth_labels_jsonl(const TruthLabels& labels) {
  const std::map<ObsId, ObjectId> ordered(labels.begin(), labels.end());
  std::vector<json> lines;
  for (const auto& [obs, object] : ordered) {
    lines.push_back({{"obs_id", obs}, {"object_id", object}});
  }
  return jsonl(lines);
}

std::vector<TruthObject> read_truth_objects(std::istream& in, const std::string& source) {
  std::vector<TruthObject> out;
  for_each_record(in, source, [&](const json& j, const LineContext& ctx) {
    TruthObject o;
    o.object_id = integer(j, "object_id", ctx);
    o.category = text_field(j, "category", ctx);
    o.center = vec3_field(j, "center", ctx);
    o.height = number(j, "height", ctx);
    out.push_back(std::move(o));
  });
  return out;
}

TruthLabels read_truth_labels(std::istream& in, const std::string& source) {
  TruthLabels out;
  for_each_record(in, source, [&](const json& j, const LineContext& ctx) {
    out[integer(j, "obs_id", ctx)] = integer(j, "object_id", ctx);
  });
  return out;
}

std::string report_text(const EvaluationReport& report) {
  std::ostringstream os;
  const auto rates = [&](const char* label, const RateCounts& r) {
    os << "  " << label << " precision=" << fmt("%.6f", r.precision)
       << " recall=" << fmt("%.6f", r.recall) << " f1=" << fmt("%.6f", r.f1)
       << " (tp=" << r.tp << " fp=" << r.fp << " fn=" << r.fn << ")";
  };
  const auto section = [&](const CategoryReport& c) {
    os << "[" << c.category << "]\n";
    os << "  observations=" << c.n_observations << " objects=" << c.n_objects << "\n";
    rates("matching:      ", c.matching);
    os << "\n";
    os << "  clustering:      homogeneity=" << fmt("%.6f", c.clustering.homogeneity)
       << " completeness=" << fmt("%.6f", c.clustering.completeness)
       << " v_measure=" << fmt("%.6f", c.clustering.v_measure) << "\n";
    rates("identification:", c.identification.counts);
    os << " loc_err="
       << (c.identification.loc_err ? fmt("%.4f", *c.identification.loc_err) + " m" : "n/a")
       << "\n";
  };
  os << "evaluation report\n\n";
  section(report.aggregate);
  for (const auto& c : report.categories) {
    os << "\n";
    section(c);
  }
  return os.str();
}

std::string report_csv(const EvaluationReport& report) {
  std::ostringstream os;
  os << "category,n_observations,n_objects,pre_mat,rec_mat,f1_mat,tp_mat,fp_mat,fn_mat,"
        "homogeneity,completeness,v_measure,pre_idf,rec_idf,f1_idf,tp_idf,fp_idf,fn_idf,"
        "loc_err\n";
  const auto row = [&](const CategoryReport& c) {
    const auto& m = c.matching;
    const auto& i = c.identification.counts;
    os << c.category << ',' << c.n_observations << ',' << c.n_objects << ','
       << fmt("%.9g", m.precision) << ',' << fmt("%.9g", m.recall) << ','
       << fmt("%.9g", m.f1) << ',' << m.tp << ',' << m.fp << ',' << m.fn << ','
       << fmt("%.9g", c.clustering.homogeneity) << ','
       << fmt("%.9g", c.clustering.completeness) << ','
       << fmt("%.9g", c.clustering.v_measure) << ',' << fmt("%.9g", i.precision) << ','
       << fmt("%.9g", i.recall) << ',' << fmt("%.9g", i.f1) << ',' << i.tp << ','
       << i.fp << ',' << i.fn << ','
       << (c.identification.loc_err ? fmt("%.9g", *c.identification.loc_err) : "") << '\n';
  };
  row(report.aggregate);
  for (const auto& c : report.categories) row(c);
  return os.str();
}

void atomic_write(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write " + tmp.string());
    out << content;
    out.flush();
    if (!out) throw DataError("failed writing " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

std::string read_file(const std::filesystem::path& path) {
  auto in = open_input(path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace streetinv
