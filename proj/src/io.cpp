#include "viewconsist/io.hpp"

#include <map>
#include <sstream>

#include "viewconsist/errors.hpp"

namespace viewconsist {

using json = nlohmann::json;

namespace {

json vector_to_json(const Eigen::VectorXd& v) {
  return json(std::vector<double>(v.data(), v.data() + v.size()));
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InvalidInput("cannot write " + path.string());
  return out;
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidInput("cannot read " + path.string());
  return in;
}

template <typename Fn>
void for_each_record(const std::filesystem::path& path, Fn&& fn) {
  std::ifstream in = open_in(path);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      fn(json::parse(line));
    } catch (const json::exception& e) {
      throw InvalidInput(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
}

}  // namespace

json config_to_json(const KeypointConfig& c) {
  const auto& m = c.coords();
  return json(std::vector<double>(m.data(), m.data() + m.size()));
}

KeypointConfig config_from_json(const json& j, int keypoints) {
  const auto v = j.get<std::vector<double>>();
  if (static_cast<int>(v.size()) != 3 * keypoints) {
    throw InvalidInput("keypoint record has " + std::to_string(v.size()) + " values, expected " +
                       std::to_string(3 * keypoints));
  }
  return KeypointConfig(Eigen::Map<const Eigen::Matrix3Xd>(v.data(), 3, keypoints));
}

json sample_to_json(const ViewSample& s, const std::string& domain) {
  json j;
  j["schema"] = kDatasetSchemaVersion;
  j["domain"] = domain;
  j["object_id"] = s.object_id;
  j["view_id"] = s.view_id;
  j["keypoints"] = s.gt_keypoints.size();
  j["diagonal"] = s.diagonal;
  j["gt"] = config_to_json(s.gt_keypoints);
  const Eigen::Matrix3d& r = s.camera_rotation.matrix();
  std::vector<double> rot;
  for (int a = 0; a < 3; ++a) {
    for (int b = 0; b < 3; ++b) rot.push_back(r(a, b));
  }
  j["camera_rotation"] = rot;
  j["input"] = vector_to_json(s.input);
  return j;
}

ViewSample sample_from_json(const json& j) {
  if (j.at("schema").get<int>() != kDatasetSchemaVersion) {
    throw InvalidInput("unsupported dataset schema version");
  }
  ViewSample s;
  s.object_id = j.at("object_id").get<int>();
  s.view_id = j.at("view_id").get<int>();
  s.diagonal = j.at("diagonal").get<double>();
  s.gt_keypoints = config_from_json(j.at("gt"), j.at("keypoints").get<int>());
  const auto rot = j.at("camera_rotation").get<std::vector<double>>();
  if (rot.size() != 9) throw InvalidInput("camera_rotation must have 9 entries");
  s.camera_rotation = Rotation(Eigen::Map<const Eigen::Matrix<double, 3, 3, Eigen::RowMajor>>(rot.data()));
  const auto input = j.at("input").get<std::vector<double>>();
  s.input = Eigen::Map<const Eigen::VectorXd>(input.data(), static_cast<Eigen::Index>(input.size()));
  if (!s.input.allFinite()) throw InvalidInput("sample input has non-finite entries");
  return s;
}

void write_dataset(const std::filesystem::path& path, const std::vector<ViewSample>& samples,
                   const std::string& domain) {
  std::ofstream out = open_out(path);
  for (const auto& s : samples) out << sample_to_json(s, domain).dump() << '\n';
}

std::vector<ViewSample> read_dataset(const std::filesystem::path& path) {
  std::vector<ViewSample> out;
  for_each_record(path, [&](const json& j) { out.push_back(sample_from_json(j)); });
  return out;
}

std::vector<ViewSet> group_views(const std::vector<ViewSample>& samples) {
  std::vector<ViewSet> sets;
  std::map<int, std::size_t> index;
  for (const auto& s : samples) {
    auto [it, inserted] = index.emplace(s.object_id, sets.size());
    if (inserted) {
      ViewSet set;
      set.object_id = s.object_id;
      sets.push_back(std::move(set));
    }
    sets[it->second].views.push_back(s);
  }
  return sets;
}

void write_latents(const std::filesystem::path& path, const LatentSet& latents,
                   const std::vector<ViewSet>& targets) {
  if (latents.latents.size() != targets.size()) {
    throw InvalidInput("write_latents: one latent per target object required");
  }
  std::ofstream out = open_out(path);
  for (std::size_t i = 0; i < targets.size(); ++i) {
    json j;
    j["schema"] = kLatentSchemaVersion;
    j["object_id"] = targets[i].object_id;
    j["keypoints"] = latents.latents[i].size();
    j["latent"] = config_to_json(latents.latents[i]);
    out << j.dump() << '\n';
  }
}

LatentSet read_latents(const std::filesystem::path& path) {
  LatentSet out;
  for_each_record(path, [&](const json& j) {
    if (j.at("schema").get<int>() != kLatentSchemaVersion) {
      throw InvalidInput("unsupported latent schema version");
    }
    out.latents.push_back(config_from_json(j.at("latent"), j.at("keypoints").get<int>()));
  });
  return out;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out = open_out(path);
  out << text;
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in = open_in(path);
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

RunLogWriter::RunLogWriter(const std::filesystem::path& log_path,
                           const std::filesystem::path& timing_path)
    : log_(open_out(log_path)), timing_(open_out(timing_path)) {}

void RunLogWriter::on_epoch(const EpochRecord& rec) {
  json j;
  j["schema"] = kLogSchemaVersion;
  j["event"] = "epoch";
  j["phase"] = rec.phase;
  j["epoch"] = rec.epoch;
  j["learning_rate"] = rec.learning_rate;
  j["f_labeled"] = rec.f_labeled;
  j["f_view"] = rec.f_view ? json(*rec.f_view) : json(nullptr);
  j["f_align"] = rec.f_align ? json(*rec.f_align) : json(nullptr);
  j["total"] = rec.total;
  log_ << j.dump() << '\n';
  log_.flush();

  json t;
  t["phase"] = rec.phase;
  t["epoch"] = rec.epoch;
  t["wall_time_s"] = rec.wall_time_s;
  timing_ << t.dump() << '\n';
}

void RunLogWriter::on_latent_update(const LatentUpdateRecord& rec) {
  json j;
  j["schema"] = kLogSchemaVersion;
  j["event"] = "latent_update";
  j["epoch"] = rec.epoch;
  j["kind"] = rec.kind;
  j["objective_before"] = rec.objective_before;
  j["objective_after"] = rec.objective_after;
  j["total_before"] = rec.total_before;
  j["total_after"] = rec.total_after;
  log_ << j.dump() << '\n';
  log_.flush();
}

std::vector<LoggedLatentUpdate> read_latent_updates(const std::filesystem::path& log_path) {
  std::vector<LoggedLatentUpdate> out;
  for_each_record(log_path, [&](const json& j) {
    if (j.value("event", "") != "latent_update") return;
    out.push_back({j.at("epoch").get<int>(), j.at("kind").get<std::string>(),
                   j.at("objective_before").get<double>(), j.at("objective_after").get<double>()});
  });
  return out;
}

}  // namespace viewconsist
