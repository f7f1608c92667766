#include "tongue/manifest.hpp"

#include <fstream>
#include <sstream>
#include <unordered_set>

#include <json.hpp>

namespace tongue {
namespace {

using nlohmann::json;

BoundingQuad parse_quad(const json& value) {
  if (!value.is_array() || value.size() != 4)
    throw ValidationError("quad must be an array of 4 [x,y] pairs");
  BoundingQuad quad;
  for (std::size_t i = 0; i < 4; ++i) {
    const json& p = value[i];
    if (!p.is_array() || p.size() != 2 || !p[0].is_number() || !p[1].is_number())
      throw ValidationError("quad corner " + std::to_string(i) + " must be a numeric [x,y] pair");
    quad.corners[i] = {p[0].get<double>(), p[1].get<double>()};
  }
  return quad;
}

std::string required_string(const json& obj, const char* key) {
  auto it = obj.find(key);
  if (it == obj.end() || !it->is_string())
    throw ValidationError(std::string("missing or non-string key '") + key + "'");
  return it->get<std::string>();
}

}  // namespace

Dataset parse_manifest(std::string_view text, const std::filesystem::path& base_dir,
                       const ReferenceModel& reference) {
  Dataset dataset;
  dataset.reference_dims = reference.dims;
  dataset.reference_quad = reference.quad;

  std::unordered_set<std::string> seen;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      json obj = json::parse(line);
      if (!obj.is_object()) throw ValidationError("record is not a JSON object");
      LabeledSample sample;
      std::filesystem::path rel = required_string(obj, "path");
      sample.path = (rel.is_absolute() ? rel : base_dir / rel).lexically_normal().string();
      sample.image_id = obj.contains("id") ? required_string(obj, "id") : rel.stem().string();
      sample.label = parse_label(required_string(obj, "label"));
      sample.split = parse_split(required_string(obj, "split"));
      if (auto q = obj.find("quad"); q != obj.end() && !q->is_null()) {
        sample.quad = parse_quad(*q);
        if (sample.quad->degenerate()) throw ValidationError("quad is degenerate (zero area)");
      }
      if (!seen.insert(sample.image_id).second)
        throw ValidationError("duplicate image_id '" + sample.image_id + "'");
      dataset.samples.push_back(std::move(sample));
    } catch (const json::exception& e) {
      throw ValidationError("manifest line " + std::to_string(line_no) + ": " + e.what());
    } catch (const ValidationError& e) {
      throw ValidationError("manifest line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  if (dataset.samples.empty()) throw ValidationError("manifest contains no samples");
  return dataset;
}

Dataset load_manifest(const std::filesystem::path& path, const ReferenceModel& reference) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open manifest " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_manifest(buf.str(), path.parent_path(), reference);
}

void write_manifest(const Dataset& dataset, std::ostream& out,
                    const std::filesystem::path& base_dir) {
  for (const auto& s : dataset.samples) {
    std::filesystem::path p = s.path;
    auto rel = p.lexically_relative(base_dir);
    json obj;
    obj["id"] = s.image_id;
    obj["path"] = (!rel.empty() && *rel.begin() != "..") ? rel.string() : p.string();
    obj["label"] = to_string(s.label);
    obj["split"] = to_string(s.split);
    if (s.quad) {
      json q = json::array();
      for (const auto& c : s.quad->corners) q.push_back({c.x, c.y});
      obj["quad"] = q;
    }
    out << obj.dump() << '\n';
  }
}

}  // namespace tongue
