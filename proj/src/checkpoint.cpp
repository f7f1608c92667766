#include "tongue/checkpoint.hpp"

#include <fstream>
#include <sstream>

namespace tongue {

using nlohmann::json;

namespace {

void expect_kind(const json& doc, const char* kind) {
  if (checkpoint_kind(doc) != kind)
    throw ValidationError(std::string("expected a '") + kind + "' checkpoint, got '" + checkpoint_kind(doc) + "'");
}

template <typename T>
T field(const json& doc, const char* key) {
  auto it = doc.find(key);
  if (it == doc.end()) throw ValidationError(std::string("checkpoint is missing '") + key + "'");
  try {
    return it->get<T>();
  } catch (const json::exception& e) {
    throw ValidationError(std::string("checkpoint field '") + key + "': " + e.what());
  }
}

json metric(const std::optional<double>& v) { return v ? json(*v) : json("undefined"); }

}  // namespace

std::string checkpoint_kind(const json& doc) {
  if (!doc.is_object() || !doc.contains("kind") || !doc["kind"].is_string())
    throw ValidationError("not a checkpoint document");
  if (field<int>(doc, "format_version") != kCheckpointVersion)
    throw ValidationError("unsupported checkpoint format version");
  return doc["kind"].get<std::string>();
}

json to_json(const MlpModel& m, std::uint64_t seed) {
  return {{"format_version", kCheckpointVersion},
          {"kind", "mlp"},
          {"seed", seed},
          {"input_dim", m.input_dim},
          {"hidden_dim", m.hidden_dim},
          {"w1", m.w1},
          {"b1", m.b1},
          {"w2", m.w2},
          {"b2", m.b2}};
}

MlpModel mlp_from_json(const json& doc) {
  expect_kind(doc, "mlp");
  MlpModel m;
  m.input_dim = field<int>(doc, "input_dim");
  m.hidden_dim = field<int>(doc, "hidden_dim");
  m.w1 = field<std::vector<double>>(doc, "w1");
  m.b1 = field<std::vector<double>>(doc, "b1");
  m.w2 = field<std::vector<double>>(doc, "w2");
  m.b2 = field<double>(doc, "b2");
  if (m.input_dim <= 0 || m.hidden_dim <= 0 ||
      m.w1.size() != static_cast<std::size_t>(m.input_dim) * m.hidden_dim ||
      m.b1.size() != static_cast<std::size_t>(m.hidden_dim) || m.w2.size() != static_cast<std::size_t>(m.hidden_dim))
    throw ShapeError("mlp checkpoint arrays do not match its dimensions");
  return m;
}

json to_json(const LayerSpec& s) {
  json j{{"kind", to_string(s.kind)}};
  switch (s.kind) {
    case LayerKind::conv:
      j["kernel"] = {s.kernel_h, s.kernel_w};
      j["in_channels"] = s.in_channels;
      j["out_channels"] = s.out_channels;
      j["stride"] = s.stride;
      break;
    case LayerKind::dense:
      j["in"] = s.in_features;
      j["out"] = s.out_features;
      break;
    default:
      break;
  }
  return j;
}

LayerSpec layer_spec_from_json(const json& j) {
  LayerSpec s;
  s.kind = parse_layer_kind(field<std::string>(j, "kind"));
  if (s.kind == LayerKind::conv) {
    const json& k = j.at("kernel");
    if (k.is_array()) {
      s.kernel_h = k.at(0).get<int>();
      s.kernel_w = k.at(1).get<int>();
    } else {
      s.kernel_h = s.kernel_w = k.get<int>();
    }
    s.in_channels = j.value("in_channels", 0);
    s.out_channels = field<int>(j, "out_channels");
    s.stride = j.value("stride", 1);
  } else if (s.kind == LayerKind::dense) {
    s.in_features = j.value("in", 0);
    s.out_features = field<int>(j, "out");
  }
  return s;
}

json to_json(const CnnModel& m) {
  json spec = json::array(), weights = json::array(), biases = json::array();
  for (const auto& L : m.layers) {
    spec.push_back(to_json(L.spec));
    weights.push_back(L.weights);
    biases.push_back(L.bias);
  }
  return {{"format_version", kCheckpointVersion},
          {"kind", "cnn"},
          {"seed", m.seed},
          {"input", {m.input.c, m.input.h, m.input.w}},
          {"layers", spec},
          {"taps", m.taps},
          {"weights", weights},
          {"biases", biases}};
}

CnnModel cnn_from_json(const json& doc) {
  expect_kind(doc, "cnn");
  try {
    std::vector<LayerSpec> spec;
    for (const auto& l : doc.at("layers")) spec.push_back(layer_spec_from_json(l));
    const auto in = doc.at("input");
    CnnModel m = cnn_init(spec, doc.at("seed").get<std::uint64_t>(),
                          {in.at(0).get<int>(), in.at(1).get<int>(), in.at(2).get<int>()},
                          doc.at("taps").get<std::vector<int>>());
    const auto& w = doc.at("weights");
    const auto& b = doc.at("biases");
    if (w.size() != m.layers.size() || b.size() != m.layers.size())
      throw ShapeError("cnn checkpoint has the wrong number of parameter blocks");
    for (std::size_t i = 0; i < m.layers.size(); ++i) {
      auto wi = w[i].get<std::vector<double>>();
      auto bi = b[i].get<std::vector<double>>();
      if (wi.size() != m.layers[i].weights.size() || bi.size() != m.layers[i].bias.size())
        throw ShapeError("cnn checkpoint parameter block " + std::to_string(i) + " has the wrong size");
      m.layers[i].weights = std::move(wi);
      m.layers[i].bias = std::move(bi);
    }
    return m;
  } catch (const json::exception& e) {
    throw ValidationError(std::string("malformed cnn checkpoint: ") + e.what());
  }
}

json to_json(const SvmModel& m) {
  return {{"format_version", kCheckpointVersion},
          {"kind", "svm"},
          {"kernel", m.kernel.type == KernelType::rbf ? "rbf" : "linear"},
          {"gamma", m.kernel.gamma},
          {"c", m.c},
          {"bias", m.bias},
          {"iterations", m.iterations},
          {"coef", m.coef},
          {"support_vectors", m.support_vectors}};
}

SvmModel svm_from_json(const json& doc) {
  expect_kind(doc, "svm");
  SvmModel m;
  const auto kernel = field<std::string>(doc, "kernel");
  if (kernel == "rbf") m.kernel.type = KernelType::rbf;
  else if (kernel == "linear") m.kernel.type = KernelType::linear;
  else throw ValidationError("unknown SVM kernel '" + kernel + "'");
  m.kernel.gamma = field<double>(doc, "gamma");
  m.c = field<double>(doc, "c");
  m.bias = field<double>(doc, "bias");
  m.iterations = field<std::size_t>(doc, "iterations");
  m.coef = field<std::vector<double>>(doc, "coef");
  m.support_vectors = field<std::vector<std::vector<double>>>(doc, "support_vectors");
  if (m.coef.size() != m.support_vectors.size()) throw ShapeError("svm checkpoint coef/support vector mismatch");
  return m;
}

json to_json(const ConfusionMatrix& cm) {
  return {{"tp", cm.tp}, {"fp", cm.fp}, {"tn", cm.tn}, {"fn", cm.fn}};
}

json to_json(const Metrics& m) {
  return {{"acc", metric(m.acc)}, {"sen", metric(m.sen)}, {"spe", metric(m.spe)},
          {"ppv", metric(m.ppv)}, {"npv", metric(m.npv)}, {"f1", metric(m.f1)}};
}

json read_json(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

void write_text(const std::string& text, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("write failed for " + path.string());
}

void write_json(const json& doc, const std::filesystem::path& path) { write_text(doc.dump() + "\n", path); }

}  // namespace tongue
