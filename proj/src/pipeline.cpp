#include "tongue/pipeline.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include "tongue/checkpoint.hpp"
#include "tongue/detect.hpp"
#include "tongue/image_io.hpp"
#include "tongue/manifest.hpp"

namespace tongue {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

enum SeedTag : std::uint64_t { kExtractorSeed = 1, kCnnSeed = 2, kMiSeed = 3, kSynthSeed = 4 };

/// Re-throws library errors with "<stage> [<id>]: " prepended, keeping the error class.
template <typename F>
auto in_stage(std::string_view stage, std::string_view id, F&& fn) -> decltype(fn()) {
  std::string prefix(stage);
  if (!id.empty()) prefix += " [" + std::string(id) + "]";
  prefix += ": ";
  try {
    return fn();
  } catch (const DetectionError& e) {
    throw DetectionError(prefix + e.what());
  } catch (const DegeneracyError& e) {
    throw DegeneracyError(prefix + e.what());
  } catch (const ShapeError& e) {
    throw ShapeError(prefix + e.what());
  } catch (const DomainError& e) {
    throw DomainError(prefix + e.what());
  } catch (const ValidationError& e) {
    throw ValidationError(prefix + e.what());
  } catch (const IoError& e) {
    throw IoError(prefix + e.what());
  }
}

template <typename T>
T get_or(const json& doc, const char* key, T fallback) {
  auto it = doc.find(key);
  if (it == doc.end() || it->is_null()) return fallback;
  try {
    return it->get<T>();
  } catch (const json::exception& e) {
    throw ValidationError(std::string("config key '") + key + "': " + e.what());
  }
}

TrainConfig parse_train(const json& doc, TrainConfig base) {
  if (!doc.is_object()) return base;
  base.learning_rate = get_or(doc, "learning_rate", base.learning_rate);
  base.epochs = get_or(doc, "epochs", base.epochs);
  base.batch_size = get_or(doc, "batch_size", base.batch_size);
  return base;
}

json train_json(const TrainConfig& t) {
  return {{"learning_rate", t.learning_rate}, {"epochs", t.epochs}, {"batch_size", t.batch_size}, {"seed", t.seed}};
}

json svm_json(const SvmParams& p) {
  return {{"c", p.c},
          {"kernel", p.kernel.type == KernelType::rbf ? "rbf" : "linear"},
          {"gamma", p.kernel.gamma},
          {"tol", p.tol}};
}

json mi_json(const MiOptions& m, bool enabled) {
  return {{"enabled", enabled},
          {"bins", m.bins},
          {"max_pairs", m.max_pairs},
          {"seed", m.seed},
          {"pairing", m.pairing == Pairing::cross ? "cross" : "matched"}};
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::optional<json> cached_checkpoint(const fs::path& path, const std::string& stage_hash) {
  std::error_code ec;
  if (!fs::exists(path, ec)) return std::nullopt;
  try {
    json doc = read_json(path);
    if (doc.value("stage_hash", std::string()) == stage_hash) return doc;
  } catch (const Error&) {
  }
  return std::nullopt;
}

json with_stage_hash(json doc, const std::string& stage_hash) {
  doc["stage_hash"] = stage_hash;
  return doc;
}

std::string fmt_metric(const std::optional<double>& v) {
  if (!v) return "undefined";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", *v);
  return buf;
}

}  // namespace

std::string_view to_string(HeadKind head) noexcept {
  switch (head) {
    case HeadKind::cnn: return "cnn";
    case HeadKind::svm_composite: return "svm-on-composite";
    case HeadKind::svm_tap: return "svm-on-tap";
  }
  return "?";
}

HeadKind parse_head(std::string_view text) {
  for (HeadKind h : {HeadKind::cnn, HeadKind::svm_composite, HeadKind::svm_tap})
    if (to_string(h) == text) return h;
  throw ValidationError("unknown classification head '" + std::string(text) +
                        "' (expected cnn, svm-on-composite or svm-on-tap)");
}

void PipelineConfig::reseed(std::uint64_t new_seed) {
  seed = new_seed;
  extractor.seed = Rng::derive(seed, kExtractorSeed);
  cnn.seed = Rng::derive(seed, kCnnSeed);
  mi.seed = Rng::derive(seed, kMiSeed);
  if (synth && !synth_seed_fixed) synth->seed = Rng::derive(seed, kSynthSeed);
}

void PipelineConfig::validate() const {
  if (reference.dims.height != kRegisteredSize || reference.dims.width != kRegisteredSize)
    throw ValidationError("reference_dims must be [512,512]: the margin crop is fixed at 56 px per side");
  reference.quad.validate(reference.dims.height, reference.dims.width);
  if (channel < 0 || channel > 2) throw ValidationError("channel must be 0, 1 or 2");
  if (feature_size != kFeatureInputSize || centre_size != kCentreRegionSize)
    throw ValidationError("resize dims must be 32 (regions 1-4) and 30 (region 5) for the 32x32 composite");
  if (mi.bins < 2) throw ValidationError("mi.bins must be at least 2");
  if (mi.max_pairs == 0) throw ValidationError("mi.max_pairs must be positive");
  extractor.validate();
  cnn.validate();
  if (!(svm.c > 0.0)) throw ValidationError("svm.c must be positive");
  if (!(svm.tol > 0.0)) throw ValidationError("svm.tol must be positive");
  if (workers <= 0) throw ValidationError("workers must be positive");
  if (!manifest && !synth) throw ValidationError("config needs either 'manifest' or 'synth'");
  if (manifest && !fs::exists(*manifest)) throw IoError("manifest not found: " + manifest->string());
  if (synth) synth->validate();
  cnn_init(cnn_layers, 0, {3, kCompositeSize, kCompositeSize}, cnn_taps);
  if (head == HeadKind::svm_tap && cnn_taps.empty()) throw ValidationError("svm-on-tap needs at least one CNN tap");
}

ReferenceModel parse_reference(const json& doc) {
  ReferenceModel ref;
  if (auto d = doc.find("reference_dims"); d != doc.end()) {
    if (!d->is_array() || d->size() != 2) throw ValidationError("reference_dims must be [height, width]");
    ref.dims = {d->at(0).get<int>(), d->at(1).get<int>()};
  }
  if (auto q = doc.find("reference_quad"); q != doc.end()) {
    if (!q->is_array() || q->size() != 4) throw ValidationError("reference_quad must hold 4 [x,y] pairs");
    for (std::size_t i = 0; i < 4; ++i) {
      const json& p = q->at(i);
      if (!p.is_array() || p.size() != 2) throw ValidationError("reference_quad corners must be [x,y] pairs");
      ref.quad.corners[i] = {p[0].get<double>(), p[1].get<double>()};
    }
  }
  return ref;
}

json reference_to_json(const ReferenceModel& ref) {
  json quad = json::array();
  for (const auto& c : ref.quad.corners) quad.push_back({c.x, c.y});
  return {{"reference_dims", {ref.dims.height, ref.dims.width}}, {"reference_quad", quad}};
}

json to_json(const SynthSpec& s) {
  return {{"n_per_class", s.n_per_class},
          {"separation", s.separation},
          {"pose_jitter", s.pose_jitter},
          {"image_dims", {s.image_dims.height, s.image_dims.width}},
          {"seed", s.seed},
          {"test_fraction", s.test_fraction}};
}

SynthSpec synth_spec_from_json(const json& doc, std::uint64_t default_seed) {
  SynthSpec s;
  s.n_per_class = get_or(doc, "n_per_class", s.n_per_class);
  s.separation = get_or(doc, "separation", s.separation);
  s.pose_jitter = get_or(doc, "pose_jitter", s.pose_jitter);
  s.test_fraction = get_or(doc, "test_fraction", s.test_fraction);
  s.seed = get_or<std::uint64_t>(doc, "seed", default_seed);
  if (auto d = doc.find("image_dims"); d != doc.end()) s.image_dims = {d->at(0).get<int>(), d->at(1).get<int>()};
  return s;
}

PipelineConfig parse_config(const json& doc, const fs::path& base_dir) {
  if (!doc.is_object()) throw ValidationError("config must be a JSON object");
  PipelineConfig cfg;
  cfg.source = doc;
  try {
    cfg.reference = parse_reference(doc);
    cfg.channel = get_or(doc, "channel", cfg.channel);
    if (auto r = doc.find("resize"); r != doc.end()) {
      cfg.feature_size = get_or(*r, "features", cfg.feature_size);
      cfg.centre_size = get_or(*r, "centre", cfg.centre_size);
    }
    if (auto m = doc.find("mi"); m != doc.end()) {
      cfg.mi_select = get_or(*m, "enabled", cfg.mi_select);
      cfg.mi.bins = get_or(*m, "bins", cfg.mi.bins);
      cfg.mi.max_pairs = get_or<std::size_t>(*m, "max_pairs", cfg.mi.max_pairs);
      const auto pairing = get_or<std::string>(*m, "pairing", "cross");
      if (pairing == "cross") cfg.mi.pairing = Pairing::cross;
      else if (pairing == "matched") cfg.mi.pairing = Pairing::matched;
      else throw ValidationError("mi.pairing must be 'cross' or 'matched'");
    }
    if (auto e = doc.find("extractor"); e != doc.end()) cfg.extractor = parse_train(*e, cfg.extractor);
    if (auto c = doc.find("cnn"); c != doc.end()) {
      cfg.cnn = parse_train(*c, cfg.cnn);
      if (auto l = c->find("layers"); l != c->end()) {
        cfg.cnn_layers.clear();
        for (const auto& layer : *l) cfg.cnn_layers.push_back(layer_spec_from_json(layer));
      }
      if (auto t = c->find("taps"); t != c->end()) cfg.cnn_taps = t->get<std::vector<int>>();
    }
    if (auto s = doc.find("svm"); s != doc.end()) {
      cfg.svm.c = get_or(*s, "c", cfg.svm.c);
      cfg.svm.tol = get_or(*s, "tol", cfg.svm.tol);
      const auto kernel = get_or<std::string>(*s, "kernel", "rbf");
      if (kernel == "rbf") cfg.svm.kernel.type = KernelType::rbf;
      else if (kernel == "linear") cfg.svm.kernel.type = KernelType::linear;
      else throw ValidationError("svm.kernel must be 'rbf' or 'linear'");
      cfg.svm.kernel.gamma = get_or(*s, "gamma", 0.0);
    }
    cfg.head = parse_head(get_or<std::string>(doc, "head", "cnn"));
    cfg.workers = get_or(doc, "workers", cfg.workers);
    if (auto m = doc.find("manifest"); m != doc.end() && m->is_string()) {
      fs::path p = m->get<std::string>();
      cfg.manifest = p.is_absolute() ? p : base_dir / p;
    }
    const std::uint64_t seed = get_or<std::uint64_t>(doc, "seed", 0);
    if (auto s = doc.find("synth"); s != doc.end() && s->is_object()) {
      cfg.synth = synth_spec_from_json(*s, Rng::derive(seed, kSynthSeed));
      cfg.synth_seed_fixed = s->contains("seed");
    }
    cfg.reseed(seed);
  } catch (const json::exception& e) {
    throw ValidationError(std::string("malformed config: ") + e.what());
  }
  return cfg;
}

PipelineConfig load_config(const fs::path& path) {
  return parse_config(read_json(path), path.parent_path());
}

void parallel_for(std::size_t n, int workers, const std::function<void(std::size_t)>& fn) {
  const std::size_t threads = std::min<std::size_t>(n, static_cast<std::size_t>(std::max(workers, 1)));
  std::vector<std::exception_ptr> errors(n);
  if (threads <= 1) {
    for (std::size_t i = 0; i < n; ++i) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
        break;
      }
    }
  } else {
    std::atomic<std::size_t> next{0};
    std::atomic<bool> failed{false};
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < threads; ++t)
      pool.emplace_back([&] {
        for (std::size_t i; !failed && (i = next++) < n;) {
          try {
            fn(i);
          } catch (...) {
            errors[i] = std::current_exception();
            failed = true;
          }
        }
      });
    for (auto& th : pool) th.join();
  }
  // lowest index first so the reported failure does not depend on scheduling
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

PreparedSample prepare_sample(const LabeledSample& s, const ReferenceModel& ref) {
  PreparedSample p;
  p.id = s.image_id;
  p.label = s.label;
  p.split = s.split;
  const ImageTensor image = in_stage("load", s.image_id, [&] { return load_image(s.path); });
  BoundingQuad quad;
  if (s.quad) {
    quad = *s.quad;
  } else {
    quad = in_stage("detect", s.image_id, [&] { return detect_quad_heuristic(image); });
    p.detected = true;
  }
  Registration reg = in_stage("register", s.image_id, [&] { return register_image(image, quad, ref); });
  p.transform = reg.transform;
  p.residual = reg.residual;
  const ImageTensor cropped = in_stage("crop", s.image_id, [&] { return crop_margins(reg.image); });
  p.regions = in_stage("regions", s.image_id, [&] { return resize_regions(split_regions(cropped)); });
  return p;
}

std::vector<PreparedSample> prepare_dataset(const Dataset& ds, int workers) {
  std::vector<PreparedSample> out(ds.samples.size());
  const ReferenceModel ref = ds.reference();
  parallel_for(ds.samples.size(), workers, [&](std::size_t i) { out[i] = prepare_sample(ds.samples[i], ref); });
  return out;
}

FusionSample to_fusion_sample(const PreparedSample& s) {
  return {s.id, s.label, {s.regions.regions.begin(), s.regions.regions.end()}};
}

TrainConfig extractor_config(const TrainConfig& base, std::size_t region) {
  TrainConfig cfg = base;
  cfg.seed = Rng::derive(base.seed, region + 1);
  return cfg;
}

std::array<MlpModel, 4> train_extractors(const std::vector<PreparedSample>& samples, int channel,
                                         const TrainConfig& cfg) {
  std::array<MlpModel, 4> out;
  for (std::size_t k = 0; k < 4; ++k) {
    std::vector<MlpSample> data;
    for (const auto& s : samples) {
      if (s.split != Split::train) continue;
      data.push_back({in_stage("extractor input", s.id, [&] { return extractor_input(s.regions[k], channel); }),
                      target_of(s.label)});
    }
    out[k] = in_stage("train-extractors", "region " + std::to_string(k + 1),
                      [&] { return mlp_train(data, extractor_config(cfg, k)); });
  }
  return out;
}

std::vector<LayerFeatures> tap_features(const CnnModel& cnn, std::span<const LabeledComposite> composites) {
  std::vector<LayerFeatures> layers(cnn.taps.size());
  for (std::size_t t = 0; t < cnn.taps.size(); ++t) layers[t].layer_id = "layer_" + std::to_string(cnn.taps[t]);
  for (const auto& c : composites) {
    auto out = cnn_forward(cnn, c.composite.image);
    for (std::size_t t = 0; t < out.taps.size(); ++t)
      (c.label == Label::healthy ? layers[t].class_a : layers[t].class_b).push_back(std::move(out.taps[t]));
  }
  return layers;
}

std::vector<double> svm_features(const PipelineConfig& cfg, const TrainedModels& m, const ImageTensor& composite) {
  if (cfg.head == HeadKind::svm_tap) {
    if (!m.cnn || !m.selected_tap) throw ValidationError("svm-on-tap needs a trained CNN and a selected tap");
    return cnn_forward(*m.cnn, composite).taps.at(*m.selected_tap);
  }
  const auto d = composite.data();
  return {d.begin(), d.end()};
}

namespace {

std::vector<LabeledComposite> train_composites(const std::vector<PreparedSample>& samples,
                                               const std::array<MlpModel, 4>& extractors, int channel) {
  std::vector<LabeledComposite> out;
  for (const auto& s : samples)
    if (s.split == Split::train)
      out.push_back(in_stage("fuse", s.id, [&] { return fuse_sample(to_fusion_sample(s), extractors, channel); }));
  return out;
}

void train_head(const std::vector<LabeledComposite>& train, const PipelineConfig& cfg, TrainedModels& m) {
  if (cfg.head == HeadKind::cnn || cfg.head == HeadKind::svm_tap) {
    std::vector<CnnSample> data;
    data.reserve(train.size());
    for (const auto& c : train) data.push_back({to_chw(c.composite.image), target_of(c.label)});
    m.cnn = in_stage("train-cnn", "", [&] {
      return cnn_train(data, cfg.cnn_layers, cfg.cnn, {3, kCompositeSize, kCompositeSize}, cfg.cnn_taps);
    });
    if ((cfg.mi_select || cfg.head == HeadKind::svm_tap) && !cfg.cnn_taps.empty()) {
      const auto layers = tap_features(*m.cnn, train);
      m.layer_ranking = in_stage("mi-select", "", [&] { return rank_layers(layers, cfg.mi); });
      m.selected_tap = static_cast<int>(m.layer_ranking->front().order);
    }
  }
  if (cfg.head == HeadKind::svm_composite || cfg.head == HeadKind::svm_tap) {
    std::vector<std::vector<double>> xs;
    std::vector<int> ys;
    for (const auto& c : train) {
      xs.push_back(svm_features(cfg, m, c.composite.image));
      ys.push_back(signed_label(c.label));
    }
    m.svm = in_stage("train-svm", "", [&] { return svm_train(xs, ys, cfg.svm); });
  }
}

json ranking_json(const TrainedModels& m) {
  if (!m.layer_ranking) return nullptr;
  json rows = json::array();
  for (const auto& s : *m.layer_ranking) rows.push_back({{"layer_id", s.layer_id}, {"mean_mi", s.mean_mi}});
  return {{"selected", m.layer_ranking->front().layer_id}, {"ranking", rows}};
}

void apply_ranking(const json& doc, const PipelineConfig& cfg, TrainedModels& m) {
  std::vector<LayerScore> ranking;
  for (const auto& row : doc.at("ranking")) {
    const auto id = row.at("layer_id").get<std::string>();
    std::size_t order = cfg.cnn_taps.size();
    for (std::size_t t = 0; t < cfg.cnn_taps.size(); ++t)
      if ("layer_" + std::to_string(cfg.cnn_taps[t]) == id) order = t;
    if (order == cfg.cnn_taps.size()) throw ValidationError("selected layer '" + id + "' is not a configured tap");
    ranking.push_back({id, row.at("mean_mi").get<double>(), order});
  }
  if (ranking.empty()) throw ValidationError("empty layer ranking");
  m.selected_tap = static_cast<int>(ranking.front().order);
  m.layer_ranking = std::move(ranking);
}

}  // namespace

Dataset materialize_dataset(const PipelineConfig& cfg, const fs::path& out_dir, std::uint64_t& data_hash) {
  std::error_code ec;
  if (cfg.synth) {
    const fs::path synth_dir = out_dir / "synth";
    data_hash = hash_json({{"stage", "synth"}, {"spec", to_json(*cfg.synth)}, {"reference", reference_to_json(cfg.reference)}});
    const fs::path marker = synth_dir / "stage_hash";
    if (fs::exists(marker, ec) && fs::exists(synth_dir / "manifest.jsonl", ec) && read_file(marker) == hex64(data_hash))
      return load_manifest(synth_dir / "manifest.jsonl", cfg.reference);
    Dataset ds = in_stage("synth", "", [&] { return synth_generate(*cfg.synth, synth_dir, cfg.reference); });
    write_text(hex64(data_hash), marker);
    return ds;
  }
  if (!cfg.manifest) throw ValidationError("config needs either 'manifest' or 'synth'");
  Dataset ds = in_stage("manifest", "", [&] { return load_manifest(*cfg.manifest, cfg.reference); });
  data_hash = dataset_hash(*cfg.manifest, ds);
  return ds;
}

TrainedModels load_models(const fs::path& run_dir, const PipelineConfig& cfg) {
  TrainedModels m;
  const fs::path ck = run_dir / "checkpoints";
  for (std::size_t k = 0; k < 4; ++k)
    m.extractors[k] = mlp_from_json(read_json(ck / ("extractor_r" + std::to_string(k + 1) + ".json")));
  if (cfg.head != HeadKind::svm_composite) m.cnn = cnn_from_json(read_json(ck / "cnn.json"));
  if (cfg.head != HeadKind::cnn) m.svm = svm_from_json(read_json(ck / "svm.json"));
  if (cfg.head == HeadKind::svm_tap) apply_ranking(read_json(run_dir / "selected_layer.json"), cfg, m);
  return m;
}

TrainedModels train_models(const std::vector<PreparedSample>& samples, const PipelineConfig& cfg) {
  TrainedModels m;
  m.extractors = train_extractors(samples, cfg.channel, cfg.extractor);
  train_head(train_composites(samples, m.extractors, cfg.channel), cfg, m);
  return m;
}

Prediction predict(const PipelineConfig& cfg, const TrainedModels& m, const std::string& id, Label truth,
                   const ImageTensor& composite) {
  Prediction p{id, truth, Label::healthy, 0.0};
  if (cfg.head == HeadKind::cnn) {
    const auto out = cnn_forward(*m.cnn, composite);
    p.score = out.probabilities[1];
    p.predicted = out.probabilities[1] >= out.probabilities[0] ? Label::patient : Label::healthy;
  } else {
    const auto r = svm_predict(*m.svm, svm_features(cfg, m, composite));
    p.score = r.decision;
    p.predicted = r.label == 1 ? Label::patient : Label::healthy;
  }
  return p;
}

std::uint64_t hash_json(const json& doc) { return fnv1a64(doc.dump()); }

std::uint64_t dataset_hash(const fs::path& manifest, const Dataset& ds) {
  std::uint64_t h = fnv1a64(read_file(manifest));
  for (const auto& s : ds.samples) h = fnv1a64(in_stage("load", s.image_id, [&] { return read_file(s.path); }), h);
  return h;
}

json evaluation_json(const ConfusionMatrix& cm, const Metrics& m) {
  return {{"confusion", to_json(cm)}, {"metrics", to_json(m)}};
}

std::string predictions_csv(const std::vector<Prediction>& predictions) {
  std::string out = "image_id,label,predicted,score\n";
  char buf[64];
  for (const auto& p : predictions) {
    std::snprintf(buf, sizeof buf, "%.17g", p.score);
    out += p.id + "," + std::string(to_string(p.truth)) + "," + std::string(to_string(p.predicted)) + "," + buf + "\n";
  }
  return out;
}

std::string metrics_table(const ConfusionMatrix& cm, const Metrics& m) {
  std::ostringstream os;
  os << "metric  value\n";
  os << "ACC     " << fmt_metric(m.acc) << "\n";
  os << "SEN     " << fmt_metric(m.sen) << "\n";
  os << "SPE     " << fmt_metric(m.spe) << "\n";
  os << "PPV     " << fmt_metric(m.ppv) << "\n";
  os << "NPV     " << fmt_metric(m.npv) << "\n";
  os << "F1      " << fmt_metric(m.f1) << "\n";
  os << "tp=" << cm.tp << " fp=" << cm.fp << " tn=" << cm.tn << " fn=" << cm.fn << "\n";
  return os.str();
}

RunResult run_pipeline(const PipelineConfig& cfg, const fs::path& out_dir) {
  cfg.validate();
  std::error_code ec;
  fs::create_directories(out_dir / "checkpoints", ec);
  if (ec) throw IoError("cannot create " + out_dir.string() + ": " + ec.message());

  std::uint64_t data_hash = 0;
  const Dataset ds = materialize_dataset(cfg, out_dir, data_hash);
  ds.require_both_classes_per_split();

  const std::vector<PreparedSample> prepared = prepare_dataset(ds, cfg.workers);

  // extractors
  const json extractor_key{{"stage", "extractors"},
                           {"data", hex64(data_hash)},
                           {"reference", reference_to_json(cfg.reference)},
                           {"channel", cfg.channel},
                           {"train", train_json(cfg.extractor)}};
  const std::string extractor_hash = hex64(hash_json(extractor_key));
  TrainedModels models;
  {
    bool all_cached = true;
    for (std::size_t k = 0; k < 4 && all_cached; ++k) {
      auto doc = cached_checkpoint(out_dir / "checkpoints" / ("extractor_r" + std::to_string(k + 1) + ".json"), extractor_hash);
      if (doc) models.extractors[k] = mlp_from_json(*doc);
      else all_cached = false;
    }
    if (!all_cached) {
      models.extractors = train_extractors(prepared, cfg.channel, cfg.extractor);
      for (std::size_t k = 0; k < 4; ++k)
        write_json(with_stage_hash(to_json(models.extractors[k], extractor_config(cfg.extractor, k).seed), extractor_hash),
                   out_dir / "checkpoints" / ("extractor_r" + std::to_string(k + 1) + ".json"));
    }
  }

  // head
  json layers = json::array();
  for (const auto& l : cfg.cnn_layers) layers.push_back(to_json(l));
  const json head_key{{"stage", "head"},
                      {"extractors", extractor_hash},
                      {"head", to_string(cfg.head)},
                      {"cnn", train_json(cfg.cnn)},
                      {"layers", layers},
                      {"taps", cfg.cnn_taps},
                      {"svm", svm_json(cfg.svm)},
                      {"mi", mi_json(cfg.mi, cfg.mi_select)}};
  const std::string head_hash = hex64(hash_json(head_key));
  const bool wants_cnn = cfg.head != HeadKind::svm_composite;
  const bool wants_svm = cfg.head != HeadKind::cnn;
  const bool wants_selection = wants_cnn && (cfg.mi_select || cfg.head == HeadKind::svm_tap) && !cfg.cnn_taps.empty();
  {
    const auto cnn_doc = wants_cnn ? cached_checkpoint(out_dir / "checkpoints" / "cnn.json", head_hash) : std::nullopt;
    const auto svm_doc = wants_svm ? cached_checkpoint(out_dir / "checkpoints" / "svm.json", head_hash) : std::nullopt;
    const auto sel_doc = wants_selection ? cached_checkpoint(out_dir / "selected_layer.json", head_hash) : std::nullopt;
    if ((!wants_cnn || cnn_doc) && (!wants_svm || svm_doc) && (!wants_selection || sel_doc)) {
      if (cnn_doc) models.cnn = cnn_from_json(*cnn_doc);
      if (svm_doc) models.svm = svm_from_json(*svm_doc);
      if (sel_doc) apply_ranking(*sel_doc, cfg, models);
    } else {
      train_head(train_composites(prepared, models.extractors, cfg.channel), cfg, models);
      if (models.cnn) write_json(with_stage_hash(to_json(*models.cnn), head_hash), out_dir / "checkpoints" / "cnn.json");
      if (models.svm) write_json(with_stage_hash(to_json(*models.svm), head_hash), out_dir / "checkpoints" / "svm.json");
      if (models.layer_ranking) write_json(with_stage_hash(ranking_json(models), head_hash), out_dir / "selected_layer.json");
    }
  }

  // evaluation on the held-out split
  RunResult result;
  std::vector<Label> truth, predicted;
  for (const auto& s : prepared) {
    if (s.split != Split::test) continue;
    const auto composite = in_stage("fuse", s.id, [&] { return fuse_sample(to_fusion_sample(s), models.extractors, cfg.channel); });
    result.predictions.push_back(predict(cfg, models, s.id, s.label, composite.composite.image));
    truth.push_back(s.label);
    predicted.push_back(result.predictions.back().predicted);
  }
  result.confusion = confusion(predicted, truth);
  result.metrics = metrics(result.confusion);

  json source = cfg.source;
  source["seed"] = cfg.seed;
  const std::string config_hash = hex64(hash_json(source));
  json report{{"format_version", 1},
              {"config", source},
              {"config_hash", config_hash},
              {"seed", cfg.seed},
              {"replay", "tongue run --config config.json --seed " + std::to_string(cfg.seed) + " --out <dir>"},
              {"stages", {{"data", hex64(data_hash)}, {"extractors", extractor_hash}, {"head", head_hash}}},
              {"head", to_string(cfg.head)},
              {"counts",
               {{"train_healthy", ds.count(Split::train, Label::healthy)},
                {"train_patient", ds.count(Split::train, Label::patient)},
                {"test_healthy", ds.count(Split::test, Label::healthy)},
                {"test_patient", ds.count(Split::test, Label::patient)}}},
              {"selected_layer", ranking_json(models)},
              {"confusion", to_json(result.confusion)},
              {"metrics", to_json(result.metrics)}};
  result.report = report;

  write_text(source.dump(2) + "\n", out_dir / "config.json");
  write_text(report.dump(2) + "\n", out_dir / "report.json");
  write_text(predictions_csv(result.predictions), out_dir / "predictions.csv");
  return result;
}

}  // namespace tongue
