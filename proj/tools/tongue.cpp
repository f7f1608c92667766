#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include <CLI11.hpp>

#include "tongue/checkpoint.hpp"
#include "tongue/detect.hpp"
#include "tongue/gradcheck.hpp"
#include "tongue/image_io.hpp"
#include "tongue/manifest.hpp"
#include "tongue/pipeline.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace tongue;

namespace {

struct Globals {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<int> workers;
  std::string out;
};

PipelineConfig make_config(const Globals& g, bool require_data = true) {
  PipelineConfig cfg = g.config.empty() ? parse_config(json::object(), fs::current_path()) : load_config(g.config);
  if (g.seed) {
    cfg.reseed(*g.seed);
    cfg.source["seed"] = *g.seed;
  }
  if (g.workers) {
    cfg.workers = *g.workers;
    cfg.source["workers"] = *g.workers;
  }
  if (require_data) cfg.validate();
  return cfg;
}

fs::path out_dir(const Globals& g) {
  if (g.out.empty()) throw ValidationError("--out DIR is required");
  std::error_code ec;
  fs::create_directories(g.out, ec);
  if (ec) throw IoError("cannot create " + g.out + ": " + ec.message());
  return g.out;
}

std::vector<PreparedSample> prepare(const PipelineConfig& cfg, const fs::path& out) {
  std::uint64_t hash = 0;
  const Dataset ds = materialize_dataset(cfg, out, hash);
  ds.require_both_classes_per_split();
  return prepare_dataset(ds, cfg.workers);
}

std::array<MlpModel, 4> load_extractors(const fs::path& dir) {
  std::array<MlpModel, 4> out;
  for (std::size_t k = 0; k < 4; ++k) {
    fs::path p = dir / ("extractor_r" + std::to_string(k + 1) + ".json");
    if (!fs::exists(p)) p = dir / "checkpoints" / p.filename();
    out[k] = mlp_from_json(read_json(p));
  }
  return out;
}

void write_extractors(const std::array<MlpModel, 4>& ex, const TrainConfig& cfg, const fs::path& dir) {
  fs::create_directories(dir);
  for (std::size_t k = 0; k < 4; ++k)
    write_json(to_json(ex[k], extractor_config(cfg, k).seed), dir / ("extractor_r" + std::to_string(k + 1) + ".json"));
}

std::vector<LabeledComposite> composites_of(const std::vector<PreparedSample>& samples,
                                            const std::array<MlpModel, 4>& ex, int channel, Split split) {
  std::vector<LabeledComposite> out;
  for (const auto& s : samples)
    if (s.split == split) out.push_back(fuse_sample(to_fusion_sample(s), ex, channel));
  return out;
}

std::string strip_suffix(std::string s, const std::string& suffix) {
  if (s.size() > suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0)
    s.resize(s.size() - suffix.size());
  return s;
}

std::vector<json> read_jsonl(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<json> rows;
  std::string line;
  while (std::getline(in, line))
    if (line.find_first_not_of(" \t\r") != std::string::npos) rows.push_back(json::parse(line));
  return rows;
}

void write_lines(const std::vector<json>& rows, const fs::path& path) {
  std::string text;
  for (const auto& r : rows) text += r.dump() + "\n";
  write_text(text, path);
}

int cmd_synth(const Globals& g, const SynthSpec* overrides) {
  PipelineConfig cfg = make_config(g, false);
  SynthSpec spec = cfg.synth.value_or(*overrides);
  if (!cfg.synth) spec.seed = Rng::derive(cfg.seed, 4);
  spec.validate();
  const Dataset ds = synth_generate(spec, out_dir(g), cfg.reference);
  std::cout << "wrote " << ds.samples.size() << " images to " << g.out << "\n";
  return 0;
}

int cmd_register(const Globals& g, const std::string& manifest) {
  PipelineConfig cfg = make_config(g, false);
  const fs::path out = out_dir(g);
  const Dataset ds = load_manifest(manifest.empty() ? cfg.manifest.value_or("") : fs::path(manifest), cfg.reference);
  std::vector<json> rows(ds.samples.size());
  parallel_for(ds.samples.size(), cfg.workers, [&](std::size_t i) {
    const auto& s = ds.samples[i];
    const ImageTensor img = load_image(s.path);
    const BoundingQuad quad = s.quad ? *s.quad : detect_quad_heuristic(img);
    const Registration reg = register_image(img, quad, cfg.reference);
    save_image(reg.image, out / (s.image_id + "_reg.png"));
    rows[i] = {{"image_id", s.image_id},
               {"label", to_string(s.label)},
               {"split", to_string(s.split)},
               {"params", reg.transform.params()},
               {"residual", reg.residual}};
  });
  write_lines(rows, out / "transforms.jsonl");
  std::cout << "registered " << rows.size() << " images\n";
  return 0;
}

int cmd_regions(const Globals& g, const std::string& in_dir) {
  const fs::path out = out_dir(g);
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(in_dir))
    if (e.path().extension() == ".png") files.push_back(e.path());
  std::sort(files.begin(), files.end());
  std::map<std::string, json> meta;
  if (fs::exists(fs::path(in_dir) / "transforms.jsonl"))
    for (auto& r : read_jsonl(fs::path(in_dir) / "transforms.jsonl")) meta[r.at("image_id")] = r;
  std::vector<json> index;
  for (const auto& f : files) {
    const std::string id = strip_suffix(f.stem().string(), "_reg");
    const RegionSet set = split_regions(crop_margins(load_image(f)));
    for (std::size_t k = 0; k < 5; ++k) save_image(set[k], out / (id + "_r" + std::to_string(k + 1) + ".png"));
    json row{{"image_id", id}};
    if (auto it = meta.find(id); it != meta.end()) {
      row["label"] = it->second.at("label");
      row["split"] = it->second.at("split");
    }
    index.push_back(row);
  }
  write_lines(index, out / "regions.jsonl");
  std::cout << "split " << files.size() << " images into regions\n";
  return 0;
}

int cmd_train_extractors(const Globals& g) {
  const PipelineConfig cfg = make_config(g);
  const fs::path out = out_dir(g);
  const auto samples = prepare(cfg, out);
  write_extractors(train_extractors(samples, cfg.channel, cfg.extractor), cfg.extractor, out / "checkpoints");
  std::cout << "wrote 4 extractor checkpoints to " << (out / "checkpoints").string() << "\n";
  return 0;
}

int cmd_fuse(const Globals& g, const std::string& regions_dir, const std::string& extractors_dir) {
  const PipelineConfig cfg = make_config(g, false);
  const fs::path out = out_dir(g);
  const auto ex = load_extractors(extractors_dir);
  std::vector<json> manifest;
  for (const auto& row : read_jsonl(fs::path(regions_dir) / "regions.jsonl")) {
    const std::string id = row.at("image_id");
    FusionSample s{id, parse_label(row.value("label", "healthy")), {}};
    for (int k = 1; k <= 5; ++k) s.regions.push_back(load_image(fs::path(regions_dir) / (id + "_r" + std::to_string(k) + ".png")));
    const auto c = fuse_sample(s, ex, cfg.channel);
    save_image(c.composite.image, out / (id + "_composite.png"));
    json entry{{"image_id", id}, {"path", id + "_composite.png"}};
    if (row.contains("label")) entry["label"] = row.at("label");
    if (row.contains("split")) entry["split"] = row.at("split");
    manifest.push_back(entry);
  }
  write_lines(manifest, out / "composites.jsonl");
  std::cout << "fused " << manifest.size() << " composites\n";
  return 0;
}

std::array<MlpModel, 4> extractors_for(const Globals& g, const PipelineConfig& cfg,
                                       const std::vector<PreparedSample>& samples, const std::string& dir) {
  if (!dir.empty()) return load_extractors(dir);
  auto ex = train_extractors(samples, cfg.channel, cfg.extractor);
  write_extractors(ex, cfg.extractor, fs::path(g.out) / "checkpoints");
  return ex;
}

int cmd_train_cnn(const Globals& g, const std::string& extractors_dir) {
  const PipelineConfig cfg = make_config(g);
  const fs::path out = out_dir(g);
  const auto samples = prepare(cfg, out);
  const auto ex = extractors_for(g, cfg, samples, extractors_dir);
  const auto train = composites_of(samples, ex, cfg.channel, Split::train);
  std::vector<CnnSample> data;
  for (const auto& c : train) data.push_back({to_chw(c.composite.image), target_of(c.label)});
  const auto result = cnn_train_with_history(data, cfg.cnn_layers, cfg.cnn, {3, kCompositeSize, kCompositeSize}, cfg.cnn_taps);
  fs::create_directories(out / "checkpoints");
  write_json(to_json(result.model), out / "checkpoints" / "cnn.json");
  // per-tap activations of the train composites, the input of mi-select
  fs::create_directories(out / "features");
  const auto layers = tap_features(result.model, train);
  for (std::size_t t = 0; t < layers.size(); ++t) {
    for (int cls = 0; cls < 2; ++cls) {
      const auto& rows = cls == 0 ? layers[t].class_a : layers[t].class_b;
      json doc{{"layer_id", layers[t].layer_id}, {"order", t}, {"class", cls == 0 ? "healthy" : "patient"}, {"features", rows}};
      write_json(doc, out / "features" / (layers[t].layer_id + "_" + (cls == 0 ? "healthy" : "patient") + ".json"));
    }
  }
  std::printf("cnn loss %.6f -> %.6f over %d epochs\n", result.initial_loss, result.final_loss, cfg.cnn.epochs);
  return 0;
}

int cmd_train_svm(const Globals& g, const std::string& extractors_dir, const std::string& cnn_path) {
  PipelineConfig cfg = make_config(g);
  if (cfg.head == HeadKind::cnn) cfg.head = HeadKind::svm_composite;
  const fs::path out = out_dir(g);
  const auto samples = prepare(cfg, out);
  TrainedModels m;
  m.extractors = extractors_for(g, cfg, samples, extractors_dir);
  const auto train = composites_of(samples, m.extractors, cfg.channel, Split::train);
  if (cfg.head == HeadKind::svm_tap) {
    if (cnn_path.empty()) throw ValidationError("svm-on-tap needs --cnn PATH");
    m.cnn = cnn_from_json(read_json(cnn_path));
    const auto layers = tap_features(*m.cnn, train);
    m.layer_ranking = rank_layers(layers, cfg.mi);
    m.selected_tap = static_cast<int>(m.layer_ranking->front().order);
  }
  std::vector<std::vector<double>> xs;
  std::vector<int> ys;
  for (const auto& c : train) {
    xs.push_back(svm_features(cfg, m, c.composite.image));
    ys.push_back(signed_label(c.label));
  }
  const SvmModel svm = svm_train(xs, ys, cfg.svm);
  fs::create_directories(out / "checkpoints");
  write_json(to_json(svm), out / "checkpoints" / "svm.json");
  std::cout << "svm: " << svm.support_vectors.size() << " support vectors, " << svm.iterations << " iterations\n";
  return 0;
}

int cmd_mi_select(const std::string& dir, int bins, std::size_t max_pairs, std::uint64_t seed) {
  std::map<std::string, std::pair<std::size_t, LayerFeatures>> by_layer;
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.path().extension() == ".json") files.push_back(e.path());
  std::sort(files.begin(), files.end());
  std::size_t next_order = 0;
  for (const auto& f : files) {
    const json doc = read_json(f);
    const std::string id = doc.at("layer_id");
    auto [it, inserted] = by_layer.try_emplace(id, doc.value("order", next_order), LayerFeatures{id, {}, {}});
    if (inserted) ++next_order;
    auto& dst = parse_label(doc.at("class").get<std::string>()) == Label::healthy ? it->second.second.class_a
                                                                                : it->second.second.class_b;
    for (const auto& row : doc.at("features")) dst.push_back(row.get<std::vector<double>>());
  }
  if (by_layer.empty()) throw ValidationError("no feature dumps in " + dir);
  std::vector<std::pair<std::size_t, LayerFeatures>> ordered;
  for (auto& [id, v] : by_layer) ordered.push_back(std::move(v));
  std::stable_sort(ordered.begin(), ordered.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  std::vector<LayerFeatures> layers;
  for (auto& [o, l] : ordered) layers.push_back(std::move(l));
  MiOptions opt;
  opt.bins = bins;
  opt.max_pairs = max_pairs;
  opt.seed = seed;
  const auto ranking = rank_layers(layers, opt);
  std::printf("%-4s %-16s %s\n", "rank", "layer", "mean_mi_bits");
  for (std::size_t i = 0; i < ranking.size(); ++i)
    std::printf("%-4zu %-16s %.6f\n", i + 1, ranking[i].layer_id.c_str(), ranking[i].mean_mi);
  std::printf("selected: %s\n", ranking.front().layer_id.c_str());
  return 0;
}

int cmd_eval(const Globals& g, const std::string& model_dir, const std::string& manifest, const std::string& split) {
  Globals local = g;
  if (local.config.empty()) local.config = (fs::path(model_dir) / "config.json").string();
  PipelineConfig cfg = make_config(local, false);
  const TrainedModels m = load_models(model_dir, cfg);
  const Dataset ds = load_manifest(manifest.empty() ? cfg.manifest.value_or("") : fs::path(manifest), cfg.reference);
  const auto samples = prepare_dataset(ds, cfg.workers);
  std::vector<Prediction> preds;
  std::vector<Label> truth, predicted;
  for (const auto& s : samples) {
    if (split != "all" && to_string(s.split) != split) continue;
    const auto c = fuse_sample(to_fusion_sample(s), m.extractors, cfg.channel);
    preds.push_back(predict(cfg, m, s.id, s.label, c.composite.image));
    truth.push_back(s.label);
    predicted.push_back(preds.back().predicted);
  }
  const ConfusionMatrix cm = confusion(predicted, truth);
  const Metrics mt = metrics(cm);
  std::cout << metrics_table(cm, mt);
  if (!g.out.empty()) {
    const fs::path out = out_dir(g);
    write_text(evaluation_json(cm, mt).dump(2) + "\n", out / "eval.json");
    write_text(predictions_csv(preds), out / "eval_predictions.csv");
  }
  return 0;
}

int cmd_run(const Globals& g) {
  const PipelineConfig cfg = make_config(g);
  const RunResult r = run_pipeline(cfg, out_dir(g));
  std::cout << metrics_table(r.confusion, r.metrics);
  if (r.report.contains("selected_layer") && !r.report["selected_layer"].is_null())
    std::cout << "selected layer: " << r.report["selected_layer"]["selected"].get<std::string>() << "\n";
  std::cout << "report: " << (fs::path(g.out) / "report.json").string() << "\n";
  return 0;
}

int cmd_gradcheck(const Globals& g, double step) {
  const PipelineConfig cfg = make_config(g, false);
  Rng rng(Rng::derive(cfg.seed, 0x6763));
  std::vector<double> x(kExtractorInputs);
  for (auto& v : x) v = rng.uniform();
  const MlpModel mlp = mlp_init(cfg.seed, kExtractorInputs, kExtractorHidden);
  const double mlp_err = grad_check(mlp, x, 1, step, cfg.seed);
  const CnnModel cnn = cnn_init(cfg.cnn_layers, cfg.seed, {3, kCompositeSize, kCompositeSize}, cfg.cnn_taps);
  std::vector<double> img(3 * kCompositeSize * kCompositeSize);
  for (auto& v : img) v = rng.uniform();
  const double cnn_err = grad_check(cnn, img, 1, step, cfg.seed);
  std::printf("mlp max relative error %.3e\ncnn max relative error %.3e\n", mlp_err, cnn_err);
  if (std::max(mlp_err, cnn_err) > 1e-3) {
    std::fprintf(stderr, "gradient check failed (threshold 1e-3)\n");
    return 4;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Tongue-image diagnostic pipeline"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--config", g.config, "configuration file (JSON)");
  app.add_option("--seed", g.seed, "master seed");
  app.add_option("--workers", g.workers, "worker threads for per-image stages");
  app.add_option("--out", g.out, "output directory");

  auto* synth = app.add_subcommand("synth", "generate a synthetic labelled dataset");
  SynthSpec spec;
  synth->add_option("--n-per-class", spec.n_per_class);
  synth->add_option("--separation", spec.separation);
  synth->add_option("--pose-jitter", spec.pose_jitter);
  synth->add_option("--test-fraction", spec.test_fraction);

  std::string manifest;
  auto* reg = app.add_subcommand("register", "warp every manifest image onto the reference quad");
  reg->add_option("--manifest", manifest);

  std::string in_dir;
  auto* regions = app.add_subcommand("regions", "crop registered images and write the five regions");
  regions->add_option("--in", in_dir)->required();

  auto* train_ex = app.add_subcommand("train-extractors", "train the four region feature extractors");

  std::string regions_dir, extractors_dir, cnn_path;
  auto* fuse = app.add_subcommand("fuse", "build composite images from regions and extractors");
  fuse->add_option("--regions", regions_dir)->required();
  fuse->add_option("--extractors", extractors_dir)->required();

  auto* train_cnn = app.add_subcommand("train-cnn", "train the composite CNN");
  train_cnn->add_option("--extractors", extractors_dir);

  auto* train_svm = app.add_subcommand("train-svm", "train the SVM head");
  train_svm->add_option("--extractors", extractors_dir);
  train_svm->add_option("--cnn", cnn_path, "CNN checkpoint (svm-on-tap)");

  std::string features_dir;
  int bins = 8;
  std::size_t max_pairs = 2000;
  std::uint64_t mi_seed = 0;
  auto* mi = app.add_subcommand("mi-select", "rank layers by mean cross-class mutual information");
  mi->add_option("--features", features_dir)->required();
  mi->add_option("--bins", bins);
  mi->add_option("--max-pairs", max_pairs);
  mi->add_option("--seed", mi_seed);

  std::string model_dir, split = "all";
  auto* eval = app.add_subcommand("eval", "evaluate a trained run on a manifest");
  eval->add_option("--model", model_dir, "run directory")->required();
  eval->add_option("--manifest", manifest);
  eval->add_option("--split", split)->check(CLI::IsMember({"all", "train", "test"}));

  auto* run = app.add_subcommand("run", "full pipeline");

  double step = 1e-5;
  auto* gc = app.add_subcommand("gradcheck", "compare backprop with central differences");
  gc->add_option("--step", step);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (*synth) return cmd_synth(g, &spec);
    if (*reg) return cmd_register(g, manifest);
    if (*regions) return cmd_regions(g, in_dir);
    if (*train_ex) return cmd_train_extractors(g);
    if (*fuse) return cmd_fuse(g, regions_dir, extractors_dir);
    if (*train_cnn) return cmd_train_cnn(g, extractors_dir);
    if (*train_svm) return cmd_train_svm(g, extractors_dir, cnn_path);
    if (*mi) return cmd_mi_select(features_dir, bins, max_pairs, g.seed.value_or(mi_seed));
    if (*eval) return cmd_eval(g, model_dir, manifest, split);
    if (*run) return cmd_run(g);
    if (*gc) return cmd_gradcheck(g, step);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.exit_code();
  } catch (const json::exception& e) {
    std::cerr << "error: malformed JSON: " << e.what() << "\n";
    return 2;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
