#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <unistd.h>

#include "tongue/checkpoint.hpp"
#include "tongue/detect.hpp"
#include "tongue/image_io.hpp"
#include "tongue/manifest.hpp"
#include "tongue/pipeline.hpp"

using namespace tongue;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

// one root per process, since ctest runs the cases concurrently
fs::path scratch_root() { return fs::temp_directory_path() / ("tongue_pipeline_test_" + std::to_string(::getpid())); }

struct ScratchCleanup {
  ~ScratchCleanup() {
    std::error_code ec;
    fs::remove_all(scratch_root(), ec);
  }
} cleanup;

fs::path scratch(const std::string& name) {
  const fs::path p = scratch_root() / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

json small_config(std::uint64_t seed = 3) {
  return {{"seed", seed},
          {"synth", {{"n_per_class", 6}, {"separation", 1.0}, {"test_fraction", 0.34}}},
          {"extractor", {{"epochs", 3}, {"batch_size", 4}}},
          {"cnn", {{"epochs", 3}, {"batch_size", 4}}},
          {"mi", {{"max_pairs", 50}}}};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

// the synthetic set of small_config(), generated once
const Dataset& small_dataset() {
  static const Dataset ds = [] {
    const PipelineConfig cfg = parse_config(small_config(), ".");
    return synth_generate(*cfg.synth, scratch("dataset"), cfg.reference);
  }();
  return ds;
}

std::vector<json> checkpoint_docs(const TrainedModels& m, const PipelineConfig& cfg) {
  std::vector<json> docs;
  for (std::size_t k = 0; k < 4; ++k) docs.push_back(to_json(m.extractors[k], extractor_config(cfg.extractor, k).seed));
  if (m.cnn) docs.push_back(to_json(*m.cnn));
  if (m.svm) docs.push_back(to_json(*m.svm));
  return docs;
}

}  // namespace

TEST(Config, Defaults) {
  const PipelineConfig cfg = parse_config(json::object(), ".");
  EXPECT_EQ(cfg.channel, 0);
  EXPECT_EQ(cfg.extractor.learning_rate, 0.1);
  EXPECT_EQ(cfg.extractor.epochs, 200);
  EXPECT_EQ(cfg.cnn.learning_rate, 0.05);
  EXPECT_EQ(cfg.cnn.batch_size, 32);
  EXPECT_EQ(cfg.svm.c, 1.0);
  EXPECT_EQ(cfg.svm.tol, 1e-3);
  EXPECT_EQ(cfg.head, HeadKind::cnn);
  EXPECT_EQ(cfg.cnn_taps, default_cnn_taps());
  EXPECT_THROW(cfg.validate(), ValidationError);  // no data source
}

TEST(Config, Rejects) {
  EXPECT_THROW(parse_config({{"head", "forest"}}, "."), ValidationError);
  EXPECT_THROW(parse_config({{"channel", "red"}}, "."), ValidationError);
  EXPECT_THROW(parse_config({{"svm", {{"kernel", "poly"}}}}, "."), ValidationError);
  EXPECT_THROW(parse_config({{"mi", {{"pairing", "all"}}}}, "."), ValidationError);
  json doc = small_config();
  doc["reference_dims"] = {256, 256};
  EXPECT_THROW(parse_config(doc, ".").validate(), ValidationError);
  doc = small_config();
  doc["channel"] = 3;
  EXPECT_THROW(parse_config(doc, ".").validate(), ValidationError);
  doc = small_config();
  doc["cnn"]["taps"] = {40};
  EXPECT_THROW(parse_config(doc, ".").validate(), ShapeError);
  doc = small_config();
  doc.erase("synth");
  doc["manifest"] = "does/not/exist.jsonl";
  EXPECT_THROW(parse_config(doc, "/nowhere").validate(), IoError);
}

TEST(Config, SeedsDerivedFromMasterSeed) {
  const PipelineConfig a = parse_config(small_config(1), "."), b = parse_config(small_config(2), ".");
  EXPECT_NE(a.extractor.seed, b.extractor.seed);
  EXPECT_NE(a.cnn.seed, b.cnn.seed);
  EXPECT_NE(a.synth->seed, b.synth->seed);
  PipelineConfig c = a;
  c.reseed(2);
  EXPECT_EQ(c.extractor.seed, b.extractor.seed);
  EXPECT_EQ(c.synth->seed, b.synth->seed);
  json fixed = small_config(1);
  fixed["synth"]["seed"] = 99;
  PipelineConfig d = parse_config(fixed, ".");
  d.reseed(5);
  EXPECT_EQ(d.synth->seed, 99u);
}

TEST(Prepare, WorkerCountDoesNotMatter) {
  const auto one = prepare_dataset(small_dataset(), 1);
  const auto three = prepare_dataset(small_dataset(), 3);
  ASSERT_EQ(one.size(), three.size());
  for (std::size_t i = 0; i < one.size(); ++i) {
    EXPECT_EQ(one[i].id, three[i].id);
    for (std::size_t k = 0; k < 5; ++k) EXPECT_EQ(one[i].regions[k], three[i].regions[k]);
    EXPECT_EQ(one[i].transform, three[i].transform);
  }
  EXPECT_EQ(one[0].regions[0].height(), 32);
  EXPECT_EQ(one[0].regions[4].height(), 30);
}

TEST(Prepare, QuadLandsOnReference) {
  const auto& s = small_dataset().samples[0];
  const auto p = prepare_sample(s, small_dataset().reference());
  const ReferenceModel ref;
  for (std::size_t j = 0; j < 4; ++j) {
    const Point q = apply_point(p.transform, ref.quad.corners[j]);
    EXPECT_LT(std::hypot(q.x - s.quad->corners[j].x, q.y - s.quad->corners[j].y), 0.5);
  }
}

TEST(Prepare, DetectorFillsMissingQuad) {
  LabeledSample s = small_dataset().samples[1];
  s.quad.reset();
  const auto p = prepare_sample(s, {});
  EXPECT_TRUE(p.detected);
}

TEST(Prepare, ErrorsNameStageAndSample) {
  const fs::path dir = scratch("errors");
  save_image(ImageTensor(512, 512, 3), dir / "black.png");
  LabeledSample missing{"ghost", (dir / "ghost.png").string(), Label::healthy, std::nullopt, Split::train};
  try {
    prepare_sample(missing, {});
    FAIL();
  } catch (const IoError& e) {
    EXPECT_NE(std::string(e.what()).find("load [ghost]"), std::string::npos) << e.what();
  }
  LabeledSample black{"dark", (dir / "black.png").string(), Label::healthy, std::nullopt, Split::train};
  try {
    prepare_sample(black, {});
    FAIL();
  } catch (const DetectionError& e) {
    EXPECT_NE(std::string(e.what()).find("detect [dark]"), std::string::npos) << e.what();
  }
  Dataset ds;
  ds.samples = {small_dataset().samples[0], missing};
  EXPECT_THROW(prepare_dataset(ds, 2), IoError);
}

TEST(TrainModels, TestSamplesNeverInfluenceTraining) {
  for (const char* head : {"cnn", "svm-on-composite", "svm-on-tap"}) {
    json doc = small_config();
    doc["head"] = head;
    const PipelineConfig cfg = parse_config(doc, ".");
    const auto all = prepare_dataset(small_dataset(), 1);
    std::vector<PreparedSample> train_only;
    for (const auto& s : all)
      if (s.split == Split::train) train_only.push_back(s);
    ASSERT_LT(train_only.size(), all.size());
    const auto a = checkpoint_docs(train_models(all, cfg), cfg);
    const auto b = checkpoint_docs(train_models(train_only, cfg), cfg);
    ASSERT_EQ(a.size(), b.size());
    for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i].dump(), b[i].dump()) << head << " checkpoint " << i;
  }
}

TEST(TrainModels, ExtractorsAreDistinct) {
  const PipelineConfig cfg = parse_config(small_config(), ".");
  const auto ex = train_extractors(prepare_dataset(small_dataset(), 1), 0, cfg.extractor);
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = i + 1; j < 4; ++j) EXPECT_NE(ex[i].w1, ex[j].w1);
}

TEST(RunPipeline, DeterministicAndCached) {
  const PipelineConfig cfg = parse_config(small_config(), ".");
  const fs::path a = scratch("run_a"), b = scratch("run_b");
  const RunResult ra = run_pipeline(cfg, a);
  run_pipeline(cfg, b);
  for (const char* f : {"report.json", "predictions.csv", "config.json", "selected_layer.json",
                        "checkpoints/cnn.json", "checkpoints/extractor_r1.json", "checkpoints/extractor_r4.json"})
    EXPECT_EQ(slurp(a / f), slurp(b / f)) << f;
  // warm re-run reuses every stage and reproduces the cold bytes
  const auto before = fs::last_write_time(a / "checkpoints" / "cnn.json");
  const RunResult again = run_pipeline(cfg, a);
  EXPECT_EQ(fs::last_write_time(a / "checkpoints" / "cnn.json"), before);
  EXPECT_EQ(again.report.dump(), ra.report.dump());
  EXPECT_EQ(slurp(a / "report.json"), slurp(b / "report.json"));

  const json report = json::parse(slurp(a / "report.json"));
  EXPECT_EQ(report.at("seed"), cfg.seed);
  EXPECT_EQ(report.at("config").at("synth").at("n_per_class"), 6);
  EXPECT_EQ(report.at("counts").at("test_healthy"), 2);
  EXPECT_EQ(ra.predictions.size(), 4u);
  EXPECT_TRUE(report.at("metrics").contains("f1"));
}

TEST(RunPipeline, HeadChangeKeepsExtractors) {
  json doc = small_config();
  const fs::path dir = scratch("run_heads");
  run_pipeline(parse_config(doc, "."), dir);
  const std::string ex = slurp(dir / "checkpoints" / "extractor_r2.json");
  const auto stamp = fs::last_write_time(dir / "checkpoints" / "extractor_r2.json");
  doc["head"] = "svm-on-tap";
  const RunResult r = run_pipeline(parse_config(doc, "."), dir);
  EXPECT_EQ(fs::last_write_time(dir / "checkpoints" / "extractor_r2.json"), stamp);
  EXPECT_EQ(slurp(dir / "checkpoints" / "extractor_r2.json"), ex);
  EXPECT_TRUE(fs::exists(dir / "checkpoints" / "svm.json"));
  EXPECT_EQ(r.report.at("head"), "svm-on-tap");
  // a cold run of the same config agrees with the partially cached one
  const RunResult cold = run_pipeline(parse_config(doc, "."), scratch("run_heads_cold"));
  EXPECT_EQ(cold.report.dump(), r.report.dump());
}

TEST(RunPipeline, ManifestInputAndWorkers) {
  json doc = small_config();
  doc.erase("synth");
  doc["manifest"] = (scratch_root() / "dataset" / "manifest.jsonl").string();
  small_dataset();
  doc["head"] = "svm-on-composite";
  const RunResult one = run_pipeline(parse_config(doc, "."), scratch("manifest_1"));
  doc["workers"] = 3;
  const RunResult three = run_pipeline(parse_config(doc, "."), scratch("manifest_3"));
  EXPECT_EQ(one.confusion, three.confusion);
  EXPECT_EQ(one.report.at("stages"), three.report.at("stages"));
  EXPECT_EQ(predictions_csv(one.predictions), predictions_csv(three.predictions));
  EXPECT_EQ(one.report.at("metrics"), three.report.at("metrics"));
}

TEST(Reporting, CsvAndTable) {
  const std::vector<Prediction> preds{{"a", Label::patient, Label::healthy, -0.25}};
  EXPECT_EQ(predictions_csv(preds), "image_id,label,predicted,score\na,patient,healthy,-0.25\n");
  const std::string table = metrics_table({0, 0, 1, 1}, metrics({0, 0, 1, 1}));
  EXPECT_NE(table.find("PPV     undefined"), std::string::npos);
  EXPECT_NE(table.find("ACC     0.5000"), std::string::npos);
}
