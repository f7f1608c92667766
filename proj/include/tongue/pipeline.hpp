#pragma once

#include <array>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "tongue/cnn.hpp"
#include "tongue/core.hpp"
#include "tongue/fusion.hpp"
#include "tongue/infotheory.hpp"
#include "tongue/metrics.hpp"
#include "tongue/mlp.hpp"
#include "tongue/registration.hpp"
#include "tongue/regionizer.hpp"
#include "tongue/svm.hpp"
#include "tongue/synth.hpp"

namespace tongue {

enum class HeadKind { cnn, svm_composite, svm_tap };
std::string_view to_string(HeadKind head) noexcept;
HeadKind parse_head(std::string_view text);

/// Everything a run depends on. `source` keeps the configuration document
/// exactly as given (after command-line overrides) for the run report.
struct PipelineConfig {
  ReferenceModel reference;
  int channel = 0;
  int feature_size = kFeatureInputSize;
  int centre_size = kCentreRegionSize;
  MiOptions mi{};
  bool mi_select = true;
  TrainConfig extractor{0.1, 200, 32, 0};
  TrainConfig cnn{0.05, 200, 32, 0};
  std::vector<LayerSpec> cnn_layers = default_cnn_spec();
  std::vector<int> cnn_taps = default_cnn_taps();
  SvmParams svm{1.0, {KernelType::rbf, 0.0}, 1e-3};
  HeadKind head = HeadKind::cnn;
  std::uint64_t seed = 0;
  std::optional<std::filesystem::path> manifest;
  std::optional<SynthSpec> synth;
  bool synth_seed_fixed = false;  // synth.seed given explicitly, not derived
  int workers = 1;
  nlohmann::json source = nlohmann::json::object();

  /// Re-derives the per-stage seeds from `seed`.
  void reseed(std::uint64_t new_seed);
  void validate() const;
};

/// Parses a configuration document; relative paths resolve against `base_dir`.
PipelineConfig parse_config(const nlohmann::json& doc, const std::filesystem::path& base_dir);
PipelineConfig load_config(const std::filesystem::path& path);
ReferenceModel parse_reference(const nlohmann::json& doc);
nlohmann::json reference_to_json(const ReferenceModel& ref);

/// Registered, cropped, split and resized form of one sample: r1..r4 are
/// 32x32 and r5 is 30x30.
struct PreparedSample {
  std::string id;
  Label label = Label::healthy;
  Split split = Split::train;
  RegionSet regions;
  AffineTransform transform;
  double residual = 0.0;
  bool detected = false;  // quad came from the heuristic detector
};

/// load -> (detect if no quad) -> register -> crop -> split -> resize.
PreparedSample prepare_sample(const LabeledSample& sample, const ReferenceModel& reference);
/// Same for a whole dataset on up to `workers` threads; output order
/// follows the dataset. Errors name the stage and the sample id.
std::vector<PreparedSample> prepare_dataset(const Dataset& dataset, int workers);

/// Runs `fn(i)` for i in [0, n) on up to `workers` threads.
void parallel_for(std::size_t n, int workers, const std::function<void(std::size_t)>& fn);

FusionSample to_fusion_sample(const PreparedSample& s);

/// One extractor per region 1-4, trained only on train-split samples.
std::array<MlpModel, 4> train_extractors(const std::vector<PreparedSample>& samples, int channel,
                                         const TrainConfig& cfg);
TrainConfig extractor_config(const TrainConfig& base, std::size_t region);

struct TrainedModels {
  std::array<MlpModel, 4> extractors;
  std::optional<CnnModel> cnn;
  std::optional<SvmModel> svm;
  std::optional<std::vector<LayerScore>> layer_ranking;
  std::optional<int> selected_tap;  // index into cnn->taps
};

/// Feature vector the SVM head sees for a composite.
std::vector<double> svm_features(const PipelineConfig& cfg, const TrainedModels& models, const ImageTensor& composite);

/// Training part of the pipeline. Only samples with split == train are read.
TrainedModels train_models(const std::vector<PreparedSample>& samples, const PipelineConfig& cfg);

/// Per-tap activations of the train composites grouped by class.
std::vector<LayerFeatures> tap_features(const CnnModel& cnn, std::span<const LabeledComposite> composites);

struct Prediction {
  std::string id;
  Label truth = Label::healthy;
  Label predicted = Label::healthy;
  double score = 0.0;  // SVM decision value or CNN patient probability
};

Prediction predict(const PipelineConfig& cfg, const TrainedModels& models, const std::string& id, Label truth,
                   const ImageTensor& composite);

struct RunResult {
  nlohmann::json report;
  ConfusionMatrix confusion;
  Metrics metrics;
  std::vector<Prediction> predictions;
};

/// register -> crop -> regions -> extractors -> fuse -> head -> (mi-select)
/// -> evaluation on the test split. Writes report.json, predictions.csv,
/// config.json, selected_layer.json and checkpoints/ under `out_dir`.
/// Trained stages are keyed by a hash of their inputs and configuration and
/// reloaded when an existing checkpoint carries the same key.
RunResult run_pipeline(const PipelineConfig& cfg, const std::filesystem::path& out_dir);

/// Dataset named by the config: the manifest, or the synthetic set generated
/// (or reused, when its stage key matches) under `out_dir`/synth. `data_hash`
/// receives the content key of the data stage.
Dataset materialize_dataset(const PipelineConfig& cfg, const std::filesystem::path& out_dir,
                            std::uint64_t& data_hash);

/// Loads the checkpoints a run wrote under `run_dir`.
TrainedModels load_models(const std::filesystem::path& run_dir, const PipelineConfig& cfg);

/// Content hash of a manifest and every image it references.
std::uint64_t dataset_hash(const std::filesystem::path& manifest, const Dataset& dataset);
std::uint64_t hash_json(const nlohmann::json& doc);

nlohmann::json to_json(const SynthSpec& spec);
SynthSpec synth_spec_from_json(const nlohmann::json& doc, std::uint64_t default_seed);

/// Report and CSV writers shared with the command-line `eval`.
nlohmann::json evaluation_json(const ConfusionMatrix& cm, const Metrics& m);
std::string predictions_csv(const std::vector<Prediction>& predictions);
std::string metrics_table(const ConfusionMatrix& cm, const Metrics& m);

}  // namespace tongue
