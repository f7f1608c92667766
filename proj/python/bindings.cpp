#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "tongue/checkpoint.hpp"
#include "tongue/detect.hpp"
#include "tongue/image_io.hpp"
#include "tongue/infotheory.hpp"
#include "tongue/metrics.hpp"
#include "tongue/pipeline.hpp"
#include "tongue/registration.hpp"
#include "tongue/regionizer.hpp"
#include "tongue/svm.hpp"
#include "tongue/synth.hpp"

namespace py = pybind11;
using namespace tongue;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

ImageTensor to_image(const Array& a) {
  if (a.ndim() != 2 && a.ndim() != 3) throw ShapeError("image must be HxW or HxWxC");
  const int h = static_cast<int>(a.shape(0)), w = static_cast<int>(a.shape(1));
  const int c = a.ndim() == 3 ? static_cast<int>(a.shape(2)) : 1;
  return {h, w, c, std::vector<double>(a.data(), a.data() + a.size())};
}

Array to_array(const ImageTensor& img) {
  Array out({img.height(), img.width(), img.channels()});
  std::copy(img.data().begin(), img.data().end(), out.mutable_data());
  return out;
}

BoundingQuad to_quad(const std::vector<std::array<double, 2>>& corners) {
  if (corners.size() != 4) throw ShapeError("a quad has exactly 4 corners");
  BoundingQuad q;
  for (std::size_t i = 0; i < 4; ++i) q.corners[i] = {corners[i][0], corners[i][1]};
  return q;
}

std::vector<std::array<double, 2>> from_quad(const BoundingQuad& q) {
  std::vector<std::array<double, 2>> out;
  for (const auto& p : q.corners) out.push_back({p.x, p.y});
  return out;
}

AffineTransform to_affine(const std::array<double, 6>& p) { return {p[0], p[1], p[2], p[3], p[4], p[5]}; }

py::object optional_value(const std::optional<double>& v) { return v ? py::cast(*v) : py::none(); }

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Tongue-image diagnostic pipeline";

  auto base = py::register_exception<Error>(m, "TongueError", PyExc_RuntimeError);
  auto validation = py::register_exception<ValidationError>(m, "ValidationError", PyExc_ValueError);
  py::register_exception<IoError>(m, "IoError", PyExc_OSError);
  auto degeneracy = py::register_exception<DegeneracyError>(m, "DegeneracyError", PyExc_ArithmeticError);
  py::register_exception<DetectionError>(m, "DetectionError", degeneracy.ptr());
  py::register_exception<ShapeError>(m, "ShapeError", validation.ptr());
  py::register_exception<DomainError>(m, "DomainError", validation.ptr());
  (void)base;

  // images
  m.def("load_image", [](const std::string& path) { return to_array(load_image(path)); });
  m.def("save_image", [](const Array& a, const std::string& path) { save_image(to_image(a), path); });

  // registration
  m.def(
      "fit_affine",
      [](const std::vector<std::array<double, 2>>& moving, const std::vector<std::array<double, 2>>& reference) {
        const BoundingQuad mq = to_quad(moving), rq = to_quad(reference);
        const AffineTransform t = fit_affine(mq, rq);
        return py::make_tuple(t.params(), fit_residual(t, mq, rq));
      },
      py::arg("moving"), py::arg("reference"),
      "Least-squares affine mapping reference corners onto moving corners; returns (params, residual).");
  m.def("invert_affine", [](const std::array<double, 6>& p) { return invert(to_affine(p)).params(); });
  m.def(
      "warp",
      [](const Array& image, const std::array<double, 6>& params, int height, int width) {
        return to_array(warp_to_reference(to_image(image), to_affine(params), {height, width}));
      },
      py::arg("image"), py::arg("params"), py::arg("height"), py::arg("width"));
  m.def(
      "register_image",
      [](const Array& image, const std::vector<std::array<double, 2>>& quad) {
        const Registration r = register_image(to_image(image), to_quad(quad), ReferenceModel{});
        return py::make_tuple(to_array(r.image), r.transform.params(), r.residual);
      },
      py::arg("image"), py::arg("quad"));
  m.def("detect_quad", [](const Array& image) { return from_quad(detect_quad_heuristic(to_image(image))); });
  m.def("reference_quad", [] { return from_quad(ReferenceModel{}.quad); });

  // regions
  m.def("crop_margins", [](const Array& image) { return to_array(crop_margins(to_image(image))); });
  m.def("split_regions", [](const Array& image) {
    const RegionSet s = split_regions(to_image(image));
    std::vector<Array> out;
    for (const auto& r : s.regions) out.push_back(to_array(r));
    return out;
  });
  m.def("resize", [](const Array& image, int height, int width) { return to_array(resize(to_image(image), height, width)); });

  // information theory
  m.def("shannon_entropy", [](std::vector<double> p) { return shannon_entropy(ProbVector(std::move(p))); });
  m.def("renyi_entropy", [](std::vector<double> p, double alpha) { return renyi_entropy(ProbVector(std::move(p)), alpha); });
  m.def("kl_divergence", [](std::vector<double> p, std::vector<double> q) {
    return kl_divergence(ProbVector(std::move(p)), ProbVector(std::move(q)));
  });
  m.def(
      "mutual_information",
      [](const std::vector<double>& x, const std::vector<double>& y, int bins) { return mutual_information(x, y, bins); },
      py::arg("x"), py::arg("y"), py::arg("bins") = 8);
  m.def(
      "select_layer",
      [](const std::vector<std::tuple<std::string, std::vector<std::vector<double>>, std::vector<std::vector<double>>>>& layers,
         int bins, std::size_t max_pairs, std::uint64_t seed) {
        std::vector<LayerFeatures> lf;
        for (const auto& [id, a, b] : layers) lf.push_back({id, a, b});
        MiOptions opt;
        opt.bins = bins;
        opt.max_pairs = max_pairs;
        opt.seed = seed;
        std::vector<std::pair<std::string, double>> ranking;
        for (const auto& s : rank_layers(lf, opt)) ranking.emplace_back(s.layer_id, s.mean_mi);
        return ranking;
      },
      py::arg("layers"), py::arg("bins") = 8, py::arg("max_pairs") = 2000, py::arg("seed") = 0,
      "Ranks (layer_id, class_a, class_b) triples by mean cross-class MI, lowest first.");

  // svm
  py::class_<SvmModel>(m, "SvmModel")
      .def_readonly("bias", &SvmModel::bias)
      .def_readonly("support_vectors", &SvmModel::support_vectors)
      .def_readonly("coef", &SvmModel::coef)
      .def("decision", [](const SvmModel& s, const std::vector<double>& x) { return svm_predict(s, x).decision; })
      .def("predict", [](const SvmModel& s, const std::vector<double>& x) { return svm_predict(s, x).label; });
  m.def(
      "svm_train",
      [](const std::vector<std::vector<double>>& xs, const std::vector<int>& ys, double c, const std::string& kernel,
         double gamma, double tol) {
        SvmParams p;
        p.c = c;
        p.tol = tol;
        if (kernel == "linear") p.kernel = {KernelType::linear, 0.0};
        else if (kernel == "rbf") p.kernel = {KernelType::rbf, gamma};
        else throw ValidationError("kernel must be 'linear' or 'rbf'");
        return svm_train(xs, ys, p);
      },
      py::arg("xs"), py::arg("ys"), py::arg("c") = 1.0, py::arg("kernel") = "rbf", py::arg("gamma") = 0.0,
      py::arg("tol") = 1e-3);

  // metrics
  m.def(
      "metrics",
      [](std::size_t tp, std::size_t fp, std::size_t tn, std::size_t fn) {
        const Metrics mt = metrics({tp, fp, tn, fn});
        py::dict d;
        d["acc"] = optional_value(mt.acc);
        d["sen"] = optional_value(mt.sen);
        d["spe"] = optional_value(mt.spe);
        d["ppv"] = optional_value(mt.ppv);
        d["npv"] = optional_value(mt.npv);
        d["f1"] = optional_value(mt.f1);
        return d;
      },
      py::arg("tp"), py::arg("fp"), py::arg("tn"), py::arg("fn"));

  // data and pipeline; configuration and reports cross as JSON text
  m.def(
      "synth_generate",
      [](const std::string& out, int n_per_class, double separation, double pose_jitter, double test_fraction,
         std::uint64_t seed) {
        SynthSpec s;
        s.n_per_class = n_per_class;
        s.separation = separation;
        s.pose_jitter = pose_jitter;
        s.test_fraction = test_fraction;
        s.seed = seed;
        s.validate();
        return synth_generate(s, out).samples.size();
      },
      py::arg("out"), py::arg("n_per_class") = 50, py::arg("separation") = 1.0, py::arg("pose_jitter") = 0.0,
      py::arg("test_fraction") = 0.25, py::arg("seed") = 0);
  m.def(
      "run_pipeline_json",
      [](const std::string& config, const std::string& base_dir, const std::string& out) {
        nlohmann::json doc;
        try {
          doc = nlohmann::json::parse(config);
        } catch (const nlohmann::json::exception& e) {
          throw ValidationError(std::string("config: ") + e.what());
        }
        const PipelineConfig cfg = parse_config(doc, base_dir);
        cfg.validate();
        py::gil_scoped_release release;
        return run_pipeline(cfg, out).report.dump();
      },
      py::arg("config"), py::arg("base_dir"), py::arg("out"));
}
