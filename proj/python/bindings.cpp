#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <cstring>

#include "synthhw/config.hpp"
#include "synthhw/dataset.hpp"
#include "synthhw/distort.hpp"
#include "synthhw/error.hpp"
#include "synthhw/evaluate.hpp"
#include "synthhw/experiment.hpp"
#include "synthhw/features.hpp"
#include "synthhw/render.hpp"
#include "synthhw/skeleton.hpp"
#include "synthhw/vectorize.hpp"
#include "synthhw/zones.hpp"

namespace py = pybind11;
using namespace synthhw;

namespace {

using Mask = py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast>;

// Images cross the boundary as (height, width) uint8 arrays; for masks any
// non-zero sample is ink.
BilevelImage to_bilevel(const Mask& a) {
  if (a.ndim() != 2) throw py::value_error("expected a 2-D array");
  BilevelImage img(static_cast<int>(a.shape(1)), static_cast<int>(a.shape(0)));
  auto r = a.unchecked<2>();
  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x < img.width(); ++x) img.set(x, y, r(y, x) != 0);
  return img;
}

Mask from_bilevel(const BilevelImage& img) {
  Mask a({img.height(), img.width()});
  std::memcpy(a.mutable_data(), img.bits().data(), img.bits().size());
  return a;
}

Mask from_gray(const GrayImage& img) {
  Mask a({img.height(), img.width()});
  std::memcpy(a.mutable_data(), img.samples().data(), img.samples().size());
  return a;
}

GrayImage to_gray_image(const Mask& a) {
  if (a.ndim() != 2) throw py::value_error("expected a 2-D array");
  GrayImage img(static_cast<int>(a.shape(1)), static_cast<int>(a.shape(0)));
  std::memcpy(img.samples().data(), a.data(), img.samples().size());
  return img;
}

py::array_t<double> matrix(const std::vector<Vector>& rows, std::size_t cols) {
  py::array_t<double> a({rows.size(), cols});
  double* out = a.mutable_data();
  for (const auto& r : rows) out = std::copy(r.begin(), r.end(), out);
  return a;
}

py::object to_py(const Json& j) { return py::module_::import("json").attr("loads")(j.dump()); }
Json from_py(const py::object& o) {
  return Json::parse(py::module_::import("json").attr("dumps")(o).cast<std::string>());
}

}  // namespace

PYBIND11_MODULE(_synthhw, m) {
  m.doc() = "Synthetic handwritten text generation and recognition";

  py::register_exception<Error>(m, "SynthhwError", PyExc_RuntimeError);

  m.def("data_dir", &data_dir);

  m.def(
      "render",
      [](const std::string& text, const std::filesystem::path& font, int size_px, const std::string& kind,
         int margin) {
        const TextItem item{text, Script::Latin, parse_kind(kind)};
        return from_bilevel(crop_to_content(binarize(render_text(item, FontRef{"", font, size_px})), margin));
      },
      py::arg("text"), py::arg("font"), py::arg("size_px") = 150, py::arg("kind") = "word", py::arg("margin") = 4,
      "Render text with a TrueType font and return the binarised, cropped ink mask.");

  m.def(
      "skeletonize", [](const Mask& img) { return from_bilevel(skeletonize(to_bilevel(img))); }, py::arg("mask"));

  m.def(
      "vectorize", [](const Mask& skel, double tol) { return to_text(vectorize(to_bilevel(skel), tol)); },
      py::arg("skeleton"), py::arg("tolerance") = 3.0, "Vector model of a skeleton in its text form.");

  m.def(
      "rasterize", [](const std::string& model) { return from_bilevel(rasterize_model(parse_vector_model(model))); },
      py::arg("model"));

  m.def(
      "distort",
      [](const Mask& img, const py::object& spec, std::uint64_t seed) {
        SeededRng rng(seed);
        return from_bilevel(apply(to_bilevel(img), distortion_from_json(from_py(spec)), rng));
      },
      py::arg("mask"), py::arg("spec"), py::arg("seed") = 0,
      "Apply a distortion given as a dict, e.g. {'type': 'curved', 'max_offset': 8}.");

  m.def(
      "count_components", [](const Mask& img) { return count_components(to_bilevel(img)); }, py::arg("mask"));

  m.def(
      "phog", [](const Mask& gray) { return phog(to_gray_image(gray)); }, py::arg("gray"),
      "PHOG descriptor of a gray image (dark ink on a light ground).");

  m.def(
      "to_gray", [](const Mask& img) { return from_gray(to_gray(to_bilevel(img))); }, py::arg("mask"));

  m.def(
      "window_features",
      [](const Mask& img, const py::object& spec) {
        const WindowSpec w = spec.is_none() ? WindowSpec{} : window_spec_from_json(from_py(spec));
        const FeatureSequence s = window_sequence(to_bilevel(img), w);
        return matrix(s.frames, static_cast<std::size_t>(s.frame_dim));
      },
      py::arg("mask"), py::arg("window") = py::none(), "Sliding-window feature frames as a (T, D) array.");

  m.def(
      "split_zones",
      [](const Mask& img, double matra_gate) {
        ZoneOptions opt;
        opt.matra_gate = matra_gate;
        const ZoneDecomposition z = split_zones(to_bilevel(img), opt);
        py::dict d;
        d["has_matra"] = z.has_matra;
        d["matra_row"] = z.matra_row;
        d["baseline_row"] = z.baseline_row;
        d["upper"] = from_bilevel(z.upper);
        d["middle"] = from_bilevel(z.middle);
        d["lower"] = from_bilevel(z.lower);
        return d;
      },
      py::arg("mask"), py::arg("matra_gate") = ZoneOptions{}.matra_gate);

  m.def(
      "generate",
      [](const py::object& config, const std::filesystem::path& base_dir, const std::filesystem::path& output,
         int jobs) {
        GenerationConfig cfg = parse_generation_config(from_py(config), base_dir);
        cfg.output = output;
        cfg.jobs = jobs;
        py::gil_scoped_release release;
        return generate_dataset(cfg).records.size();
      },
      py::arg("config"), py::arg("base_dir"), py::arg("output"), py::arg("jobs") = 1,
      "Generate a dataset; returns the number of images written.");

  m.def(
      "read_manifest",
      [](const std::filesystem::path& dir) {
        py::list out;
        for (const auto& r : read_manifest(dir).records) {
          py::dict d;
          d["path"] = r.path;
          d["transcription"] = r.transcription;
          d["font"] = r.font;
          d["variant"] = r.variant;
          d["split"] = r.split;
          d["seed"] = r.seed;
          d["distortion"] = to_py(r.distortion);
          out.append(d);
        }
        return out;
      },
      py::arg("dataset"));

  m.def(
      "run_experiment",
      [](const py::object& config, const std::filesystem::path& base_dir, int jobs, std::optional<std::uint64_t> seed) {
        const Json cfg = from_py(config);
        ExperimentResult r;
        {
          py::gil_scoped_release release;
          r = run_experiment("experiment", cfg, base_dir, jobs, seed);
        }
        return to_py(r.stamp());
      },
      py::arg("config"), py::arg("base_dir"), py::arg("jobs") = 1, py::arg("seed") = py::none(),
      "Run an experiment document end to end and return its stamped report.");
}
