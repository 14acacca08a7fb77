#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "dragan/checkpoint.hpp"
#include "dragan/eval.hpp"
#include "dragan/gradcheck_suites.hpp"
#include "dragan/image_io.hpp"
#include "dragan/synthdata.hpp"

namespace py = pybind11;
using namespace dragan;

namespace {

template <typename T>
using Array = py::array_t<T, py::array::c_style | py::array::forcecast>;

template <typename T>
Tensor<T> to_tensor(const Array<T>& a) {
  Shape shape(a.shape(), a.shape() + a.ndim());
  return Tensor<T>(shape, std::vector<T>(a.data(), a.data() + a.size()));
}

template <typename T>
Array<T> to_array(const Tensor<T>& t) {
  Array<T> out(std::vector<py::ssize_t>(t.shape().begin(), t.shape().end()));
  std::copy(t.data().begin(), t.data().end(), out.mutable_data());
  return out;
}

// A trained generator loaded from a checkpoint.
struct Model {
  TrainConfig config;
  Generator<float> generator;

  static Model load(const std::filesystem::path& path) {
    LoadedCheckpoint ck = load_checkpoint(path);
    return Model{ck.config, std::move(ck.state.generator)};
  }

  Array<float> generate(const Array<float>& images, const Array<float>& pictograms) const {
    Tensor<float> x = to_tensor(images), p = to_tensor(pictograms);
    const bool single = x.shape().size() == 3;
    if (single) {
      x = x.reshaped({1, x.dim(0), x.dim(1), x.dim(2)});
      p = p.reshaped({1, p.dim(0), p.dim(1), p.dim(2)});
    }
    Tensor<float> y;
    {
      py::gil_scoped_release nogil;
      y = dragan::generate(generator, x, p);
    }
    if (single) y = y.reshaped({y.dim(1), y.dim(2), y.dim(3)});
    return to_array(y);
  }
};

py::list manifest_records(const DatasetManifest& m) {
  py::list out;
  for (const auto& r : m.records) {
    py::dict d;
    d["path"] = m.image_path(r);
    d["class_id"] = r.class_id;
    d["category"] = to_string(r.category);
    d["cx"] = r.cx;
    d["cy"] = r.cy;
    d["r"] = r.r;
    d["seed"] = r.seed;
    out.append(d);
  }
  return out;
}

}  // namespace

PYBIND11_MODULE(_dragan, m) {
  m.doc() = "Bindings for the dragan C++ core";

  py::register_exception<CheckpointError>(m, "CheckpointError", PyExc_ValueError);
  py::register_exception<ManifestError>(m, "ManifestError", PyExc_ValueError);

  py::class_<Model>(m, "Model")
      .def_static("load", &Model::load, py::arg("path"))
      .def_property_readonly("resolution", [](const Model& x) { return x.config.generator.resolution; })
      .def_property_readonly("config", [](const Model& x) { return x.config.to_text(); })
      .def("generate", &Model::generate, py::arg("images"), py::arg("pictograms"),
           "Retarget [N,3,R,R] (or [3,R,R]) images in [-1,1] to the given pictograms.");

  m.def("default_config", [] { return TrainConfig{}.to_text(); });
  m.def(
      "parse_config", [](const std::string& text) { return TrainConfig::from_text(text).to_text(); },
      py::arg("text"), "Validate a key = value config and return it in canonical form.");

  m.def(
      "generate_dataset",
      [](const std::filesystem::path& out, uint64_t seed, int classes, int scenes,
         const std::vector<std::string>& categories) {
        DatasetOptions o;
        o.seed = seed;
        o.classes_per_category = classes;
        o.scenes_per_class = scenes;
        if (!categories.empty()) {
          o.categories.clear();
          for (const auto& c : categories) o.categories.push_back(parse_category(c));
        }
        return manifest_records(generate_dataset(o, out));
      },
      py::arg("out"), py::arg("seed") = 1, py::arg("classes") = 4, py::arg("scenes") = 10,
      py::arg("categories") = std::vector<std::string>{});
  m.def(
      "read_manifest", [](const std::filesystem::path& p) { return manifest_records(read_manifest(p)); },
      py::arg("path"));

  m.def(
      "load_image", [](const std::filesystem::path& p) { return to_array(load_image(p)); }, py::arg("path"),
      "PNG as float32 [3,H,W] in [-1,1].");
  m.def(
      "save_image", [](const Array<float>& img, const std::filesystem::path& p) { save_image(to_tensor(img), p); },
      py::arg("image"), py::arg("path"));

  m.def(
      "make_mask",
      [](double cx, double cy, double r, int64_t iteration, int64_t size, const std::string& shape, double floor,
         int64_t ramp) {
        MaskSpec spec;
        spec.shape = parse_mask_shape(shape);
        spec.floor = floor;
        spec.ramp_iterations = ramp;
        spec.validate();
        const Tensor<double> mk = make_mask<double>(spec, MaskGeometry{cx, cy, r, 80}, iteration, size, size);
        return to_array(mk.reshaped({size, size}));
      },
      py::arg("cx"), py::arg("cy"), py::arg("r"), py::arg("iteration"), py::arg("size") = 80,
      py::arg("shape") = "circular", py::arg("floor") = 0.1, py::arg("ramp") = 1,
      "Training mask; geometry is in 80 px frame coordinates.");

  m.def(
      "residual_attention",
      [](const Array<double>& fc, const Array<double>& fe) {
        return to_array(residual_attention(constant(to_tensor(fc)), constant(to_tensor(fe))).value());
      },
      py::arg("fused"), py::arg("encoder"));

  m.def(
      "background_psnr",
      [](const Array<float>& x, const Array<float>& y, double cx, double cy, double r) {
        const PsnrResult p = background_psnr(to_tensor(x), to_tensor(y), cx, cy, r);
        return p.identical ? py::object(py::float_(INFINITY)) : py::object(py::float_(p.db));
      },
      py::arg("x"), py::arg("y"), py::arg("cx"), py::arg("cy"), py::arg("r"),
      "PSNR over pixels outside the sign circle (inf when identical).");

  m.def(
      "gradcheck",
      [](const std::string& scope) {
        py::list out;
        for (const auto& r : run_gradcheck_suite(parse_gradcheck_scope(scope))) {
          out.append(py::make_tuple(r.name, r.max_rel_error, r.tolerance, r.passed));
        }
        return out;
      },
      py::arg("scope"), "(name, max_rel_error, tolerance, passed) per check.");
}
