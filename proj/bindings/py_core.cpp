#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "vidpred/config.hpp"
#include "vidpred/data/synth.hpp"
#include "vidpred/eval/metrics.hpp"
#include "vidpred/train/trainer.hpp"

namespace py = pybind11;
using namespace vidpred;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

Tensor to_tensor(const Array& a) {
  std::vector<int64_t> shape(a.ndim());
  for (py::ssize_t i = 0; i < a.ndim(); ++i) shape[static_cast<size_t>(i)] = a.shape(i);
  Tensor t(shape);
  std::copy(a.data(), a.data() + t.size(), t.data());
  return t;
}

Array to_array(const Tensor& t) {
  std::vector<py::ssize_t> shape(t.ndim());
  for (int i = 0; i < t.ndim(); ++i) shape[static_cast<size_t>(i)] = t.dim(i);
  Array a(shape);
  std::copy(t.data(), t.data() + t.size(), a.mutable_data());
  return a;
}

/// Inference-side handle: a generator built from a preset and optionally
/// restored from a training checkpoint.
class Model {
 public:
  Model(const std::string& preset, uint64_t seed)
      : cfg_(RunConfig::by_name(preset)), gen_(cfg_.generator(), seed) {
    cfg_.seed = seed;
  }

  void load(const std::string& checkpoint) { train::load_generator(checkpoint, gen_); }

  Array predict(const Array& clip, bool noise, uint64_t noise_seed) {
    RngStream rng(noise_seed, /*stream=*/4);
    return to_array(gen_.predict(to_tensor(clip), noise ? &rng : nullptr));
  }

  Array rollout(const Array& clip, int steps, bool noise, uint64_t noise_seed) {
    RngStream rng(noise_seed, /*stream=*/4);
    return to_array(gen_.rollout(to_tensor(clip), steps, noise ? &rng : nullptr));
  }

  std::string config_json() const { return cfg_.to_json(); }

 private:
  RunConfig cfg_;
  Generator gen_;
};

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "next-frame video prediction core";

  py::class_<Model>(m, "Model")
      .def(py::init<const std::string&, uint64_t>(), py::arg("preset") = "desk",
           py::arg("seed") = 0)
      .def("load", &Model::load, py::arg("checkpoint"))
      .def("predict", &Model::predict, py::arg("clip"), py::arg("noise") = false,
           py::arg("noise_seed") = 0,
           "clip (3,T,H,W) in [0,1] -> next frame (3,H,W)")
      .def("rollout", &Model::rollout, py::arg("clip"), py::arg("steps"),
           py::arg("noise") = false, py::arg("noise_seed") = 0,
           "clip (3,T,H,W) -> (3,steps,H,W) recursive prediction")
      .def("config_json", &Model::config_json);

  m.def(
      "ssim", [](const Array& x, const Array& y) { return eval::ssim(to_tensor(x), to_tensor(y)); },
      py::arg("x"), py::arg("y"), "structural similarity of two (C,H,W) frames in [0,1]");

  m.def(
      "perceptual_distance",
      [](const Array& x, const Array& y, uint64_t backbone_seed) {
        const auto backbone = PerceptualBackbone::random_stub(backbone_seed);
        return eval::perceptual_distance(to_tensor(x), to_tensor(y), backbone);
      },
      py::arg("x"), py::arg("y"), py::arg("backbone_seed") = 0,
      "stub-backbone perceptual distance of two (3,H,W) frames");

  m.def(
      "copy_last_frame",
      [](const Array& clip, int64_t steps) {
        data::FrameSequence seq{to_tensor(clip), "clip", 0};
        return to_array(eval::copy_last_frame(seq, steps).frames);
      },
      py::arg("clip"), py::arg("steps") = 1,
      "trivial baseline: repeat the last frame of a (3,T,H,W) clip");

  m.def(
      "synth",
      [](const std::string& out_dir, double pan, int sequences, int64_t length,
         int64_t height, int64_t width, uint64_t seed) {
        data::SynthSpec spec;
        spec.pan_velocity = pan;
        spec.n_sequences = sequences;
        spec.length = length;
        spec.height = height;
        spec.width = width;
        spec.texture_seed = seed;
        spec.validate();
        RngStream rng(seed, /*stream=*/3);
        data::synth_write(spec, data::synth_generate(spec, rng), out_dir);
      },
      py::arg("out_dir"), py::arg("pan") = 2.0, py::arg("sequences") = 8,
      py::arg("length") = 20, py::arg("height") = 64, py::arg("width") = 80,
      py::arg("seed") = 0, "render a synthetic panning dataset to a directory");

  m.attr("__version__") = "0.1.0";
}
