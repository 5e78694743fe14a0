#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

#include "fer/audio.hpp"
#include "fer/augment.hpp"
#include "fer/cli.hpp"
#include "fer/dataset.hpp"
#include "fer/error.hpp"
#include "fer/fusion_eval.hpp"
#include "fer/model.hpp"

namespace py = pybind11;
using namespace fer;

namespace {

using FloatArray = py::array_t<float, py::array::c_style | py::array::forcecast>;
using DoubleArray = py::array_t<double, py::array::c_style | py::array::forcecast>;

Image to_image(const FloatArray& a) {
  if (a.ndim() != 3) throw ArgumentError("expected an H x W x C array");
  Image img(static_cast<int>(a.shape(0)), static_cast<int>(a.shape(1)), static_cast<int>(a.shape(2)));
  std::copy(a.data(), a.data() + a.size(), img.data());
  return img;
}

FloatArray from_image(const Image& img) {
  FloatArray out({img.height(), img.width(), img.channels()});
  std::copy(img.data(), img.data() + img.size(), out.mutable_data());
  return out;
}

DoubleArray from_grid(const Grid& g) {
  DoubleArray out({g.rows, g.cols});
  std::copy(g.values.begin(), g.values.end(), out.mutable_data());
  return out;
}

ScoreRow to_row(const std::vector<double>& v) {
  if (v.size() != kNumClasses) throw ArgumentError("expected 8 values");
  ScoreRow r{};
  std::copy(v.begin(), v.end(), r.begin());
  return r;
}

std::vector<Expression> to_expressions(const std::vector<int>& v) {
  std::vector<Expression> out;
  out.reserve(v.size());
  for (int i : v) out.push_back(expression_at(i));
  return out;
}

AudioClip to_clip(const DoubleArray& samples, int sample_rate) {
  if (samples.ndim() != 1) throw ArgumentError("expected a 1-D sample array");
  AudioClip clip;
  clip.sample_rate = sample_rate;
  clip.samples.assign(samples.data(), samples.data() + samples.size());
  return clip;
}

MelConfig mel_config(int n_fft, int hop, int n_mels) {
  MelConfig c;
  c.n_fft = n_fft;
  c.hop = hop;
  c.n_mels = n_mels;
  return c;
}

}  // namespace

PYBIND11_MODULE(ferkit, m) {
  m.doc() = "Facial expression recognition toolkit: augmentation, log-mel features, fusion and metrics.";

  py::register_exception<Error>(m, "FerError", PyExc_ValueError);

  std::vector<std::string> names;
  for (int k = 0; k < kNumClasses; ++k) names.emplace_back(class_name(expression_at(k)));
  m.attr("CLASS_NAMES") = names;

  m.def(
      "half_mix",
      [](const FloatArray& input, int input_class, const FloatArray& reference, int reference_class,
         const std::string& orientation, const std::string& side, double alpha, bool soft) {
        HalfMixSpec spec;
        if (orientation != "vertical" && orientation != "horizontal")
          throw ArgumentError("orientation must be vertical or horizontal");
        if (side != "first" && side != "second") throw ArgumentError("side must be first or second");
        spec.orientation = orientation == "vertical" ? Orientation::Vertical : Orientation::Horizontal;
        spec.kept_side = side == "first" ? KeptSide::First : KeptSide::Second;
        spec.alpha = alpha;
        const auto out = half_mix(to_image(input), one_hot(expression_at(input_class)), to_image(reference),
                                  one_hot(expression_at(reference_class)), spec,
                                  soft ? MaskMode::Soft : MaskMode::Binary);
        return py::make_tuple(from_image(out.image), std::vector<double>(out.label.begin(), out.label.end()));
      },
      py::arg("input"), py::arg("input_class"), py::arg("reference"), py::arg("reference_class"),
      py::arg("orientation") = "vertical", py::arg("side") = "first", py::arg("alpha") = 0.6,
      py::arg("soft") = false, "Returns the mixed image and its 8-way soft label.");

  m.def("hz_to_mel", &hz_to_mel, py::arg("hz"));
  m.def("mel_to_hz", &mel_to_hz, py::arg("mel"));
  m.def(
      "stft_magnitude",
      [](const DoubleArray& samples, int sample_rate, int n_fft, int hop) {
        return from_grid(stft_magnitude(to_clip(samples, sample_rate), mel_config(n_fft, hop, 128)));
      },
      py::arg("samples"), py::arg("sample_rate") = 16000, py::arg("n_fft") = 1024, py::arg("hop") = 256,
      "Bins x frames magnitude of the Hann-windowed STFT.");
  m.def(
      "mel_spectrogram",
      [](const DoubleArray& samples, int sample_rate, int n_fft, int hop, int n_mels) {
        return from_grid(mel_spectrogram(to_clip(samples, sample_rate), mel_config(n_fft, hop, n_mels)).energies);
      },
      py::arg("samples"), py::arg("sample_rate") = 16000, py::arg("n_fft") = 1024, py::arg("hop") = 256,
      py::arg("n_mels") = 128, "Mels x frames natural-log mel energies.");

  m.def(
      "soft_cross_entropy",
      [](const std::vector<double>& logits, const std::vector<double>& target) {
        return soft_cross_entropy(to_row(logits), to_row(target));
      },
      py::arg("logits"), py::arg("target"));
  m.def(
      "lr_schedule",
      [](int epoch, double lr0, std::vector<int> milestones, double gamma) {
        TrainConfig c;
        c.lr0 = lr0;
        c.milestones = std::move(milestones);
        c.gamma = gamma;
        return lr_schedule(epoch, c);
      },
      py::arg("epoch"), py::arg("lr0") = 1e-3, py::arg("milestones") = std::vector<int>{40, 50, 60},
      py::arg("gamma") = 0.1);

  m.def(
      "macro_f1",
      [](const std::vector<int>& predictions, const std::vector<int>& labels) {
        return macro_f1(confusion(to_expressions(predictions), to_expressions(labels)));
      },
      py::arg("predictions"), py::arg("labels"), "Unweighted mean F1 over all eight classes.");
  m.def(
      "confusion",
      [](const std::vector<int>& predictions, const std::vector<int>& labels) {
        return confusion(to_expressions(predictions), to_expressions(labels)).counts;
      },
      py::arg("predictions"), py::arg("labels"), "8 x 8 counts indexed [true][predicted].");

  m.def(
      "class_distribution",
      [](const std::filesystem::path& root, const std::string& split, const std::string& fps) {
        const auto d = class_distribution(build_manifest(root, parse_split(split), parse_rational(fps)));
        return py::make_tuple(d.counts, d.ratios, d.total);
      },
      py::arg("root"), py::arg("split") = "train", py::arg("fps") = "30",
      "Returns (counts, ratios, total) over the labeled frames of one split.");

  m.def(
      "run_cli",
      [](const std::vector<std::string>& args) {
        std::ostringstream out, err;
        int code;
        {
          py::gil_scoped_release release;
          code = run_cli(args, out, err);
        }
        return py::make_tuple(code, out.str(), err.str());
      },
      py::arg("args"), "Runs the fer command line in-process and returns (exit_code, stdout, stderr).");
}
