// Python bindings: numpy-backed access to the frame synthesizer, the patch
// discriminator, training, scoring, evaluation, synthesis, and saliency.

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cstring>
#include <string>
#include <vector>

#include "stvad/checkpoint.hpp"
#include "stvad/clip.hpp"
#include "stvad/csv.hpp"
#include "stvad/dataset.hpp"
#include "stvad/eval.hpp"
#include "stvad/gradsuite.hpp"
#include "stvad/image_io.hpp"
#include "stvad/interpret.hpp"
#include "stvad/losses.hpp"
#include "stvad/models.hpp"
#include "stvad/scoring.hpp"
#include "stvad/synth.hpp"
#include "stvad/trainer.hpp"

namespace py = pybind11;
using namespace stvad;

namespace {

using FloatArray = py::array_t<float, py::array::c_style | py::array::forcecast>;

TensorF tensor_from_array(const py::array& raw) {
  FloatArray arr = FloatArray::ensure(raw);
  if (!arr) throw std::invalid_argument("expected a numeric array");
  std::vector<int> shape(static_cast<std::size_t>(arr.ndim()));
  for (py::ssize_t i = 0; i < arr.ndim(); ++i) shape[i] = static_cast<int>(arr.shape(i));
  TensorF t(shape);
  if (t.size() > 0) std::memcpy(&t[0], arr.data(), sizeof(float) * t.size());
  return t;
}

/// Frames are (h, w, 1); a plain 2-D image is accepted and given the channel.
TensorF frame_from_array(const py::array& raw) {
  TensorF t = tensor_from_array(raw);
  if (t.rank() == 2) {
    TensorF framed({t.dim(0), t.dim(1), 1});
    for (std::size_t i = 0; i < t.size(); ++i) framed[i] = t[i];
    return framed;
  }
  return t;
}

py::array_t<float> tensor_to_array(const TensorF& t) {
  std::vector<py::ssize_t> shape(static_cast<std::size_t>(t.rank()));
  for (int i = 0; i < t.rank(); ++i) shape[static_cast<std::size_t>(i)] = t.dim(i);
  py::array_t<float> out(shape);
  if (t.size() > 0) std::memcpy(out.mutable_data(), t.data(), sizeof(float) * t.size());
  return out;
}

std::vector<TensorF> frames_from_list(const py::iterable& frames) {
  std::vector<TensorF> out;
  for (const py::handle& h : frames) out.push_back(frame_from_array(py::cast<py::array>(h)));
  return out;
}

py::list frames_to_list(const std::vector<TensorF>& frames) {
  py::list out;
  for (const TensorF& f : frames) out.append(tensor_to_array(f));
  return out;
}

LabeledScores labeled(const std::vector<double>& scores, const std::vector<int>& labels) {
  LabeledScores ls;
  ls.scores = scores;
  ls.labels = labels;
  return ls;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Video anomaly detection: a bidirectional recurrent frame synthesizer and a "
            "3-D convolutional patch discriminator score how poorly each frame can be "
            "reconstructed from its temporal context.";
  m.attr("__version__") = "0.1.0";

  py::register_exception<DivergenceError>(m, "DivergenceError");

  // -- clips ----------------------------------------------------------------
  py::enum_<ClipSource>(m, "ClipSource")
      .value("ingested", ClipSource::ingested)
      .value("synthetic", ClipSource::synthetic);

  py::class_<Clip>(m, "Clip")
      .def(py::init<>())
      .def_readwrite("id", &Clip::id)
      .def_readwrite("source", &Clip::source)
      .def_readwrite("labels", &Clip::labels)
      .def_property(
          "frames", [](const Clip& c) { return frames_to_list(c.frames); },
          [](Clip& c, const py::iterable& frames) { c.frames = frames_from_list(frames); })
      .def("__len__", &Clip::length)
      .def("validate", &Clip::validate);

  m.def("load_clip", &load_clip, py::arg("dir"), py::arg("target_size"),
        "Load one frame directory, resized to a square edge length.");
  m.def("load_dataset", &load_dataset, py::arg("root"), py::arg("target_size"),
        "Load every clip under a split directory, attaching labels.csv when present.");
  m.def("load_image", [](const std::string& path) { return tensor_to_array(load_image(path)); },
        py::arg("path"));
  m.def("save_image",
        [](const std::string& path, const py::array& img) { save_image(path, frame_from_array(img)); },
        py::arg("path"), py::arg("image"));

  // -- synthesis ------------------------------------------------------------
  py::class_<AnomalyEvent>(m, "AnomalyEvent")
      .def(py::init<>())
      .def(py::init([](int clip, const std::string& type, int start, int end) {
             return AnomalyEvent{clip, type, start, end};
           }),
           py::arg("clip"), py::arg("type"), py::arg("start"), py::arg("end"))
      .def_readwrite("clip", &AnomalyEvent::clip)
      .def_readwrite("type", &AnomalyEvent::type)
      .def_readwrite("start", &AnomalyEvent::start)
      .def_readwrite("end", &AnomalyEvent::end);

  py::class_<SynthSpec>(m, "SynthSpec")
      .def(py::init<>())
      .def_readwrite("seed", &SynthSpec::seed)
      .def_readwrite("image_size", &SynthSpec::image_size)
      .def_readwrite("train_clips", &SynthSpec::train_clips)
      .def_readwrite("test_clips", &SynthSpec::test_clips)
      .def_readwrite("frames_per_clip", &SynthSpec::frames_per_clip)
      .def_readwrite("blob_count", &SynthSpec::blob_count)
      .def_readwrite("blob_radius", &SynthSpec::blob_radius)
      .def_readwrite("speed_min", &SynthSpec::speed_min)
      .def_readwrite("speed_max", &SynthSpec::speed_max)
      .def_readwrite("anomalies", &SynthSpec::anomalies)
      .def("validate", &SynthSpec::validate);

  py::class_<SynthCorpus>(m, "SynthCorpus")
      .def_readwrite("train", &SynthCorpus::train)
      .def_readwrite("test", &SynthCorpus::test)
      .def_readwrite("events", &SynthCorpus::events);

  m.def("synth_generate", &synth_generate, py::arg("spec"));
  m.def("synth_write", &synth_write, py::arg("corpus"), py::arg("out_dir"));

  // -- models ---------------------------------------------------------------
  py::class_<Generator<float>>(m, "Generator")
      .def_property_readonly("input_size",
                             [](const Generator<float>& g) { return g.cfg.input_size; })
      .def_property_readonly("half_window",
                             [](const Generator<float>& g) { return g.cfg.half_window; })
      .def_property_readonly("param_count", &Generator<float>::param_count)
      .def("describe", &Generator<float>::describe)
      .def("forward", [](const Generator<float>& g, const py::iterable& window) {
        return tensor_to_array(g.forward(frames_from_list(window)));
      },
           py::arg("window"),
           "Synthesize the center frame from the 2k surrounding frames.");

  py::class_<Discriminator<float>>(m, "Discriminator")
      .def_property_readonly("input_size",
                             [](const Discriminator<float>& d) { return d.cfg.input_size; })
      .def_property_readonly("sequence_length",
                             [](const Discriminator<float>& d) { return d.cfg.sequence_length; })
      .def_property_readonly("patch_grid",
                             [](const Discriminator<float>& d) { return d.cfg.patch_grid(); })
      .def_property_readonly("param_count", &Discriminator<float>::param_count)
      .def("describe", &Discriminator<float>::describe)
      .def("forward", [](const Discriminator<float>& d, const py::array& seq) {
        return tensor_to_array(d.forward(tensor_from_array(seq)));
      },
           py::arg("sequence"), "Patch realness map for an (l, h, w, 1) sequence.");

  m.def("make_generator",
        [](int input_size, int base_channels, std::uint64_t seed) {
          GeneratorConfig c;
          c.input_size = input_size;
          c.base_channels = base_channels;
          c.validate();
          Generator<float> g(c);
          Rng rng(seed, rng_stream::kGeneratorInit);
          g.init(rng);
          return g;
        },
        py::arg("input_size"), py::arg("base_channels"), py::arg("seed") = 7);
  m.def("make_discriminator",
        [](int input_size, int base_channels, std::uint64_t seed) {
          DiscriminatorConfig c;
          c.input_size = input_size;
          c.base_channels = base_channels;
          c.validate();
          Discriminator<float> d(c);
          Rng rng(seed, rng_stream::kDiscriminatorInit);
          d.init(rng);
          return d;
        },
        py::arg("input_size"), py::arg("base_channels"), py::arg("seed") = 7);

  m.def("save_generator", &save_generator, py::arg("stem"), py::arg("generator"));
  m.def("load_generator", &load_generator, py::arg("stem"));
  m.def("save_discriminator", &save_discriminator, py::arg("stem"), py::arg("discriminator"));
  m.def("load_discriminator", &load_discriminator, py::arg("stem"));

  // -- losses ---------------------------------------------------------------
  m.def("pixel_loss", [](const py::array& generated, const py::array& real) {
    return pixel_loss(frame_from_array(generated), frame_from_array(real));
  },
        py::arg("generated"), py::arg("real"));
  m.def("realism_loss",
        [](const py::array& patch_map) { return realism_loss(tensor_from_array(patch_map)); },
        py::arg("patch_map"));
  m.def("discriminator_loss_term", [](const py::array& fake_map, const py::array& real_map) {
    return discriminator_loss_term(tensor_from_array(fake_map), tensor_from_array(real_map));
  },
        py::arg("fake_map"), py::arg("real_map"));

  // -- training -------------------------------------------------------------
  py::class_<TrainConfig>(m, "TrainConfig")
      .def(py::init<>())
      .def_readwrite("learning_rate", &TrainConfig::learning_rate)
      .def_readwrite("batch_size", &TrainConfig::batch_size)
      .def_readwrite("lambda_", &TrainConfig::lambda)
      .def_readwrite("pretrain_steps", &TrainConfig::pretrain_steps)
      .def_readwrite("adversarial_steps", &TrainConfig::adversarial_steps)
      .def_readwrite("beta1", &TrainConfig::beta1)
      .def_readwrite("beta2", &TrainConfig::beta2)
      .def_readwrite("seed", &TrainConfig::seed)
      .def_readwrite("eval_every", &TrainConfig::eval_every)
      .def_readwrite("plateau_patience", &TrainConfig::plateau_patience)
      .def_readwrite("checkpoint_every", &TrainConfig::checkpoint_every)
      .def("validate", &TrainConfig::validate);

  py::class_<LossReport>(m, "LossReport")
      .def_readonly("step", &LossReport::step)
      .def_readonly("l_real", &LossReport::l_real)
      .def_readonly("l_pixel", &LossReport::l_pixel)
      .def_readonly("loss_g", &LossReport::loss_g)
      .def_readonly("loss_d", &LossReport::loss_d)
      .def("__repr__", [](const LossReport& r) {
        return "LossReport(step=" + std::to_string(r.step) + ", loss_g=" +
               std::to_string(r.loss_g) + ", loss_d=" + std::to_string(r.loss_d) + ")";
      });

  py::class_<Trainer>(m, "Trainer")
      .def_static("fresh", &Trainer::fresh, py::arg("input_size"), py::arg("base_channels"),
                  py::arg("config"))
      .def("pretrain", &Trainer::pretrain, py::arg("clips"))
      .def("adversarial", &Trainer::adversarial, py::arg("clips"))
      .def("reports", &Trainer::reports, py::return_value_policy::copy)
      .def("generator", [](Trainer& t) { return t.generator(); },
           "A copy of the generator in its current state.")
      .def("discriminator", [](Trainer& t) { return t.discriminator(); });

  // -- scoring --------------------------------------------------------------
  py::enum_<ScoreMode>(m, "ScoreMode")
      .value("combined", ScoreMode::combined)
      .value("generator_only", ScoreMode::generator_only)
      .value("discriminator_only", ScoreMode::discriminator_only);

  py::class_<ScoreSeries>(m, "ScoreSeries")
      .def_readonly("clip_id", &ScoreSeries::clip_id)
      .def_readonly("abnormality", &ScoreSeries::abnormality)
      .def_readonly("score", &ScoreSeries::score)
      .def_readonly("pixel_term", &ScoreSeries::pixel_term)
      .def_readonly("disc_term", &ScoreSeries::disc_term)
      .def_readonly("lambda_s", &ScoreSeries::lambda_s);

  m.def("score_clip", &score_clip, py::arg("clip"), py::arg("generator"),
        py::arg("discriminator"), py::arg("mode") = ScoreMode::combined);
  m.def("score_dataset", &score_dataset, py::arg("clips"), py::arg("generator"),
        py::arg("discriminator"), py::arg("mode") = ScoreMode::combined,
        py::arg("global_norm") = false);
  m.def("calibrate_lambda_s", &calibrate_lambda_s, py::arg("pixel_terms"),
        py::arg("disc_terms"));
  m.def("normalize_scores", &normalize_scores, py::arg("losses"));

  // -- csv records ----------------------------------------------------------
  py::class_<LabelRow>(m, "LabelRow")
      .def(py::init([](const std::string& clip_id, int frame_index, int label) {
             return LabelRow{clip_id, frame_index, label};
           }),
           py::arg("clip_id"), py::arg("frame_index"), py::arg("label"))
      .def_readwrite("clip_id", &LabelRow::clip_id)
      .def_readwrite("frame_index", &LabelRow::frame_index)
      .def_readwrite("label", &LabelRow::label);

  py::class_<EventRow>(m, "EventRow")
      .def(py::init([](const std::string& clip_id, int start, int end) {
             return EventRow{clip_id, start, end};
           }),
           py::arg("clip_id"), py::arg("start"), py::arg("end"))
      .def_readwrite("clip_id", &EventRow::clip_id)
      .def_readwrite("start", &EventRow::start)
      .def_readwrite("end", &EventRow::end);

  py::class_<ScoreRow>(m, "ScoreRow")
      .def(py::init([](const std::string& clip_id, int frame_index, double score,
                       double pixel_term, double disc_term, double lambda_s) {
             return ScoreRow{clip_id, frame_index, score, pixel_term, disc_term, lambda_s};
           }),
           py::arg("clip_id"), py::arg("frame_index"), py::arg("score"),
           py::arg("pixel_term") = 0.0, py::arg("disc_term") = 0.0, py::arg("lambda_s") = 0.0)
      .def_readwrite("clip_id", &ScoreRow::clip_id)
      .def_readwrite("frame_index", &ScoreRow::frame_index)
      .def_readwrite("score", &ScoreRow::score)
      .def_readwrite("pixel_term", &ScoreRow::pixel_term)
      .def_readwrite("disc_term", &ScoreRow::disc_term)
      .def_readwrite("lambda_s", &ScoreRow::lambda_s);

  m.def("to_score_rows", &to_score_rows, py::arg("series"));
  m.def("write_labels_csv", &write_labels_csv, py::arg("path"), py::arg("rows"));
  m.def("read_labels_csv", &read_labels_csv, py::arg("path"));
  m.def("write_events_csv", &write_events_csv, py::arg("path"), py::arg("rows"));
  m.def("read_events_csv", &read_events_csv, py::arg("path"));
  m.def("write_scores_csv", &write_scores_csv, py::arg("path"), py::arg("rows"));
  m.def("read_scores_csv", &read_scores_csv, py::arg("path"));

  // -- evaluation -----------------------------------------------------------
  py::class_<Interval>(m, "Interval")
      .def(py::init([](int start, int end) { return Interval{start, end}; }), py::arg("start"),
           py::arg("end"))
      .def_readwrite("start", &Interval::start)
      .def_readwrite("end", &Interval::end)
      .def("__repr__", [](const Interval& iv) {
        return "Interval(" + std::to_string(iv.start) + ", " + std::to_string(iv.end) + ")";
      });

  py::class_<EventResult>(m, "EventResult")
      .def_readonly("correct_detections", &EventResult::correct_detections)
      .def_readonly("false_alarms", &EventResult::false_alarms)
      .def_readonly("precision_defined", &EventResult::precision_defined)
      .def_readonly("precision", &EventResult::precision);

  py::class_<EvalReport>(m, "EvalReport")
      .def_readonly("auc", &EvalReport::auc)
      .def_readonly("per_clip_auc", &EvalReport::per_clip_auc)
      .def_readonly("events", &EvalReport::events)
      .def_readonly("threshold", &EvalReport::threshold)
      .def_readonly("merge_gap", &EvalReport::merge_gap);

  m.def("roc_auc",
        [](const std::vector<double>& scores, const std::vector<int>& labels) {
          return roc_auc(labeled(scores, labels));
        },
        py::arg("scores"), py::arg("labels"));
  m.def("best_threshold_youden",
        [](const std::vector<double>& scores, const std::vector<int>& labels) {
          return best_threshold_youden(labeled(scores, labels));
        },
        py::arg("scores"), py::arg("labels"));
  m.def("detect_events", &detect_events, py::arg("series"), py::arg("threshold"),
        py::arg("merge_gap") = 50);
  m.def("event_metrics", &event_metrics, py::arg("detected"), py::arg("ground_truth"));
  m.def("evaluate", &evaluate, py::arg("scores"), py::arg("labels"), py::arg("events"),
        py::arg("threshold"), py::arg("merge_gap") = 50);
  m.def("format_report", &format_report, py::arg("report"));

  // -- interpretation -------------------------------------------------------
  m.def("error_map", [](const py::array& generated, const py::array& real) {
    return tensor_to_array(error_map(frame_from_array(generated), frame_from_array(real)));
  },
        py::arg("generated"), py::arg("real"));
  m.def("guided_backprop_map", [](const py::array& seq, const Discriminator<float>& disc) {
    return tensor_to_array(guided_backprop_map(tensor_from_array(seq), disc));
  },
        py::arg("sequence"), py::arg("discriminator"));
  m.def("save_heatmap",
        [](const py::array& map, const std::string& path) {
          save_heatmap(frame_from_array(map), path);
        },
        py::arg("map"), py::arg("path"));
  m.def("montage_frame",
        [](const py::array& real, const py::array& generated, const py::array& err,
           const py::array& grad) {
          return tensor_to_array(montage_frame(frame_from_array(real), frame_from_array(generated),
                                               frame_from_array(err), frame_from_array(grad)));
        },
        py::arg("real"), py::arg("generated"), py::arg("err"), py::arg("grad"));

  // -- gradient battery -----------------------------------------------------
  py::class_<GradCheckResult>(m, "GradCheckResult")
      .def_readonly("name", &GradCheckResult::name)
      .def_readonly("rel_err", &GradCheckResult::rel_err)
      .def_readonly("tolerance", &GradCheckResult::tolerance)
      .def("passed", &GradCheckResult::passed);
  m.def("run_gradient_battery", &run_gradient_battery, py::arg("input_size"),
        py::arg("base_channels"), py::arg("seed") = 7);
}
