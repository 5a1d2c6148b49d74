#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

#include "hnnkws/catalog.hpp"
#include "hnnkws/data_synth.hpp"
#include "hnnkws/decoder.hpp"
#include "hnnkws/error.hpp"
#include "hnnkws/eval.hpp"
#include "hnnkws/hnn.hpp"
#include "hnnkws/pipeline.hpp"
#include "hnnkws/serialize.hpp"

namespace py = pybind11;
using namespace hnnkws;

namespace {

using FloatArray = py::array_t<float, py::array::c_style | py::array::forcecast>;
using DoubleArray = py::array_t<double, py::array::c_style | py::array::forcecast>;

// Python dicts cross the boundary as JSON text.
nlohmann::json to_json_value(const py::handle& obj) {
  if (obj.is_none()) return nlohmann::json::object();
  const auto json = py::module_::import("json");
  return nlohmann::json::parse(json.attr("dumps")(obj).cast<std::string>());
}

py::object from_json_value(const nlohmann::json& j) {
  return py::module_::import("json").attr("loads")(j.dump());
}

RunConfig config_from(const py::handle& obj) {
  RunConfig cfg = default_run_config();
  merge_json(cfg, to_json_value(obj));
  resolve(cfg);
  return cfg;
}

FloatArray utterance_features(const Utterance& u) {
  FloatArray out({u.num_frames(), static_cast<std::size_t>(kFrameDim)});
  std::copy(u.values.begin(), u.values.end(), out.mutable_data());
  return out;
}

FloatArray utterance_windows(const Utterance& u) {
  FloatArray out({u.num_frames(), static_cast<std::size_t>(kWindowDim)});
  float* data = out.mutable_data();
  for (std::size_t t = 0; t < u.num_frames(); ++t) {
    fill_window(u, t, {data + t * kWindowDim, static_cast<std::size_t>(kWindowDim)});
  }
  return out;
}

py::array_t<std::uint8_t> utterance_labels(const Utterance& u) {
  py::array_t<std::uint8_t> out(u.num_frames());
  auto* data = out.mutable_data();
  for (std::size_t t = 0; t < u.num_frames(); ++t) data[t] = static_cast<std::uint8_t>(u.labels[t]);
  return out;
}

std::span<const float> window_rows(const FloatArray& windows, std::size_t& rows) {
  if (windows.ndim() != 2 || windows.shape(1) != kWindowDim) {
    throw ConfigError("windows must have shape (n, " + std::to_string(kWindowDim) + ")");
  }
  rows = static_cast<std::size_t>(windows.shape(0));
  return {windows.data(), rows * kWindowDim};
}

DoubleArray frames_array(const std::vector<PosteriorFrame>& frames) {
  DoubleArray out({frames.size(), static_cast<std::size_t>(kNumClasses)});
  double* data = out.mutable_data();
  for (std::size_t i = 0; i < frames.size(); ++i) {
    std::copy(frames[i].begin(), frames[i].end(), data + i * kNumClasses);
  }
  return out;
}

PosteriorStream stream_from(const DoubleArray& posteriors) {
  if (posteriors.ndim() != 2 || posteriors.shape(1) != kNumClasses) {
    throw ConfigError("posteriors must have shape (n, 4)");
  }
  PosteriorStream stream(static_cast<std::size_t>(posteriors.shape(0)));
  const double* data = posteriors.data();
  for (std::size_t i = 0; i < stream.size(); ++i) {
    std::copy(data + i * kNumClasses, data + (i + 1) * kNumClasses, stream[i].begin());
  }
  return stream;
}

py::dict decision_dict(const Decision& d) {
  py::dict out;
  out["woke"] = d.woke;
  out["wake_frame"] = d.wake_frame ? py::cast(*d.wake_frame) : py::none();
  out["confidence"] = d.confidence;
  out["wakes"] = d.wakes;
  return out;
}

DecodeLabel decode_label(char c) {
  switch (c) {
    case 's': return DecodeLabel::Sil;
    case '1': return DecodeLabel::W1;
    case '2': return DecodeLabel::W2;
    case '3': return DecodeLabel::W3;
    case 'o': return DecodeLabel::Other;
  }
  throw ConfigError(std::string("unknown label character '") + c + "' (expected s|1|2|3|o)");
}

struct PyModel {
  KwsModel model;

  bool is_hnn() const { return std::holds_alternative<HnnModel>(model); }
  std::string name() const {
    return is_hnn() ? std::get<HnnModel>(model).topology.name : std::get<BaselineModel>(model).name;
  }
};

py::object model_forward(const PyModel& m, const FloatArray& windows, const std::string& outputs) {
  std::size_t rows = 0;
  const auto data = window_rows(windows, rows);
  if (!m.is_hnn()) return frames_array(baseline_forward_rows(std::get<BaselineModel>(m.model), data, rows));
  const auto levels =
      hnn_forward_rows(std::get<HnnModel>(m.model), data, rows, output_mode_from_string(outputs));
  py::list out;
  for (int l = 0; l < 3; ++l) {
    if (rows > 0 && !levels[0][static_cast<std::size_t>(l)]) {
      out.append(py::none());
      continue;
    }
    std::vector<PosteriorFrame> frames;
    frames.reserve(rows);
    for (const auto& row : levels) frames.push_back(*row[static_cast<std::size_t>(l)]);
    out.append(frames_array(frames));
  }
  return out;
}

std::string run_command(const std::string& name, const py::handle& config) {
  const RunConfig cfg = config_from(config);
  std::ostringstream log;
  py::gil_scoped_release release;
  if (name == "gen-data") {
    cmd_gen_data(cfg, log);
  } else if (name == "train") {
    cmd_train(cfg, log);
  } else if (name == "decode") {
    cmd_decode(cfg, log, cfg.out_dir / "decisions.csv");
  } else if (name == "roc") {
    cmd_roc(cfg, log);
  } else if (name == "complexity") {
    cmd_complexity(cfg, log);
  } else {
    throw ConfigError("unknown command '" + name + "'");
  }
  return log.str();
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Hierarchical keyword-spotting networks on synthetic multi-environment data";
  m.attr("__version__") = HNNKWS_VERSION;
  m.attr("FRAME_DIM") = kFrameDim;
  m.attr("WINDOW_DIM") = kWindowDim;
  m.attr("NUM_CLASSES") = kNumClasses;
  m.attr("FRAME_SECONDS") = kFrameSeconds;

  // Translators run newest first, so the base class is registered first.
  auto& error = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<ConfigError>(m, "ConfigError", error.ptr());
  py::register_exception<IoError>(m, "IoError", error.ptr());
  py::register_exception<NumericalError>(m, "NumericalError", error.ptr());

  m.def("default_config", [] { return from_json_value(to_json(default_run_config())); },
        "Default run configuration as a dict.");
  m.def("resolve_config", [](py::object cfg) { return from_json_value(to_json(config_from(cfg))); },
        py::arg("config") = py::none(),
        "Merge `config` onto the defaults, apply the seed and validate.");

  py::class_<Utterance>(m, "Utterance")
      .def_readonly("id", &Utterance::id)
      .def_property_readonly("env", [](const Utterance& u) { return std::string(to_string(u.env)); })
      .def_readonly("is_positive", &Utterance::is_positive)
      .def_property_readonly("num_frames", &Utterance::num_frames)
      .def_property_readonly("duration_seconds", &Utterance::duration_seconds)
      .def_property_readonly("labels", &utterance_labels, "Frame labels: 0 sil, 1-3 word states.")
      .def_property_readonly("features", &utterance_features, "(frames, 40) float32 copy.")
      .def("windows", &utterance_windows, "(frames, 440) stacked context windows.");

  py::class_<Corpus>(m, "Corpus")
      .def_readonly("name", &Corpus::name)
      .def_readonly("header", &Corpus::header)
      .def("__len__", [](const Corpus& c) { return c.utterances.size(); })
      .def("__getitem__",
           [](const Corpus& c, std::size_t i) -> const Utterance& {
             if (i >= c.utterances.size()) throw py::index_error();
             return c.utterances[i];
           },
           py::return_value_policy::reference_internal)
      .def_property_readonly("total_frames", &Corpus::total_frames)
      .def_property_readonly("total_hours", &Corpus::total_hours)
      .def("write", [](const Corpus& c, const std::filesystem::path& p) { write_corpus(c, p); })
      .def_static("read", &read_corpus);

  m.def(
      "gen_corpus",
      [](py::object cfg) {
        GeneratedCorpus g = gen_corpus(config_from(cfg).corpus);
        return py::make_tuple(std::vector<Corpus>(g.train.begin(), g.train.end()), std::move(g.test),
                              g.warnings);
      },
      py::arg("config") = py::none(),
      "Returns ([quiet, video, incar] training corpora, test corpus, warnings).");

  py::class_<PyModel>(m, "Model")
      .def_static(
          "build", [](py::object cfg) { return PyModel{build_configured_model(config_from(cfg))}; },
          py::arg("config") = py::none(), "Untrained model for the configured topology.")
      .def_static("load", [](const std::filesystem::path& p) { return PyModel{load_model(p)}; })
      .def("save", [](const PyModel& m, const std::filesystem::path& p) { save_model(m.model, p); })
      .def("to_json", [](const PyModel& m) { return from_json_value(model_to_json(m.model)); })
      .def_property_readonly("name", &PyModel::name)
      .def_property_readonly("is_hierarchical", &PyModel::is_hnn)
      .def(
          "macs",
          [](const PyModel& m, const std::string& outputs) {
            return model_macs(m.model, output_mode_from_string(outputs));
          },
          py::arg("outputs") = "third")
      .def(
          "params",
          [](const PyModel& m, const std::string& outputs) {
            return model_params(m.model, output_mode_from_string(outputs));
          },
          py::arg("outputs") = "third")
      .def(
          "train",
          [](PyModel& m, const std::vector<Corpus>& train, py::object cfg) {
            if (train.size() != 3) throw ConfigError("expected [quiet, video, incar] corpora");
            const RunConfig c = config_from(cfg);
            std::ostringstream log;
            {
              py::gil_scoped_release release;
              train_model(m.model, {train[0], train[1], train[2]}, c, &log);
            }
            return log.str();
          },
          py::arg("train"), py::arg("config") = py::none(), "Staged training; returns the log.")
      .def("forward", &model_forward, py::arg("windows"), py::arg("outputs") = "third",
           "Posteriors for (n, 440) windows. Hierarchical models give one array per level "
           "(None where not computed); single networks give one (n, 4) array.")
      .def(
          "decode",
          [](const PyModel& m, const Corpus& corpus, const std::vector<std::string>& strategies,
             py::object cfg) {
            RunConfig c = config_from(cfg);
            std::vector<CombinationStrategy> s;
            for (const auto& name : strategies) s.push_back(strategy_from_string(name));
            c.strategies = s;
            const OutputMode mode = inference_mode(c);
            std::vector<std::vector<DecodedUtterance>> decoded;
            {
              py::gil_scoped_release release;
              decoded = decode_corpus_with(m.model, corpus, s, mode, c.decoder, c.threads);
            }
            py::dict out;
            for (std::size_t i = 0; i < s.size(); ++i) {
              py::list rows;
              for (const auto& d : decoded[i]) {
                py::dict row = decision_dict(d.decision);
                row["id"] = d.id;
                rows.append(row);
              }
              out[py::str(std::string(short_name(s[i])))] = rows;
            }
            return out;
          },
          py::arg("corpus"), py::arg("strategies") = std::vector<std::string>{"third"},
          py::arg("config") = py::none(), "Per-strategy decisions in corpus order.");

  m.def(
      "decode_stream",
      [](const DoubleArray& posteriors, int smooth_window, double class_threshold, int max_gap,
         int refractory) {
        const DecoderParams p{smooth_window, class_threshold, max_gap, refractory};
        return decision_dict(decode_stream(stream_from(posteriors), p));
      },
      py::arg("posteriors"), py::arg("smooth_window") = DecoderParams{}.smooth_window,
      py::arg("class_threshold") = DecoderParams{}.class_threshold,
      py::arg("max_gap") = DecoderParams{}.max_gap, py::arg("refractory") = DecoderParams{}.refractory,
      "Decode one (n, 4) posterior stream.");

  m.def(
      "accept_labels",
      [](const std::string& labels, int max_gap, int refractory) {
        std::vector<DecodeLabel> seq;
        for (char c : labels) seq.push_back(decode_label(c));
        return accept_labels(seq, max_gap, refractory);
      },
      py::arg("labels"), py::arg("max_gap") = DecoderParams{}.max_gap,
      py::arg("refractory") = DecoderParams{}.refractory,
      "Wake frames for a label string over s,1,2,3,o.");

  m.def(
      "sweep_roc",
      [](const std::vector<double>& confidence, const std::vector<bool>& positive,
         const std::vector<double>& duration, std::optional<std::vector<double>> thresholds) {
        if (positive.size() != confidence.size() || duration.size() != confidence.size()) {
          throw ConfigError("confidence, positive and duration must have equal length");
        }
        std::vector<ScoredUtterance> scored(confidence.size());
        for (std::size_t i = 0; i < scored.size(); ++i) {
          scored[i] = {std::to_string(i), positive[i], duration[i], confidence[i]};
        }
        const auto t = thresholds ? *thresholds : default_thresholds(scored);
        const auto roc = sweep_roc(scored, t);
        DoubleArray out({roc.size(), std::size_t{3}});
        double* data = out.mutable_data();
        for (std::size_t i = 0; i < roc.size(); ++i) {
          data[3 * i] = roc[i].threshold;
          data[3 * i + 1] = roc[i].recall;
          data[3 * i + 2] = roc[i].fa_per_hour;
        }
        return out;
      },
      py::arg("confidence"), py::arg("positive"), py::arg("duration_seconds"),
      py::arg("thresholds") = py::none(), "Rows of (threshold, recall, fa_per_hour).");

  m.def(
      "complexity_report",
      [](std::optional<std::filesystem::path> catalog) {
        const auto rows = complexity_report(catalog ? load_catalog(*catalog) : default_catalog());
        py::list out;
        for (const auto& r : rows) {
          py::dict row;
          row["model"] = r.model;
          row["all_bn"] = r.all_bn ? py::cast(*r.all_bn) : py::none();
          row["all_output"] = r.all_output ? py::cast(*r.all_output) : py::none();
          row["macs"] = r.macs;
          row["params"] = r.params;
          row["paper_reference"] = r.paper_reference;
          out.append(row);
        }
        return out;
      },
      py::arg("catalog") = py::none());

  m.def("run", &run_command, py::arg("command"), py::arg("config") = py::none(),
        "Run a CLI command (gen-data, train, decode, roc, complexity); returns its log.");
}
