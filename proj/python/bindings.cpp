// Python module _drmn. Configs cross the boundary as JSON text; the
// drmn package wraps these functions with dict-friendly signatures.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

#include "drmn/checkpoint.hpp"
#include "drmn/cli.hpp"
#include "drmn/config.hpp"
#include "drmn/eval.hpp"
#include "drmn/micro.hpp"
#include "drmn/synth.hpp"
#include "drmn/training.hpp"

namespace py = pybind11;
using namespace drmn;

namespace {

Split split_from(const std::vector<ClassId>& seen, const std::vector<ClassId>& unseen) {
  Split s;
  s.seen_classes = seen;
  s.unseen_classes = unseen;
  return s;
}

py::dict epoch_dict(const EpochMetrics& m) {
  py::dict d;
  d["epoch"] = m.epoch;
  d["lr"] = m.lr;
  d["loss_total"] = m.loss_total;
  d["loss_ac_pre"] = m.loss_ac_pre;
  d["loss_ac_post"] = m.loss_ac_post ? py::cast(*m.loss_ac_post) : py::none();
  d["loss_gc"] = m.loss_gc ? py::cast(*m.loss_gc) : py::none();
  d["czsl_acc"] = m.czsl_acc;
  d["gzsl_u"] = m.gzsl_u;
  d["gzsl_s"] = m.gzsl_s;
  d["gzsl_h"] = m.gzsl_h;
  return d;
}

py::dict summary_dict(const ZslDataset& ds) {
  py::dict d;
  d["n_images"] = ds.n_images();
  d["n_classes"] = ds.n_classes();
  d["n_attributes"] = ds.semantics.n_attributes();
  d["seen_classes"] = ds.split.seen_classes;
  d["unseen_classes"] = ds.split.unseen_classes;
  d["train"] = ds.split.train_ids.size();
  d["test_seen"] = ds.split.test_seen_ids.size();
  d["test_unseen"] = ds.split.test_unseen_ids.size();
  return d;
}

}  // namespace

PYBIND11_MODULE(_drmn, m) {
  m.doc() = "DRMN zero-shot learning engine";
  py::register_exception<Error>(m, "DrmnError", PyExc_RuntimeError);

  m.def(
      "gen_synthetic",
      [](const std::filesystem::path& out, std::uint64_t seed, std::uint32_t n_classes, std::uint32_t n_seen,
         std::uint32_t n_attributes, std::uint32_t images_per_class, double noise) {
        SynthConfig cfg;
        cfg.n_classes = n_classes;
        cfg.n_seen = n_seen;
        cfg.n_attributes = n_attributes;
        cfg.images_per_class = images_per_class;
        cfg.noise = noise;
        py::gil_scoped_release nogil;
        const SynthDataset s = gen_synthetic(cfg, seed, out);
        py::gil_scoped_acquire gil;
        return summary_dict(s.dataset);
      },
      py::arg("out"), py::arg("seed") = 1, py::arg("n_classes") = 20, py::arg("n_seen") = 15,
      py::arg("n_attributes") = 12, py::arg("images_per_class") = 30, py::arg("noise") = 0.1);

  m.def(
      "load_dataset", [](const std::filesystem::path& dir) { return summary_dict(load_dataset(dir)); },
      py::arg("data"));

  m.def(
      "fit",
      [](const std::filesystem::path& data, const std::string& train_json, const std::string& ensemble_json,
         const std::string& checkpoint) {
        const ZslDataset ds = load_dataset(data);
        const TrainConfig cfg = train_config_from_json(nlohmann::json::parse(train_json));
        const EnsembleConfig ens = ensemble_config_from_json(nlohmann::json::parse(ensemble_json));
        TrainState st;
        {
          py::gil_scoped_release nogil;
          st = fit(ds, cfg, ens);
          if (!checkpoint.empty()) save_checkpoint(st, checkpoint);
        }
        py::list hist;
        for (const auto& e : st.history) hist.append(epoch_dict(e));
        return hist;
      },
      py::arg("data"), py::arg("train_json") = "{}", py::arg("ensemble_json") = "{}", py::arg("checkpoint") = "");

  m.def(
      "evaluate",
      [](const std::filesystem::path& checkpoint, const std::filesystem::path& data, const std::string& ensemble_json) {
        const ZslDataset ds = load_dataset(data);
        const TrainState st = load_checkpoint(checkpoint);
        const EnsembleConfig ens = ensemble_config_from_json(nlohmann::json::parse(ensemble_json));
        EvalReport r;
        {
          py::gil_scoped_release nogil;
          const Model model(st.model_config, ds.semantics.z, st.params);
          r = evaluate(model, PreparedData(ds), ds, ens);
        }
        py::dict d;
        d["czsl_acc"] = r.czsl_acc;
        d["U"] = r.gzsl.unseen;
        d["S"] = r.gzsl.seen;
        d["H"] = r.gzsl.h;
        py::dict per_class;
        for (const auto& c : r.gzsl.per_class) per_class[py::int_(c.cls)] = c.accuracy;
        d["per_class"] = per_class;
        return d;
      },
      py::arg("checkpoint"), py::arg("data"), py::arg("ensemble_json") = "{}");

  m.def("harmonic_mean", &harmonic_mean, py::arg("seen"), py::arg("unseen"));
  m.def(
      "per_class_top1",
      [](const std::vector<ClassId>& preds, const std::vector<ClassId>& labels, const std::vector<ClassId>& classes) {
        return per_class_top1(preds, labels, classes);
      },
      py::arg("preds"), py::arg("labels"), py::arg("classes"));
  m.def(
      "czsl_predict",
      [](const std::vector<double>& o, const std::vector<ClassId>& unseen) { return czsl_predict(o, unseen); },
      py::arg("o"), py::arg("unseen"));
  m.def(
      "ensemble_predict",
      [](const std::vector<double>& o, const std::vector<double>& g, const std::vector<ClassId>& seen,
         const std::vector<ClassId>& unseen, double beta, double bonus, bool enabled) {
        return ensemble_predict(o, g, split_from(seen, unseen), EnsembleConfig{beta, bonus, enabled});
      },
      py::arg("o"), py::arg("g"), py::arg("seen"), py::arg("unseen"), py::arg("beta") = 0.3, py::arg("bonus") = 1.0,
      py::arg("enabled") = true);

  m.def(
      "gradcheck",
      [](std::uint64_t seed, const std::string& corrupt) {
        const GradCheckReport rep = micro_gradcheck(seed, corrupt);
        py::dict groups;
        for (const auto& e : rep.entries) groups[py::str(e.name)] = e.max_rel_error;
        py::dict d;
        d["max_rel_error"] = rep.max_rel_error();
        d["worst"] = rep.worst().name;
        d["groups"] = groups;
        return d;
      },
      py::arg("seed") = 7, py::arg("corrupt") = "");

  m.def(
      "run_cli",
      [](const std::vector<std::string>& args) {
        std::ostringstream out, err;
        int code = 0;
        {
          py::gil_scoped_release nogil;
          code = run_cli(args, out, err);
        }
        return py::make_tuple(code, out.str(), err.str());
      },
      py::arg("args"));
}
