#include "drmn/cli.hpp"

#include <cstdio>
#include <filesystem>
#include <optional>

#include "CLI11.hpp"
#include "binio.hpp"
#include "drmn/attention_export.hpp"
#include "drmn/checkpoint.hpp"
#include "drmn/config.hpp"
#include "drmn/micro.hpp"
#include "drmn/synth.hpp"

namespace drmn {

namespace fs = std::filesystem;
using nlohmann::json;

int exit_code_for(Errc code) {
  switch (code) {
    case Errc::config:
    case Errc::domain:
    case Errc::empty_input:
      return kExitUsage;
    case Errc::io:
    case Errc::format:
    case Errc::validation:
      return kExitIo;
    case Errc::numeric_domain:
    case Errc::degenerate_score:
      return kExitNumeric;
    case Errc::shape:
      return kExitShape;
    case Errc::determinism:
      return kExitCheckFailed;
  }
  return kExitCheckFailed;
}

namespace {

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

void make_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) fail(Errc::io, "cannot create " + dir.string() + ": " + ec.message());
}

// ---- gen-synth --------------------------------------------------------------

struct GenArgs {
  std::string out;
  std::uint64_t seed = 1;
  SynthConfig cfg;
};

int cmd_gen_synth(const GenArgs& a, std::ostream& out) {
  a.cfg.check();
  const SynthDataset s = gen_synthetic(a.cfg, a.seed, a.out);
  const ZslDataset& ds = s.dataset;
  out << "wrote " << a.out << ": " << ds.n_classes() << " classes (" << ds.split.seen_classes.size() << " seen, "
      << ds.split.unseen_classes.size() << " unseen), " << ds.n_attributes() << " attributes, " << ds.n_images()
      << " images, " << ds.features.levels.size() << " levels (ref " << ds.features.ref_level << "), train "
      << ds.split.train_ids.size() << " / test seen " << ds.split.test_seen_ids.size() << " / test unseen "
      << ds.split.test_unseen_ids.size() << "\n";
  return kExitOk;
}

// ---- train ------------------------------------------------------------------

struct TrainArgs {
  std::string config, data, out, resume;
  std::optional<int> epochs;
  bool no_mff = false, no_aca = false, no_sit = false, no_global = false;
};

std::string epoch_line(const EpochMetrics& m) {
  std::string s = "epoch " + std::to_string(m.epoch) + " lr " + fmt("%.3g", m.lr) + " loss " +
                  fmt("%.5f", m.loss_total) + " czsl " + fmt("%.4f", m.czsl_acc) + " U " + fmt("%.4f", m.gzsl_u) +
                  " S " + fmt("%.4f", m.gzsl_s) + " H " + fmt("%.4f", m.gzsl_h);
  return s;
}

int cmd_train(const TrainArgs& a, std::ostream& out, std::ostream& err) {
  RunConfig rc;
  if (!a.config.empty()) rc = load_run_config(a.config);
  if (!a.data.empty()) rc.data = a.data;
  if (!a.out.empty()) rc.out = a.out;
  if (rc.data.empty()) fail(Errc::config, "no dataset: pass --data or set \"data\" in the config");
  if (rc.out.empty()) fail(Errc::config, "no output directory: pass --out or set \"out\" in the config");
  if (a.no_mff) rc.train.mff = false;
  if (a.no_aca) rc.train.aca = false;
  if (a.no_sit) rc.train.sit = false;
  if (a.no_global) rc.train.global_branch = false;
  if (a.epochs) rc.train.epochs = *a.epochs;
  apply_seed_override(rc.train);
  rc.train.check();
  rc.ensemble.check();

  const ZslDataset ds = load_dataset(rc.data);
  const fs::path dir = rc.out;
  make_dir(dir);

  std::optional<Trainer> tr;
  if (!a.resume.empty()) {
    TrainState st = load_checkpoint(a.resume);
    st.train.epochs = rc.train.epochs;
    rc.train = st.train;
    rc.ensemble = st.ensemble;
    tr.emplace(ds, std::move(st));
  } else {
    tr.emplace(ds, rc.train, rc.ensemble);
  }
  save_run_config(rc, dir / "config.resolved.json");
  out << "training: " << ds.split.train_ids.size() << " images, batch " << rc.train.batch_size << ", "
      << rc.train.epochs << " epochs, seed " << rc.train.seed << "\n";

  try {
    tr->run_until(rc.train.epochs, [&](const EpochMetrics& m) {
      out << epoch_line(m) << "\n";
      binio::write_file(dir / "metrics.csv", metrics_csv(tr->history()));
    });
  } catch (const Error& e) {
    if (e.code() != Errc::numeric_domain) throw;
    binio::write_file(dir / "metrics.csv", metrics_csv(tr->history()));
    err << e.what() << "\n";
    return kExitNumeric;
  }
  binio::write_file(dir / "metrics.csv", metrics_csv(tr->history()));
  save_checkpoint(tr->state(), dir / "checkpoint.drmn");
  out << "wrote " << (dir / "checkpoint.drmn").string() << "\n";
  return kExitOk;
}

// ---- eval -------------------------------------------------------------------

struct EvalArgs {
  std::string ckpt, data, out;
  std::optional<double> beta;
  bool no_ensemble = false;
};

struct Restored {
  TrainState state;
  ZslDataset ds;
  std::unique_ptr<PreparedData> data;
  std::unique_ptr<Model> model;
};

Restored restore(const std::string& ckpt, const std::string& data) {
  Restored r;
  r.state = load_checkpoint(ckpt);
  r.ds = load_dataset(data);
  if (!r.state.model_config.same_shapes(ModelConfig::for_dataset(r.ds))) {
    fail(Errc::shape, "checkpoint model " + to_json(r.state.model_config).dump() + " does not match dataset " + data);
  }
  r.data = std::make_unique<PreparedData>(r.ds);
  r.model = std::make_unique<Model>(r.state.model_config, r.ds.semantics.z, r.state.params);
  return r;
}

json gzsl_json(const GzslMetrics& g) { return json{{"U", g.unseen}, {"S", g.seen}, {"H", g.h}}; }

int cmd_eval(const EvalArgs& a, std::ostream& out) {
  Restored r = restore(a.ckpt, a.data);
  EnsembleConfig ens = r.state.ensemble;
  if (a.beta) ens.beta = *a.beta;
  if (a.no_ensemble) ens.enabled = false;
  ens.check();

  const TestOutputs outputs = infer_test_sets(*r.model, *r.data, r.ds.split);
  const EvalReport rep = score(outputs, r.ds, ens);

  json per_class = json::array();
  for (const auto& c : rep.gzsl.per_class) {
    per_class.push_back(json{{"class", c.cls}, {"seen", c.seen}, {"samples", c.samples}, {"accuracy", c.accuracy}});
  }
  json sweep = json::array();
  double best_beta = 0.0, best_h = -1.0;
  for (double b : {0.0, 0.3, 0.5, 1.0}) {
    EnsembleConfig e = ens;
    e.beta = b;
    e.enabled = true;
    const EvalReport sr = score(outputs, r.ds, e);
    sweep.push_back(json{{"beta", b}, {"U", sr.gzsl.unseen}, {"S", sr.gzsl.seen}, {"H", sr.gzsl.h}});
    if (sr.gzsl.h > best_h) {
      best_h = sr.gzsl.h;
      best_beta = b;
    }
  }
  const json report{{"czsl_acc", rep.czsl_acc},
                    {"gzsl", gzsl_json(rep.gzsl)},
                    {"per_class", per_class},
                    {"ensemble", to_json(ens)},
                    {"batch_size", r.state.train.batch_size},
                    {"epochs_trained", r.state.next_epoch},
                    {"beta_sweep", sweep},
                    {"best_beta", best_beta}};

  const fs::path dir = a.out.empty() ? fs::path(a.ckpt).parent_path() : fs::path(a.out);
  if (!dir.empty()) make_dir(dir);
  binio::write_file(dir / "metrics.json", report.dump(2) + "\n");

  out << "CZSL acc   " << fmt("%.4f", rep.czsl_acc) << "\n";
  out << "GZSL U     " << fmt("%.4f", rep.gzsl.unseen) << "\n";
  out << "GZSL S     " << fmt("%.4f", rep.gzsl.seen) << "\n";
  out << "GZSL H     " << fmt("%.4f", rep.gzsl.h) << "\n";
  out << "ensemble   " << (ens.enabled ? "beta " + fmt("%g", ens.beta) : std::string("off")) << "\n";
  out << "\n  beta      U       S       H\n";
  for (const auto& s : sweep) {
    out << fmt("  %-6.2f", s["beta"].get<double>()) << fmt("  %.4f", s["U"].get<double>())
        << fmt("  %.4f", s["S"].get<double>()) << fmt("  %.4f", s["H"].get<double>()) << "\n";
  }
  out << "best beta  " << fmt("%g", best_beta) << "\n";
  out << "\n  class  kind    n     acc\n";
  for (const auto& c : rep.gzsl.per_class) {
    char buf[96];
    std::snprintf(buf, sizeof buf, "  %5u  %-6s %4zu  %.4f\n", c.cls, c.seen ? "seen" : "unseen", c.samples,
                  c.accuracy);
    out << buf;
  }
  return kExitOk;
}

// ---- inspect-attn -----------------------------------------------------------

struct InspectArgs {
  std::string ckpt, data, out;
  std::int64_t image = -1;
};

int cmd_inspect(const InspectArgs& a, std::ostream& out) {
  Restored r = restore(a.ckpt, a.data);
  if (a.image < 0 || static_cast<std::uint64_t>(a.image) >= r.ds.n_images()) {
    fail(Errc::domain, "image id " + std::to_string(a.image) + " out of range (" + std::to_string(r.ds.n_images()) +
                           " images)");
  }
  const auto id = static_cast<ImageId>(a.image);
  const ImageAttention att = inspect_image(*r.model, *r.data, id);
  const fs::path dir = fs::path(a.out) / "attn";
  write_attention(att, dir);

  std::optional<SynthTruth> truth;
  if (fs::exists(fs::path(a.data) / "synth_truth.json")) truth = load_synth_truth(a.data);
  const ClassId c = r.ds.labels[id];
  out << "image " << id << " class " << c << ": " << att.attention.rows() << " heatmaps " << att.height << "x"
      << att.width << " in " << dir.string() << "\n";
  for (std::size_t k = 0; k < att.attention.rows(); ++k) {
    const std::size_t cell = attention_argmax(att.attention.row(k));
    out << "  attr " << k << " argmax cell " << cell << fmt(" weight %.4f", att.attention.at(k, cell));
    if (truth) {
      out << " planted " << truth->attribute_cells[k]
          << (r.ds.semantics.z.at(c, k) > 0.0 ? " (present)" : " (absent)");
    }
    out << "\n";
  }
  return kExitOk;
}

// ---- gradcheck --------------------------------------------------------------

struct GradArgs {
  bool micro = false;
  std::string corrupt;
};

int cmd_gradcheck(const GradArgs& a, std::ostream& out) {
  constexpr double kTol = 1e-4;
  const GradCheckReport rep = micro_gradcheck(7, a.corrupt);
  out << rep.to_string();
  const GradCheckEntry& w = rep.worst();
  if (rep.passed(kTol)) {
    out << "PASS max relative error " << fmt("%.3e", rep.max_rel_error()) << " (" << w.name << ")\n";
    return kExitOk;
  }
  out << "FAIL worst parameter " << w.name << " relative error " << fmt("%.3e", w.max_rel_error) << "\n";
  return kExitCheckFailed;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"DRMN zero-shot learning engine", "drmn"};
  app.require_subcommand(1);

  GenArgs gen;
  auto* g = app.add_subcommand("gen-synth", "Write a synthetic dataset");
  g->add_option("--out", gen.out, "Output directory")->required();
  g->add_option("--seed", gen.seed, "Generator seed")->capture_default_str();
  g->add_option("--classes", gen.cfg.n_classes, "Number of classes")->capture_default_str();
  g->add_option("--seen", gen.cfg.n_seen, "Number of seen classes")->capture_default_str();
  g->add_option("--attrs", gen.cfg.n_attributes, "Number of attributes")->capture_default_str();
  g->add_option("--imgs-per-class", gen.cfg.images_per_class, "Images per class")->capture_default_str();
  g->add_option("--noise", gen.cfg.noise, "Noise stddev")->capture_default_str();

  TrainArgs tr;
  auto* t = app.add_subcommand("train", "Train a model");
  t->add_option("--config", tr.config, "Run config (JSON)");
  t->add_option("--data", tr.data, "Dataset directory");
  t->add_option("--out", tr.out, "Output directory");
  t->add_option("--epochs", tr.epochs, "Override the configured epoch count");
  t->add_option("--resume", tr.resume, "Continue from a checkpoint");
  t->add_flag("--no-mff", tr.no_mff, "Reference level only");
  t->add_flag("--no-aca", tr.no_aca, "Disable channel attention");
  t->add_flag("--no-sit", tr.no_sit, "Disable the interaction transformer");
  t->add_flag("--no-global", tr.no_global, "Disable the global branch");

  EvalArgs ev;
  auto* e = app.add_subcommand("eval", "Evaluate a checkpoint");
  e->add_option("--ckpt", ev.ckpt, "Checkpoint file")->required();
  e->add_option("--data", ev.data, "Dataset directory")->required();
  e->add_option("--out", ev.out, "Output directory (default: beside the checkpoint)");
  e->add_option("--beta", ev.beta, "Ensemble weight of the attribute branch");
  e->add_flag("--no-ensemble", ev.no_ensemble, "Calibrated attribute branch only");

  InspectArgs in;
  auto* i = app.add_subcommand("inspect-attn", "Export attention heatmaps and channel gates");
  i->add_option("--ckpt", in.ckpt, "Checkpoint file")->required();
  i->add_option("--data", in.data, "Dataset directory")->required();
  i->add_option("--image", in.image, "Image id")->required();
  i->add_option("--out", in.out, "Output directory")->required();

  GradArgs gr;
  auto* gc = app.add_subcommand("gradcheck", "End-to-end gradient check");
  gc->add_flag("--micro", gr.micro, "Micro configuration (the only one)");
  gc->add_option("--corrupt", gr.corrupt)->group("");

  std::vector<std::string> rev(args.rbegin(), args.rend());
  try {
    app.parse(rev);
  } catch (const CLI::ParseError& pe) {
    const int code = app.exit(pe, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*g) return cmd_gen_synth(gen, out);
    if (*t) return cmd_train(tr, out, err);
    if (*e) return cmd_eval(ev, out);
    if (*i) return cmd_inspect(in, out);
    if (*gc) return cmd_gradcheck(gr, out);
  } catch (const Error& ex) {
    err << "error: " << ex.what() << "\n";
    return exit_code_for(ex.code());
  } catch (const std::exception& ex) {
    err << "error: " << ex.what() << "\n";
    return kExitIo;
  }
  return kExitUsage;
}

}  // namespace drmn
