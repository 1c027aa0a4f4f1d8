// Command-line front end: corpus synthesis, adversarial training, abnormality
// scoring, evaluation, saliency rendering, and a finite-difference gradient
// battery, all driven by one JSON run configuration.

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

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

namespace fs = std::filesystem;
using nlohmann::json;
using namespace stvad;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInput = 1;
constexpr int kExitUsage = 2;
constexpr int kExitDiverged = 3;

struct Flags {
  std::string config;
  std::string data;
  std::string out;
  std::string ckpt;
  std::uint64_t seed = 7;
  double threshold = 0.0;
  int merge_gap = 50;
  int scale = 0;
  std::string mode;  // empty = both frame- and event-level sections
  std::string norm_scope = "clip";
  bool seed_given = false;
  bool threshold_given = false;
  bool scale_given = false;
};

/// Everything a run needs beyond the command line, merged from built-in
/// defaults, then the optional JSON config, then explicit flags.
struct RunConfig {
  int input_size = 224;
  int base_channels = 0;  // 0 derives input_size / 14, floored at 1
  std::uint64_t seed = 7;
  std::string detector = "combined";
  TrainConfig train;
  SynthSpec synth;
  bool from_file = false;

  int base() const { return base_channels > 0 ? base_channels : std::max(1, input_size / 14); }
};

int fail_input(const std::string& msg) {
  std::cerr << "error: " << msg << "\n";
  return kExitInput;
}

std::string join_path(const std::string& a, const std::string& b) {
  return (fs::path(a) / b).string();
}

std::string num(double v) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

// ---------------------------------------------------------------------------
// JSON configuration
// ---------------------------------------------------------------------------

void check_keys(const json& obj, const std::string& where,
                std::initializer_list<const char*> allowed) {
  for (const auto& item : obj.items()) {
    bool known = false;
    for (const char* k : allowed)
      if (item.key() == k) known = true;
    if (!known) throw std::runtime_error("unknown config key \"" + where + item.key() + "\"");
  }
}

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file " + path);
  try {
    return json::parse(in, nullptr, /*allow_exceptions=*/true, /*ignore_comments=*/true);
  } catch (const json::exception& e) {
    throw std::runtime_error("config " + path + ": " + e.what());
  }
}

void apply_config_file(RunConfig& rc, const std::string& path) {
  const json j = read_json_file(path);
  if (!j.is_object()) throw std::runtime_error("config " + path + ": top level must be an object");
  try {
    check_keys(j, "", {"input_size", "base_channels", "seed", "detector", "train", "synth"});
    if (j.contains("input_size")) rc.input_size = j.at("input_size").get<int>();
    if (j.contains("base_channels")) rc.base_channels = j.at("base_channels").get<int>();
    if (j.contains("seed")) rc.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("detector")) rc.detector = j.at("detector").get<std::string>();

    if (j.contains("train")) {
      const json& t = j.at("train");
      check_keys(t, "train.",
                 {"learning_rate", "batch_size", "lambda", "pretrain_steps", "adversarial_steps",
                  "beta1", "beta2", "eval_every", "plateau_patience", "checkpoint_every"});
      TrainConfig& c = rc.train;
      if (t.contains("learning_rate")) c.learning_rate = t.at("learning_rate").get<double>();
      if (t.contains("batch_size")) c.batch_size = t.at("batch_size").get<int>();
      if (t.contains("lambda")) c.lambda = t.at("lambda").get<double>();
      if (t.contains("pretrain_steps")) c.pretrain_steps = t.at("pretrain_steps").get<int>();
      if (t.contains("adversarial_steps"))
        c.adversarial_steps = t.at("adversarial_steps").get<int>();
      if (t.contains("beta1")) c.beta1 = t.at("beta1").get<double>();
      if (t.contains("beta2")) c.beta2 = t.at("beta2").get<double>();
      if (t.contains("eval_every")) c.eval_every = t.at("eval_every").get<int>();
      if (t.contains("plateau_patience")) c.plateau_patience = t.at("plateau_patience").get<int>();
      if (t.contains("checkpoint_every"))
        c.checkpoint_every = t.at("checkpoint_every").get<int>();
    }

    if (j.contains("synth")) {
      const json& s = j.at("synth");
      check_keys(s, "synth.",
                 {"image_size", "train_clips", "test_clips", "frames_per_clip", "blob_count",
                  "blob_radius", "speed_min", "speed_max", "anomalies"});
      SynthSpec& c = rc.synth;
      if (s.contains("image_size")) c.image_size = s.at("image_size").get<int>();
      if (s.contains("train_clips")) c.train_clips = s.at("train_clips").get<int>();
      if (s.contains("test_clips")) c.test_clips = s.at("test_clips").get<int>();
      if (s.contains("frames_per_clip")) c.frames_per_clip = s.at("frames_per_clip").get<int>();
      if (s.contains("blob_count")) c.blob_count = s.at("blob_count").get<int>();
      if (s.contains("blob_radius")) c.blob_radius = s.at("blob_radius").get<double>();
      if (s.contains("speed_min")) c.speed_min = s.at("speed_min").get<double>();
      if (s.contains("speed_max")) c.speed_max = s.at("speed_max").get<double>();
      if (s.contains("anomalies")) {
        c.anomalies.clear();
        for (const json& a : s.at("anomalies")) {
          check_keys(a, "synth.anomalies[].", {"clip", "type", "start", "end"});
          AnomalyEvent ev;
          ev.clip = a.at("clip").get<int>();
          ev.type = a.at("type").get<std::string>();
          ev.start = a.at("start").get<int>();
          ev.end = a.at("end").get<int>();
          c.anomalies.push_back(ev);
        }
      }
    }
  } catch (const json::exception& e) {
    throw std::runtime_error("config " + path + ": " + e.what());
  }
  rc.from_file = true;
}

ScoreMode parse_detector(const std::string& name) {
  if (name == "combined") return ScoreMode::combined;
  if (name == "generator_only") return ScoreMode::generator_only;
  if (name == "discriminator_only") return ScoreMode::discriminator_only;
  throw std::runtime_error("detector must be combined, generator_only, or discriminator_only; got \"" +
                           name + "\"");
}

RunConfig build_config(const Flags& fl) {
  RunConfig rc;
  if (!fl.config.empty()) apply_config_file(rc, fl.config);
  if (fl.seed_given) rc.seed = fl.seed;
  if (fl.scale_given) {
    rc.input_size = fl.scale;
    rc.synth.image_size = fl.scale;
  }
  rc.train.seed = rc.seed;
  rc.synth.seed = rc.seed;
  parse_detector(rc.detector);  // surface typos before any work happens
  return rc;
}

json config_to_json(const RunConfig& rc) {
  json j;
  j["input_size"] = rc.input_size;
  j["base_channels"] = rc.base();
  j["seed"] = rc.seed;
  j["detector"] = rc.detector;
  j["train"] = {{"learning_rate", rc.train.learning_rate},
                {"batch_size", rc.train.batch_size},
                {"lambda", rc.train.lambda},
                {"pretrain_steps", rc.train.pretrain_steps},
                {"adversarial_steps", rc.train.adversarial_steps},
                {"beta1", rc.train.beta1},
                {"beta2", rc.train.beta2},
                {"eval_every", rc.train.eval_every},
                {"plateau_patience", rc.train.plateau_patience},
                {"checkpoint_every", rc.train.checkpoint_every}};
  json anomalies = json::array();
  for (const AnomalyEvent& ev : rc.synth.anomalies)
    anomalies.push_back(
        {{"clip", ev.clip}, {"type", ev.type}, {"start", ev.start}, {"end", ev.end}});
  j["synth"] = {{"image_size", rc.synth.image_size},
                {"train_clips", rc.synth.train_clips},
                {"test_clips", rc.synth.test_clips},
                {"frames_per_clip", rc.synth.frames_per_clip},
                {"blob_count", rc.synth.blob_count},
                {"blob_radius", rc.synth.blob_radius},
                {"speed_min", rc.synth.speed_min},
                {"speed_max", rc.synth.speed_max},
                {"anomalies", anomalies}};
  return j;
}

/// Writes the fully resolved configuration next to the command's outputs so
/// every artifact records exactly how it was produced.
void echo_config(const RunConfig& rc, const std::string& out_dir, const std::string& command,
                 const json& extra = json::object()) {
  json j = config_to_json(rc);
  j["command"] = command;
  for (const auto& item : extra.items()) j[item.key()] = item.value();
  std::ofstream out(join_path(out_dir, command + "_config.json"));
  if (!out) throw std::runtime_error("cannot write config echo under " + out_dir);
  out << j.dump(2) << "\n";
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw std::runtime_error("cannot create output directory " + dir + ": " + ec.message());
}

// ---------------------------------------------------------------------------
// synth
// ---------------------------------------------------------------------------

int run_synth(const Flags& fl) {
  if (fl.out.empty()) return fail_input("synth needs --out <dir>");
  RunConfig rc = build_config(fl);
  // Without a config file the corpus gets a ready-made pair of labeled
  // anomalies so the default recipe is usable end to end out of the box.
  if (!rc.from_file && rc.synth.anomalies.empty() && rc.synth.frames_per_clip >= 81) {
    if (rc.synth.test_clips >= 1) rc.synth.anomalies.push_back({0, "fast_mover", 40, 80});
    if (rc.synth.test_clips >= 2) rc.synth.anomalies.push_back({1, "shape_change", 30, 70});
  }
  rc.synth.validate();

  const SynthCorpus corpus = synth_generate(rc.synth);
  ensure_dir(fl.out);
  synth_write(corpus, fl.out);
  echo_config(rc, fl.out, "synth");

  std::cout << "wrote " << corpus.train.size() << " train + " << corpus.test.size()
            << " test clips (" << corpus.events.size() << " anomaly events) to " << fl.out << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------
// train
// ---------------------------------------------------------------------------

int run_train(const Flags& fl) {
  if (fl.data.empty()) return fail_input("train needs --data <dir>");
  if (fl.out.empty()) return fail_input("train needs --out <dir>");
  RunConfig rc = build_config(fl);

  GeneratorConfig gcfg;
  gcfg.input_size = rc.input_size;
  gcfg.base_channels = rc.base();
  gcfg.validate();

  const std::vector<Clip> clips = load_dataset(fl.data, rc.input_size);
  for (const Clip& c : clips)
    for (int label : c.labels)
      if (label != 0)
        return fail_input("training data must contain only normal frames, but clip " + c.id +
                          " carries anomaly labels");

  ensure_dir(fl.out);
  Trainer trainer = Trainer::fresh(rc.input_size, rc.base(), rc.train);

  std::ofstream log(join_path(fl.out, "train_log.csv"));
  if (!log) return fail_input("cannot write train_log.csv under " + fl.out);
  log << "step,l_real,l_pixel,L_G,L_D\n";
  trainer.on_report = [&](const LossReport& r) {
    log << r.step << ',' << num(r.l_real) << ',' << num(r.l_pixel) << ',' << num(r.loss_g) << ','
        << num(r.loss_d) << "\n";
    if (r.step == 1 || r.step % 25 == 0)
      std::cout << "step " << r.step << "  l_real " << num(r.l_real) << "  l_pixel "
                << num(r.l_pixel) << "  L_G " << num(r.loss_g) << "  L_D " << num(r.loss_d)
                << "\n";
  };
  trainer.on_checkpoint = [&](int step) {
    if (rc.train.checkpoint_every <= 0) return;
    char name[32];
    std::snprintf(name, sizeof name, "step_%06d", step);
    const std::string dir = join_path(fl.out, name);
    ensure_dir(dir);
    save_generator(join_path(dir, "generator"), trainer.generator());
    save_discriminator(join_path(dir, "discriminator"), trainer.discriminator());
  };

  std::cout << "training on " << clips.size() << " clips at " << rc.input_size << "x"
            << rc.input_size << " (base " << rc.base() << "): " << rc.train.pretrain_steps
            << " reconstruction steps, then " << rc.train.adversarial_steps
            << " adversarial steps\n";
  trainer.pretrain(clips);
  trainer.adversarial(clips);

  save_generator(join_path(fl.out, "generator"), trainer.generator());
  save_discriminator(join_path(fl.out, "discriminator"), trainer.discriminator());
  echo_config(rc, fl.out, "train");

  if (!trainer.reports().empty()) {
    const LossReport& last = trainer.reports().back();
    std::cout << "finished at step " << last.step << "  L_G " << num(last.loss_g) << "  L_D "
              << num(last.loss_d) << "\n";
  }
  std::cout << "saved generator and discriminator to " << fl.out << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------
// score
// ---------------------------------------------------------------------------

int run_score(const Flags& fl) {
  if (fl.data.empty()) return fail_input("score needs --data <dir>");
  if (fl.ckpt.empty()) return fail_input("score needs --ckpt <dir>");
  if (fl.out.empty()) return fail_input("score needs --out <dir>");
  RunConfig rc = build_config(fl);

  const Generator<float> gen = load_generator(join_path(fl.ckpt, "generator"));
  const Discriminator<float> disc = load_discriminator(join_path(fl.ckpt, "discriminator"));
  const std::vector<Clip> clips = load_dataset(fl.data, gen.cfg.input_size);

  const ScoreMode mode = parse_detector(rc.detector);
  const bool global_norm = fl.norm_scope == "global";
  const std::vector<ScoreSeries> series = score_dataset(clips, gen, disc, mode, global_norm);

  ensure_dir(fl.out);
  write_scores_csv(join_path(fl.out, "scores.csv"), to_score_rows(series));
  echo_config(rc, fl.out, "score",
              {{"norm_scope", fl.norm_scope}, {"checkpoint", fl.ckpt}});

  for (const ScoreSeries& s : series) {
    const auto peak = std::max_element(s.score.begin(), s.score.end());
    std::cout << "clip " << s.clip_id << "  frames " << s.score.size() << "  lambda_s "
              << num(s.lambda_s) << "  peak " << num(peak == s.score.end() ? 0.0 : *peak) << "\n";
  }
  std::cout << "wrote " << join_path(fl.out, "scores.csv") << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------
// eval
// ---------------------------------------------------------------------------

std::string filter_report(const std::string& text, const std::string& mode) {
  if (mode.empty()) return text;
  std::istringstream in(text);
  std::ostringstream out;
  std::string line;
  while (std::getline(in, line)) {
    const bool frame_line =
        line.rfind("frame_auc", 0) == 0 || line.rfind("clip_auc", 0) == 0;
    if ((mode == "frame") == frame_line) out << line << "\n";
  }
  return out.str();
}

int run_eval(const Flags& fl) {
  if (fl.data.empty()) return fail_input("eval needs --data <dir> (labels.csv / events.csv)");
  if (fl.out.empty()) return fail_input("eval needs --out <dir> (holds scores.csv)");

  const std::vector<ScoreRow> scores = read_scores_csv(join_path(fl.out, "scores.csv"));
  const std::vector<LabelRow> labels = read_labels_csv(join_path(fl.data, "labels.csv"));
  std::vector<EventRow> events;
  if (fl.mode != "frame") events = read_events_csv(join_path(fl.data, "events.csv"));

  double threshold = fl.threshold_given ? fl.threshold : 0.5;
  if (!fl.threshold_given && fl.mode != "frame") {
    // No operating point supplied: pick the one maximizing TPR - FPR.
    std::map<std::pair<std::string, int>, int> by_frame;
    for (const LabelRow& r : labels) by_frame[{r.clip_id, r.frame_index}] = r.label;
    LabeledScores pooled;
    for (const ScoreRow& s : scores) {
      const auto it = by_frame.find({s.clip_id, s.frame_index});
      if (it == by_frame.end()) continue;
      pooled.scores.push_back(s.score);
      pooled.labels.push_back(it->second);
    }
    threshold = best_threshold_youden(pooled);
    std::cout << "threshold not given; using TPR-FPR optimum " << num(threshold) << "\n";
  }

  const EvalReport report = evaluate(scores, labels, events, threshold, fl.merge_gap);
  const std::string text = filter_report(format_report(report), fl.mode);

  std::ofstream out(join_path(fl.out, "report.txt"));
  if (!out) return fail_input("cannot write report.txt under " + fl.out);
  out << text;
  std::cout << text;
  return kExitOk;
}

// ---------------------------------------------------------------------------
// visualize
// ---------------------------------------------------------------------------

int run_visualize(const Flags& fl) {
  if (fl.data.empty()) return fail_input("visualize needs --data <dir>");
  if (fl.ckpt.empty()) return fail_input("visualize needs --ckpt <dir>");
  if (fl.out.empty()) return fail_input("visualize needs --out <dir>");
  RunConfig rc = build_config(fl);

  const Generator<float> gen = load_generator(join_path(fl.ckpt, "generator"));
  const Discriminator<float> disc = load_discriminator(join_path(fl.ckpt, "discriminator"));
  const std::vector<Clip> clips = load_dataset(fl.data, gen.cfg.input_size);
  const ScoreMode mode = parse_detector(rc.detector);
  const int k = gen.cfg.half_window;

  ensure_dir(fl.out);
  for (const Clip& clip : clips) {
    const ScoreSeries series = score_clip(clip, gen, disc, mode);
    const std::vector<int> centers = window_centers(clip, k);
    int peak_t = centers.front();
    for (int t : centers)
      if (series.score[t] > series.score[peak_t]) peak_t = t;

    const std::vector<TensorF> window = context_window(clip, peak_t, k);
    const TensorF generated = gen.forward(window);
    const TensorF& real = clip.frames[peak_t];
    const TensorF err = error_map(generated, real);
    const TensorF saliency = guided_backprop_map(real_sequence(clip, peak_t, k), disc);

    char stem[64];
    std::snprintf(stem, sizeof stem, "%s_frame_%06d", clip.id.c_str(), peak_t);
    const std::string base = join_path(fl.out, stem);
    save_image(base + "_montage.png", montage_frame(real, generated, err, saliency));
    save_heatmap(err, base + "_error.png");
    save_heatmap(saliency, base + "_saliency.png");
    std::cout << "clip " << clip.id << "  peak frame " << peak_t << "  score "
              << num(series.score[peak_t]) << "  -> " << base << "_*.png\n";
  }
  echo_config(rc, fl.out, "visualize", {{"checkpoint", fl.ckpt}});
  return kExitOk;
}

// ---------------------------------------------------------------------------
// gradcheck
// ---------------------------------------------------------------------------

int run_gradcheck(const Flags& fl) {
  RunConfig rc = build_config(fl);
  const int size = fl.scale_given ? fl.scale : 16;
  const int base = rc.base_channels > 0 ? rc.base_channels : std::max(1, size / 14);

  std::cout << "finite-difference battery at " << size << "x" << size << " (base " << base
            << "), seed " << rc.seed << "\n";
  const std::vector<GradCheckResult> results = run_gradient_battery(size, base, rc.seed);

  std::ostringstream lines;
  bool all_ok = true;
  for (const GradCheckResult& r : results) {
    char buf[128];
    std::snprintf(buf, sizeof buf, "%s %-24s rel_err %.3e (tol %.0e)\n",
                  r.passed() ? "PASS" : "FAIL", r.name.c_str(), r.rel_err, r.tolerance);
    lines << buf;
    all_ok = all_ok && r.passed();
  }
  std::cout << lines.str();
  if (!fl.out.empty()) {
    ensure_dir(fl.out);
    std::ofstream out(join_path(fl.out, "gradcheck.txt"));
    out << lines.str();
  }
  std::cout << (all_ok ? "all checks passed" : "GRADIENT CHECKS FAILED") << "\n";
  return all_ok ? kExitOk : kExitInput;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Spatiotemporal video anomaly detection: an adversarially trained "
               "frame synthesizer scores how poorly each video frame can be "
               "reconstructed from its neighbors."};
  app.require_subcommand(1);

  Flags fl;
  auto* opt_config = app.add_option("--config", fl.config, "JSON run configuration file");
  app.add_option("--data", fl.data, "input directory (frames, or corpus split)");
  app.add_option("--out", fl.out, "output directory");
  app.add_option("--ckpt", fl.ckpt, "checkpoint directory holding generator/discriminator");
  auto* opt_seed = app.add_option("--seed", fl.seed, "master random seed");
  auto* opt_threshold =
      app.add_option("--threshold", fl.threshold, "event detection threshold in (0,1)");
  app.add_option("--merge-gap", fl.merge_gap, "merge detections separated by fewer frames");
  auto* opt_scale =
      app.add_option("--scale", fl.scale, "square frame size (also the synthesis image size)");
  app.add_option("--mode", fl.mode, "report only frame- or event-level results")
      ->check(CLI::IsMember({"frame", "event"}));
  app.add_option("--norm-scope", fl.norm_scope, "score normalization range")
      ->check(CLI::IsMember({"clip", "global"}));

  CLI::App* cmd_synth =
      app.add_subcommand("synth", "render a deterministic moving-blob corpus");
  CLI::App* cmd_train =
      app.add_subcommand("train", "train the generator and discriminator on normal clips");
  CLI::App* cmd_score =
      app.add_subcommand("score", "compute per-frame abnormality scores with a checkpoint");
  CLI::App* cmd_eval =
      app.add_subcommand("eval", "frame-level AUC and event-level precision from scores");
  CLI::App* cmd_visualize =
      app.add_subcommand("visualize", "save montage, error, and saliency images per clip");
  CLI::App* cmd_gradcheck =
      app.add_subcommand("gradcheck", "finite-difference check of every gradient path");
  for (CLI::App* sub :
       {cmd_synth, cmd_train, cmd_score, cmd_eval, cmd_visualize, cmd_gradcheck})
    sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  fl.seed_given = opt_seed->count() > 0;
  fl.threshold_given = opt_threshold->count() > 0;
  fl.scale_given = opt_scale->count() > 0;
  (void)opt_config;

  try {
    if (cmd_synth->parsed()) return run_synth(fl);
    if (cmd_train->parsed()) return run_train(fl);
    if (cmd_score->parsed()) return run_score(fl);
    if (cmd_eval->parsed()) return run_eval(fl);
    if (cmd_visualize->parsed()) return run_visualize(fl);
    if (cmd_gradcheck->parsed()) return run_gradcheck(fl);
  } catch (const DivergenceError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitDiverged;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInput;
  }
  return kExitUsage;
}
