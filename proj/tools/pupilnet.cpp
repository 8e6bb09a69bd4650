#include <chrono>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "pupilnet/detector/detector.hpp"
#include "pupilnet/eval/eval.hpp"
#include "pupilnet/io/image_io.hpp"
#include "pupilnet/io/manifest.hpp"
#include "pupilnet/io/synthetic.hpp"
#include "pupilnet/nn/model_io.hpp"
#include "pupilnet/nn/network.hpp"
#include "pupilnet/parallel.hpp"
#include "pupilnet/trainer/trainer.hpp"
#include "verify.hpp"

namespace fs = std::filesystem;
using namespace pupilnet;

namespace {

const CLI::Validator kConfigName(
    [](std::string& value) -> std::string {
      try {
        nn::parse_config_name(value);
        return {};
      } catch (const std::exception& e) {
        return e.what();
      }
    },
    "CK8P8|CK8P16|CK16P32|FINE|SK8P8", "model config");

struct TrainFlags {
  std::uint64_t seed = 1;
  int rounds = 4;
  int epochs = 50;
  int fine_tune_epochs = 10;
  int batch_size = 100;
  std::size_t round1_size = 20000;
  std::size_t round_size = 40000;
  double validation_fraction = 0.1;
  std::size_t frames_per_dataset = 2000;
  std::string gradient = "sum";

  void add_to(CLI::App* cmd) {
    cmd->add_option("--seed", seed, "Random seed")->capture_default_str();
    cmd->add_option("--rounds", rounds, "Training rounds")->capture_default_str()->check(CLI::Range(1, 6));
    cmd->add_option("--epochs", epochs, "Epochs per round")->capture_default_str()->check(CLI::PositiveNumber);
    cmd->add_option("--fine-tune-epochs", fine_tune_epochs, "Epochs of the per-iteration fine-tuning pass")
        ->capture_default_str()
        ->check(CLI::NonNegativeNumber);
    cmd->add_option("--batch-size", batch_size, "Samples per update")->capture_default_str()->check(CLI::PositiveNumber);
    cmd->add_option("--round1-size", round1_size, "Samples per dataset in round 1")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
    cmd->add_option("--round-size", round_size, "Samples per dataset in later rounds")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
    cmd->add_option("--validation-fraction", validation_fraction, "Fraction of frames held out for model selection")
        ->capture_default_str();
    cmd->add_option("--frames-per-dataset", frames_per_dataset, "Frames drawn per dataset and round")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
    cmd->add_option("--gradient", gradient, "Learning rate applies to the batch gradient sum or mean")
        ->capture_default_str()
        ->check(CLI::IsMember({"sum", "mean"}));
  }

  trainer::TrainingConfig to_config(nn::ConfigName name, int threads) const {
    trainer::TrainingConfig c;
    c.target_config = name;
    for (int r = 1; r <= rounds; ++r) {
      auto round = trainer::default_round(r);
      round.epochs = epochs;
      round.batch_size = batch_size;
      c.rounds.push_back(round);
    }
    c.scale_set_sizes(round1_size, round_size);
    c.rng_seed = seed;
    c.fine_tune_epochs = fine_tune_epochs;
    c.validation_fraction = validation_fraction;
    c.frames_per_dataset = frames_per_dataset;
    c.threads = threads;
    c.reduction = gradient == "mean" ? trainer::GradientReduction::Mean : trainer::GradientReduction::Sum;
    c.validate();
    return c;
  }
};

std::vector<Dataset> load_datasets(const std::vector<std::string>& manifests) {
  std::vector<Dataset> out;
  for (const auto& m : manifests) out.push_back(io::load_dataset(io::load_manifest(m)));
  return out;
}

void print_row(const trainer::LogRow& r) {
  std::cerr << "round " << r.round << " epoch " << r.epoch << " iteration " << r.iteration << " lr " << r.lr
            << " loss " << r.mean_loss << " validation " << r.validation_score << '\n';
}

// --- train ------------------------------------------------------------------

struct TrainCommand {
  std::string config;
  std::vector<std::string> data;
  std::string out;
  std::string log;
  int threads = default_thread_count();
  bool single_thread = false;
  bool verbose = false;
  TrainFlags flags;

  void add_to(CLI::App& app) {
    auto* cmd = app.add_subcommand("train", "Train a network on labeled datasets");
    cmd->add_option("--config", config, "Model configuration")->required()->check(kConfigName);
    cmd->add_option("--data", data, "Dataset manifest CSV (repeatable)")->required()->check(CLI::ExistingFile);
    cmd->add_option("--out", out, "Output model file")->required();
    cmd->add_option("--log", log, "Training log CSV (default: <out>.log.csv)");
    cmd->add_option("--threads", threads, "Worker threads")->capture_default_str()->check(CLI::PositiveNumber);
    cmd->add_flag("--single-thread", single_thread, "Run on one thread");
    cmd->add_flag("--verbose", verbose, "Print every logged checkpoint");
    flags.add_to(cmd);
    cmd->callback([this] { run(); });
  }

  void run() {
    const auto name = nn::parse_config_name(config);
    const auto cfg = flags.to_config(name, single_thread ? 1 : threads);
    const auto datasets = load_datasets(data);
    trainer::ProgressCallback progress;
    if (verbose) progress = print_row;
    const auto result = trainer::train_rounds(nn::build_config(name), datasets, cfg, progress);
    nn::save_model(result.model, out);
    trainer::write_log_csv(result.log, fs::path(log.empty() ? out + ".log.csv" : log));
    std::cerr << "trained " << nn::to_string(name) << ": validation score " << result.validation_score << ", "
              << result.generation.frames_skipped << " frame(s) skipped near the border\n";
  }
};

// --- detect -----------------------------------------------------------------

struct DetectCommand {
  std::string method = "direct";
  std::string model;
  std::string coarse_model;
  std::string fine_model;
  int radius = 10;
  int stride = 1;
  int coarse_stride = 1;
  int scan_stride = 2;
  std::string manifest;
  std::vector<std::string> images;
  std::string out;
  bool no_latency = false;
  bool verbose = false;

  void add_to(CLI::App& app) {
    auto* cmd = app.add_subcommand("detect", "Detect pupil centers in images");
    cmd->add_option("--method", method, "Detection pipeline")
        ->capture_default_str()
        ->check(CLI::IsMember({"direct", "two-stage"}));
    cmd->add_option("--model", model, "SK8P8 model for direct detection")->check(CLI::ExistingFile);
    cmd->add_option("--coarse-model", coarse_model, "Coarse model for two-stage detection")->check(CLI::ExistingFile);
    cmd->add_option("--fine-model", fine_model, "FINE model for two-stage detection")->check(CLI::ExistingFile);
    cmd->add_option("--radius", radius, "Fine search radius in pixels")->capture_default_str()->check(CLI::NonNegativeNumber);
    cmd->add_option("--stride", stride, "Fine search stride")->capture_default_str()->check(CLI::PositiveNumber);
    cmd->add_option("--coarse-stride", coarse_stride, "Coarse scan stride (two-stage)")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
    cmd->add_option("--scan-stride", scan_stride, "Scan stride (direct)")->capture_default_str()->check(CLI::PositiveNumber);
    auto* m = cmd->add_option("--manifest", manifest, "Dataset manifest listing the images")->check(CLI::ExistingFile);
    cmd->add_option("images", images, "Image files")->check(CLI::ExistingFile)->excludes(m);
    cmd->add_option("--out", out, "Output CSV (default: stdout)");
    cmd->add_flag("--no-latency", no_latency, "Write 0 instead of measured latency");
    cmd->add_flag("--verbose", verbose, "Report window evaluation counts");
    cmd->callback([this] { run(); });
  }

  void run() {
    std::optional<nn::NetworkModel> direct;
    std::optional<nn::NetworkModel> coarse;
    std::optional<nn::NetworkModel> fine;
    if (method == "direct") {
      if (model.empty()) throw std::invalid_argument("direct detection needs --model");
      direct = nn::load_model(model);
      if (direct->config != nn::ConfigName::SK8P8)
        throw std::invalid_argument("direct detection needs an SK8P8 model, '" + model + "' is " +
                                    std::string(nn::to_string(direct->config)));
    } else {
      if (coarse_model.empty() || fine_model.empty())
        throw std::invalid_argument("two-stage detection needs --coarse-model and --fine-model");
      coarse = nn::load_model(coarse_model);
      fine = nn::load_model(fine_model);
      if (coarse->config == nn::ConfigName::Fine)
        throw std::invalid_argument("'" + coarse_model + "' is a FINE model but a coarse model is expected");
      if (fine->config != nn::ConfigName::Fine)
        throw std::invalid_argument("'" + fine_model + "' is " + std::string(nn::to_string(fine->config)) +
                                    " but a FINE model is expected");
    }

    std::vector<std::pair<std::string, fs::path>> inputs;
    if (!manifest.empty()) {
      const auto mf = io::load_manifest(manifest);
      for (const auto& f : mf.frames) inputs.emplace_back(f.image, mf.root / f.image);
    } else {
      for (const auto& i : images) inputs.emplace_back(i, i);
    }
    if (inputs.empty()) throw std::invalid_argument("no images given; pass image files or --manifest");

    std::ofstream file;
    if (!out.empty()) {
      file.open(out, std::ios::binary);
      if (!file) throw std::runtime_error("cannot write '" + out + "'");
    }
    std::ostream& os = out.empty() ? std::cout : file;
    os << "image,x,y,confidence,latency_s\n";
    for (const auto& [label, path] : inputs) {
      const GrayImage image = io::load_image(path);
      const auto start = std::chrono::steady_clock::now();
      detector::DetectionResult r;
      if (direct) {
        detector::DirectSettings s;
        s.scan_stride = scan_stride;
        r = detector::detect_direct(image, *direct, s);
      } else {
        detector::TwoStageSettings s;
        s.coarse_stride = coarse_stride;
        s.radius = radius;
        s.fine_stride = stride;
        r = detector::detect_two_stage(image, *coarse, *fine, s);
      }
      const double latency = no_latency ? 0.0 : std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      os << label << ',' << r.refined_center.x << ',' << r.refined_center.y << ',' << r.confidence << ',' << latency
         << '\n';
      if (verbose)
        std::cerr << label << ": " << r.stats.coarse_evaluations << " coarse evaluations, " << r.stats.fine_evaluations
                  << " fine evaluations\n";
    }
    if (!os) throw std::runtime_error("failed writing detections");
  }
};

// --- eval -------------------------------------------------------------------

struct EvalCommand {
  std::vector<std::string> data;
  std::string model;
  std::string fine_model;
  bool cross_validate = false;
  std::string config;
  bool with_fine = false;
  std::string summary;
  std::string curves;
  int threads = default_thread_count();
  bool single_thread = false;
  bool no_latency = false;
  bool verbose = false;
  TrainFlags flags;

  void add_to(CLI::App& app) {
    auto* cmd = app.add_subcommand("eval", "Evaluate detection rates");
    cmd->add_option("--data", data, "Dataset manifest CSV (repeatable)")->required()->check(CLI::ExistingFile);
    auto* m = cmd->add_option("--model", model, "Fixed model to evaluate")->check(CLI::ExistingFile);
    cmd->add_option("--fine-model", fine_model, "FINE model; evaluates the two-stage method behind --model")
        ->check(CLI::ExistingFile)
        ->needs(m);
    auto* cv = cmd->add_flag("--cross-validate", cross_validate, "Leave-one-dataset-out training and evaluation");
    cv->excludes(m);
    cmd->add_option("--config", config, "Model configuration trained per fold")->check(kConfigName)->needs(cv);
    cmd->add_flag("--with-fine", with_fine, "Also train FINE per fold and evaluate the two-stage method")->needs(cv);
    cmd->add_option("--summary", summary, "Summary CSV path")->required();
    cmd->add_option("--curves", curves, "Per-threshold curve CSV path")->required();
    cmd->add_option("--threads", threads, "Worker threads")->capture_default_str()->check(CLI::PositiveNumber);
    cmd->add_flag("--single-thread", single_thread, "Run on one thread so latency reflects a single core");
    cmd->add_flag("--no-latency", no_latency, "Write 0 latency for reproducible reports");
    cmd->add_flag("--verbose", verbose, "Print training progress");
    flags.add_to(cmd);
    cmd->callback([this] { run(); });
  }

  void run() {
    const int workers = single_thread ? 1 : threads;
    if (!cross_validate && model.empty()) throw std::invalid_argument("eval needs --model or --cross-validate");
    if (cross_validate && data.size() < 2)
      throw std::invalid_argument("--cross-validate needs at least two datasets, got " + std::to_string(data.size()));
    if (cross_validate && config.empty()) throw std::invalid_argument("--cross-validate needs --config");

    std::vector<eval::Method> methods;
    if (!cross_validate) {
      const auto m = nn::load_model(model);
      if (!fine_model.empty()) {
        const auto f = nn::load_model(fine_model);
        if (f.config != nn::ConfigName::Fine)
          throw std::invalid_argument("'" + fine_model + "' is not a FINE model");
        if (m.config == nn::ConfigName::Fine) throw std::invalid_argument("'" + model + "' must be a coarse model");
        methods.push_back(eval::two_stage_method(m, f, eval::two_stage_settings_for(m.config)));
      } else if (m.config == nn::ConfigName::SK8P8) {
        methods.push_back(eval::direct_method(m));
      } else if (m.config == nn::ConfigName::Fine) {
        throw std::invalid_argument("a FINE model needs a coarse model; pass the coarse one to --model and FINE to --fine-model");
      } else {
        methods.push_back(eval::coarse_method(m));
      }
    }

    const auto datasets = load_datasets(data);
    eval::EvaluationTable table;
    if (cross_validate) {
      eval::CrossValidationOptions o;
      const auto name = nn::parse_config_name(config);
      o.training = flags.to_config(name, workers);
      o.with_fine = with_fine;
      o.fine_training = flags.to_config(nn::ConfigName::Fine, workers);
      o.threads = workers;
      o.measure_latency = !no_latency;
      if (verbose) o.progress = print_row;
      table = eval::cross_validate(datasets, o).table;
    } else {
      table = eval::evaluate_datasets(datasets, methods, workers, !no_latency);
    }
    eval::emit_report(table, summary, curves);
  }
};

// --- synth ------------------------------------------------------------------

struct SynthCommand {
  std::size_t count = 0;
  std::string out;
  io::SyntheticParams p;

  void add_to(CLI::App& app) {
    auto* cmd = app.add_subcommand("synth", "Render a labeled synthetic eye dataset");
    cmd->add_option("--count", count, "Number of frames")->required();
    cmd->add_option("--out", out, "Output directory")->required();
    cmd->add_option("--seed", p.seed, "Random seed")->capture_default_str();
    cmd->add_option("--dataset-id", p.dataset_id, "Dataset identifier")->capture_default_str();
    cmd->add_option("--width", p.width, "Image width")->capture_default_str();
    cmd->add_option("--height", p.height, "Image height")->capture_default_str();
    cmd->add_option("--pupil-radius-min", p.pupil_radius_min)->capture_default_str();
    cmd->add_option("--pupil-radius-max", p.pupil_radius_max)->capture_default_str();
    cmd->add_option("--iris-radius-min", p.iris_radius_min)->capture_default_str();
    cmd->add_option("--iris-radius-max", p.iris_radius_max)->capture_default_str();
    cmd->add_option("--pupil-intensity", p.pupil_intensity)->capture_default_str();
    cmd->add_option("--iris-intensity", p.iris_intensity)->capture_default_str();
    cmd->add_option("--sclera-intensity", p.sclera_intensity)->capture_default_str();
    cmd->add_option("--reflections-min", p.reflections_min)->capture_default_str();
    cmd->add_option("--reflections-max", p.reflections_max)->capture_default_str();
    cmd->add_option("--reflection-radius-min", p.reflection_radius_min)->capture_default_str();
    cmd->add_option("--reflection-radius-max", p.reflection_radius_max)->capture_default_str();
    cmd->add_option("--reflection-intensity", p.reflection_intensity)->capture_default_str();
    cmd->add_option("--illumination-gradient", p.illumination_gradient, "Maximum brightness change across the frame")
        ->capture_default_str();
    cmd->add_option("--noise", p.noise_sigma, "Gaussian noise sigma")->capture_default_str();
    cmd->add_option("--blur", p.blur_sigma, "Gaussian blur sigma")->capture_default_str();
    cmd->add_option("--border-margin", p.border_margin, "Minimum pupil distance from the border")->capture_default_str();
    cmd->callback([this] { run(); });
  }

  void run() {
    io::validate(p);
    io::write_synthetic_dataset(io::synth_generate(p, count), out);
  }
};

// --- verify -----------------------------------------------------------------

struct VerifyCommand {
  tools::VerifyOptions options;
  std::string fault;
  bool passed = true;

  void add_to(CLI::App& app) {
    auto* cmd = app.add_subcommand("verify", "Run gradient and detector self-checks");
    cmd->add_option("--trials", options.trials, "Random triples per configuration")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
    cmd->add_option("--seed", options.seed, "Random seed")->capture_default_str();
    // Negative control: a deliberately broken backward pass must be reported.
    cmd->add_option("--inject-fault", fault)->check(CLI::IsMember({"pool", "conv"}))->group("");
    cmd->callback([this] { run(); });
  }

  void run() {
    if (fault == "pool") options.fault = nn::BackwardFault::PoolNoScaling;
    if (fault == "conv") options.fault = nn::BackwardFault::ConvSignFlip;
    passed = tools::run_verify(options, std::cout);
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Pupil center detection with small convolutional networks"};
  app.set_config("--config-file", "", "INI/TOML file whose keys mirror the flags; flags take precedence");
  app.require_subcommand(1);

  TrainCommand train;
  DetectCommand detect;
  EvalCommand evaluate;
  SynthCommand synth;
  VerifyCommand verify;
  train.add_to(app);
  detect.add_to(app);
  evaluate.add_to(app);
  synth.add_to(app);
  verify.add_to(app);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return verify.passed ? 0 : 1;
}
