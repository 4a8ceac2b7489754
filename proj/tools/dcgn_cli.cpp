// Command-line front end: synthetic data, fitting, segmentation, evaluation
// and repeated-trial reports.

#include "dcgn/checkpoint.hpp"
#include "dcgn/config_file.hpp"
#include "dcgn/image_io.hpp"
#include "dcgn/preprocess.hpp"
#include "dcgn/trials.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>

namespace fs = std::filesystem;

namespace {

constexpr int kExitInvalid = 2;
constexpr int kExitRuntime = 1;

// Flags shared by every subcommand that fits a model.
struct RunFlags {
  std::string config_path;
  int k = 0;
  double lambda = 0.0;
  std::uint64_t seed = 0;
  int epochs = 0;
  int batch_size = 0;
  double learning_rate = 0.0;
  std::string centring;
  std::string objective_scale;
  CLI::Option* k_opt = nullptr;
  CLI::Option* lambda_opt = nullptr;
  CLI::Option* seed_opt = nullptr;
  CLI::Option* epochs_opt = nullptr;
  CLI::Option* batch_opt = nullptr;
  CLI::Option* lr_opt = nullptr;
  CLI::Option* centring_opt = nullptr;
  CLI::Option* scale_opt = nullptr;

  void attach(CLI::App* app) {
    app->add_option("--config", config_path, "key = value settings file")->check(CLI::ExistingFile);
    k_opt = app->add_option("--k", k, "number of classes");
    lambda_opt = app->add_option("--lambda", lambda, "constraint weight");
    seed_opt = app->add_option("--seed", seed, "base random seed");
    epochs_opt = app->add_option("--epochs", epochs, "epoch or iteration budget");
    batch_opt = app->add_option("--batch-size", batch_size, "pixels per minibatch");
    lr_opt = app->add_option("--learning-rate", learning_rate, "initial learning rate");
    centring_opt = app->add_option("--centring", centring, "self-consistent | previous-iterate");
    scale_opt = app->add_option("--objective-scale", objective_scale, "sum | per-sample");
  }

  // File values first, then any flag given on the command line.
  dcgn::ConfigFile resolve() const {
    dcgn::ConfigFile cfg = config_path.empty() ? dcgn::ConfigFile{} : dcgn::load_config(config_path);
    if (k_opt->count()) cfg.run.k = cfg.synthetic.k = k;
    if (lambda_opt->count()) cfg.run.lambda = lambda;
    if (seed_opt->count()) cfg.run.seed = seed;
    if (epochs_opt->count()) cfg.run.epochs = epochs;
    if (batch_opt->count()) cfg.run.batch_size = batch_size;
    if (lr_opt->count()) cfg.run.learning_rate = learning_rate;
    if (centring_opt->count()) cfg.run.centring = dcgn::parse_centring_sign(centring);
    if (scale_opt->count()) cfg.run.objective_scale = dcgn::parse_objective_scale(objective_scale);
    cfg.run.validate();
    return cfg;
  }
};

std::vector<dcgn::LabeledImage> load_dataset_dir(const fs::path& dir) {
  const fs::path images = dir / "images";
  const fs::path masks = dir / "masks";
  const fs::path instances = dir / "instances";
  if (!fs::is_directory(images) || !fs::is_directory(masks)) {
    throw dcgn::InvalidInput(dir.string() + " needs images/ and masks/ subdirectories");
  }
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(images)) {
    if (entry.path().extension() == ".png") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) throw dcgn::InvalidInput("no PNG images in " + images.string());

  std::vector<dcgn::LabeledImage> out;
  for (const auto& file : files) {
    dcgn::LabeledImage item{dcgn::read_rgb_png(file), dcgn::read_mask_png(masks / file.filename()),
                            std::nullopt};
    if (fs::exists(instances / file.filename())) {
      item.instances = dcgn::read_instance_png(instances / file.filename());
    }
    out.push_back(std::move(item));
  }
  return out;
}

std::vector<dcgn::LabeledImage> synthetic_dataset(const dcgn::SyntheticSpec& spec, int count,
                                                  std::uint64_t seed) {
  std::vector<dcgn::LabeledImage> out;
  for (int i = 0; i < count; ++i) {
    out.push_back(dcgn::generate_synthetic(spec, seed + static_cast<std::uint64_t>(i)));
  }
  return out;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << text;
}

void write_reports(const fs::path& dir, const dcgn::TrialSummary& summary) {
  std::ostringstream s, p, d;
  dcgn::write_summary_csv(s, summary);
  dcgn::write_pairwise_csv(p, summary);
  dcgn::write_degeneration_csv(d, summary);
  write_text(dir / "summary.csv", s.str());
  write_text(dir / "pairwise.csv", p.str());
  write_text(dir / "degeneration.csv", d.str());
  std::cout << s.str() << '\n' << p.str() << '\n' << d.str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Deep constrained Gaussian network segmentation toolkit"};
  app.require_subcommand(1);

  // generate
  auto* gen = app.add_subcommand("generate", "write a synthetic image and its ground truth");
  RunFlags gen_flags;
  gen_flags.attach(gen);
  std::string gen_image = "synthetic.png";
  std::string gen_mask = "synthetic_mask.png";
  std::string gen_instances;
  int gen_width = 0, gen_height = 0;
  std::string gen_layout;
  double gen_outliers = 0.0;
  gen->add_option("--image", gen_image, "output RGB PNG");
  gen->add_option("--mask", gen_mask, "output class-index PNG");
  gen->add_option("--instances", gen_instances, "optional 16-bit instance PNG of class 1");
  auto* w_opt = gen->add_option("--width", gen_width);
  auto* h_opt = gen->add_option("--height", gen_height);
  auto* layout_opt = gen->add_option("--layout", gen_layout, "blob | stripes | voronoi");
  auto* outlier_opt = gen->add_option("--outlier-fraction", gen_outliers);

  // fit
  auto* fit = app.add_subcommand("fit", "fit one method to an image and write its labels");
  RunFlags fit_flags;
  fit_flags.attach(fit);
  std::string fit_method = "dcgn";
  std::string fit_image, fit_mask = "pred.png", fit_checkpoint, fit_overlay;
  fit->add_option("--method", fit_method, "dcgn | cgmm-em | gmm | kmeans");
  fit->add_option("--image", fit_image, "input PNG")->required()->check(CLI::ExistingFile);
  fit->add_option("--out", fit_mask, "output class-index PNG");
  fit->add_option("--checkpoint", fit_checkpoint, "where to save the trained model (dcgn only)");
  fit->add_option("--overlay", fit_overlay, "optional colour overlay PNG");

  // segment
  auto* seg = app.add_subcommand("segment", "label an image with a saved model");
  std::string seg_checkpoint, seg_image, seg_out = "pred.png", seg_overlay;
  seg->add_option("--checkpoint", seg_checkpoint)->required()->check(CLI::ExistingFile);
  seg->add_option("--image", seg_image)->required()->check(CLI::ExistingFile);
  seg->add_option("--out", seg_out, "output class-index PNG");
  seg->add_option("--overlay", seg_overlay, "optional colour overlay PNG");

  // evaluate
  auto* eval = app.add_subcommand("evaluate", "score a prediction against ground truth");
  std::string eval_pred, eval_gt, eval_instances, eval_out;
  int eval_k = 0;
  eval->add_option("--pred", eval_pred)->required()->check(CLI::ExistingFile);
  eval->add_option("--gt", eval_gt)->required()->check(CLI::ExistingFile);
  eval->add_option("--k", eval_k, "number of classes")->required();
  eval->add_option("--gt-instances", eval_instances)->check(CLI::ExistingFile);
  eval->add_option("--out", eval_out, "CSV path (stdout if omitted)");

  // repeat
  auto* rep = app.add_subcommand("repeat", "repeated trials with summary statistics");
  RunFlags rep_flags;
  rep_flags.attach(rep);
  int rep_repeats = 10;
  std::string rep_methods = "dcgn,cgmm-em,gmm,kmeans";
  std::string rep_data, rep_out = ".";
  int rep_synthetic = 1;
  bool rep_timing = false;
  rep->add_option("--repeats", rep_repeats, "runs per method")->check(CLI::Range(2, 1000));
  rep->add_option("--methods", rep_methods, "comma-separated method list");
  rep->add_option("--data", rep_data, "directory with images/ and masks/ (else synthetic)");
  rep->add_option("--synthetic", rep_synthetic, "number of synthetic images")->check(CLI::PositiveNumber);
  rep->add_option("--out-dir", rep_out, "directory for the CSV outputs");
  rep->add_flag("--timing", rep_timing, "record wall time per trial");

  // report
  auto* report = app.add_subcommand("report", "summaries from trial CSVs");
  std::vector<std::string> report_inputs;
  std::string report_out = ".";
  report->add_option("trials", report_inputs, "trial CSV files")->required()->check(CLI::ExistingFile);
  report->add_option("--out-dir", report_out, "directory for the summary CSVs");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitInvalid;
  }

  try {
    if (gen->parsed()) {
      dcgn::ConfigFile cfg = gen_flags.resolve();
      dcgn::SyntheticSpec& spec = cfg.synthetic;
      if (w_opt->count()) spec.width = gen_width;
      if (h_opt->count()) spec.height = gen_height;
      if (layout_opt->count()) spec.layout = dcgn::parse_region_layout(gen_layout);
      if (outlier_opt->count()) spec.outlier_fraction = gen_outliers;
      const dcgn::LabeledImage item = dcgn::generate_synthetic(spec, cfg.run.seed);
      dcgn::write_rgb_png(gen_image, item.image);
      dcgn::write_mask_png(gen_mask, item.truth);
      if (!gen_instances.empty()) {
        dcgn::write_instance_png(gen_instances, dcgn::connected_instances(item.truth, 1));
      }
    } else if (fit->parsed()) {
      const dcgn::ConfigFile cfg = fit_flags.resolve();
      const dcgn::Method method = dcgn::parse_method(fit_method);
      const dcgn::ImageTensor img = dcgn::minmax_normalize(dcgn::read_rgb_png(fit_image));
      dcgn::SegmentationMask mask;
      if (method == dcgn::Method::Dcgn) {
        const dcgn::TrainResult trained =
            dcgn::train_dcgn(std::span<const dcgn::ImageTensor>(&img, 1), cfg.run);
        mask = dcgn::predict(trained.network, img);
        if (!fit_checkpoint.empty()) {
          dcgn::save_checkpoint(fit_checkpoint, {trained.network, trained.mixture});
        }
        std::cout << "epochs " << trained.trace.entries.size() << " final objective "
                  << trained.trace.entries.back().objective << '\n';
      } else {
        if (!fit_checkpoint.empty()) {
          throw dcgn::InvalidInput("--checkpoint is only available for --method dcgn");
        }
        mask = dcgn::run_method(method, img, cfg.run).mask;
      }
      dcgn::write_mask_png(fit_mask, mask);
      if (!fit_overlay.empty()) dcgn::write_overlay_png(fit_overlay, img, mask);
    } else if (seg->parsed()) {
      const dcgn::Checkpoint ckpt = dcgn::load_checkpoint(seg_checkpoint);
      const dcgn::ImageTensor img = dcgn::minmax_normalize(dcgn::read_rgb_png(seg_image));
      const dcgn::SegmentationMask mask = dcgn::predict(ckpt.network, img);
      dcgn::write_mask_png(seg_out, mask);
      if (!seg_overlay.empty()) dcgn::write_overlay_png(seg_overlay, img, mask);
    } else if (eval->parsed()) {
      dcgn::LabeledImage truth{dcgn::ImageTensor{}, dcgn::read_mask_png(eval_gt), std::nullopt};
      if (!eval_instances.empty()) truth.instances = dcgn::read_instance_png(eval_instances);
      const dcgn::ScoreSet s = dcgn::score_prediction(dcgn::read_mask_png(eval_pred), truth, eval_k);
      std::ostringstream csv;
      csv.precision(17);
      csv << "precision,recall,dice,aji_standard,aji_paper,nmi,mi\n"
          << s.precision << ',' << s.recall << ',' << s.dice << ',';
      if (s.aji) csv << *s.aji;
      csv << ',';
      if (s.aji_paper) csv << *s.aji_paper;
      csv << ',' << s.nmi << ',' << s.mi << '\n';
      if (eval_out.empty()) {
        std::cout << csv.str();
      } else {
        write_text(eval_out, csv.str());
      }
    } else if (rep->parsed()) {
      const dcgn::ConfigFile cfg = rep_flags.resolve();
      const std::vector<dcgn::Method> methods = dcgn::parse_method_list(rep_methods);
      const std::vector<dcgn::LabeledImage> data =
          rep_data.empty() ? synthetic_dataset(cfg.synthetic, rep_synthetic, cfg.run.seed)
                           : load_dataset_dir(rep_data);
      const auto reports =
          dcgn::run_repeated_trials(data, methods, cfg.run, rep_repeats, {rep_timing});
      fs::create_directories(rep_out);
      std::ostringstream trials;
      dcgn::write_trials_csv(trials, reports);
      write_text(fs::path(rep_out) / "trials.csv", trials.str());
      write_reports(rep_out, dcgn::summarize_trials(reports));
    } else if (report->parsed()) {
      std::vector<dcgn::TrialReport> reports;
      for (const auto& path : report_inputs) {
        std::ifstream in(path);
        auto part = dcgn::read_trials_csv(in);
        reports.insert(reports.end(), part.begin(), part.end());
      }
      fs::create_directories(report_out);
      write_reports(report_out, dcgn::summarize_trials(reports));
    }
  } catch (const dcgn::InvalidInput& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInvalid;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return 0;
}
