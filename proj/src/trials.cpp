#include "dcgn/trials.hpp"

#include "dcgn/baselines.hpp"
#include "dcgn/network.hpp"
#include "dcgn/preprocess.hpp"

#include <charconv>
#include <chrono>
#include <cstdio>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>

namespace dcgn {

namespace {

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string format_optional(const std::optional<double>& v) {
  return v ? format_double(*v) : std::string{};
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_double_cell(const std::string& cell, const char* column) {
  try {
    std::size_t used = 0;
    const double v = std::stod(cell, &used);
    if (used == cell.size()) return v;
  } catch (const std::exception&) {
  }
  throw InvalidInput(std::string("bad value '") + cell + "' in column " + column);
}

std::optional<double> parse_optional_cell(const std::string& cell, const char* column) {
  if (cell.empty()) return std::nullopt;
  return parse_double_cell(cell, column);
}

long long parse_int_cell(const std::string& cell, const char* column) {
  try {
    std::size_t used = 0;
    const long long v = std::stoll(cell, &used);
    if (used == cell.size()) return v;
  } catch (const std::exception&) {
  }
  throw InvalidInput(std::string("bad integer '") + cell + "' in column " + column);
}

std::uint64_t parse_seed_cell(const std::string& cell) {
  std::uint64_t v = 0;
  const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
  if (ec != std::errc{} || ptr != cell.data() + cell.size()) {
    throw InvalidInput("bad seed '" + cell + "'");
  }
  return v;
}

template <typename Error>
[[noreturn]] void rethrow_with_context(const Error& e, Method method, std::uint64_t seed) {
  throw Error(to_string(method) + " (seed " + std::to_string(seed) + "): " + e.what());
}

}  // namespace

std::string to_string(Method method) {
  switch (method) {
    case Method::Dcgn:
      return "dcgn";
    case Method::ConstrainedEm:
      return "cgmm-em";
    case Method::Gmm:
      return "gmm";
    case Method::Kmeans:
      return "kmeans";
  }
  return "dcgn";
}

Method parse_method(const std::string& text) {
  if (text == "dcgn") return Method::Dcgn;
  if (text == "cgmm-em") return Method::ConstrainedEm;
  if (text == "gmm") return Method::Gmm;
  if (text == "kmeans") return Method::Kmeans;
  throw InvalidInput("unknown method '" + text + "'");
}

std::vector<Method> parse_method_list(const std::string& comma_separated) {
  std::vector<Method> out;
  std::stringstream ss(comma_separated);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(parse_method(item));
  }
  if (out.empty()) throw InvalidInput("no methods given");
  return out;
}

MethodOutput run_method(Method method, const ImageTensor& img, const RunConfig& config) {
  config.validate();
  const PixelBatch batch = flatten_image(img);
  MethodOutput out;
  switch (method) {
    case Method::Dcgn: {
      const TrainResult trained = train_dcgn(std::span<const ImageTensor>(&img, 1), config);
      out.mask = predict(trained.network, img);
      out.epochs = epochs_to_convergence(trained.trace);
      return out;
    }
    case Method::ConstrainedEm:
    case Method::Gmm: {
      const EmResult em = method == Method::Gmm ? fit_gmm(batch, config.k, config)
                                                : fit_constrained_em(batch, config);
      out.mask = SegmentationMask{img.width(), img.height(), argmax_rows(em.posterior.gamma)};
      out.epochs = em.iterations;
      return out;
    }
    case Method::Kmeans: {
      const KmeansResult km = minibatch_kmeans(batch, config.k, config);
      out.mask = SegmentationMask{img.width(), img.height(), km.labels};
      out.epochs = km.epochs;
      return out;
    }
  }
  throw InvalidInput("unknown method");
}

SegmentFn segment_fn(Method method) {
  return [method](const ImageTensor& img, int k, const RunConfig& config) {
    RunConfig run = config;
    run.k = k;
    return run_method(method, img, run).mask;
  };
}

ScoreSet score_prediction(const SegmentationMask& pred, const LabeledImage& truth, int k) {
  const std::vector<int> perm = align_labels(pred, truth.truth, k);
  const SegmentationMask aligned = apply_alignment(pred, perm);

  ScoreSet s;
  for (int c = 0; c < k; ++c) {
    const ClassScores cs = dice_precision_recall(aligned, truth.truth, c);
    s.precision += cs.precision / k;
    s.recall += cs.recall / k;
    s.dice += cs.dice / k;
  }
  s.mi = mutual_information(truth.truth.labels, pred.labels);
  s.nmi = nmi(truth.truth.labels, pred.labels);

  std::optional<InstanceMask> gt_instances = truth.instances;
  if (!gt_instances && k == 2) gt_instances = connected_instances(truth.truth, 1);
  if (gt_instances && std::any_of(gt_instances->ids.begin(), gt_instances->ids.end(),
                                  [](int id) { return id > 0; })) {
    const AjiResult a = aji(*gt_instances, connected_instances(aligned, 1));
    s.aji = a.aji_standard;
    s.aji_paper = a.aji_paper;
  }
  return s;
}

std::vector<TrialReport> run_repeated_trials(std::span<const LabeledImage> dataset,
                                             std::span<const Method> methods,
                                             const RunConfig& config, int repeats,
                                             TrialOptions options) {
  config.validate();
  if (dataset.empty()) throw InvalidInput("trials need at least one image");
  if (repeats < 2) throw InvalidInput("trials need at least 2 repeats");
  std::vector<ImageTensor> normalized;
  normalized.reserve(dataset.size());
  for (const auto& item : dataset) {
    if (item.truth.width != item.image.width() || item.truth.height != item.image.height()) {
      throw InvalidInput("ground truth does not match its image");
    }
    normalized.push_back(minmax_normalize(item.image));
  }

  std::vector<TrialReport> reports;
  int run_id = 0;
  for (Method method : methods) {
    for (int r = 0; r < repeats; ++r) {
      RunConfig run = config;
      run.seed = config.seed + static_cast<std::uint64_t>(r);
      TrialReport report;
      report.run_id = run_id++;
      report.seed = run.seed;
      report.method = to_string(method);
      report.k = run.k;
      report.lambda = (method == Method::Gmm || method == Method::Kmeans) ? 0.0 : run.lambda;

      const auto start = std::chrono::steady_clock::now();
      std::vector<ScoreSet> scores;
      long long epochs = 0;
      std::set<int> empty_union;
      try {
        for (std::size_t i = 0; i < dataset.size(); ++i) {
          const MethodOutput out = run_method(method, normalized[i], run);
          scores.push_back(score_prediction(out.mask, dataset[i], run.k));
          epochs += out.epochs;
          if (detect_collapse(out.mask)) ++report.degeneration.collapse_count;
          const std::vector<int> empty = detect_empty_classes(out.mask, run.k);
          if (!empty.empty()) ++report.degeneration.empty_class_count;
          empty_union.insert(empty.begin(), empty.end());
        }
      } catch (const InvalidInput& e) {
        rethrow_with_context(e, method, run.seed);
      } catch (const NumericalError& e) {
        rethrow_with_context(e, method, run.seed);
      } catch (const std::runtime_error& e) {
        rethrow_with_context(e, method, run.seed);
      }

      const double n = static_cast<double>(scores.size());
      bool all_aji = true;
      double aji_sum = 0.0, aji_paper_sum = 0.0;
      for (const auto& s : scores) {
        report.scores.precision += s.precision / n;
        report.scores.recall += s.recall / n;
        report.scores.dice += s.dice / n;
        report.scores.nmi += s.nmi / n;
        report.scores.mi += s.mi / n;
        if (s.aji) {
          aji_sum += *s.aji / n;
          aji_paper_sum += *s.aji_paper / n;
        } else {
          all_aji = false;
        }
      }
      if (all_aji) {
        report.scores.aji = aji_sum;
        report.scores.aji_paper = aji_paper_sum;
      }
      report.degeneration.collapse = report.degeneration.collapse_count > 0;
      report.degeneration.empty_classes.assign(empty_union.begin(), empty_union.end());
      report.epochs = static_cast<int>(epochs / static_cast<long long>(dataset.size()));
      if (options.record_time) {
        report.wall_ms = std::chrono::duration<double, std::milli>(
                             std::chrono::steady_clock::now() - start)
                             .count();
      }
      reports.push_back(std::move(report));
    }
  }
  return reports;
}

TrialSummary summarize_trials(std::span<const TrialReport> reports) {
  TrialSummary summary;
  std::vector<std::vector<const TrialReport*>> groups;
  for (const auto& r : reports) {
    auto it = std::find_if(summary.methods.begin(), summary.methods.end(),
                           [&](const MethodSummary& m) { return m.method == r.method; });
    if (it == summary.methods.end()) {
      summary.methods.push_back(MethodSummary{});
      summary.methods.back().method = r.method;
      groups.emplace_back();
      it = summary.methods.end() - 1;
    }
    groups[static_cast<std::size_t>(it - summary.methods.begin())].push_back(&r);
  }

  std::vector<std::vector<double>> dice_lists;
  for (std::size_t g = 0; g < groups.size(); ++g) {
    MethodSummary& m = summary.methods[g];
    std::vector<double> dice;
    bool all_aji = true;
    double aji_sum = 0.0;
    for (const TrialReport* r : groups[g]) {
      dice.push_back(r->scores.dice);
      m.mean_precision += r->scores.precision;
      m.mean_recall += r->scores.recall;
      m.mean_nmi += r->scores.nmi;
      m.mean_epochs += r->epochs;
      m.collapse_images += r->degeneration.collapse_count;
      m.empty_class_images += r->degeneration.empty_class_count;
      if (r->scores.aji) {
        aji_sum += *r->scores.aji;
      } else {
        all_aji = false;
      }
    }
    const double n = static_cast<double>(dice.size());
    m.runs = static_cast<int>(dice.size());
    m.mean_dice = mean_of(dice);
    m.std_dice = population_std(dice);
    m.max_dice = *std::max_element(dice.begin(), dice.end());
    m.mean_precision /= n;
    m.mean_recall /= n;
    m.mean_nmi /= n;
    m.mean_epochs /= n;
    if (all_aji) m.mean_aji = aji_sum / n;
    m.unstable = dice.size() >= 2 && assess_instability(dice);
    dice_lists.push_back(std::move(dice));
  }

  for (std::size_t a = 0; a < dice_lists.size(); ++a) {
    for (std::size_t b = a + 1; b < dice_lists.size(); ++b) {
      const std::size_t n = std::min(dice_lists[a].size(), dice_lists[b].size());
      if (n == 0) continue;
      PairwiseTest t{summary.methods[a].method, summary.methods[b].method, {}};
      t.test = wilcoxon_signed_rank(std::span(dice_lists[a]).first(n),
                                    std::span(dice_lists[b]).first(n));
      summary.pairs.push_back(std::move(t));
    }
  }
  return summary;
}

void write_trials_csv(std::ostream& out, std::span<const TrialReport> reports) {
  out << kTrialCsvHeader << '\n';
  for (const auto& r : reports) {
    out << r.run_id << ',' << r.seed << ',' << r.method << ',' << r.k << ','
        << format_double(r.lambda) << ',' << format_double(r.scores.precision) << ','
        << format_double(r.scores.recall) << ',' << format_double(r.scores.dice) << ','
        << format_optional(r.scores.aji) << ',' << format_optional(r.scores.aji_paper) << ','
        << format_double(r.scores.nmi) << ',' << format_double(r.scores.mi) << ','
        << r.degeneration.collapse_count << ',' << r.degeneration.empty_class_count << ','
        << r.epochs << ',' << format_optional(r.wall_ms) << '\n';
  }
}

std::vector<TrialReport> read_trials_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kTrialCsvHeader) {
    throw InvalidInput("trial CSV header does not match");
  }
  std::vector<TrialReport> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto cells = split_csv(line);
    if (cells.size() != 16) throw InvalidInput("trial CSV row has " + std::to_string(cells.size()) + " columns");
    TrialReport r;
    r.run_id = static_cast<int>(parse_int_cell(cells[0], "run_id"));
    r.seed = parse_seed_cell(cells[1]);
    r.method = cells[2];
    r.k = static_cast<int>(parse_int_cell(cells[3], "k"));
    r.lambda = parse_double_cell(cells[4], "lambda");
    r.scores.precision = parse_double_cell(cells[5], "precision");
    r.scores.recall = parse_double_cell(cells[6], "recall");
    r.scores.dice = parse_double_cell(cells[7], "dice");
    r.scores.aji = parse_optional_cell(cells[8], "aji_standard");
    r.scores.aji_paper = parse_optional_cell(cells[9], "aji_paper");
    r.scores.nmi = parse_double_cell(cells[10], "nmi");
    r.scores.mi = parse_double_cell(cells[11], "mi");
    r.degeneration.collapse_count = static_cast<int>(parse_int_cell(cells[12], "collapse"));
    r.degeneration.empty_class_count = static_cast<int>(parse_int_cell(cells[13], "empty_classes"));
    r.degeneration.collapse = r.degeneration.collapse_count > 0;
    r.epochs = static_cast<int>(parse_int_cell(cells[14], "epochs"));
    r.wall_ms = parse_optional_cell(cells[15], "wall_ms");
    out.push_back(std::move(r));
  }
  return out;
}

void write_summary_csv(std::ostream& out, const TrialSummary& summary) {
  out << "method,runs,dice_mean,dice_std,dice_max,precision_mean,recall_mean,aji_mean,nmi_mean,"
         "epochs_mean\n";
  for (const auto& m : summary.methods) {
    out << m.method << ',' << m.runs << ',' << format_double(m.mean_dice) << ','
        << format_double(m.std_dice) << ',' << format_double(m.max_dice) << ','
        << format_double(m.mean_precision) << ',' << format_double(m.mean_recall) << ','
        << format_optional(m.mean_aji) << ',' << format_double(m.mean_nmi) << ','
        << format_double(m.mean_epochs) << '\n';
  }
}

void write_pairwise_csv(std::ostream& out, const TrialSummary& summary) {
  out << "method_a,method_b,n_effective,statistic,p_two_sided,test,degenerate\n";
  for (const auto& p : summary.pairs) {
    out << p.method_a << ',' << p.method_b << ',' << p.test.n_effective << ','
        << format_double(p.test.statistic) << ',' << format_double(p.test.p_two_sided) << ','
        << to_string(p.test.method) << ',' << (p.test.degenerate ? 1 : 0) << '\n';
  }
}

void write_degeneration_csv(std::ostream& out, const TrialSummary& summary) {
  out << "method,runs,collapse_images,empty_class_images,dice_std,unstable\n";
  for (const auto& m : summary.methods) {
    out << m.method << ',' << m.runs << ',' << m.collapse_images << ',' << m.empty_class_images
        << ',' << format_double(m.std_dice) << ',' << (m.unstable ? 1 : 0) << '\n';
  }
}

}  // namespace dcgn
