#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "trajcd/trajcd.hpp"

namespace {

using namespace trajcd;

constexpr int kExitInput = 2;
constexpr int kExitNumerical = 3;
constexpr int kExitMismatch = 4;
constexpr double kDefaultQuantile = 0.999;
constexpr int kBaselineQuadPoints = 256;
constexpr int kOverlayPoints = 201;

// Metadata keys written by `fit` and consumed by `score`/`baseline`.
const std::string kCalQuantile = "calibration_quantile";
const std::string kCalThreshold = "calibration_threshold";
const std::string kCalSize = "calibration_size";

struct RunConfig {
  std::string command;
  std::string input;
  std::string output;
  std::string model;
  std::string reference;
  std::string histogram_out;
  int d = 4;
  int n = 4;
  bool d_given = false;
  bool n_given = false;
  std::optional<double> epsilon;
  std::optional<int> quad_points;
  std::optional<double> quantile;
  std::optional<double> multiple;
  std::optional<std::uint64_t> seed;
  std::string domain_text;
  bool deterministic = false;
  int example = 1;
  std::size_t samples = 1000;
  double outlier_eps = synth::kExample2Amplitude;
  int naive_degree = 2;
  std::optional<double> naive_delta;
};

Domain parse_domain(const std::string& text) {
  const auto colon = text.find(':', 1);
  if (colon == std::string::npos) throw InputError("--domain expects lo:hi, got '" + text + "'");
  try {
    std::size_t used_lo = 0, used_hi = 0;
    const std::string lo_text = text.substr(0, colon), hi_text = text.substr(colon + 1);
    const double lo = std::stod(lo_text, &used_lo);
    const double hi = std::stod(hi_text, &used_hi);
    if (used_lo != lo_text.size() || used_hi != hi_text.size()) throw std::invalid_argument(text);
    return Domain(lo, hi);
  } catch (const std::logic_error&) {
    throw InputError("--domain expects lo:hi, got '" + text + "'");
  }
}

std::optional<Domain> given_domain(const RunConfig& cfg) {
  if (cfg.domain_text.empty()) return std::nullopt;
  return parse_domain(cfg.domain_text);
}

std::string fmt(double x) { return format_number(x); }

std::string domain_text(const Domain& d) { return "[" + fmt(d.lo) + "," + fmt(d.hi) + "]"; }

std::string threshold_text(const RunConfig& cfg) {
  if (cfg.multiple) return ThresholdMethod::multiple(*cfg.multiple).describe();
  return ThresholdMethod::quantile(cfg.quantile.value_or(kDefaultQuantile)).describe();
}

// Every run states its effective defaults on stderr.
void print_header(const RunConfig& cfg, int d, int n, const Domain& domain,
                  std::optional<double> epsilon = std::nullopt) {
  if (!epsilon) epsilon = cfg.epsilon;
  std::ostringstream h;
  h << "trajcd " << cfg.command << ": d=" << d << " n=" << n << " epsilon="
    << (epsilon ? fmt(*epsilon) : "auto(1e-08*trace(M)/m)")
    << " quad_points=" << (cfg.quad_points ? std::to_string(*cfg.quad_points)
                                           : std::to_string(default_quad_points(n)) + "(auto)")
    << " threshold=" << threshold_text(cfg)
    << " seed=" << (cfg.seed ? std::to_string(*cfg.seed) : "-") << " domain=" << domain_text(domain)
    << " deterministic=" << (cfg.deterministic ? "yes" : "no");
  std::cerr << h.str() << '\n';
}

csv::Table read_csv(const std::string& path, Domain domain) {
  if (path.empty()) throw InputError("--input is required");
  return csv::read_table_file(path, domain);
}

std::vector<CoefficientVector> coefficients_of(const TrajectoryDataset& data) {
  return data.coefficient_vectors();
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot open '" + path + "' for writing");
  out << text;
  if (!out) throw InputError("failed to write '" + path + "'");
}

std::string utc_now() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string eigen_summary(const ChristoffelModel& model) {
  std::ostringstream s;
  s << "m=" << model.dimension() << " N=" << model.sample_count();
  if (model.has_factorization()) {
    s << " eigenvalue_min=" << fmt(static_cast<double>(model.smallest_eigenvalue()))
      << " eigenvalue_max=" << fmt(static_cast<double>(model.largest_eigenvalue()));
  } else {
    s << " factorization=singular";
  }
  return s.str();
}

ChristoffelModel load_model(const RunConfig& cfg) {
  if (cfg.model.empty()) throw InputError("--model is required");
  return load_file(cfg.model);
}

// Probe/model consistency: explicit degrees and domain must agree with the model.
void check_against_model(const RunConfig& cfg, const ChristoffelModel& model) {
  if (cfg.n_given && cfg.n != model.harmonic_degree()) {
    throw MismatchError("--degree-n " + std::to_string(cfg.n) + " but the model has n = " +
                        std::to_string(model.harmonic_degree()));
  }
  if (cfg.d_given && cfg.d != model.algebraic_degree()) {
    throw MismatchError("--degree-d " + std::to_string(cfg.d) + " but the model has d = " +
                        std::to_string(model.algebraic_degree()));
  }
  if (const auto dom = given_domain(cfg); dom && !(*dom == model.domain())) {
    throw MismatchError("--domain " + domain_text(*dom) + " but the model was fitted on " +
                        domain_text(model.domain()));
  }
}

TrajectoryDataset read_probes(const RunConfig& cfg, const ChristoffelModel& model,
                              const std::string& path) {
  const auto table = read_csv(path, model.domain());
  return table.to_dataset(model.harmonic_degree(), cfg.quad_points, model.domain());
}

Metadata without_calibration(Metadata meta) {
  meta.erase(kCalQuantile);
  meta.erase(kCalThreshold);
  meta.erase(kCalSize);
  return meta;
}

Threshold resolve_threshold(const RunConfig& cfg, const ChristoffelModel& model,
                            const TrajectoryDataset* reference) {
  if (cfg.multiple) {
    const auto method = ThresholdMethod::multiple(*cfg.multiple);
    return Threshold{method.parameter * static_cast<double>(model.dimension()), method, 0};
  }
  const auto& meta = model.metadata();
  const auto stored = meta.find(kCalThreshold);
  if (reference && (cfg.quantile || stored == meta.end())) {
    return calibrate(model, *reference, ThresholdMethod::quantile(cfg.quantile.value_or(kDefaultQuantile)));
  }
  if (stored == meta.end()) {
    throw InputError(
        "the model carries no stored calibration (it was updated or downdated); pass --reference "
        "or --threshold-multiple");
  }
  const double q = std::stod(meta.at(kCalQuantile));
  if (cfg.quantile && *cfg.quantile != q) {
    throw InputError("the model was calibrated at quantile " + meta.at(kCalQuantile) +
                     "; pass --reference to recalibrate at " + fmt(*cfg.quantile));
  }
  return Threshold{std::stod(stored->second), ThresholdMethod::quantile(q),
                   static_cast<std::size_t>(std::stoull(meta.at(kCalSize)))};
}

void write_histogram(const std::string& path, const std::vector<double>& cds) {
  const auto h = make_histogram(cds);
  std::ostringstream out;
  out << "bin_lo,bin_hi,count\n";
  for (std::size_t b = 0; b < h.counts.size(); ++b) {
    out << fmt(h.edges[b]) << ',' << fmt(h.edges[b + 1]) << ',' << h.counts[b] << '\n';
  }
  write_text(path, out.str());
}

void emit(const RunConfig& cfg, const std::string& text) {
  if (cfg.output.empty()) {
    std::cout << text;
  } else {
    write_text(cfg.output, text);
  }
}

std::string summary_line(const std::vector<ScoreReport>& reports, const Threshold& tau) {
  std::size_t outliers = 0;
  double sum = 0.0;
  for (const auto& r : reports) {
    outliers += r.verdict == Verdict::Outlier;
    sum += r.cd;
  }
  std::ostringstream s;
  s << "probes=" << reports.size() << " inliers=" << reports.size() - outliers
    << " outliers=" << outliers << " mean_cd="
    << (reports.empty() ? std::string("n/a") : fmt(sum / static_cast<double>(reports.size())))
    << " threshold=" << fmt(tau.value) << " (" << tau.method.describe() << ")";
  return s.str();
}

int cmd_fit(const RunConfig& cfg) {
  const Domain domain = given_domain(cfg).value_or(Domain{});
  print_header(cfg, cfg.d, cfg.n, domain);
  const auto table = read_csv(cfg.input, domain);
  const auto data = table.to_dataset(cfg.n, cfg.quad_points, domain);
  if (data.empty()) throw InputError("'" + cfg.input + "' contains no trajectories");

  FitOptions options;
  options.epsilon = cfg.epsilon;
  options.domain = domain;
  options.metadata["input_format"] = csv::to_string(table.layout);
  options.metadata["input"] = std::filesystem::path(cfg.input).filename().string();
  if (table.layout == csv::Layout::Trajectory) {
    options.metadata["quad_points"] = std::to_string(cfg.quad_points.value_or(default_quad_points(cfg.n)));
  }
  if (!cfg.deterministic) options.metadata["created"] = utc_now();
  const auto coeffs = coefficients_of(data);
  auto model = fit(std::span<const CoefficientVector>(coeffs), cfg.d, cfg.n, options);

  const double q = cfg.quantile.value_or(kDefaultQuantile);
  const auto tau = calibrate(model, std::span<const CoefficientVector>(coeffs), ThresholdMethod::quantile(q));
  auto meta = model.metadata();
  meta[kCalQuantile] = fmt(q);
  meta[kCalThreshold] = fmt(tau.value);
  meta[kCalSize] = std::to_string(tau.calibration_size);
  model = ChristoffelModel::from_moment_sum(cfg.d, cfg.n, model.moment_sum(), model.sample_count(),
                                            model.epsilon(), domain, std::move(meta));

  if (cfg.output.empty()) throw InputError("--output (model path) is required");
  save_file(model, cfg.output);
  std::cout << eigen_summary(model) << " epsilon=" << fmt(model.epsilon())
            << " threshold=" << fmt(tau.value) << '\n';
  return 0;
}

int cmd_score(const RunConfig& cfg) {
  const auto model = load_model(cfg);
  print_header(cfg, model.algebraic_degree(), model.harmonic_degree(), model.domain(),
               model.epsilon());
  check_against_model(cfg, model);
  const auto probes = read_probes(cfg, model, cfg.input);
  std::optional<TrajectoryDataset> reference;
  if (!cfg.reference.empty()) reference = read_probes(cfg, model, cfg.reference);
  const auto tau = resolve_threshold(cfg, model, reference ? &*reference : nullptr);

  std::vector<ScoreReport> reports;
  std::vector<double> cds;
  std::ostringstream out;
  out << report_header() << '\n';
  for (const auto& probe : probes.entries()) {
    reports.push_back(classify(model, tau, probe.coeffs, probe.id));
    cds.push_back(reports.back().cd);
    out << format_report(reports.back()) << '\n';
  }
  emit(cfg, out.str());
  if (!cfg.histogram_out.empty()) write_histogram(cfg.histogram_out, cds);
  std::cerr << summary_line(reports, tau) << '\n';
  return 0;
}

// Shared by update and downdate; `absorb` adds, otherwise removes.
int cmd_revise(const RunConfig& cfg, bool absorb) {
  auto model = load_model(cfg);
  print_header(cfg, model.algebraic_degree(), model.harmonic_degree(), model.domain(),
               model.epsilon());
  check_against_model(cfg, model);
  const auto batch = read_probes(cfg, model, cfg.input);
  for (const auto& entry : batch.entries()) {
    model = absorb ? update(model, entry.coeffs) : downdate(model, entry.coeffs);
  }
  if (!batch.empty()) {
    model = ChristoffelModel::from_moment_sum(
        model.algebraic_degree(), model.harmonic_degree(), model.moment_sum(), model.sample_count(),
        model.epsilon(), model.domain(), without_calibration(model.metadata()), false);
  }
  const std::string target = cfg.output.empty() ? cfg.model : cfg.output;
  save_file(model, target);
  std::cout << (absorb ? "absorbed=" : "removed=") << batch.size() << ' ' << eigen_summary(model)
            << '\n';
  return 0;
}

int cmd_synth(RunConfig cfg) {
  if (cfg.example != 1 && cfg.example != 2) throw InputError("--example must be 1 or 2");
  if (cfg.samples < 1) throw InputError("--samples must be >= 1");
  if (cfg.output.empty()) throw InputError("--output (file prefix) is required");
  if (!cfg.seed) cfg.seed = cfg.deterministic ? 0 : std::random_device{}();
  print_header(cfg, cfg.d, cfg.n, Domain{});

  const auto experiment = cfg.example == 1
                              ? synth::generate_example1(cfg.samples, *cfg.seed)
                              : synth::generate_example2(cfg.samples, *cfg.seed, cfg.outlier_eps);
  const auto write_pair = [&](const std::string& suffix, const std::vector<const DatasetEntry*>& entries) {
    std::vector<std::string> ids;
    std::vector<std::vector<double>> values;
    std::vector<CoefficientVector> coeffs;
    for (const auto* e : entries) {
      ids.push_back(e->id);
      values.push_back(e->curve->values());
      coeffs.push_back(e->coeffs);
    }
    std::ostringstream curves, coef;
    csv::write_trajectories(curves, synth::curve_times(), ids, values);
    csv::write_coefficients(coef, ids, coeffs);
    write_text(cfg.output + suffix + ".csv", curves.str());
    write_text(cfg.output + suffix + "_coef.csv", coef.str());
  };

  std::vector<const DatasetEntry*> inliers;
  for (const auto& e : experiment.inliers.entries()) inliers.push_back(&e);
  write_pair("_data", inliers);
  write_pair("_outlier", {&experiment.outlier});
  write_pair("_nominal", {&experiment.nominal});

  std::vector<double> grid(kOverlayPoints);
  for (int i = 0; i < kOverlayPoints; ++i) grid[static_cast<std::size_t>(i)] = -1.0 + 2.0 * i / (kOverlayPoints - 1);
  std::vector<std::string> ids = {"nominal", "outlier"};
  std::vector<std::vector<double>> columns = {reconstruct(experiment.nominal.coeffs, grid),
                                              reconstruct(experiment.outlier.coeffs, grid)};
  for (const auto* e : inliers) {
    ids.push_back(e->id);
    columns.push_back(reconstruct(e->coeffs, grid));
  }
  std::ostringstream overlay;
  csv::write_trajectories(overlay, grid, ids, columns);
  write_text(cfg.output + "_overlay.csv", overlay.str());

  std::cout << "example=" << cfg.example << " samples=" << cfg.samples << " seed=" << *cfg.seed
            << " prefix=" << cfg.output << '\n';
  return 0;
}

int cmd_baseline(const RunConfig& cfg) {
  const auto model = load_model(cfg);
  print_header(cfg, model.algebraic_degree(), model.harmonic_degree(), model.domain(),
               model.epsilon());
  check_against_model(cfg, model);
  if (cfg.reference.empty()) throw InputError("--reference (the trajectory database) is required");
  const auto reference = read_probes(cfg, model, cfg.reference);
  if (reference.empty()) throw InputError("the reference database is empty");
  const auto probes = read_probes(cfg, model, cfg.input);
  const auto tau = resolve_threshold(cfg, model, &reference);

  const int quad = cfg.quad_points.value_or(kBaselineQuadPoints);
  const NearestTrajectoryScorer nearest(reference, quad);
  const PointwiseChristoffel naive(reference, cfg.naive_degree, quad);
  const double delta = cfg.naive_delta.value_or(naive.in_cloud_floor());
  if (!(delta >= 0.0)) throw InputError("--naive-delta must be >= 0");

  const auto nodes = chebyshev_quadrature_nodes(quad);
  std::vector<ScoreReport> reports;
  std::ostringstream out;
  out << report_header() << ",naive_fraction\n";
  for (const auto& probe : probes.entries()) {
    auto report = classify(model, tau, probe.coeffs, probe.id);
    const auto values = probe.values_at(nodes);
    report.baseline_l2 = nearest.score_values(values);
    out << format_report(report) << ',' << fmt(naive.score_values(values, delta)) << '\n';
    reports.push_back(std::move(report));
  }
  emit(cfg, out.str());
  std::cerr << summary_line(reports, tau) << " naive_degree=" << cfg.naive_degree
            << " naive_delta=" << fmt(delta) << (cfg.naive_delta ? "" : "(in-cloud floor)") << '\n';
  return 0;
}

int cmd_info(const RunConfig& cfg) {
  const auto model = load_model(cfg);
  std::cout << "d=" << model.algebraic_degree() << " n=" << model.harmonic_degree() << ' '
            << eigen_summary(model) << " epsilon=" << fmt(model.epsilon())
            << " domain=" << domain_text(model.domain()) << " basis=" << BasisEnumeration::ordering_name()
            << '\n';
  for (const auto& [key, value] : model.metadata()) std::cout << key << '=' << value << '\n';
  return 0;
}

int dispatch(const RunConfig& cfg) {
  if (cfg.command == "fit") return cmd_fit(cfg);
  if (cfg.command == "score") return cmd_score(cfg);
  if (cfg.command == "update") return cmd_revise(cfg, true);
  if (cfg.command == "downdate") return cmd_revise(cfg, false);
  if (cfg.command == "synth") return cmd_synth(cfg);
  if (cfg.command == "baseline") return cmd_baseline(cfg);
  return cmd_info(cfg);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Christoffel-function anomaly detection for trajectories"};
  app.require_subcommand(1, 1);
  RunConfig cfg;

  const auto add_degrees = [&](CLI::App* sub) {
    sub->add_option("--degree-d", cfg.d, "algebraic degree d")->check(CLI::NonNegativeNumber);
    sub->add_option("--degree-n", cfg.n, "harmonic degree n")->check(CLI::PositiveNumber);
  };
  const auto add_threshold = [&](CLI::App* sub) {
    auto* q = sub->add_option("--threshold-quantile", cfg.quantile, "nearest-rank quantile in (0,1]");
    auto* a = sub->add_option("--threshold-multiple", cfg.multiple, "threshold alpha * m, alpha >= 1");
    q->excludes(a);
  };
  const auto add_common = [&](CLI::App* sub) {
    sub->add_option("--quad-points", cfg.quad_points, "Gauss-Chebyshev quadrature points M");
    sub->add_option("--domain", cfg.domain_text, "time interval lo:hi (default -1:1)");
    sub->add_flag("--deterministic", cfg.deterministic, "byte-reproducible outputs");
    sub->add_option("--seed", cfg.seed, "random seed");
  };

  auto* fit_cmd = app.add_subcommand("fit", "fit a model on a trajectory or coefficient CSV");
  add_degrees(fit_cmd);
  add_threshold(fit_cmd);
  add_common(fit_cmd);
  fit_cmd->add_option("--epsilon", cfg.epsilon, "regularization (default 1e-8 * trace(M)/m)");
  fit_cmd->add_option("--input", cfg.input, "dataset CSV")->required();
  fit_cmd->add_option("--output", cfg.output, "model file")->required();

  auto* score_cmd = app.add_subcommand("score", "score and classify probe trajectories");
  auto* baseline_cmd = app.add_subcommand("baseline", "cd next to the nearest-trajectory and pointwise baselines");
  for (auto* sub : {score_cmd, baseline_cmd}) {
    add_degrees(sub);
    add_threshold(sub);
    add_common(sub);
    sub->add_option("--model", cfg.model, "model file")->required();
    sub->add_option("--input", cfg.input, "probe CSV")->required();
    sub->add_option("--output", cfg.output, "report CSV (default stdout)");
    sub->add_option("--reference", cfg.reference, "reference CSV for quantile calibration");
  }
  score_cmd->add_option("--histogram-out", cfg.histogram_out, "cd histogram CSV");
  baseline_cmd->add_option("--naive-degree", cfg.naive_degree, "degree of the pointwise CF")
      ->check(CLI::NonNegativeNumber);
  baseline_cmd->add_option("--naive-delta", cfg.naive_delta, "pointwise CF level (default: in-cloud floor)");

  auto* update_cmd = app.add_subcommand("update", "absorb new trajectories into a model");
  auto* downdate_cmd = app.add_subcommand("downdate", "remove trajectories from a model");
  for (auto* sub : {update_cmd, downdate_cmd}) {
    add_degrees(sub);
    add_common(sub);
    sub->add_option("--model", cfg.model, "model file")->required();
    sub->add_option("--input", cfg.input, "trajectory CSV")->required();
    sub->add_option("--output", cfg.output, "new model file (default: overwrite --model)");
  }

  auto* synth_cmd = app.add_subcommand("synth", "generate the synthetic Chebyshev experiments");
  add_degrees(synth_cmd);
  add_common(synth_cmd);
  synth_cmd->add_option("--example", cfg.example, "1 (ball outlier) or 2 (fifth harmonic)");
  synth_cmd->add_option("--samples", cfg.samples, "number of inliers");
  synth_cmd->add_option("--outlier-eps", cfg.outlier_eps, "fifth-harmonic amplitude (example 2)");
  synth_cmd->add_option("--output", cfg.output, "output file prefix")->required();

  auto* info_cmd = app.add_subcommand("info", "describe a model file");
  info_cmd->add_option("--model", cfg.model, "model file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitInput;
  }
  for (auto* sub : app.get_subcommands()) {
    cfg.command = sub->get_name();
    const auto* d_opt = sub->get_option_no_throw("--degree-d");
    const auto* n_opt = sub->get_option_no_throw("--degree-n");
    cfg.d_given = d_opt && d_opt->count() > 0;
    cfg.n_given = n_opt && n_opt->count() > 0;
  }

  try {
    return dispatch(cfg);
  } catch (const MismatchError& e) {
    std::cerr << "trajcd: mismatch: " << e.what() << '\n';
    return kExitMismatch;
  } catch (const NumericalError& e) {
    std::cerr << "trajcd: numerical error: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const Error& e) {
    std::cerr << "trajcd: input error: " << e.what() << '\n';
    return kExitInput;
  } catch (const std::exception& e) {
    std::cerr << "trajcd: " << e.what() << '\n';
    return 1;
  }
}
