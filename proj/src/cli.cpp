#include "agrf/cli.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "agrf/experiments.hpp"
#include "agrf/inference.hpp"
#include "agrf/io.hpp"
#include "agrf/version.hpp"

namespace agrf::cli {

namespace {

namespace fs = std::filesystem;
namespace ex = agrf::experiments;

constexpr int kUsageExit = 1;

struct FitArgs {
  std::string data;
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
};

struct PredictArgs {
  std::string model;
  std::string grid;
  std::string orders;
  std::string out;
};

struct EvalArgs {
  std::string pred;
  std::string truth;
  std::string out;
};

struct StudyArgs {
  std::string example;
  std::string variant;
  std::uint64_t seed = 1;
  std::string out;
};

void print_fit_report(std::ostream &out, const FittedModel<double> &model) {
  const auto &hp = model.hyperparameters();
  const auto &report = model.report();
  out << "log_likelihood " << io::format_double(model.log_likelihood()) << '\n';
  out << "amplitude " << io::format_double(hp.amplitude) << '\n';
  out << "length_scale " << io::format_double(hp.length_scale) << '\n';
  if (is_noisy(model.mode())) {
    for (Index i = 0; i < hp.noise.size(); ++i) {
      out << "delta_" << i << ' ' << io::format_double(hp.noise(i)) << '\n';
    }
  }
  const auto converged = std::count_if(report.restarts.begin(), report.restarts.end(),
                                       [](const RestartSummary &r) { return r.converged; });
  out << "restarts " << report.restarts.size() << " converged " << converged << " best "
      << report.best_restart << " evaluations " << report.total_evaluations << '\n';
  if (model.factor().jitter > 0.0) {
    out << "jitter " << io::format_double(model.factor().jitter) << '\n';
  }
}

int cmd_fit(const FitArgs &args, std::ostream &out) {
  io::RunConfig config;
  if (!args.config.empty()) config = io::read_run_config(args.config);
  if (args.seed) config.fit.seed = *args.seed;
  const ObservationSet<double> obs(io::read_observations(args.data));
  const auto model = fit(obs, PolynomialMean<double>(config.mean), config.mode, config.fit);
  io::save_model(args.out, model, config);
  out << "mode " << to_string(config.mode) << '\n';
  print_fit_report(out, model);
  return 0;
}

int cmd_predict(const PredictArgs &args, std::ostream &out, std::ostream &err) {
  const auto probe = io::load_model(args.model);
  const io::GridSpec grid = args.grid.empty() ? probe.grid : io::parse_grid(args.grid);
  const std::vector<int> orders = args.orders.empty() ? probe.orders : io::parse_orders(args.orders);

  const int data_order = probe.model.observations().max_order();
  const int top = *std::max_element(orders.begin(), orders.end());
  const int needed = std::max(2 * top, top + data_order);
  if (needed > kMaxTableOrder) {
    throw CapacityError("query order " + std::to_string(top) + " needs kernel derivatives of order " +
                        std::to_string(needed) + ", above the supported " +
                        std::to_string(kMaxTableOrder));
  }
  if (top > data_order) {
    err << "warning: order " << top << " exceeds the highest observed order " << data_order
        << "; the prediction is an extrapolated derivative\n";
  }
  const auto loaded = needed > probe.model.max_order() ? io::load_model(args.model, needed) : probe;

  const auto points = grid.points();
  const auto predictions = predict_curve(loaded.model, std::span<const double>(points),
                                         std::span<const int>(orders));
  for (const auto &p : predictions) {
    if (p.variance_warning) {
      err << "warning: negative variance " << io::format_double(p.raw_variance) << " clamped at order "
          << p.order << ", x = " << io::format_double(p.x) << '\n';
    }
  }
  if (args.out.empty()) {
    io::write_predictions(out, predictions);
  } else {
    io::write_predictions(fs::path(args.out), predictions);
  }
  return 0;
}

int cmd_eval(const EvalArgs &args, std::ostream &out) {
  const auto predictions = io::read_predictions(args.pred);
  const auto truth = io::read_observations(args.truth);
  const auto rle = io::evaluate_rle(predictions, truth);
  io::write_rle(out, rle);
  if (!args.out.empty()) {
    std::ofstream file(args.out, std::ios::binary);
    if (!file) throw ValidationError("cannot open '" + args.out + "' for writing");
    io::write_rle(file, rle);
  }
  return 0;
}

int cmd_reproduce(const StudyArgs &args, std::ostream &out) {
  const auto example = ex::parse_example(args.example);
  const std::vector<std::string> variants =
      args.variant.empty() ? ex::variants(example) : std::vector<std::string>{args.variant};
  for (const auto &v : variants) ex::variant_mode(example, v);

  const auto reference = ex::reference_solution(example);
  const datagen::PdeProblem *pde = reference ? &*reference : nullptr;
  ex::RunOptions options;
  options.seed = args.seed;
  for (const auto &v : variants) {
    const auto result = ex::run(example, v, options, pde);
    const fs::path directory = args.variant.empty() ? fs::path(args.out) / v : fs::path(args.out);
    ex::write_report(result, options, directory, pde);
    out << ex::to_string(example) << ' ' << v << " seed " << args.seed;
    for (const auto &c : result.curves) out << " rle" << c.order << ' ' << io::format_double(c.rle);
    out << '\n';
  }
  return 0;
}

int cmd_datagen(const StudyArgs &args, std::ostream &out) {
  const auto example = ex::parse_example(args.example);
  const std::string variant = args.variant.empty() ? ex::variants(example).back() : args.variant;
  ex::variant_mode(example, variant);
  const auto reference = ex::reference_solution(example);
  const datagen::PdeProblem *pde = reference ? &*reference : nullptr;

  const auto obs = ex::make_dataset(example, variant, args.seed, pde);
  const auto truth = ex::truth_table(example, datagen::kEvaluationGridSize, pde);
  fs::create_directories(args.out);
  const auto rows = obs.rows();
  io::write_observations(fs::path(args.out) / "observations.csv", rows);
  io::write_observations(fs::path(args.out) / "truth.csv", truth);
  out << ex::to_string(example) << ' ' << variant << " seed " << args.seed << ": " << rows.size()
      << " observations, " << truth.size() << " truth rows\n";
  return 0;
}

void add_study_options(CLI::App &command, StudyArgs &args, const std::string &variant_help) {
  command.add_option("--example", args.example, "composite | oscillator | kdv | burgers")->required();
  command.add_option("--variant", args.variant, variant_help);
  command.add_option("--seed", args.seed, "data and optimizer seed")->capture_default_str();
  command.add_option("--out", args.out, "output directory")->required();
}

}  // namespace

int run(int argc, const char *const *argv, std::ostream &out, std::ostream &err) {
  CLI::App app{"Regression with derivative observations of any order"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);

  FitArgs fit_args;
  auto *fit_cmd = app.add_subcommand("fit", "fit hyperparameters and write a model file");
  fit_cmd->add_option("--data", fit_args.data, "observation CSV (order,x,value)")->required();
  fit_cmd->add_option("--config", fit_args.config, "run configuration JSON");
  fit_cmd->add_option("--out", fit_args.out, "model file to write")->required();
  fit_cmd->add_option("--seed", fit_args.seed, "optimizer seed (overrides the configuration)");

  PredictArgs predict_args;
  auto *predict_cmd = app.add_subcommand("predict", "posterior mean, variance and 95% band");
  predict_cmd->add_option("--model", predict_args.model, "model file")->required();
  predict_cmd->add_option("--grid", predict_args.grid, "lo:hi:count (default from the model)");
  predict_cmd->add_option("--orders", predict_args.orders, "comma list of derivative orders");
  predict_cmd->add_option("--out", predict_args.out, "prediction CSV (default stdout)");

  EvalArgs eval_args;
  auto *eval_cmd = app.add_subcommand("eval", "relative L2 error per order");
  eval_cmd->add_option("--pred", eval_args.pred, "prediction CSV")->required();
  eval_cmd->add_option("--truth", eval_args.truth, "truth CSV (order,x,value)")->required();
  eval_cmd->add_option("--out", eval_args.out, "also write order,rle to this file");

  StudyArgs reproduce_args;
  auto *reproduce_cmd = app.add_subcommand("reproduce", "run a reproduction study end to end");
  add_study_options(*reproduce_cmd, reproduce_args, "one variant (default: all, in subdirectories)");

  StudyArgs datagen_args;
  auto *datagen_cmd = app.add_subcommand("datagen", "write a study's observations and truth");
  add_study_options(*datagen_cmd, datagen_args, "variant (default: the richest one)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : kUsageExit;
  }

  try {
    if (*fit_cmd) return cmd_fit(fit_args, out);
    if (*predict_cmd) return cmd_predict(predict_args, out, err);
    if (*eval_cmd) return cmd_eval(eval_args, out);
    if (*reproduce_cmd) return cmd_reproduce(reproduce_args, out);
    if (*datagen_cmd) return cmd_datagen(datagen_args, out);
  } catch (const Error &e) {
    err << "error: " << e.what() << '\n';
    return e.exit_code();
  }
  return kUsageExit;
}

}  // namespace agrf::cli
