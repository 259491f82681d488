#include "agrf/experiments.hpp"

#include <algorithm>
#include <fstream>
#include <string>

#include "agrf/io.hpp"
#include "agrf/version.hpp"

namespace agrf::experiments {

namespace {

using datagen::NoiseSpec;
using datagen::PdeProblem;

const std::vector<double> kCompositeObservable{0.0, 0.4, 0.6, 1.0};
const std::vector<double> kCompositeFirst{0.2, 0.5, 0.8};
const std::vector<double> kCompositeSecond{0.1, 0.5, 0.9};
const std::vector<double> kOscillatorSites{0.0, 0.25, 0.5, 0.75, 1.0};
constexpr int kPdeSamplesPerOrder = 20;
constexpr double kBurgersNoise = 0.10;

void require_variant(Example example, const std::string &variant) {
  const auto known = variants(example);
  if (std::find(known.begin(), known.end(), variant) == known.end()) {
    std::string list;
    for (const auto &v : known) list += (list.empty() ? "" : ", ") + v;
    throw ValidationError("unknown variant '" + variant + "' for " + to_string(example) +
                          " (expected one of: " + list + ")");
  }
}

double kdv_noise_fraction(const std::string &variant) {
  return std::stod(variant.substr(5)) / 100.0;
}

std::vector<int> predicted_orders(Example example) {
  if (example == Example::kOscillator) return {0, 1};
  return {0, 1, 2};
}

const PdeProblem &require_reference(Example example, const PdeProblem *reference,
                                    std::optional<PdeProblem> &storage) {
  if (reference != nullptr) {
    const auto expected = example == Example::kKdv ? datagen::PdeKind::kKdv
                                                   : datagen::PdeKind::kBurgers;
    if (reference->kind != expected) {
      throw ValidationError("reference solution does not match example " + to_string(example));
    }
    return *reference;
  }
  storage = reference_solution(example);
  return *storage;
}

double truth_at(Example example, double x, int order, const PdeProblem *pde) {
  switch (example) {
    case Example::kComposite: return datagen::composite_truth(x, order);
    case Example::kOscillator: return datagen::oscillator_truth(x, order);
    default: return pde->interpolate(x, order);
  }
}

/// Rows of one order relabelled as order 0, for fitting an independent GP.
ObservationSet<double> single_order(const ObservationSet<double> &obs, int order) {
  std::vector<Observation<double>> rows;
  for (std::size_t j = 0; j < obs.locations(order).size(); ++j) {
    rows.push_back({0, obs.locations(order)[j], obs.values(order)[j]});
  }
  return ObservationSet<double>(rows);
}

}  // namespace

Example parse_example(const std::string &name) {
  if (name == "composite") return Example::kComposite;
  if (name == "oscillator") return Example::kOscillator;
  if (name == "kdv") return Example::kKdv;
  if (name == "burgers") return Example::kBurgers;
  throw ValidationError("unknown example '" + name +
                        "' (expected composite, oscillator, kdv or burgers)");
}

std::string to_string(Example example) {
  switch (example) {
    case Example::kComposite: return "composite";
    case Example::kOscillator: return "oscillator";
    case Example::kKdv: return "kdv";
    case Example::kBurgers: return "burgers";
  }
  return "unknown";
}

std::vector<std::string> variants(Example example) {
  switch (example) {
    case Example::kComposite: return {"case1", "case2", "case3", "case4"};
    case Example::kOscillator: return {"gp", "gek", "agrf"};
    case Example::kKdv: return {"noise0", "noise10", "noise20", "noise40"};
    case Example::kBurgers: return {"no-delta", "one-delta", "multi-delta"};
  }
  return {};
}

double RunResult::rle(int order) const {
  for (const auto &c : curves) {
    if (c.order == order) return c.rle;
  }
  throw ValidationError("no prediction curve for order " + std::to_string(order));
}

std::optional<PdeProblem> reference_solution(Example example) {
  if (example == Example::kKdv) return datagen::solve_kdv();
  if (example == Example::kBurgers) return datagen::solve_burgers();
  return std::nullopt;
}

NoiseMode variant_mode(Example example, const std::string &variant) {
  require_variant(example, variant);
  switch (example) {
    case Example::kComposite:
    case Example::kOscillator: return NoiseMode::kNoiseless;
    case Example::kKdv:
      return variant == "noise0" ? NoiseMode::kNoiseless : NoiseMode::kMultiDelta;
    case Example::kBurgers:
      if (variant == "no-delta") return NoiseMode::kNoiseless;
      if (variant == "one-delta") return NoiseMode::kOneDelta;
      return NoiseMode::kMultiDelta;
  }
  return NoiseMode::kNoiseless;
}

ObservationSet<double> make_dataset(Example example, const std::string &variant, std::uint64_t seed,
                                    const PdeProblem *reference) {
  require_variant(example, variant);
  switch (example) {
    case Example::kComposite: {
      std::vector<std::vector<double>> sites{kCompositeObservable};
      if (variant == "case2" || variant == "case4") sites.push_back(kCompositeFirst);
      if (variant == "case3" || variant == "case4") {
        if (sites.size() == 1) sites.emplace_back();
        sites.push_back(kCompositeSecond);
      }
      return datagen::sample_observations(datagen::composite_problem(), sites);
    }
    case Example::kOscillator: {
      std::vector<std::vector<double>> sites{kOscillatorSites, kOscillatorSites};
      if (variant == "agrf") sites.push_back(kOscillatorSites);
      return datagen::sample_observations(datagen::oscillator_problem(), sites);
    }
    case Example::kKdv:
    case Example::kBurgers: {
      std::optional<PdeProblem> storage;
      const PdeProblem &pde = require_reference(example, reference, storage);
      const double fraction =
          example == Example::kKdv ? kdv_noise_fraction(variant) : kBurgersNoise;
      return datagen::sample_observations(
          pde, {kPdeSamplesPerOrder, kPdeSamplesPerOrder, kPdeSamplesPerOrder},
          NoiseSpec{fraction, seed});
    }
  }
  throw ValidationError("unknown example");
}

std::vector<Observation<double>> truth_table(Example example, int grid_count,
                                             const PdeProblem *reference) {
  std::optional<PdeProblem> storage;
  const PdeProblem *pde = nullptr;
  if (example == Example::kKdv || example == Example::kBurgers) {
    pde = &require_reference(example, reference, storage);
  }
  const auto grid = datagen::uniform_grid(0.0, 1.0, grid_count);
  std::vector<Observation<double>> rows;
  for (const int q : predicted_orders(example)) {
    for (const double x : grid) rows.push_back({q, x, truth_at(example, x, q, pde)});
  }
  return rows;
}

RunResult run(Example example, const std::string &variant, const RunOptions &options,
              const PdeProblem *reference) {
  require_variant(example, variant);
  std::optional<PdeProblem> storage;
  const PdeProblem *pde = nullptr;
  if (example == Example::kKdv || example == Example::kBurgers) {
    pde = &require_reference(example, reference, storage);
  }

  RunResult result;
  result.example = example;
  result.variant = variant;
  result.seed = options.seed;
  result.mode = variant_mode(example, variant);
  if (example == Example::kKdv) result.noise_fraction = kdv_noise_fraction(variant);
  if (example == Example::kBurgers) result.noise_fraction = kBurgersNoise;
  result.observations = make_dataset(example, variant, options.seed, pde);

  FitConfig config = options.fit;
  config.seed = options.seed;
  const PolynomialMean<double> zero_mean;
  const bool separate = example == Example::kOscillator && variant == "gp";
  if (separate) {
    result.models.push_back(fit(single_order(result.observations, 0), zero_mean, result.mode, config));
    result.models.push_back(fit(single_order(result.observations, 1), zero_mean, result.mode, config));
  } else {
    result.models.push_back(fit(result.observations, zero_mean, result.mode, config));
  }

  const auto grid = datagen::uniform_grid(0.0, 1.0, options.grid_count);
  for (const int q : predicted_orders(example)) {
    OrderCurve curve;
    curve.order = q;
    curve.x = grid;
    for (const double x : grid) {
      curve.truth.push_back(truth_at(example, x, q, pde));
      Prediction<double> p = separate ? result.models[static_cast<std::size_t>(q)].posterior({x, 0})
                                      : result.models.front().posterior({x, q});
      p.order = q;
      curve.predictions.push_back(p);
    }
    std::vector<double> means;
    for (const auto &p : curve.predictions) means.push_back(p.mean);
    curve.rle = datagen::relative_l2_error(curve.truth, means);
    result.curves.push_back(std::move(curve));
  }
  return result;
}

void write_report(const RunResult &result, const RunOptions &options,
                  const std::filesystem::path &directory, const PdeProblem *reference) {
  std::filesystem::create_directories(directory);
  const auto observed = result.observations.rows();
  io::write_observations(directory / "observations.csv", observed);

  std::vector<Observation<double>> truth;
  std::vector<Prediction<double>> predictions;
  std::vector<std::pair<int, double>> rle;
  for (const auto &c : result.curves) {
    for (std::size_t k = 0; k < c.x.size(); ++k) truth.push_back({c.order, c.x[k], c.truth[k]});
    predictions.insert(predictions.end(), c.predictions.begin(), c.predictions.end());
    rle.emplace_back(c.order, c.rle);
  }
  io::write_observations(directory / "truth.csv", truth);
  io::write_predictions(directory / "predictions.csv", predictions);
  {
    std::ofstream out(directory / "rle.csv", std::ios::binary);
    io::write_rle(out, rle);
  }

  io::RunConfig config;
  config.mode = result.mode;
  config.fit = options.fit;
  config.fit.seed = result.seed;
  config.grid = {0.0, 1.0, options.grid_count};
  config.orders = predicted_orders(result.example);

  nlohmann::json models = nlohmann::json::array();
  for (std::size_t m = 0; m < result.models.size(); ++m) {
    const std::string name = m == 0 ? "model.json" : "model_" + std::to_string(m) + ".json";
    io::save_model(directory / name, result.models[m], config);
    const auto &hp = result.models[m].hyperparameters();
    nlohmann::json noise = nlohmann::json::array();
    for (Index i = 0; i < hp.noise.size(); ++i) noise.push_back(hp.noise(i));
    models.push_back({{"file", name},
                      {"amplitude", hp.amplitude},
                      {"length_scale", hp.length_scale},
                      {"noise", noise},
                      {"log_likelihood", result.models[m].log_likelihood()}});
  }

  nlohmann::json manifest{
      {"tool", "agrf"},
      {"version", kVersion},
      {"eigen_version", std::to_string(EIGEN_WORLD_VERSION) + "." +
                            std::to_string(EIGEN_MAJOR_VERSION) + "." +
                            std::to_string(EIGEN_MINOR_VERSION)},
      {"example", to_string(result.example)},
      {"variant", result.variant},
      {"seeds", {{"run", result.seed}, {"data", result.seed}, {"optimizer", result.seed}}},
      {"mode", to_string(result.mode)},
      {"noise_fraction", result.noise_fraction},
      {"config", io::to_json(config)},
      {"models", models},
      {"rle", nlohmann::json::array()}};
  for (const auto &[order, value] : rle) manifest["rle"].push_back({{"order", order}, {"rle", value}});
  if (reference != nullptr) {
    manifest["solver"] = {{"grid_size", reference->grid_size},
                          {"final_time", reference->final_time},
                          {"time_step", reference->time_step},
                          {"steps", reference->steps},
                          {"coefficient", reference->coefficient}};
  }
  io::write_json(directory / "manifest.json", manifest);
}

}  // namespace agrf::experiments
