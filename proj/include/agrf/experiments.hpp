#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "agrf/datagen.hpp"
#include "agrf/field.hpp"
#include "agrf/inference.hpp"

namespace agrf::experiments {

/// The four reproduction studies and their variants:
///   composite   case1 | case2 | case3 | case4
///   oscillator  gp | gek | agrf
///   kdv         noise0 | noise10 | noise20 | noise40
///   burgers     no-delta | one-delta | multi-delta   (10% noise)
enum class Example { kComposite, kOscillator, kKdv, kBurgers };

Example parse_example(const std::string &name);
std::string to_string(Example example);
std::vector<std::string> variants(Example example);

/// Optimizer restarts used by the reproduction studies. The noisy PDE fits have
/// several likelihood modes; 8 restarts miss the global one on some seeds.
inline constexpr int kStudyRestarts = 32;

inline FitConfig study_fit_config() {
  FitConfig config;
  config.restarts = kStudyRestarts;
  return config;
}

struct RunOptions {
  std::uint64_t seed = 1;
  FitConfig fit = study_fit_config();  ///< fit.seed is replaced by `seed`
  int grid_count = datagen::kEvaluationGridSize;
};

/// Truth and prediction of one derivative order on the evaluation grid.
struct OrderCurve {
  int order = 0;
  std::vector<double> x;
  std::vector<double> truth;
  std::vector<Prediction<double>> predictions;
  double rle = 0.0;
};

struct RunResult {
  Example example = Example::kComposite;
  std::string variant;
  std::uint64_t seed = 0;
  NoiseMode mode = NoiseMode::kNoiseless;
  double noise_fraction = 0.0;
  ObservationSet<double> observations;
  /// One model, except the oscillator "gp" variant which fits displacement
  /// and velocity separately.
  std::vector<FittedModel<double>> models;
  std::vector<OrderCurve> curves;

  double rle(int order) const;
};

/// Reference PDE solution for kdv / burgers; nullopt for analytic examples.
std::optional<datagen::PdeProblem> reference_solution(Example example);

/// The observation set a variant trains on.
ObservationSet<double> make_dataset(Example example, const std::string &variant, std::uint64_t seed,
                                    const datagen::PdeProblem *reference = nullptr);

/// Noise model a variant is fitted with.
NoiseMode variant_mode(Example example, const std::string &variant);

/// Generate data, fit, predict on the evaluation grid and score.
/// `reference` avoids re-solving the PDE when running many seeds.
RunResult run(Example example, const std::string &variant, const RunOptions &options,
              const datagen::PdeProblem *reference = nullptr);

/// Truth rows (order, x, value) on a uniform grid for the example's orders.
std::vector<Observation<double>> truth_table(Example example, int grid_count,
                                             const datagen::PdeProblem *reference = nullptr);

/// Writes observations.csv, truth.csv, predictions.csv, rle.csv,
/// model.json (first model) and manifest.json into `directory`.
void write_report(const RunResult &result, const RunOptions &options,
                  const std::filesystem::path &directory,
                  const datagen::PdeProblem *reference = nullptr);

}  // namespace agrf::experiments
