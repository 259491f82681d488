#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "agrf/field.hpp"
#include "agrf/inference.hpp"

namespace agrf::io {

inline constexpr int kModelFormatVersion = 1;

/// Shortest text that reads back to the same double (17 significant digits).
std::string format_double(double value);

// ---- observation / truth CSV: header `order,x,value` ----

std::vector<Observation<double>> parse_observations(std::istream &in);
std::vector<Observation<double>> read_observations(const std::filesystem::path &path);
void write_observations(std::ostream &out, std::span<const Observation<double>> rows);
void write_observations(const std::filesystem::path &path, std::span<const Observation<double>> rows);

// ---- prediction CSV: header `order,x,mean,variance,lo95,hi95` ----

struct PredictionRow {
  int order = 0;
  double x = 0.0;
  double mean = 0.0;
  double variance = 0.0;
  double lo95 = 0.0;
  double hi95 = 0.0;
};

void write_predictions(std::ostream &out, std::span<const Prediction<double>> predictions);
void write_predictions(const std::filesystem::path &path,
                       std::span<const Prediction<double>> predictions);
std::vector<PredictionRow> parse_predictions(std::istream &in);
std::vector<PredictionRow> read_predictions(const std::filesystem::path &path);

// ---- RLE CSV: header `order,rle` ----

void write_rle(std::ostream &out, std::span<const std::pair<int, double>> rows);

/// Per-order relative L2 error of predicted means against truth rows.
/// Both tables must list the same x values, in the same order, per order.
std::vector<std::pair<int, double>> evaluate_rle(std::span<const PredictionRow> predictions,
                                                 std::span<const Observation<double>> truth);

// ---- run configuration (JSON) ----

struct GridSpec {
  double lo = 0.0;
  double hi = 1.0;
  int count = 201;

  std::vector<double> points() const;
};

/// Parses "lo:hi:count".
GridSpec parse_grid(const std::string &text);
std::vector<int> parse_orders(const std::string &text);

struct RunConfig {
  NoiseMode mode = NoiseMode::kNoiseless;
  std::vector<double> mean;  ///< polynomial coefficients, ascending powers
  FitConfig fit;
  GridSpec grid;
  std::vector<int> orders{0};
};

/// Validates every field; unknown keys are rejected.
RunConfig parse_run_config(const nlohmann::json &doc);
RunConfig read_run_config(const std::filesystem::path &path);
nlohmann::json to_json(const RunConfig &config);
nlohmann::json to_json(const FitConfig &config);

// ---- model file (versioned JSON) ----

/// FNV-1a 64 over the canonical CSV rendering of the stacked training rows.
std::uint64_t training_checksum(std::span<const Observation<double>> rows);

nlohmann::json model_to_json(const FittedModel<double> &model, const RunConfig &config);

struct LoadedModel {
  FittedModel<double> model;
  GridSpec grid;
  std::vector<int> orders;
};

/// Rebuilds the model from its file and checks the stored spot predictions.
/// `min_max_order` enlarges the kernel table when higher query orders are wanted.
LoadedModel model_from_json(const nlohmann::json &doc, int min_max_order = 0);

void save_model(const std::filesystem::path &path, const FittedModel<double> &model,
                const RunConfig &config);
LoadedModel load_model(const std::filesystem::path &path, int min_max_order = 0);

nlohmann::json read_json(const std::filesystem::path &path);
void write_json(const std::filesystem::path &path, const nlohmann::json &doc);

}  // namespace agrf::io
