#include "agrf/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <map>
#include <set>
#include <sstream>

#include "agrf/datagen.hpp"

namespace agrf::io {

using nlohmann::json;

namespace {

std::string trim(std::string_view text) {
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = text.find_last_not_of(" \t\r\n");
  return std::string(text.substr(first, last - first + 1));
}

std::vector<std::string> split(const std::string &line, char sep) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream stream(line);
  while (std::getline(stream, field, sep)) out.push_back(trim(field));
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

double parse_number(const std::string &text, std::size_t line, const char *column) {
  double value = 0.0;
  const char *begin = text.data();
  const char *end = begin + text.size();
  const auto [ptr, ec] = std::from_chars(begin, end, value);
  if (text.empty() || ec != std::errc() || ptr != end) {
    throw ParseError("line " + std::to_string(line) + ": cannot parse " + column + " '" + text +
                     "' as a number");
  }
  return value;
}

int parse_int(const std::string &text, std::size_t line, const char *column) {
  int value = 0;
  const char *begin = text.data();
  const char *end = begin + text.size();
  const auto [ptr, ec] = std::from_chars(begin, end, value);
  if (text.empty() || ec != std::errc() || ptr != end) {
    throw ParseError("line " + std::to_string(line) + ": cannot parse " + column + " '" + text +
                     "' as an integer");
  }
  return value;
}

/// Reads a headed CSV table; returns data rows with their 1-based line numbers.
std::vector<std::pair<std::size_t, std::vector<std::string>>> read_table(
    std::istream &in, const std::vector<std::string> &header, const std::string &what) {
  std::string line;
  std::size_t number = 0;
  bool have_header = false;
  std::vector<std::pair<std::size_t, std::vector<std::string>>> rows;
  while (std::getline(in, line)) {
    ++number;
    if (trim(line).empty()) continue;
    auto fields = split(trim(line), ',');
    if (!have_header) {
      if (fields != header) {
        std::string expected;
        for (const auto &h : header) expected += (expected.empty() ? "" : ",") + h;
        throw ParseError(what + ": expected header '" + expected + "', found '" + trim(line) + "'");
      }
      have_header = true;
      continue;
    }
    if (fields.size() != header.size()) {
      throw ParseError(what + " line " + std::to_string(number) + ": expected " +
                       std::to_string(header.size()) + " fields, found " +
                       std::to_string(fields.size()));
    }
    rows.emplace_back(number, std::move(fields));
  }
  if (!have_header) throw ValidationError(what + " is empty");
  return rows;
}

std::ifstream open_input(const std::filesystem::path &path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open '" + path.string() + "' for reading");
  return in;
}

std::ofstream open_output(const std::filesystem::path &path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot open '" + path.string() + "' for writing");
  return out;
}

template <typename T>
T get_or(const json &object, const char *key, T fallback) {
  return object.contains(key) ? object.at(key).get<T>() : fallback;
}

void reject_unknown_keys(const json &object, const std::set<std::string> &known,
                         const std::string &where) {
  if (!object.is_object()) throw ValidationError(where + " must be a JSON object");
  for (const auto &item : object.items()) {
    if (!known.contains(item.key())) {
      throw ValidationError("unknown key '" + item.key() + "' in " + where);
    }
  }
}

}  // namespace

std::string format_double(double value) {
  char buffer[32];
  std::snprintf(buffer, sizeof(buffer), "%.17g", value);
  return buffer;
}

std::vector<Observation<double>> parse_observations(std::istream &in) {
  std::vector<Observation<double>> rows;
  for (const auto &[line, fields] : read_table(in, {"order", "x", "value"}, "observation file")) {
    rows.push_back({parse_int(fields[0], line, "order"), parse_number(fields[1], line, "x"),
                    parse_number(fields[2], line, "value")});
  }
  return rows;
}

std::vector<Observation<double>> read_observations(const std::filesystem::path &path) {
  auto in = open_input(path);
  return parse_observations(in);
}

void write_observations(std::ostream &out, std::span<const Observation<double>> rows) {
  out << "order,x,value\n";
  for (const auto &row : rows) {
    out << row.order << ',' << format_double(row.x) << ',' << format_double(row.value) << '\n';
  }
}

void write_observations(const std::filesystem::path &path,
                        std::span<const Observation<double>> rows) {
  auto out = open_output(path);
  write_observations(out, rows);
}

void write_predictions(std::ostream &out, std::span<const Prediction<double>> predictions) {
  out << "order,x,mean,variance,lo95,hi95\n";
  for (const auto &p : predictions) {
    out << p.order << ',' << format_double(p.x) << ',' << format_double(p.mean) << ','
        << format_double(p.variance) << ',' << format_double(p.lower) << ','
        << format_double(p.upper) << '\n';
  }
}

void write_predictions(const std::filesystem::path &path,
                       std::span<const Prediction<double>> predictions) {
  auto out = open_output(path);
  write_predictions(out, predictions);
}

std::vector<PredictionRow> parse_predictions(std::istream &in) {
  std::vector<PredictionRow> rows;
  for (const auto &[line, f] :
       read_table(in, {"order", "x", "mean", "variance", "lo95", "hi95"}, "prediction file")) {
    rows.push_back({parse_int(f[0], line, "order"), parse_number(f[1], line, "x"),
                    parse_number(f[2], line, "mean"), parse_number(f[3], line, "variance"),
                    parse_number(f[4], line, "lo95"), parse_number(f[5], line, "hi95")});
  }
  return rows;
}

std::vector<PredictionRow> read_predictions(const std::filesystem::path &path) {
  auto in = open_input(path);
  return parse_predictions(in);
}

void write_rle(std::ostream &out, std::span<const std::pair<int, double>> rows) {
  out << "order,rle\n";
  for (const auto &[order, rle] : rows) out << order << ',' << format_double(rle) << '\n';
}

std::vector<std::pair<int, double>> evaluate_rle(std::span<const PredictionRow> predictions,
                                                 std::span<const Observation<double>> truth) {
  std::map<int, std::vector<std::pair<double, double>>> predicted;
  std::map<int, std::vector<std::pair<double, double>>> exact;
  for (const auto &p : predictions) predicted[p.order].emplace_back(p.x, p.mean);
  for (const auto &t : truth) exact[t.order].emplace_back(t.x, t.value);
  if (predicted.empty()) throw ValidationError("prediction table is empty");

  std::vector<std::pair<int, double>> out;
  for (const auto &[order, rows] : predicted) {
    const auto it = exact.find(order);
    if (it == exact.end()) {
      throw ValidationError("truth table has no rows for order " + std::to_string(order));
    }
    if (it->second.size() != rows.size()) {
      throw ValidationError("grid mismatch for order " + std::to_string(order) + ": " +
                            std::to_string(rows.size()) + " predictions vs " +
                            std::to_string(it->second.size()) + " truth rows");
    }
    std::vector<double> t(rows.size()), a(rows.size());
    for (std::size_t k = 0; k < rows.size(); ++k) {
      const double xp = rows[k].first;
      const double xt = it->second[k].first;
      if (std::abs(xp - xt) > 1e-12 * (1.0 + std::abs(xt))) {
        throw ValidationError("grid mismatch for order " + std::to_string(order) + " at row " +
                              std::to_string(k + 1) + ": x = " + format_double(xp) + " vs " +
                              format_double(xt));
      }
      a[k] = rows[k].second;
      t[k] = it->second[k].second;
    }
    out.emplace_back(order, datagen::relative_l2_error(t, a));
  }
  return out;
}

std::vector<double> GridSpec::points() const { return datagen::uniform_grid(lo, hi, count); }

GridSpec parse_grid(const std::string &text) {
  const auto parts = split(text, ':');
  if (parts.size() != 3) {
    throw ValidationError("grid must look like lo:hi:count, got '" + text + "'");
  }
  GridSpec grid;
  try {
    grid.lo = parse_number(parts[0], 0, "grid lo");
    grid.hi = parse_number(parts[1], 0, "grid hi");
    grid.count = parse_int(parts[2], 0, "grid count");
  } catch (const ParseError &) {
    throw ValidationError("grid must look like lo:hi:count, got '" + text + "'");
  }
  if (grid.count < 1) throw ValidationError("grid count must be at least 1");
  if (!std::isfinite(grid.lo) || !std::isfinite(grid.hi) || grid.hi < grid.lo) {
    throw ValidationError("grid bounds must be finite with lo <= hi");
  }
  return grid;
}

std::vector<int> parse_orders(const std::string &text) {
  std::vector<int> orders;
  for (const auto &part : split(text, ',')) {
    int value = 0;
    try {
      value = parse_int(part, 0, "order");
    } catch (const ParseError &) {
      throw ValidationError("orders must be a comma-separated list of integers, got '" + text +
                            "'");
    }
    if (value < 0) throw ValidationError("orders must be nonnegative");
    orders.push_back(value);
  }
  if (orders.empty()) throw ValidationError("at least one order is required");
  return orders;
}

RunConfig parse_run_config(const json &doc) {
  RunConfig config;
  try {
    reject_unknown_keys(doc, {"mode", "mean", "optimizer", "jitter", "max_order", "grid", "orders"},
                        "run configuration");
    if (doc.contains("mode")) config.mode = parse_noise_mode(doc.at("mode").get<std::string>());
    if (doc.contains("mean")) config.mean = doc.at("mean").get<std::vector<double>>();
    if (doc.contains("optimizer")) {
      const auto &opt = doc.at("optimizer");
      reject_unknown_keys(opt, {"restarts", "max_evals", "tolerance", "seed"}, "optimizer");
      config.fit.restarts = get_or(opt, "restarts", config.fit.restarts);
      config.fit.max_evaluations = get_or(opt, "max_evals", config.fit.max_evaluations);
      config.fit.tolerance = get_or(opt, "tolerance", config.fit.tolerance);
      config.fit.seed = get_or<std::uint64_t>(opt, "seed", config.fit.seed);
    }
    if (doc.contains("jitter")) {
      const auto &jit = doc.at("jitter");
      reject_unknown_keys(jit, {"initial", "final", "growth"}, "jitter");
      config.fit.jitter.initial = get_or(jit, "initial", config.fit.jitter.initial);
      config.fit.jitter.final = get_or(jit, "final", config.fit.jitter.final);
      config.fit.jitter.growth = get_or(jit, "growth", config.fit.jitter.growth);
    }
    config.fit.max_order = get_or(doc, "max_order", config.fit.max_order);
    if (doc.contains("grid")) {
      const auto &grid = doc.at("grid");
      reject_unknown_keys(grid, {"lo", "hi", "count"}, "grid");
      config.grid.lo = get_or(grid, "lo", config.grid.lo);
      config.grid.hi = get_or(grid, "hi", config.grid.hi);
      config.grid.count = get_or(grid, "count", config.grid.count);
    }
    if (doc.contains("orders")) config.orders = doc.at("orders").get<std::vector<int>>();
  } catch (const json::exception &e) {
    throw ValidationError(std::string("invalid run configuration: ") + e.what());
  }

  if (config.fit.restarts < 1) throw ValidationError("optimizer.restarts must be >= 1");
  if (config.fit.max_evaluations < 1) throw ValidationError("optimizer.max_evals must be >= 1");
  if (!(config.fit.tolerance > 0.0)) throw ValidationError("optimizer.tolerance must be > 0");
  const auto &jit = config.fit.jitter;
  if (!(jit.initial > 0.0) || !(jit.final >= jit.initial) || !(jit.growth > 1.0)) {
    throw ValidationError("jitter needs 0 < initial <= final and growth > 1");
  }
  if (config.fit.max_order < 0) throw ValidationError("max_order must be >= 0");
  if (config.grid.count < 1 || !(config.grid.hi >= config.grid.lo)) {
    throw ValidationError("grid needs count >= 1 and lo <= hi");
  }
  if (config.orders.empty()) throw ValidationError("orders must not be empty");
  for (const int q : config.orders) {
    if (q < 0) throw ValidationError("orders must be nonnegative");
  }
  for (const double c : config.mean) {
    if (!std::isfinite(c)) throw ValidationError("mean coefficients must be finite");
  }
  return config;
}

RunConfig read_run_config(const std::filesystem::path &path) {
  return parse_run_config(read_json(path));
}

json to_json(const FitConfig &config) {
  return {{"restarts", config.restarts},
          {"max_evals", config.max_evaluations},
          {"tolerance", config.tolerance},
          {"seed", config.seed}};
}

json to_json(const RunConfig &config) {
  return {{"mode", to_string(config.mode)},
          {"mean", config.mean},
          {"optimizer", to_json(config.fit)},
          {"jitter",
           {{"initial", config.fit.jitter.initial},
            {"final", config.fit.jitter.final},
            {"growth", config.fit.jitter.growth}}},
          {"max_order", config.fit.max_order},
          {"grid", {{"lo", config.grid.lo}, {"hi", config.grid.hi}, {"count", config.grid.count}}},
          {"orders", config.orders}};
}

std::uint64_t training_checksum(std::span<const Observation<double>> rows) {
  std::ostringstream canonical;
  write_observations(canonical, rows);
  std::uint64_t hash = 14695981039346656037ull;
  for (const unsigned char c : canonical.str()) {
    hash ^= c;
    hash *= 1099511628211ull;
  }
  return hash;
}

namespace {

std::string hex(std::uint64_t value) {
  std::ostringstream out;
  out << std::hex << std::setw(16) << std::setfill('0') << value;
  return out.str();
}

/// Query points recorded in the model file to verify reloads.
std::vector<QuerySpec<double>> spot_queries(const FittedModel<double> &model) {
  const auto rows = model.observations().rows();
  double lo = rows.front().x;
  double hi = rows.front().x;
  for (const auto &r : rows) {
    lo = std::min(lo, r.x);
    hi = std::max(hi, r.x);
  }
  std::vector<QuerySpec<double>> out;
  for (int q = 0; q <= std::min(model.observations().max_order(), model.max_query_order()); ++q) {
    for (const double x : {lo, 0.5 * (lo + hi) + 0.123 * (hi - lo), hi}) out.push_back({x, q});
  }
  return out;
}

}  // namespace

json model_to_json(const FittedModel<double> &model, const RunConfig &config) {
  const auto &hp = model.hyperparameters();
  const auto rows = model.observations().rows();
  json data = json::array();
  for (const auto &r : rows) data.push_back({r.order, r.x, r.value});
  json noise = json::array();
  for (Index i = 0; i < hp.noise.size(); ++i) noise.push_back(hp.noise(i));

  json restarts = json::array();
  for (const auto &s : model.report().restarts) {
    restarts.push_back({{"log_likelihood", std::isfinite(s.log_likelihood) ? json(s.log_likelihood)
                                                                           : json(nullptr)},
                        {"evaluations", s.evaluations},
                        {"converged", s.converged}});
  }

  json spots = json::array();
  for (const auto &query : spot_queries(model)) {
    const auto p = model.posterior(query);
    spots.push_back({{"order", p.order}, {"x", p.x}, {"mean", p.mean}, {"variance", p.variance}});
  }

  return {{"format", "agrf-model"},
          {"format_version", kModelFormatVersion},
          {"mode", to_string(model.mode())},
          {"hyperparameters",
           {{"amplitude", hp.amplitude}, {"length_scale", hp.length_scale}, {"noise", noise}}},
          {"mean", model.mean_function().coefficients()},
          {"max_order", model.max_order()},
          {"jitter",
           {{"initial", model.jitter_policy().initial},
            {"final", model.jitter_policy().final},
            {"growth", model.jitter_policy().growth}}},
          {"applied_jitter", model.factor().jitter},
          {"log_likelihood", model.log_likelihood()},
          {"training_data", {{"checksum", hex(training_checksum(rows))}, {"rows", data}}},
          {"prediction_defaults",
           {{"grid", {{"lo", config.grid.lo}, {"hi", config.grid.hi}, {"count", config.grid.count}}},
            {"orders", config.orders}}},
          {"fit_report",
           {{"best_restart", model.report().best_restart},
            {"total_evaluations", model.report().total_evaluations},
            {"restarts", restarts}}},
          {"spot_checks", spots}};
}

LoadedModel model_from_json(const json &doc, int min_max_order) {
  try {
    if (doc.value("format", std::string()) != "agrf-model") {
      throw ValidationError("not an agrf model file");
    }
    const int version = doc.at("format_version").get<int>();
    if (version != kModelFormatVersion) {
      throw ValidationError("unsupported model format version " + std::to_string(version));
    }
    std::vector<Observation<double>> rows;
    for (const auto &r : doc.at("training_data").at("rows")) {
      rows.push_back({r.at(0).get<int>(), r.at(1).get<double>(), r.at(2).get<double>()});
    }
    ObservationSet<double> obs(rows);
    const auto stacked = obs.rows();
    const std::string stored = doc.at("training_data").at("checksum").get<std::string>();
    if (stored != hex(training_checksum(stacked))) {
      throw ValidationError("training data checksum mismatch (file " + stored + ", computed " +
                            hex(training_checksum(stacked)) + ")");
    }

    Hyperparameters<double> hp;
    const auto &h = doc.at("hyperparameters");
    hp.amplitude = h.at("amplitude").get<double>();
    hp.length_scale = h.at("length_scale").get<double>();
    const auto noise = h.at("noise").get<std::vector<double>>();
    hp.noise = Eigen::Map<const Eigen::VectorXd>(noise.data(), static_cast<Index>(noise.size()));

    JitterPolicy jitter;
    const auto &j = doc.at("jitter");
    jitter.initial = j.at("initial").get<double>();
    jitter.final = j.at("final").get<double>();
    jitter.growth = j.at("growth").get<double>();

    const int stored_order = doc.at("max_order").get<int>();
    FittedModel<double> model(std::move(obs), PolynomialMean<double>(doc.at("mean").get<std::vector<double>>()),
                              hp, parse_noise_mode(doc.at("mode").get<std::string>()), jitter,
                              std::max(stored_order, min_max_order));

    for (const auto &spot : doc.at("spot_checks")) {
      const auto p = model.posterior({spot.at("x").get<double>(), spot.at("order").get<int>()});
      const double mean = spot.at("mean").get<double>();
      const double variance = spot.at("variance").get<double>();
      if (std::abs(p.mean - mean) > 1e-12 * (1.0 + std::abs(mean)) ||
          std::abs(p.variance - variance) > 1e-12 * (1.0 + std::abs(variance))) {
        throw NumericalError("reloaded model does not reproduce its stored spot predictions");
      }
    }

    LoadedModel loaded{std::move(model), {}, {0}};
    if (doc.contains("prediction_defaults")) {
      const auto &d = doc.at("prediction_defaults");
      loaded.grid.lo = d.at("grid").at("lo").get<double>();
      loaded.grid.hi = d.at("grid").at("hi").get<double>();
      loaded.grid.count = d.at("grid").at("count").get<int>();
      loaded.orders = d.at("orders").get<std::vector<int>>();
    }
    return loaded;
  } catch (const json::exception &e) {
    throw ValidationError(std::string("malformed model file: ") + e.what());
  }
}

void save_model(const std::filesystem::path &path, const FittedModel<double> &model,
                const RunConfig &config) {
  write_json(path, model_to_json(model, config));
}

LoadedModel load_model(const std::filesystem::path &path, int min_max_order) {
  return model_from_json(read_json(path), min_max_order);
}

json read_json(const std::filesystem::path &path) {
  auto in = open_input(path);
  try {
    return json::parse(in);
  } catch (const json::parse_error &e) {
    throw ParseError("cannot parse '" + path.string() + "': " + e.what());
  }
}

void write_json(const std::filesystem::path &path, const json &doc) {
  auto out = open_output(path);
  out << doc.dump(2) << '\n';
}

}  // namespace agrf::io
