#include "stockstat/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "stockstat/numeric.hpp"
#include "stockstat/qgauss.hpp"
#include "stockstat/version.hpp"

namespace stockstat {

using nlohmann::json;

namespace {

// ---- small parsing helpers -------------------------------------------------

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

double to_double(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const double d = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument("trailing characters");
    return d;
  } catch (const std::exception&) {
    throw std::invalid_argument("config: " + key + " expects a number, got '" + v + "'");
  }
}

std::size_t to_size(const std::string& key, const std::string& v) {
  const double d = to_double(key, v);
  if (d < 0 || d != std::floor(d)) {
    throw std::invalid_argument("config: " + key + " expects a non-negative integer");
  }
  return static_cast<std::size_t>(d);
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw std::invalid_argument("config: " + key + " expects true/false");
}

template <typename T, typename F>
std::vector<T> to_list(const std::string& v, F conv) {
  std::vector<T> out;
  for (const auto& item : split_list(v)) out.push_back(conv(item));
  return out;
}

using Setter = std::function<void(PipelineConfig&, const std::string&)>;

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = {
      {"input.path", [](auto& c, auto& v) { c.input = v; }},
      {"input.timestamp_column", [](auto& c, auto& v) { c.schema.timestamp_column = v; }},
      {"input.price_column", [](auto& c, auto& v) { c.schema.price_column = v; }},
      {"input.delimiter",
       [](auto& c, auto& v) {
         if (v.size() != 1) throw std::invalid_argument("config: input.delimiter must be one character");
         c.schema.delimiter = v[0];
       }},
      {"clean.enabled", [](auto& c, auto& v) { c.clean = to_bool("clean.enabled", v); }},
      {"clean.rel_jump_threshold",
       [](auto& c, auto& v) { c.artifacts.rel_jump_threshold = to_double("clean.rel_jump_threshold", v); }},
      {"clean.max_duration",
       [](auto& c, auto& v) { c.artifacts.max_duration = to_size("clean.max_duration", v); }},
      {"clean.reversion_tolerance",
       [](auto& c, auto& v) { c.artifacts.reversion_tolerance = to_double("clean.reversion_tolerance", v); }},
      {"scan.enabled", [](auto& c, auto& v) { c.scan = to_bool("scan.enabled", v); }},
      {"scan.min_months", [](auto& c, auto& v) { c.scan_min_months = to_double("scan.min_months", v); }},
      {"scan.max_months", [](auto& c, auto& v) { c.scan_max_months = to_double("scan.max_months", v); }},
      {"scan.step_months", [](auto& c, auto& v) { c.scan_step_months = to_double("scan.step_months", v); }},
      {"scan.windows",
       [](auto& c, auto& v) {
         c.scan_windows = to_list<std::size_t>(v, [](auto& s) { return to_size("scan.windows", s); });
       }},
      {"scan.target", [](auto& c, auto& v) { c.scan_target = to_double("scan.target", v); }},
      {"scan.input",
       [](auto& c, auto& v) {
         if (v == "levels") c.scan_input = KurtosisInput::Levels;
         else if (v == "differences") c.scan_input = KurtosisInput::Differences;
         else throw std::invalid_argument("config: scan.input must be levels or differences");
       }},
      {"detrend.window_months",
       [](auto& c, auto& v) { c.detrend_window_months = to_double("detrend.window_months", v); }},
      {"detrend.window", [](auto& c, auto& v) { c.detrend_window = to_size("detrend.window", v); }},
      {"detrend.order",
       [](auto& c, auto& v) { c.detrend_order = static_cast<int>(to_size("detrend.order", v)); }},
      {"detrend.edge",
       [](auto& c, auto& v) {
         if (v == "count") c.edge = EdgeMode::CountNormalized;
         else if (v == "nominal") c.edge = EdgeMode::NominalWindow;
         else throw std::invalid_argument("config: detrend.edge must be count or nominal");
       }},
      {"fractal.scales",
       [](auto& c, auto& v) {
         c.fractal.scales = to_list<std::size_t>(v, [](auto& s) { return to_size("fractal.scales", s); });
       }},
      {"fractal.orders",
       [](auto& c, auto& v) {
         c.fractal.orders = to_list<double>(v, [](auto& s) { return to_double("fractal.orders", s); });
       }},
      {"fractal.fit_lo",
       [](auto& c, auto& v) {
         if (!c.fractal.fit_range) c.fractal.fit_range = ScaleRange{};
         c.fractal.fit_range->lo = to_double("fractal.fit_lo", v);
       }},
      {"fractal.fit_hi",
       [](auto& c, auto& v) {
         if (!c.fractal.fit_range) c.fractal.fit_range = ScaleRange{};
         c.fractal.fit_range->hi = to_double("fractal.fit_hi", v);
       }},
      {"fractal.r2_min", [](auto& c, auto& v) { c.fractal.r2_min = to_double("fractal.r2_min", v); }},
      {"fractal.tolerance",
       [](auto& c, auto& v) { c.fractal.tolerance = to_double("fractal.tolerance", v); }},
      {"fractal.verdict_orders",
       [](auto& c, auto& v) {
         c.fractal.verdict_orders =
             to_list<double>(v, [](auto& s) { return to_double("fractal.verdict_orders", s); });
       }},
      {"fractal.jackknife_blocks",
       [](auto& c, auto& v) { c.fractal.jackknife_blocks = to_size("fractal.jackknife_blocks", v); }},
      {"fractal.monofractal_z",
       [](auto& c, auto& v) { c.fractal.monofractal_z = to_double("fractal.monofractal_z", v); }},
      {"spectral.return_lag", [](auto& c, auto& v) { c.return_lag = to_size("spectral.return_lag", v); }},
      {"spectral.acf_max_lag", [](auto& c, auto& v) { c.acf_max_lag = to_size("spectral.acf_max_lag", v); }},
      {"spectral.acf_mode",
       [](auto& c, auto& v) {
         if (v == "mean") c.acf_mode = AcfMode::MeanSubtracted;
         else if (v == "raw") c.acf_mode = AcfMode::RawProduct;
         else throw std::invalid_argument("config: spectral.acf_mode must be mean or raw");
       }},
      {"spectral.smooth_hz", [](auto& c, auto& v) { c.smooth_hz = to_double("spectral.smooth_hz", v); }},
      {"spectral.sample_seconds",
       [](auto& c, auto& v) { c.sample_seconds = to_double("spectral.sample_seconds", v); }},
      {"spectral.smoothing_window",
       [](auto& c, auto& v) { c.wk.smoothing_window = to_size("spectral.smoothing_window", v); }},
      {"spectral.degree", [](auto& c, auto& v) { c.wk.degree = to_size("spectral.degree", v); }},
      {"spectral.wk_max_lag", [](auto& c, auto& v) { c.wk.max_lag = to_size("spectral.wk_max_lag", v); }},
      {"spectral.tolerance", [](auto& c, auto& v) { c.wk.tolerance = to_double("spectral.tolerance", v); }},
      {"spectral.band_points",
       [](auto& c, auto& v) { c.wk.band_points = to_size("spectral.band_points", v); }},
      {"spectral.index_fit_lo",
       [](auto& c, auto& v) {
         if (!c.index_fit) c.index_fit = FitInterval{0.0, 0.5};
         c.index_fit->lo = to_double("spectral.index_fit_lo", v);
       }},
      {"spectral.index_fit_hi",
       [](auto& c, auto& v) {
         if (!c.index_fit) c.index_fit = FitInterval{0.0, 0.5};
         c.index_fit->hi = to_double("spectral.index_fit_hi", v);
       }},
      {"qfit.enabled", [](auto& c, auto& v) { c.qfit = to_bool("qfit.enabled", v); }},
      {"qfit.lags",
       [](auto& c, auto& v) {
         c.qfit_lags = to_list<std::size_t>(v, [](auto& s) { return to_size("qfit.lags", s); });
       }},
      {"output.dir", [](auto& c, auto& v) { c.out_dir = v; }},
      {"output.seed",
       [](auto& c, auto& v) { c.seed = static_cast<std::uint64_t>(std::stoull(v)); }},
  };
  return table;
}

void apply(PipelineConfig& c, const std::string& key, const std::string& value) {
  const auto it = setters().find(key);
  if (it == setters().end()) throw std::invalid_argument("config: unknown key " + key);
  it->second(c, trim(value));
}

// ---- JSON numbers that survive NaN / inf -----------------------------------

json num(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

double num(const json& j) {
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    throw std::invalid_argument("report: bad number " + s);
  }
  return j.get<double>();
}

json nums(const std::vector<double>& v) {
  json a = json::array();
  for (double d : v) a.push_back(num(d));
  return a;
}

std::vector<double> nums(const json& j) {
  std::vector<double> v;
  for (const auto& e : j) v.push_back(num(e));
  return v;
}

json power_law_json(const PowerLawFit& f) {
  return {{"exponent", num(f.exponent)}, {"prefactor", num(f.prefactor)},
          {"exponent_stderr", num(f.exponent_stderr)}, {"r_squared", num(f.r_squared)},
          {"points", f.points}};
}

PowerLawFit power_law_from(const json& j) {
  PowerLawFit f;
  f.exponent = num(j.at("exponent"));
  f.prefactor = num(j.at("prefactor"));
  f.exponent_stderr = num(j.at("exponent_stderr"));
  f.r_squared = num(j.at("r_squared"));
  f.points = j.at("points").get<std::size_t>();
  return f;
}

json wk_json(const WkSummary& w) {
  return {{"median_deviation", num(w.median_deviation)}, {"tolerance", num(w.tolerance)},
          {"stationary", w.stationary}, {"smoothing_window", w.smoothing_window},
          {"max_lag", w.max_lag}};
}

WkSummary wk_from(const json& j) {
  WkSummary w;
  w.median_deviation = num(j.at("median_deviation"));
  w.tolerance = num(j.at("tolerance"));
  w.stationary = j.at("stationary").get<bool>();
  w.smoothing_window = j.at("smoothing_window").get<std::size_t>();
  w.max_lag = j.at("max_lag").get<std::size_t>();
  return w;
}

const char* edge_name(EdgeMode e) { return e == EdgeMode::NominalWindow ? "nominal" : "count"; }

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace

std::uint64_t fnv1a64(const std::string& data) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

// ---- config ----------------------------------------------------------------

void PipelineConfig::validate() const {
  auto fail = [](const std::string& m) { throw std::invalid_argument("config: " + m); };
  if (artifacts.rel_jump_threshold <= 0 || artifacts.reversion_tolerance < 0 ||
      artifacts.reversion_tolerance >= artifacts.rel_jump_threshold || artifacts.max_duration < 1) {
    fail("clean: need 0 <= reversion_tolerance < rel_jump_threshold and max_duration >= 1");
  }
  if (scan) {
    if (scan_windows.empty()) {
      if (!(scan_min_months > 0) || !(scan_max_months >= scan_min_months) || !(scan_step_months > 0)) {
        fail("scan: need 0 < min_months <= max_months and step_months > 0");
      }
    }
    for (auto w : scan_windows) {
      if (w < 4) fail("scan: windows must be >= 4 samples");
    }
    if (!(scan_target > 0)) fail("scan: target must be positive");
  }
  if (!scan && detrend_window == 0 && !(detrend_window_months > 0)) {
    fail("detrend: a window is required when the scan is disabled");
  }
  if (detrend_window_months < 0) fail("detrend: window_months must be >= 0");
  if (detrend_order != 0 && detrend_order != 1) fail("detrend: order must be 0 or 1");
  if (detrend_order == 1 && edge == EdgeMode::NominalWindow) {
    fail("detrend: order 1 needs the count edge mode");
  }
  for (double w : fractal.orders) {
    if (w == 0.0) fail("fractal: order 0 is not allowed");
  }
  for (std::size_t i = 1; i < fractal.scales.size(); ++i) {
    if (fractal.scales[i] <= fractal.scales[i - 1]) fail("fractal: scales must increase");
  }
  if (!fractal.scales.empty() && fractal.scales.front() < 2) fail("fractal: scales must be >= 2");
  if (fractal.fit_range && !(fractal.fit_range->hi > fractal.fit_range->lo)) {
    fail("fractal: fit_hi must exceed fit_lo");
  }
  if (!(fractal.tolerance > 0)) fail("fractal: tolerance must be positive");
  if (!(fractal.r2_min >= 0 && fractal.r2_min <= 1)) fail("fractal: r2_min must be in [0, 1]");
  if (return_lag < 1) fail("spectral: return_lag must be >= 1");
  if (acf_max_lag < 1) fail("spectral: acf_max_lag must be >= 1");
  if (!(smooth_hz > 0) || !(sample_seconds > 0)) fail("spectral: smooth_hz and sample_seconds must be > 0");
  if (wk.smoothing_window != 0 && (wk.smoothing_window < 3 || wk.smoothing_window % 2 == 0)) {
    fail("spectral: smoothing_window must be odd and >= 3");
  }
  if (wk.smoothing_window != 0 && wk.degree >= wk.smoothing_window) {
    fail("spectral: degree must be below the smoothing window");
  }
  if (!(wk.tolerance > 0)) fail("spectral: tolerance must be positive");
  if (index_fit && !(index_fit->lo > 0 && index_fit->hi > index_fit->lo)) {
    fail("spectral: need 0 < index_fit_lo < index_fit_hi");
  }
  if (qfit) {
    if (qfit_lags.empty()) fail("qfit: lags must not be empty");
    for (auto l : qfit_lags) {
      if (l < 1) fail("qfit: lags must be >= 1");
    }
  }
}

json PipelineConfig::to_json() const {
  json j;
  j["input"] = {{"path", input.string()},
                {"timestamp_column", schema.timestamp_column},
                {"price_column", schema.price_column},
                {"delimiter", std::string(1, schema.delimiter)}};
  j["clean"] = {{"enabled", clean},
                {"rel_jump_threshold", artifacts.rel_jump_threshold},
                {"max_duration", artifacts.max_duration},
                {"reversion_tolerance", artifacts.reversion_tolerance}};
  j["scan"] = {{"enabled", scan},
               {"min_months", scan_min_months},
               {"max_months", scan_max_months},
               {"step_months", scan_step_months},
               {"windows", scan_windows},
               {"target", scan_target},
               {"input", scan_input == KurtosisInput::Levels ? "levels" : "differences"}};
  j["detrend"] = {{"window_months", detrend_window_months},
                  {"window", detrend_window},
                  {"order", detrend_order},
                  {"edge", edge_name(edge)}};
  j["fractal"] = {{"scales", fractal.scales},
                  {"orders", fractal.orders},
                  {"r2_min", fractal.r2_min},
                  {"tolerance", fractal.tolerance},
                  {"verdict_orders", fractal.verdict_orders},
                  {"jackknife_blocks", fractal.jackknife_blocks},
                  {"monofractal_z", fractal.monofractal_z}};
  if (fractal.fit_range) {
    j["fractal"]["fit_lo"] = fractal.fit_range->lo;
    j["fractal"]["fit_hi"] = fractal.fit_range->hi;
  }
  j["spectral"] = {{"return_lag", return_lag},
                   {"acf_max_lag", acf_max_lag},
                   {"acf_mode", acf_mode == AcfMode::MeanSubtracted ? "mean" : "raw"},
                   {"smooth_hz", smooth_hz},
                   {"sample_seconds", sample_seconds},
                   {"smoothing_window", wk.smoothing_window},
                   {"degree", wk.degree},
                   {"wk_max_lag", wk.max_lag},
                   {"tolerance", wk.tolerance},
                   {"band_points", wk.band_points}};
  if (index_fit) {
    j["spectral"]["index_fit_lo"] = index_fit->lo;
    j["spectral"]["index_fit_hi"] = index_fit->hi;
  }
  j["qfit"] = {{"enabled", qfit}, {"lags", qfit_lags}};
  j["output"] = {{"dir", out_dir.string()}, {"seed", seed}};
  return j;
}

PipelineConfig config_from_json(const json& j) {
  PipelineConfig c;
  for (const auto& [section, body] : j.items()) {
    for (const auto& [key, value] : body.items()) {
      std::string text;
      if (value.is_array()) {
        for (std::size_t i = 0; i < value.size(); ++i) {
          text += (i ? "," : "") + (value[i].is_string() ? value[i].get<std::string>()
                                                         : value[i].dump());
        }
      } else if (value.is_string()) {
        text = value.get<std::string>();
      } else {
        text = value.dump();
      }
      // an empty list means "default"
      if (value.is_array() && value.empty()) continue;
      apply(c, section + "." + key, text);
    }
  }
  return c;
}

PipelineConfig load_config(const std::filesystem::path& path) {
  boost::property_tree::ptree tree;
  try {
    boost::property_tree::read_ini(path.string(), tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw std::invalid_argument(std::string("config: ") + e.what());
  }
  PipelineConfig c;
  for (const auto& [section, body] : tree) {
    if (body.empty()) throw std::invalid_argument("config: key outside a section: " + section);
    for (const auto& [key, value] : body) apply(c, section + "." + key, value.data());
  }
  return c;
}

// ---- report ----------------------------------------------------------------

bool StationarityReport::both_stationary() const {
  return test1 && test2 && test1->stationary && test2->stationary;
}

json StationarityReport::to_json() const {
  json j;
  j["input"] = {{"path", input}, {"samples", samples}, {"samples_per_month", num(samples_per_month)}};
  j["artifacts"] = json::array();
  for (const auto& a : artifacts) {
    j["artifacts"].push_back({{"start_index", a.start_index}, {"duration", a.duration},
                              {"pre_level", num(a.pre_level)}, {"peak_level", num(a.peak_level)}});
  }
  if (window_scan) {
    const auto& s = *window_scan;
    j["window_scan"] = {{"windows", s.windows}, {"mean_kurtosis", nums(s.mean_kurtosis)},
                        {"std_error", nums(s.std_error)}, {"optimal_window", s.optimal_window},
                        {"optimal_months", num(s.optimal_months)}, {"qualified", s.qualified}};
  }
  if (detrend) {
    const auto& d = *detrend;
    j["detrend"] = {{"window", d.window}, {"window_months", num(d.window_months)},
                    {"poly_order", d.poly_order}, {"edge_mode", d.edge_mode},
                    {"fluctuation_mean", num(d.fluctuation_mean)},
                    {"fluctuation_std", num(d.fluctuation_std)},
                    {"reconstruction_error", num(d.reconstruction_error)}};
  }
  if (test1) {
    const auto& t = *test1;
    json ex = json::array();
    for (const auto& e : t.exponents) {
      ex.push_back({{"order", num(e.order)}, {"h", num(e.h)}, {"h_stderr", num(e.h_stderr)},
                    {"h_jackknife", num(e.h_jackknife)}, {"h_r2", num(e.h_r2)},
                    {"tau", num(e.tau)}, {"tau_stderr", num(e.tau_stderr)},
                    {"tau_r2", num(e.tau_r2)}, {"deviation", num(e.deviation)}});
    }
    j["test1"] = {
        {"fit_lo", num(t.fit_lo)}, {"fit_hi", num(t.fit_hi)}, {"exponents", ex},
        {"verdict_orders", nums(t.verdict_orders)}, {"max_deviation", num(t.max_deviation)},
        {"tolerance", num(t.tolerance)}, {"stationary", t.stationary},
        {"h_fit",
         {{"a1", num(t.h_fit.a1)}, {"b1", num(t.h_fit.b1)}, {"a1_stderr", num(t.h_fit.a1_stderr)},
          {"a1_jackknife_stderr", num(t.h_fit.a1_jackknife_stderr)},
          {"b1_stderr", num(t.h_fit.b1_stderr)}, {"r_squared", num(t.h_fit.r_squared)}}},
        {"tau_fit",
         {{"a2", num(t.tau_fit.a2)}, {"b2", num(t.tau_fit.b2)}, {"c2", num(t.tau_fit.c2)},
          {"a2_stderr", num(t.tau_fit.a2_stderr)}, {"b2_stderr", num(t.tau_fit.b2_stderr)},
          {"c2_stderr", num(t.tau_fit.c2_stderr)}, {"r_squared", num(t.tau_fit.r_squared)}}},
        {"monofractal", t.monofractal}, {"all_linear", t.all_linear}};
  }
  if (acf) {
    j["acf"] = {{"max_lag", acf->max_lag}, {"transition_lag", acf->transition_lag},
                {"note", acf->note}};
    j["acf"]["gamma"] = acf->gamma ? power_law_json(*acf->gamma) : json(nullptr);
  }
  if (test2) j["test2"] = wk_json(*test2);
  if (index_wk) j["index_wk"] = wk_json(*index_wk);
  if (index_spectrum) j["index_spectrum"] = power_law_json(*index_spectrum);
  j["qfits"] = json::array();
  for (const auto& f : qfits) {
    j["qfits"].push_back({{"lag", f.lag}, {"q", num(f.q)}, {"q_stderr", num(f.q_stderr)},
                          {"beta", num(f.beta)}, {"beta_stderr", num(f.beta_stderr)},
                          {"goodness", num(f.goodness)}});
  }
  if (scaling) {
    j["scaling"] = {{"alpha", num(scaling->alpha)}, {"alpha_stderr", num(scaling->alpha_stderr)},
                    {"D", num(scaling->D)}};
  }
  j["warnings"] = warnings;
  if (error) j["error"] = *error;
  j["verdicts"] = {{"test1", test1 ? json(test1->stationary) : json(nullptr)},
                   {"test2", test2 ? json(test2->stationary) : json(nullptr)},
                   {"both_stationary", both_stationary()}};
  j["provenance"] = {{"config_hash", provenance.config_hash}, {"seed", provenance.seed},
                     {"version", provenance.version}, {"config", provenance.config}};
  return j;
}

StationarityReport report_from_json(const json& j) {
  StationarityReport r;
  r.input = j.at("input").at("path").get<std::string>();
  r.samples = j.at("input").at("samples").get<std::size_t>();
  r.samples_per_month = num(j.at("input").at("samples_per_month"));
  for (const auto& a : j.at("artifacts")) {
    r.artifacts.push_back({a.at("start_index").get<std::size_t>(), a.at("duration").get<std::size_t>(),
                           num(a.at("pre_level")), num(a.at("peak_level"))});
  }
  if (j.contains("window_scan")) {
    const auto& s = j["window_scan"];
    ScanSummary w;
    w.windows = s.at("windows").get<std::vector<std::size_t>>();
    w.mean_kurtosis = nums(s.at("mean_kurtosis"));
    w.std_error = nums(s.at("std_error"));
    w.optimal_window = s.at("optimal_window").get<std::size_t>();
    w.optimal_months = num(s.at("optimal_months"));
    w.qualified = s.at("qualified").get<bool>();
    r.window_scan = w;
  }
  if (j.contains("detrend")) {
    const auto& s = j["detrend"];
    DetrendSummary d;
    d.window = s.at("window").get<std::size_t>();
    d.window_months = num(s.at("window_months"));
    d.poly_order = s.at("poly_order").get<int>();
    d.edge_mode = s.at("edge_mode").get<std::string>();
    d.fluctuation_mean = num(s.at("fluctuation_mean"));
    d.fluctuation_std = num(s.at("fluctuation_std"));
    d.reconstruction_error = num(s.at("reconstruction_error"));
    r.detrend = d;
  }
  if (j.contains("test1")) {
    const auto& s = j["test1"];
    MultifractalSummary t;
    t.fit_lo = num(s.at("fit_lo"));
    t.fit_hi = num(s.at("fit_hi"));
    for (const auto& e : s.at("exponents")) {
      ExponentSummary x;
      x.order = num(e.at("order"));
      x.h = num(e.at("h"));
      x.h_stderr = num(e.at("h_stderr"));
      x.h_jackknife = num(e.at("h_jackknife"));
      x.h_r2 = num(e.at("h_r2"));
      x.tau = num(e.at("tau"));
      x.tau_stderr = num(e.at("tau_stderr"));
      x.tau_r2 = num(e.at("tau_r2"));
      x.deviation = num(e.at("deviation"));
      t.exponents.push_back(x);
    }
    t.verdict_orders = nums(s.at("verdict_orders"));
    t.max_deviation = num(s.at("max_deviation"));
    t.tolerance = num(s.at("tolerance"));
    t.stationary = s.at("stationary").get<bool>();
    const auto& h = s.at("h_fit");
    t.h_fit = {num(h.at("a1")), num(h.at("b1")), num(h.at("a1_stderr")),
               num(h.at("a1_jackknife_stderr")), num(h.at("b1_stderr")), num(h.at("r_squared"))};
    const auto& q = s.at("tau_fit");
    t.tau_fit = {num(q.at("a2")), num(q.at("b2")), num(q.at("c2")), num(q.at("a2_stderr")),
                 num(q.at("b2_stderr")), num(q.at("c2_stderr")), num(q.at("r_squared"))};
    t.monofractal = s.at("monofractal").get<bool>();
    t.all_linear = s.at("all_linear").get<bool>();
    r.test1 = t;
  }
  if (j.contains("acf")) {
    const auto& s = j["acf"];
    AcfSummary a;
    a.max_lag = s.at("max_lag").get<std::size_t>();
    a.transition_lag = s.at("transition_lag").get<std::size_t>();
    a.note = s.at("note").get<std::string>();
    if (!s.at("gamma").is_null()) a.gamma = power_law_from(s["gamma"]);
    r.acf = a;
  }
  if (j.contains("test2")) r.test2 = wk_from(j["test2"]);
  if (j.contains("index_wk")) r.index_wk = wk_from(j["index_wk"]);
  if (j.contains("index_spectrum")) r.index_spectrum = power_law_from(j["index_spectrum"]);
  for (const auto& f : j.at("qfits")) {
    r.qfits.push_back({f.at("lag").get<std::size_t>(), num(f.at("q")), num(f.at("q_stderr")),
                       num(f.at("beta")), num(f.at("beta_stderr")), num(f.at("goodness"))});
  }
  if (j.contains("scaling")) {
    const auto& s = j["scaling"];
    r.scaling = ScalingSummary{num(s.at("alpha")), num(s.at("alpha_stderr")), num(s.at("D"))};
  }
  r.warnings = j.at("warnings").get<std::vector<std::string>>();
  if (j.contains("error")) r.error = j["error"].get<std::string>();
  const auto& p = j.at("provenance");
  r.provenance.config_hash = p.at("config_hash").get<std::string>();
  r.provenance.seed = p.at("seed").get<std::uint64_t>();
  r.provenance.version = p.at("version").get<std::string>();
  r.provenance.config = p.at("config");
  return r;
}

// ---- running ---------------------------------------------------------------

namespace {

template <typename F>
void stage(const char* name, PipelineOutput& out, F body) {
  try {
    body();
  } catch (const PipelineError&) {
    throw;
  } catch (const std::exception& e) {
    out.report.error = std::string(name) + ": " + e.what();
    throw PipelineError(name, e.what(), out.report);
  }
}

void analyse(const PriceSeries& input, const PipelineConfig& cfg, PipelineOutput& out) {
  auto& rep = out.report;
  auto& plots = out.plots;
  rep.provenance.config = cfg.to_json();
  rep.provenance.config_hash = hex64(fnv1a64(rep.provenance.config.dump()));
  rep.provenance.seed = cfg.seed;
  rep.provenance.version = kVersion;
  rep.input = cfg.input.empty() ? input.label() : cfg.input.string();
  rep.samples = input.size();

  stage("config", out, [&] { cfg.validate(); });

  std::optional<PriceSeries> series;
  stage("clean", out, [&] {
    rep.samples_per_month = input.samples_per_month();
    if (cfg.clean) {
      auto cleaned = remove_artifacts(input, cfg.artifacts);
      for (const auto& e : cleaned.events) {
        rep.artifacts.push_back({e.start_index, e.duration, e.pre_level, e.peak_level});
      }
      series.emplace(std::move(cleaned.series));
    } else {
      series.emplace(input);
    }
  });
  const auto prices = series->prices();
  const std::size_t n = prices.size();
  const double spm = rep.samples_per_month;

  stage("window-scan", out, [&] {
    if (!cfg.scan) return;
    std::vector<std::size_t> windows = cfg.scan_windows;
    if (windows.empty()) {
      for (double m = cfg.scan_min_months; m <= cfg.scan_max_months + 1e-9; m += cfg.scan_step_months) {
        const auto w = static_cast<std::size_t>(std::llround(m * spm));
        if (w < 4) continue;
        if (!windows.empty() && windows.back() == w) continue;
        windows.push_back(w);
      }
    }
    std::vector<std::size_t> usable;
    for (auto w : windows) {
      if (w <= n) {
        usable.push_back(w);
      } else {
        rep.warnings.push_back("window-scan: candidate " + std::to_string(w) +
                               " samples is longer than the series; skipped");
      }
    }
    if (usable.empty()) throw std::invalid_argument("no candidate window fits the series");
    const auto r = scan_optimal_window(prices, usable, cfg.scan_target, cfg.scan_input);
    ScanSummary s;
    s.windows = r.candidate_windows;
    s.mean_kurtosis = r.mean_kurtosis;
    s.std_error = r.std_error;
    s.optimal_window = r.optimal_window;
    s.optimal_months = static_cast<double>(r.optimal_window) / spm;
    s.qualified = r.qualified;
    if (!r.qualified) {
      rep.warnings.push_back("window-scan: no window reaches the kurtosis target within its stderr");
    }
    rep.window_scan = s;
    plots.window_scan.columns = {"window", "mean_kurtosis", "std_error"};
    for (std::size_t i = 0; i < s.windows.size(); ++i) {
      plots.window_scan.rows.push_back(
          {static_cast<double>(s.windows[i]), s.mean_kurtosis[i], s.std_error[i]});
    }
  });

  std::vector<double> fluct;
  stage("detrend", out, [&] {
    std::size_t w = cfg.detrend_window;
    if (w == 0 && cfg.detrend_window_months > 0) {
      w = static_cast<std::size_t>(std::llround(cfg.detrend_window_months * spm));
    }
    if (w == 0) w = rep.window_scan->optimal_window;
    const auto d = detrend_moving_average(prices, w, cfg.detrend_order, cfg.edge);
    DetrendSummary s;
    s.window = w;
    s.window_months = static_cast<double>(w) / spm;
    s.poly_order = cfg.detrend_order;
    s.edge_mode = edge_name(cfg.edge);
    s.fluctuation_mean = mean(d.fluctuation);
    s.fluctuation_std = std::sqrt(variance(d.fluctuation));
    for (std::size_t i = 0; i < n; ++i) {
      s.reconstruction_error =
          std::max(s.reconstruction_error, std::abs(prices[i] - (d.trend[i] + d.fluctuation[i])));
    }
    rep.detrend = s;
    plots.detrend.columns = {"t", "price", "trend", "fluctuation"};
    plots.detrend.rows.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
      plots.detrend.rows.push_back({static_cast<double>(i), prices[i], d.trend[i], d.fluctuation[i]});
    }
    fluct = d.fluctuation;
  });

  stage("mfdfa", out, [&] {
    const auto fit = analyze_multifractal(fluct, cfg.fractal);
    MultifractalSummary s;
    s.fit_lo = fit.fit_range.lo;
    s.fit_hi = fit.fit_range.hi;
    for (std::size_t i = 0; i < fit.h.size(); ++i) {
      ExponentSummary e;
      e.order = fit.h[i].order;
      e.h = fit.h[i].value;
      e.h_stderr = fit.h[i].std_error;
      e.h_jackknife = fit.h[i].jackknife_stderr;
      e.h_r2 = fit.h[i].r_squared;
      e.tau = fit.tau[i].value;
      e.tau_stderr = fit.tau[i].std_error;
      e.tau_r2 = fit.tau[i].r_squared;
      e.deviation = fit.verdict.deviations[i];
      s.exponents.push_back(e);
    }
    const auto& v = fit.verdict;
    s.verdict_orders = v.verdict_orders;
    s.max_deviation = v.max_deviation;
    s.tolerance = v.tolerance;
    s.stationary = v.stationary;
    s.h_fit = v.h_fit;
    s.tau_fit = v.tau_fit;
    s.monofractal = v.monofractal;
    s.all_linear = v.all_linear;
    if (!v.all_linear) rep.warnings.push_back("mfdfa: some log-log fits fall below the R^2 threshold");
    rep.test1 = s;

    const auto& sp = fit.spectrum;
    plots.fw.columns = {"s", "w", "F"};
    plots.gw.columns = {"s", "w", "G"};
    for (std::size_t o = 0; o < sp.orders.size(); ++o) {
      for (std::size_t k = 0; k < sp.scales.size(); ++k) {
        const auto sc = static_cast<double>(sp.scales[k]);
        plots.fw.rows.push_back({sc, sp.orders[o], sp.F[o][k]});
        plots.gw.rows.push_back({sc, sp.orders[o], sp.G[o][k]});
      }
    }
    plots.exponents.columns = {"w", "h", "h_stderr", "tau", "tau_stderr", "deviation"};
    for (const auto& e : s.exponents) {
      plots.exponents.rows.push_back({e.order, e.h, e.h_stderr, e.tau, e.tau_stderr, e.deviation});
    }
  });

  stage("spectral", out, [&] {
    const auto x = detrended_return(fluct, cfg.return_lag);
    const std::size_t max_lag = std::min(cfg.acf_max_lag, x.size() - 1);
    const auto a = autocorrelation(x, max_lag, cfg.acf_mode);
    rep.acf = AcfSummary{max_lag, a.transition_lag, a.gamma_fit, a.gamma_note};
    plots.acf.columns = {"lag", "C"};
    for (std::size_t s = 0; s < a.values.size(); ++s) {
      plots.acf.rows.push_back({static_cast<double>(a.lags[s]), a.values[s]});
    }

    auto opt = cfg.wk;
    opt.smoothing_width = hz_to_cycles_per_sample(cfg.smooth_hz, cfg.sample_seconds);
    const auto v = wiener_khinchin_test(x, opt);
    rep.test2 = WkSummary{v.median_deviation, v.tolerance, v.stationary, v.smoothing_window, v.max_lag};
    plots.spectrum.columns = {"f", "power", "smoothed_power", "smoothed_acf_transform"};
    for (std::size_t k = 0; k < v.periodogram.values.size(); ++k) {
      plots.spectrum.rows.push_back({v.periodogram.frequencies[k], v.periodogram.values[k],
                                     v.smoothed_periodogram[k], v.smoothed_acf_transform[k]});
    }

    const auto vi = wiener_khinchin_test(fluct, opt);
    rep.index_wk = WkSummary{vi.median_deviation, vi.tolerance, vi.stationary,
                             vi.smoothing_window, vi.max_lag};
    const FitInterval band = cfg.index_fit ? *cfg.index_fit : FitInterval{opt.smoothing_width, 0.5};
    try {
      rep.index_spectrum =
          fit_power_law(vi.periodogram.frequencies, vi.periodogram.values, band);
    } catch (const std::invalid_argument& e) {
      rep.warnings.push_back(std::string("spectral: index spectrum fit skipped: ") + e.what());
    }
  });

  stage("fit-q", out, [&] {
    if (!cfg.qfit) return;
    std::vector<double> lags, betas;
    for (auto lag : cfg.qfit_lags) {
      if (lag >= fluct.size()) throw std::invalid_argument("q-fit lag exceeds the series");
      const auto x = detrended_return(fluct, lag);
      const auto f = fit_qgaussian(x);
      rep.qfits.push_back({lag, f.q, f.q_stderr, f.beta, f.beta_stderr, f.goodness});
      lags.push_back(static_cast<double>(lag));
      betas.push_back(f.beta);
    }
    if (lags.size() >= 3) {
      try {
        const auto s = fit_scaling(lags, betas);
        rep.scaling = ScalingSummary{s.alpha, s.alpha_stderr, s.D};
      } catch (const std::invalid_argument& e) {
        rep.warnings.push_back(std::string("fit-q: scaling fit skipped: ") + e.what());
      }
    }
  });
}

void write_report(const StationarityReport& r, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::ofstream f(dir / "report.json");
  if (!f) throw std::runtime_error("cannot write " + (dir / "report.json").string());
  f << r.to_json().dump(2) << '\n';
}

}  // namespace

PipelineOutput run_analysis(const PriceSeries& series, const PipelineConfig& config) {
  PipelineOutput out;
  analyse(series, config, out);
  return out;
}

StationarityReport run_pipeline(const PipelineConfig& config) {
  config.validate();
  PipelineOutput out;
  std::optional<PriceSeries> series;
  try {
    series.emplace(load_csv(config.input, config.schema));
  } catch (const std::exception& e) {
    out.report.provenance.config = config.to_json();
    out.report.provenance.config_hash = hex64(fnv1a64(out.report.provenance.config.dump()));
    out.report.provenance.seed = config.seed;
    out.report.provenance.version = kVersion;
    out.report.input = config.input.string();
    out.report.error = std::string("load: ") + e.what();
    write_report(out.report, config.out_dir);
    throw PipelineError("load", e.what(), out.report);
  }
  try {
    analyse(*series, config, out);
  } catch (const PipelineError&) {
    emit_plot_data(out.plots, config.out_dir);
    write_report(out.report, config.out_dir);
    throw;
  }
  emit_plot_data(out.plots, config.out_dir);
  write_report(out.report, config.out_dir);
  return out.report;
}

void write_table(const std::filesystem::path& path, const PlotData::Table& t) {
  std::FILE* f = std::fopen(path.string().c_str(), "w");
  if (f == nullptr) throw std::runtime_error("cannot write " + path.string());
  for (std::size_t i = 0; i < t.columns.size(); ++i) {
    std::fprintf(f, "%s%s", i ? "," : "", t.columns[i].c_str());
  }
  std::fputc('\n', f);
  for (const auto& row : t.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) std::fprintf(f, "%s%.17g", i ? "," : "", row[i]);
    std::fputc('\n', f);
  }
  if (std::fclose(f) != 0) throw std::runtime_error("error writing " + path.string());
}

std::vector<std::filesystem::path> emit_plot_data(const PlotData& plots,
                                                  const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec || !std::filesystem::is_directory(dir)) {
    throw std::runtime_error("cannot create output directory " + dir.string());
  }
  const std::pair<const char*, const PlotData::Table*> tables[] = {
      {"window_scan.csv", &plots.window_scan}, {"detrend.csv", &plots.detrend},
      {"fw.csv", &plots.fw},                   {"gw.csv", &plots.gw},
      {"exponents.csv", &plots.exponents},     {"acf.csv", &plots.acf},
      {"spectrum.csv", &plots.spectrum}};
  std::vector<std::filesystem::path> written;
  json manifest = {{"written", json::array()}, {"omitted", json::array()}};
  for (const auto& [name, table] : tables) {
    if (table->empty()) {
      manifest["omitted"].push_back(name);
      continue;
    }
    write_table(dir / name, *table);
    written.push_back(dir / name);
    manifest["written"].push_back(name);
  }
  std::ofstream m(dir / "manifest.json");
  if (!m) throw std::runtime_error("cannot write manifest in " + dir.string());
  m << manifest.dump(2) << '\n';
  return written;
}

}  // namespace stockstat
