// stockstat: command-line front end for the analysis library.
//
// Exit status: 0 success (and every stationarity test passed),
// 2 a stationarity test failed, 1 an error.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "stockstat/detrend.hpp"
#include "stockstat/errors.hpp"
#include "stockstat/fractal.hpp"
#include "stockstat/market_data.hpp"
#include "stockstat/pipeline.hpp"
#include "stockstat/qgauss.hpp"
#include "stockstat/sde.hpp"
#include "stockstat/spectral.hpp"
#include "stockstat/trend.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace stockstat;

namespace {

int g_status = 0;

// --out is a directory, unless it names a .csv file for the main output
fs::path output_file(const fs::path& out, const std::string& default_name) {
  if (out.extension() == ".csv") {
    if (out.has_parent_path()) fs::create_directories(out.parent_path());
    return out;
  }
  fs::create_directories(out);
  return out / default_name;
}

void print(const json& j) { std::cout << j.dump(2) << '\n'; }

json nan_safe(double v) { return std::isfinite(v) ? json(v) : json(std::to_string(v)); }

PriceSeries load_prices(const PipelineConfig& c) { return load_csv(c.input, c.schema); }

// the fluctuation column of a `detrend` output file
std::vector<double> load_fluctuation(const fs::path& p) {
  const auto s = load_csv(p, CsvSchema{"timestamp", "fluctuation", ','});
  return {s.prices().begin(), s.prices().end()};
}

json exponents_json(const std::vector<Exponent>& e) {
  json a = json::array();
  for (const auto& x : e) {
    a.push_back({{"order", x.order}, {"value", nan_safe(x.value)}, {"stderr", nan_safe(x.std_error)},
                 {"jackknife_stderr", nan_safe(x.jackknife_stderr)},
                 {"r_squared", nan_safe(x.r_squared)}, {"linear", x.linear}});
  }
  return a;
}

void write_fluctuation_table(const fs::path& path, const FluctuationSpectrum& sp) {
  PlotData::Table t;
  t.columns = {"s", "w", "F", "G"};
  for (std::size_t o = 0; o < sp.orders.size(); ++o) {
    for (std::size_t k = 0; k < sp.scales.size(); ++k) {
      t.rows.push_back({static_cast<double>(sp.scales[k]), sp.orders[o], sp.F[o][k], sp.G[o][k]});
    }
  }
  write_table(path, t);
}

WienerKhinchinOptions wk_options(const PipelineConfig& c) {
  auto o = c.wk;
  o.smoothing_width = hz_to_cycles_per_sample(c.smooth_hz, c.sample_seconds);
  return o;
}

// scan for --config before the real parse, so flags can override it
std::optional<fs::path> find_config(int argc, char** argv) {
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--config" && i + 1 < argc) return fs::path(argv[i + 1]);
    if (a.rfind("--config=", 0) == 0) return fs::path(a.substr(9));
  }
  return std::nullopt;
}

}  // namespace

int main(int argc, char** argv) {
  PipelineConfig cfg;
  try {
    if (auto p = find_config(argc, argv)) cfg = load_config(*p);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }

  CLI::App app{"Stationarity analysis of stock index series"};
  app.require_subcommand(1);
  app.fallthrough();
  std::string config_path;
  app.add_option("--config", config_path, "INI configuration file");
  std::string out_dir = cfg.out_dir.string();
  app.add_option("--out", out_dir, "output directory (or .csv file for single-table commands)");
  app.add_option("--seed", cfg.seed, "random seed");

  std::string input = cfg.input.string();
  auto add_input = [&](CLI::App* sub, const char* help) {
    sub->add_option("--input", input, help);
    sub->add_option("--price-column,--price-col", cfg.schema.price_column, "price column name");
    sub->add_option("--timestamp-column,--timestamp-col", cfg.schema.timestamp_column, "timestamp column name");
  };

  // clean
  auto* clean = app.add_subcommand("clean", "remove short-lived spurious price excursions");
  add_input(clean, "price CSV");
  clean->add_option("--jump-threshold,--threshold", cfg.artifacts.rel_jump_threshold, "relative jump threshold");
  clean->add_option("--max-spike-minutes,--max-duration", cfg.artifacts.max_duration, "longest excursion, samples");
  clean->add_option("--tolerance", cfg.artifacts.reversion_tolerance, "reversion tolerance");

  // window-scan
  auto* scan = app.add_subcommand("window-scan", "mean kurtosis against window length");
  add_input(scan, "price CSV");
  scan->add_option("--min-months", cfg.scan_min_months);
  scan->add_option("--max-months", cfg.scan_max_months);
  scan->add_option("--step-months", cfg.scan_step_months);
  scan->add_option("--windows", cfg.scan_windows, "explicit windows in samples")->delimiter(',');
  scan->add_option("--target", cfg.scan_target);
  std::string scan_input = cfg.scan_input == KurtosisInput::Levels ? "levels" : "differences";
  scan->add_option("--kurtosis-of", scan_input)->check(CLI::IsMember({"levels", "differences"}));

  // detrend
  auto* det = app.add_subcommand("detrend", "moving-average trend and fluctuation");
  add_input(det, "price CSV");
  det->add_option("--window-months", cfg.detrend_window_months);
  det->add_option("--window", cfg.detrend_window, "window in samples");
  det->add_option("--order", cfg.detrend_order)->check(CLI::IsMember({0, 1}));
  std::string edge = cfg.edge == EdgeMode::NominalWindow ? "nominal" : "count";
  det->add_option("--edge", edge)->check(CLI::IsMember({"count", "nominal"}));

  // dfa / mfdfa
  auto add_fractal = [&](CLI::App* sub) {
    sub->add_option("--input", input, "detrend CSV (fluctuation column)");
    sub->add_option("--scales", cfg.fractal.scales)->delimiter(',');
    sub->add_option("--orders", cfg.fractal.orders)->delimiter(',');
    sub->add_option("--tolerance", cfg.fractal.tolerance);
  };
  std::optional<double> fit_lo, fit_hi;
  auto* dfa = app.add_subcommand("dfa", "Hurst exponent h(2)");
  add_fractal(dfa);
  dfa->add_option("--fit-lo", fit_lo);
  dfa->add_option("--fit-hi", fit_hi);
  auto* mfdfa = app.add_subcommand("mfdfa", "generalized h(w), tau(w) and test 1");
  add_fractal(mfdfa);
  mfdfa->add_option("--fit-lo", fit_lo);
  mfdfa->add_option("--fit-hi", fit_hi);

  // acf / spectrum / wk-test
  auto add_spectral = [&](CLI::App* sub) {
    sub->add_option("--input", input, "detrend CSV (fluctuation column)");
    sub->add_option("--lag", cfg.return_lag, "return lag in samples");
  };
  auto* acf = app.add_subcommand("acf", "autocorrelation of detrended returns");
  add_spectral(acf);
  acf->add_option("--max-lag", cfg.acf_max_lag);
  std::string acf_mode = cfg.acf_mode == AcfMode::MeanSubtracted ? "mean" : "raw";
  acf->add_option("--mode", acf_mode)->check(CLI::IsMember({"mean", "raw"}));

  auto* spec = app.add_subcommand("spectrum", "periodogram and smoothed FT of the autocovariance");
  add_spectral(spec);
  spec->add_option("--smooth-hz", cfg.smooth_hz);
  spec->add_option("--sample-seconds", cfg.sample_seconds);
  bool spec_index = false;
  spec->add_flag("--index", spec_index, "analyse the detrended price instead of its returns");

  auto* wk = app.add_subcommand("wk-test", "Wiener-Khinchin stationarity test (test 2)");
  add_spectral(wk);
  wk->add_option("--smooth-hz", cfg.smooth_hz);
  wk->add_option("--sample-seconds", cfg.sample_seconds);
  wk->add_option("--tolerance", cfg.wk.tolerance);
  wk->add_option("--degree", cfg.wk.degree);

  // fit-q
  auto* fitq = app.add_subcommand("fit-q", "q-Gaussian fits of detrended returns");
  fitq->add_option("--input", input, "detrend CSV (fluctuation column)");
  fitq->add_option("--lags", cfg.qfit_lags)->delimiter(',');

  // simulate
  auto* sim = app.add_subcommand("simulate", "Monte-Carlo paths of the q-Gaussian SDE or GBM");
  std::string model = "qsde";
  sim->add_option("--model", model)->check(CLI::IsMember({"qsde", "gbm"}));
  SimulationSpec ss;
  sim->add_option("--paths", ss.paths);
  sim->add_option("--steps", ss.steps);
  sim->add_option("--dt", ss.dt);
  sim->add_option("--x0", ss.x0);
  sim->add_option("--stride", ss.record_stride, "record every n-th step (0: endpoints)");
  sim->add_option("--threads", ss.threads);
  std::optional<double> sim_q, sim_alpha, sim_D, sim_d2;
  sim->add_option("--q", sim_q);
  sim->add_option("--alpha", sim_alpha);
  sim->add_option("--D", sim_D);
  sim->add_option("--d2", sim_d2, "constant D2 instead of the model-derived one");
  sim->add_option("--t0", ss.T0, "start time T0");
  std::string sim_trend = "zero";
  sim->add_option("--trend", sim_trend, "zero | poly:c0,c1,... | exp:a,b");
  bool sim_literal = false, sim_sample = false;
  sim->add_flag("--literal-diffusivity", sim_literal);
  sim->add_flag("--sample-initial", sim_sample);
  sim->add_option("--mu", ss.mu);
  sim->add_option("--sigma", ss.sigma);

  // synth-index
  auto* synth = app.add_subcommand("synth-index", "known trend plus cumulative q-Gaussian noise");
  std::string synth_trend = "zero";
  synth->add_option("--trend", synth_trend, "zero | poly:c0,c1,... | exp:a,b");
  double sq = 1.4, salpha = 1.0, sD = 1.0;
  std::size_t slength = 100000;
  bool no_noise = false;
  synth->add_option("--q", sq);
  synth->add_option("--alpha", salpha);
  synth->add_option("--D", sD);
  synth->add_option("--length", slength);
  synth->add_flag("--no-noise", no_noise);

  // report
  auto* rep = app.add_subcommand("report", "full pipeline with JSON report and plot data");
  add_input(rep, "price CSV");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    cfg.input = input;
    cfg.out_dir = out_dir;
    cfg.scan_input = scan_input == "levels" ? KurtosisInput::Levels : KurtosisInput::Differences;
    cfg.edge = edge == "nominal" ? EdgeMode::NominalWindow : EdgeMode::CountNormalized;
    cfg.acf_mode = acf_mode == "mean" ? AcfMode::MeanSubtracted : AcfMode::RawProduct;
    if (fit_lo || fit_hi) {
      if (!cfg.fractal.fit_range) cfg.fractal.fit_range = ScaleRange{};
      if (fit_lo) cfg.fractal.fit_range->lo = *fit_lo;
      if (fit_hi) cfg.fractal.fit_range->hi = *fit_hi;
    }
    const fs::path out = cfg.out_dir;

    if (*clean) {
      cfg.validate();
      const auto r = remove_artifacts(load_prices(cfg), cfg.artifacts);
      write_csv(output_file(out, "cleaned.csv"), r.series);
      json ev = json::array();
      for (const auto& e : r.events) {
        ev.push_back({{"start_index", e.start_index}, {"duration", e.duration},
                      {"pre_level", e.pre_level}, {"peak_level", e.peak_level}});
      }
      print({{"events", ev}, {"samples", r.series.size()}});
    } else if (*scan) {
      cfg.scan = true;
      cfg.validate();
      const auto prices = load_prices(cfg);
      std::vector<std::size_t> windows = cfg.scan_windows;
      if (windows.empty()) {
        const double spm = prices.samples_per_month();
        for (double m = cfg.scan_min_months; m <= cfg.scan_max_months + 1e-9; m += cfg.scan_step_months) {
          const auto w = static_cast<std::size_t>(std::llround(m * spm));
          if (w >= 4 && w <= prices.size() && (windows.empty() || windows.back() != w)) {
            windows.push_back(w);
          }
        }
      }
      const auto r = scan_optimal_window(prices.prices(), windows, cfg.scan_target, cfg.scan_input);
      PlotData::Table t;
      t.columns = {"window", "mean_kurtosis", "std_error"};
      for (std::size_t i = 0; i < r.candidate_windows.size(); ++i) {
        t.rows.push_back({static_cast<double>(r.candidate_windows[i]), r.mean_kurtosis[i], r.std_error[i]});
      }
      write_table(output_file(out, "window_scan.csv"), t);
      print({{"optimal_window", r.optimal_window},
             {"optimal_months", static_cast<double>(r.optimal_window) / prices.samples_per_month()},
             {"qualified", r.qualified}});
    } else if (*det) {
      if (cfg.detrend_window == 0 && !(cfg.detrend_window_months > 0)) {
        throw std::invalid_argument("detrend: give --window or --window-months");
      }
      cfg.validate();
      const auto prices = load_prices(cfg);
      std::size_t w = cfg.detrend_window;
      if (w == 0) w = static_cast<std::size_t>(std::llround(cfg.detrend_window_months * prices.samples_per_month()));
      const auto d = detrend_moving_average(prices.prices(), w, cfg.detrend_order, cfg.edge);
      const auto path = output_file(out, "detrend.csv");
      std::ofstream f(path);
      if (!f) throw std::runtime_error("cannot write " + path.string());
      f << "timestamp,price,trend,fluctuation\n";
      char buf[128];
      for (std::size_t i = 0; i < prices.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g", prices.prices()[i], d.trend[i], d.fluctuation[i]);
        f << format_timestamp(prices.timestamps()[i]) << ',' << buf << '\n';
      }
      print({{"window", w}, {"window_months", static_cast<double>(w) / prices.samples_per_month()},
             {"output", path.string()}});
    } else if (*dfa || *mfdfa) {
      cfg.validate();
      const auto x = load_fluctuation(cfg.input);
      auto fc = cfg.fractal;
      if (*dfa && fc.orders.empty()) fc.orders = {2.0};
      if (*dfa) fc.verdict_orders = {};
      const auto fit = analyze_multifractal(x, fc);
      write_fluctuation_table(output_file(out, *dfa ? "dfa.csv" : "mfdfa.csv"), fit.spectrum);
      const auto& v = fit.verdict;
      json j = {{"fit_range", {fit.fit_range.lo, fit.fit_range.hi}},
                {"h", exponents_json(fit.h)},
                {"tau", exponents_json(fit.tau)}};
      if (*mfdfa) {
        j["verdict"] = {{"deviations", v.deviations},
                        {"verdict_orders", v.verdict_orders},
                        {"max_deviation", v.max_deviation},
                        {"tolerance", v.tolerance},
                        {"stationary", v.stationary},
                        {"h_fit", {{"a1", v.h_fit.a1}, {"b1", v.h_fit.b1},
                                   {"a1_jackknife_stderr", nan_safe(v.h_fit.a1_jackknife_stderr)}}},
                        {"tau_fit", {{"a2", v.tau_fit.a2}, {"b2", v.tau_fit.b2}, {"c2", v.tau_fit.c2}}},
                        {"monofractal", v.monofractal}};
        if (!v.stationary) g_status = 2;
      }
      print(j);
    } else if (*acf) {
      cfg.validate();
      const auto x = detrended_return(load_fluctuation(cfg.input), cfg.return_lag);
      const auto a = autocorrelation(x, std::min(cfg.acf_max_lag, x.size() - 1), cfg.acf_mode);
      PlotData::Table t;
      t.columns = {"lag", "C"};
      for (std::size_t s = 0; s < a.values.size(); ++s) t.rows.push_back({static_cast<double>(s), a.values[s]});
      write_table(output_file(out, "acf.csv"), t);
      json j = {{"transition_lag", a.transition_lag}, {"note", a.gamma_note}};
      if (a.gamma_fit) {
        j["gamma"] = {{"exponent", a.gamma_fit->exponent}, {"stderr", nan_safe(a.gamma_fit->exponent_stderr)}};
      }
      print(j);
    } else if (*spec || *wk) {
      cfg.validate();
      const auto fl = load_fluctuation(cfg.input);
      const auto x = spec_index ? fl : detrended_return(fl, cfg.return_lag);
      const auto v = wiener_khinchin_test(x, wk_options(cfg));
      PlotData::Table t;
      t.columns = {"f", "power", "smoothed_power", "smoothed_acf_transform"};
      for (std::size_t k = 0; k < v.periodogram.values.size(); ++k) {
        t.rows.push_back({v.periodogram.frequencies[k], v.periodogram.values[k],
                          v.smoothed_periodogram[k], v.smoothed_acf_transform[k]});
      }
      write_table(output_file(out, "spectrum.csv"), t);
      print({{"median_deviation", nan_safe(v.median_deviation)},
             {"tolerance", v.tolerance},
             {"stationary", v.stationary},
             {"smoothing_window", v.smoothing_window},
             {"max_lag", v.max_lag}});
      if (*wk && !v.stationary) g_status = 2;
    } else if (*fitq) {
      cfg.validate();
      const auto fl = load_fluctuation(cfg.input);
      json fits = json::array();
      PlotData::Table t;
      t.columns = {"lag", "q", "q_stderr", "beta", "beta_stderr", "goodness"};
      std::vector<double> lags, betas;
      for (auto lag : cfg.qfit_lags) {
        const auto f = fit_qgaussian(detrended_return(fl, lag));
        fits.push_back({{"lag", lag}, {"q", f.q}, {"q_stderr", nan_safe(f.q_stderr)},
                        {"beta", f.beta}, {"beta_stderr", nan_safe(f.beta_stderr)},
                        {"goodness", f.goodness}});
        t.rows.push_back({static_cast<double>(lag), f.q, f.q_stderr, f.beta, f.beta_stderr, f.goodness});
        lags.push_back(static_cast<double>(lag));
        betas.push_back(f.beta);
      }
      write_table(output_file(out, "qfit.csv"), t);
      json j = {{"fits", fits}};
      if (lags.size() >= 3) {
        const auto s = fit_scaling(lags, betas);
        j["scaling"] = {{"alpha", s.alpha}, {"alpha_stderr", nan_safe(s.alpha_stderr)}, {"D", s.D}};
      }
      print(j);
    } else if (*sim) {
      ss.seed = cfg.seed;
      ss.kind = model == "gbm" ? SdeKind::Gbm : SdeKind::QGaussian;
      ss.drift = Trend::parse(sim_trend);
      ss.convention = sim_literal ? DiffusionConvention::Literal : DiffusionConvention::SelfConsistent;
      ss.sample_initial = sim_sample;
      if (sim_alpha || sim_D) {
        ss.model = QGaussianModel(sim_q.value_or(1.4), sim_alpha.value_or(1.0), sim_D.value_or(1.0));
      }
      if (sim_q) ss.noise_q = *sim_q;
      if (sim_d2) ss.constant_D2 = *sim_d2;
      const auto e = simulate(ss);
      PlotData::Table t;
      t.columns = {"path", "T", "X"};
      for (std::size_t p = 0; p < e.paths.size(); ++p) {
        for (std::size_t i = 0; i < e.times.size(); ++i) {
          t.rows.push_back({static_cast<double>(p), e.times[i], e.paths[p][i]});
        }
      }
      write_table(output_file(out, "paths.csv"), t);
      print({{"paths", e.paths.size()}, {"recorded_times", e.times.size()},
             {"clamped", e.clamped}, {"warnings", e.warnings}});
    } else if (*synth) {
      std::optional<QGaussianModel> noise;
      if (!no_noise) noise = QGaussianModel(sq, salpha, sD);
      const auto s = synthetic_index(Trend::parse(synth_trend), noise, slength, cfg.seed);
      const auto path = output_file(out, "synthetic.csv");
      write_csv(path, s);
      print({{"samples", s.size()}, {"output", path.string()}});
    } else if (*rep) {
      try {
        const auto r = run_pipeline(cfg);
        print(r.to_json()["verdicts"]);
        if (!r.both_stationary()) g_status = 2;
      } catch (const PipelineError& e) {
        std::cerr << "error in stage " << e.stage() << ": " << e.what() << '\n';
        return 1;
      }
    }
  } catch (const CsvError& e) {
    std::cerr << "error: " << e.what() << " (line " << e.row() << ")\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return g_status;
}
