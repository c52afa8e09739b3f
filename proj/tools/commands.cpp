#include "commands.hpp"

#include <cstdio>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "inloop/csv.hpp"
#include "inloop/errors.hpp"
#include "inloop/feedback_me.hpp"
#include "inloop/loop_field.hpp"
#include "inloop/psd.hpp"
#include "inloop/spectra.hpp"
#include "inloop/squeezed_bath.hpp"
#include "inloop/trajectory.hpp"
#include "settings.hpp"

namespace inloop::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// ---- key tables ----

KeySpec real_key(std::string name, std::string help, std::optional<std::string> fallback = {}) {
  return {std::move(name), ValueKind::real, std::move(fallback), std::move(help)};
}

KeySpec count_key(std::string name, std::string help, std::optional<std::string> fallback = {}) {
  return {std::move(name), ValueKind::count, std::move(fallback), std::move(help)};
}

const KeySpec kEta = real_key("eta", "mode-matching into the atom, (0, 1]");
const KeySpec kEps = real_key("eps", "homodyne detector efficiency, (0, 1]");
const KeySpec kGain = real_key("g", "round-loop gain, < 1 (exclusive with lambda)");
const KeySpec kLambda = real_key("lambda", "feedback parameter g eta/(1 - g), > -eta");

std::vector<KeySpec> filter_keys() {
  return {
      {"filter", ValueKind::text, "rectangular",
       "loop response: rectangular, exponential, single-pole or sampled"},
      real_key("tau", "filter delay (time constant for single-pole)", "0.001"),
      real_key("time_constant", "decay constant of the exponential filter"),
      {"bins", ValueKind::list, std::nullopt, "bin heights of the sampled filter"},
  };
}

std::vector<KeySpec> rates_keys() {
  return {kEta, kEps, kGain, kLambda, real_key("L", "free squeezing L = S_in^X, > 0")};
}

std::vector<KeySpec> loop_spectrum_keys() {
  std::vector<KeySpec> k{kEps, kGain, kLambda, kEta};
  for (auto& f : filter_keys()) k.push_back(f);
  k.push_back(real_key("omega_min", "first grid frequency", "0"));
  k.push_back(real_key("omega_max", "last grid frequency (default 100/tau)"));
  k.push_back(count_key("points", "grid points", "2001"));
  return k;
}

std::vector<KeySpec> loop_sim_keys() {
  std::vector<KeySpec> k{kEps, kGain, kLambda, kEta};
  for (auto& f : filter_keys()) k.push_back(f);
  k.push_back(real_key("dt", "sample step (default tau/50)"));
  k.push_back(real_key("duration", "record length (default 1e4 tau)"));
  k.push_back(count_key("seed", "random seed"));
  k.push_back(count_key("min_segments", "minimum Welch segments", "100"));
  k.push_back({"write_record", ValueKind::flag, "false", "also write the sampled record"});
  return k;
}

std::vector<KeySpec> spectrum_keys() {
  return {
      {"model", ValueKind::text, std::nullopt, "in-loop or free"},
      kEta,
      kEps,
      kGain,
      kLambda,
      real_key("L", "free squeezing L = S_in^X, > 0"),
      real_key("omega_max", "grid covers [-omega_max, omega_max]", "3"),
      count_key("points", "grid points", "1201"),
      real_key("tau_max", "quadrature horizon, 0 for 40/(slowest rate)", "0"),
      real_key("dtau", "quadrature step", "0.001"),
  };
}

std::vector<KeySpec> fig2_keys() {
  return {real_key("eta", "mode-matching", "0.8"), real_key("eps", "detector efficiency", "0.95")};
}

std::vector<KeySpec> trajectory_keys() {
  std::vector<KeySpec> k{kEta, kEps, kGain, kLambda};
  for (auto& f : filter_keys()) k.push_back(f);
  k.push_back(real_key("dt", "integration step", "0.0001"));
  k.push_back(real_key("duration", "simulated time", "3"));
  k.push_back(count_key("n_traj", "number of trajectories", "1000"));
  k.push_back(real_key("sample_interval", "output spacing, a multiple of dt", "0.01"));
  k.push_back(real_key("x0", "initial Bloch x", "1"));
  k.push_back(real_key("y0", "initial Bloch y", "0"));
  k.push_back(real_key("z0", "initial Bloch z", "0"));
  k.push_back(real_key("phi_guard", "abort when |Phi| exceeds this", "1e6"));
  k.push_back(count_key("threads", "worker threads (output does not depend on it)", "1"));
  k.push_back(count_key("seed", "random seed"));
  k.push_back({"current_psd", ValueKind::flag, "false", "write the PSD of trajectory 0's current"});
  k.push_back(real_key("fit_t_lo", "decay fit window start", "0.5"));
  k.push_back(real_key("fit_t_hi", "decay fit window end", "3"));
  k.push_back(count_key("bootstrap", "bootstrap resamples for the fit error", "100"));
  return k;
}

// ---- shared helpers ----

LoopFilter make_filter(const Settings& s) {
  const std::string& kind = s.text("filter");
  FilterKind k;
  try {
    k = filter_kind_from_string(kind);
  } catch (const ParameterError& e) {
    throw ConfigError(s.entry("filter").origin + ": field 'filter': " + e.what());
  }
  const double tau = s.real("tau");
  switch (k) {
    case FilterKind::rectangular: return LoopFilter::rectangular(tau);
    case FilterKind::single_pole: return LoopFilter::single_pole(tau);
    case FilterKind::exponential:
      s.require("time_constant");
      return LoopFilter::exponential(tau, s.real("time_constant"));
    case FilterKind::sampled:
      s.require("bins");
      return LoopFilter::sampled(s.list("bins"), tau);
  }
  throw ConfigError("unhandled filter kind");
}

// Gain from g directly, or from lambda with eta.
double resolve_gain(const Settings& s) {
  s.require_one_of("g", "lambda");
  if (s.has("g")) return s.real("g");
  s.require("eta");
  return gain_from_lambda(s.real("lambda"), s.real("eta"));
}

LoopConfig make_loop(const Settings& s) {
  s.require("eps");
  LoopConfig cfg;
  cfg.g = resolve_gain(s);
  cfg.eps = s.real("eps");
  if (s.has("eta")) cfg.eta = s.real("eta");
  cfg.filter = make_filter(s);
  require_valid(cfg);
  return cfg;
}

fs::path output_dir(const std::string& flag) {
  fs::path dir = ".";
  if (!flag.empty()) {
    dir = flag;
  } else if (const char* env = std::getenv("INLOOP_OUTPUT_DIR"); env && *env) {
    dir = env;
  }
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory " + dir.string() + ": " + ec.message());
  return dir;
}

void emit_csv(const fs::path& path, const std::vector<CsvColumn>& columns,
              const std::vector<std::string>& comments = {}) {
  try {
    write_csv(path, columns, comments);
  } catch (const std::runtime_error& e) {
    throw IoError(e.what());
  }
  std::cout << "wrote " << path.string() << "\n";
}

void emit_json(const fs::path& path, const json& doc) {
  const fs::path tmp = path.string() + ".part";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw IoError("cannot open " + tmp.string() + " for writing");
    out << doc.dump(2) << "\n";
    if (!out) throw IoError("write failed for " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw IoError("cannot move output into place at " + path.string());
  }
  std::cout << "wrote " << path.string() << "\n";
}

json rate_json(const RateSet& r) {
  return {{"gamma_x", r.gamma_x}, {"gamma_y", r.gamma_y}, {"gamma_z", r.gamma_z},
          {"C", r.C},             {"z_ss", r.z_steady()}};
}

json feedback_json(double lambda, double eta, double eps, std::optional<double> g = {}) {
  const FeedbackGenerator gen = build_generator(lambda, eta, eps);
  json j = rate_json(gen.rates());
  j["z_ss"] = steady_state(lambda, eta, eps).z;
  j["lambda"] = lambda;
  j["g"] = g ? *g : gain_from_lambda(lambda, eta);
  j["S"] = squeezing_from_lambda(lambda, eta, eps);
  return j;
}

json free_json(double eta, double L) {
  const SqueezedBathGenerator gen = build_squeezed_generator(eta, L);
  json j = rate_json(gen.rates());
  j["z_ss"] = free_steady_state(eta, L).z;
  const SqueezingNM nm = nm_from_L(L);
  j["L"] = L;
  j["N"] = nm.N;
  j["M"] = nm.M;
  return j;
}

json fit_json(const LorentzianPair& f) {
  return {{"weight_narrow", f.weight_narrow}, {"width_narrow", f.width_narrow},
          {"weight_broad", f.weight_broad},   {"width_broad", f.width_broad},
          {"converged", f.converged}};
}

// ---- subcommands ----

void cmd_rates(const Settings& s) {
  json out = json::object();
  const bool feedback = s.has("g") || s.has("lambda");
  if (!feedback && !s.has("L")) {
    throw ConfigError("rates needs g or lambda (with eta and eps), or L (with eta)");
  }
  s.require("eta");
  const double eta = s.real("eta");
  double L = 0.0;
  if (feedback) {
    s.require("eps");
    s.require_one_of("g", "lambda");
    const double eps = s.real("eps");
    const double lambda = s.has("g") ? lambda_from_gain(s.real("g"), eta) : s.real("lambda");
    out["feedback"] = feedback_json(lambda, eta, eps,
                                    s.has("g") ? std::optional<double>(s.real("g")) : std::nullopt);
    L = out["feedback"]["S"].get<double>();
  }
  // Without an explicit L the free bath is compared at the same squeezing S = L.
  if (s.has("L")) L = s.real("L");
  out["free"] = free_json(eta, L);
  std::cout << out.dump(2) << "\n";
}

void cmd_loop_spectrum(Settings& s, const fs::path& dir) {
  const LoopConfig cfg = make_loop(s);
  s.set_default("omega_max", 100.0 / cfg.filter.tau());
  const std::uint64_t points = s.count("points");
  if (points < 2) throw ParameterError("points must be at least 2");
  const std::vector<double> grid = linear_grid(s.real("omega_min"), s.real("omega_max"), points);
  const std::vector<double> s_in = in_loop_spectrum(cfg, grid);
  const std::vector<double> s_hom = homodyne_spectrum(cfg, grid);
  emit_csv(dir / "loop_spectrum.csv", {{"omega", grid}, {"S_in", s_in}, {"S_hom", s_hom}},
           {"g = " + format_number(cfg.g) + ", eps = " + format_number(cfg.eps) + ", filter " +
            std::string(to_string(cfg.filter.kind())) + ", tau = " + format_number(cfg.filter.tau())});
  emit_json(dir / "manifest.json", s.manifest());
}

void cmd_loop_sim(Settings& s, const fs::path& dir) {
  const LoopConfig cfg = make_loop(s);
  const double tau = cfg.filter.tau();
  s.set_default("dt", tau / 50.0);
  s.set_default("duration", 1e4 * tau);
  const double dt = s.real("dt");
  const ClassicalLoopRecord rec =
      simulate_classical_loop(cfg, dt, s.real("duration"), s.count("seed"));
  const std::size_t segments = s.count("min_segments");
  const PsdEstimate x = welch_psd(rec.x_in, dt, segments);
  const PsdEstimate i = welch_psd(rec.current, dt, segments);
  const std::vector<double> x_theory = in_loop_spectrum(cfg, x.omega);
  const std::vector<double> i_theory = homodyne_spectrum(cfg, x.omega);
  emit_csv(dir / "loop_sim_psd.csv",
           {{"omega", x.omega},
            {"S_in", x.value},
            {"se_S_in", x.std_error},
            {"S_hom", i.value},
            {"se_S_hom", i.std_error},
            {"S_in_theory", x_theory},
            {"S_hom_theory", i_theory}},
           {"Welch: " + std::to_string(x.segments) + " segments of " +
            std::to_string(x.segment_length) + " samples, Hann window, 50% overlap"});
  if (s.flag("write_record")) {
    std::vector<double> t(rec.x_in.size());
    for (std::size_t k = 0; k < t.size(); ++k) t[k] = static_cast<double>(k) * dt;
    emit_csv(dir / "loop_sim_record.csv",
             {{"t", t}, {"x_in", rec.x_in}, {"current", rec.current}});
  }
  emit_json(dir / "manifest.json", s.manifest());
}

void cmd_spectrum(const Settings& s, const fs::path& dir) {
  s.require("model");
  s.require("eta");
  const std::string& model = s.text("model");
  const double eta = s.real("eta");
  const double w = s.real("omega_max");
  const std::uint64_t points = s.count("points");
  if (!(w > 0.0) || points < 2) throw ParameterError("need omega_max > 0 and points >= 2");
  const std::vector<double> grid = linear_grid(-w, w, points);
  const QuadratureOptions q{s.real("tau_max"), s.real("dtau")};

  Spectrum numerical;
  Spectrum analytic;
  if (model == "in-loop") {
    if (s.has("L")) throw ConfigError("key 'L' does not apply to model in-loop");
    s.require("eps");
    s.require_one_of("g", "lambda");
    const double eps = s.real("eps");
    const double lambda = s.has("g") ? lambda_from_gain(s.real("g"), eta) : s.real("lambda");
    const FeedbackGenerator gen = build_generator(lambda, eta, eps);
    numerical = numerical_power_spectrum(gen.bloch(), eta, grid, q);
    analytic = analytic_power_spectrum(gen.rates(), eta, grid);
  } else if (model == "free") {
    for (const char* k : {"eps", "g", "lambda"}) {
      if (s.has(k)) throw ConfigError(std::string("key '") + k + "' does not apply to model free");
    }
    s.require("L");
    const SqueezedBathGenerator gen = build_squeezed_generator(eta, s.real("L"));
    numerical = numerical_power_spectrum(gen.bloch(), eta, grid, q);
    analytic = analytic_power_spectrum(gen.rates(), eta, grid);
  } else {
    throw ConfigError(s.entry("model").origin + ": field 'model': expected in-loop or free, got '" +
                      model + "'");
  }
  emit_csv(dir / "spectrum.csv",
           {{"omega", grid}, {"P_numerical", numerical.value}, {"P_analytic", analytic.value}},
           {"convention " + numerical.convention});
  emit_json(dir / "manifest.json", s.manifest());
}

void cmd_fig2(const Settings& s, const fs::path& dir) {
  const double eta = s.real("eta");
  const double eps = s.real("eps");
  const Fig2Report r = fig2_report(eta, eps);
  emit_csv(dir / "fig2.csv",
           {{"omega", r.in_loop_spectrum.omega},
            {"P_inloop", r.in_loop_spectrum.value},
            {"P_free", r.free_spectrum.value},
            {"P_natural", r.natural}},
           {"P_natural = " + format_number(r.natural_scale) +
                " * (1/2)/(1/4 + omega^2), peak-matched to P_inloop(0)",
            "eta = " + format_number(eta) + ", eps = " + format_number(eps) +
                ", S_in = L = " + format_number(r.squeezing)});
  json report = {
      {"in_loop", feedback_json(r.lambda, eta, eps)},
      {"free", free_json(eta, r.squeezing)},
      {"in_loop_fit", fit_json(r.in_loop_fit)},
      {"free_fit", fit_json(r.free_fit)},
      {"natural_scale", r.natural_scale},
  };
  emit_json(dir / "fig2_rates.json", report);
  emit_json(dir / "manifest.json", s.manifest());
}

void cmd_trajectories(const Settings& s, const fs::path& dir) {
  s.require("eta");
  TrajectoryConfig c;
  c.loop = make_loop(s);
  c.dt = s.real("dt");
  c.duration = s.real("duration");
  c.n_traj = s.count("n_traj");
  c.seed = s.count("seed");
  c.sample_interval = s.real("sample_interval");
  c.initial = {s.real("x0"), s.real("y0"), s.real("z0")};
  c.phi_guard = s.real("phi_guard");
  c.threads = static_cast<unsigned>(s.count("threads"));
  c.record_current = s.flag("current_psd");
  if (c.threads == 0) throw ParameterError("threads must be at least 1");
  c.validate();

  const EnsembleResult r = run_ensemble(c);
  emit_csv(dir / "trajectories.csv",
           {{"t", r.t},
            {"x", r.mean_x},
            {"y", r.mean_y},
            {"z", r.mean_z},
            {"se_x", r.se_x},
            {"se_y", r.se_y},
            {"se_z", r.se_z}});

  if (r.current) {
    const PsdEstimate p = welch_psd(r.current->current, r.current->dt);
    const std::vector<double> theory = homodyne_spectrum(c.loop, p.omega);
    emit_csv(dir / "trajectories_current_psd.csv",
             {{"omega", p.omega}, {"S_hom", p.value}, {"se_S_hom", p.std_error},
              {"S_hom_theory", theory}},
             {"current of trajectory 0; theory column is the atom-free loop"});
  }

  const double lambda = lambda_from_gain(c.loop.g, c.loop.eta);
  const RateSet markov = rates(lambda, c.loop.eta, c.loop.eps);
  json fits = {{"markov_gamma_x", markov.gamma_x},
               {"markov_gamma_y", markov.gamma_y},
               {"lambda", lambda}};
  const std::pair<const char*, BlochComponent> comps[] = {{"x", BlochComponent::x},
                                                          {"y", BlochComponent::y}};
  const double init[] = {c.initial.x, c.initial.y};
  for (std::size_t k = 0; k < 2; ++k) {
    json& slot = fits[std::string("gamma_") + comps[k].first];
    if (!(init[k] > 0.0)) {
      slot = nullptr;
      continue;
    }
    try {
      const DecayFit f = fit_decay_rate(r, comps[k].second, s.real("fit_t_lo"),
                                        s.real("fit_t_hi"), s.count("bootstrap"));
      slot = {{"rate", f.rate}, {"std_error", f.std_error}};
      std::cout << "gamma_" << comps[k].first << " = " << format_number(f.rate) << " +- "
                << format_number(f.std_error) << "\n";
    } catch (const ParameterError& e) {
      slot = {{"error", e.what()}};
    }
  }
  emit_json(dir / "trajectories_fit.json", fits);
  emit_json(dir / "manifest.json", s.manifest());
}

// ---- wiring ----

std::string type_label(ValueKind kind) {
  switch (kind) {
    case ValueKind::real: return "REAL";
    case ValueKind::count: return "UINT";
    case ValueKind::text: return "NAME";
    case ValueKind::flag: return "BOOL";
    case ValueKind::list: return "LIST";
  }
  return "TEXT";
}

struct Subcommand {
  Subcommand(std::string name, std::string description, std::vector<KeySpec> keys,
             bool needs_config, bool needs_seed, bool writes_files,
             std::function<void(Settings&, const fs::path&)> action)
      : name(std::move(name)),
        description(std::move(description)),
        keys(std::move(keys)),
        needs_config(needs_config),
        needs_seed(needs_seed),
        writes_files(writes_files),
        action(std::move(action)) {}

  std::string name;
  std::string description;
  std::vector<KeySpec> keys;
  bool needs_config = false;
  bool needs_seed = false;
  bool writes_files = true;
  std::function<void(Settings&, const fs::path&)> action;

  CLI::App* app = nullptr;
  std::string config;
  std::string out_dir;
  std::map<std::string, std::string> flags;
};

Settings resolve(Subcommand& sub) {
  Settings s(sub.name, sub.keys);
  if (!sub.config.empty()) s.merge_config(load_config(sub.config));
  std::optional<Entry> config_seed;
  if (s.has("seed")) config_seed = s.entry("seed");
  for (const auto& k : sub.keys) {
    if (sub.app->count("--" + k.name) > 0) s.set_flag(k.name, sub.flags[k.name]);
  }
  // A manifest carries its seed; the mandatory --seed must agree with it.
  if (config_seed && config_seed->value != s.text("seed")) {
    Settings probe(sub.name, sub.keys);
    probe.merge_config({{"seed", *config_seed}});
    if (probe.count("seed") != s.count("seed")) {
      throw ConfigError("--seed " + s.text("seed") + " differs from seed = " +
                        config_seed->value + " at " + config_seed->origin);
    }
  }
  s.apply_defaults();
  return s;
}

}  // namespace

int run(int argc, char** argv) {
  CLI::App app{"In-loop squeezing and atomic line narrowing: spectra, rates and trajectories"};
  app.require_subcommand(1);
  app.footer(
      "Exit codes: 0 ok, 2 usage or config, 3 I/O, 4 parameter domain, 5 loop instability, "
      "6 step size.\nOutput directory: --out-dir, else $INLOOP_OUTPUT_DIR, else the working "
      "directory.");

  std::vector<std::unique_ptr<Subcommand>> subs;
  auto add = [&](auto&&... args) {
    subs.push_back(std::make_unique<Subcommand>(std::forward<decltype(args)>(args)...));
  };
  add("rates", "decay rates and steady states of both models as JSON", rates_keys(), false,
       false, false, [](Settings& s, const fs::path&) { cmd_rates(s); });
  add("loop-spectrum", "analytic in-loop and photocurrent spectra of the bare loop",
       loop_spectrum_keys(), false, false, true, cmd_loop_spectrum);
  add("loop-sim", "Monte-Carlo loop without the atom and its Welch spectra", loop_sim_keys(),
       true, true, true, cmd_loop_sim);
  add("spectrum", "fluorescence spectrum by quantum regression", spectrum_keys(), false, false,
       true, cmd_spectrum);
  add("fig2", "in-loop against free squeezing spectra at the optimal gain", fig2_keys(), false,
       false, true, cmd_fig2);
  add("trajectories", "conditioned homodyne trajectories with a finite-delay loop",
       trajectory_keys(), true, true, true, cmd_trajectories);

  for (auto& sp : subs) {
    Subcommand& sub = *sp;
    sub.app = app.add_subcommand(sub.name, sub.description);
    auto* cfg = sub.app->add_option("--config", sub.config,
                                    "key = value file or flat JSON object (a manifest works)")
                    ->type_name("FILE");
    if (sub.needs_config) cfg->required();
    if (sub.writes_files) sub.app->add_option("--out-dir", sub.out_dir, "output directory")->type_name("DIR");
    for (const auto& k : sub.keys) {
      std::string help = k.help;
      if (k.fallback) help += " [default " + *k.fallback + "]";
      auto* opt = sub.app->add_option("--" + k.name, sub.flags[k.name], help);
      opt->type_name(type_label(k.kind));
      if (k.name == "seed" && sub.needs_seed) opt->required();
    }
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n\n";
    const CLI::App* shown = &app;
    for (auto& sp : subs) {
      if (sp->app->parsed()) shown = sp->app;
    }
    std::cerr << shown->help();
    return kUsage;
  }

  for (auto& sp : subs) {
    Subcommand& sub = *sp;
    if (!sub.app->parsed()) continue;
    try {
      Settings s = resolve(sub);
      const fs::path dir = sub.writes_files ? output_dir(sub.out_dir) : fs::path(".");
      sub.action(s, dir);
      return kOk;
    } catch (const ConfigError& e) {
      std::cerr << "error: " << e.what() << "\nRun 'inloop " << sub.name
                << " --help' for usage.\n";
      return kUsage;
    } catch (const IoError& e) {
      std::cerr << "I/O error: " << e.what() << "\n";
      return kIo;
    } catch (const ParameterError& e) {
      std::cerr << "parameter error: " << e.what() << "\n";
      return kDomain;
    } catch (const InstabilityError& e) {
      std::cerr << "instability: " << e.what() << "\n";
      return kUnstable;
    } catch (const StepSizeError& e) {
      std::cerr << "step size: " << e.what() << "\n";
      return kStepSize;
    } catch (const std::exception& e) {
      std::cerr << "error: " << e.what() << "\n";
      return kFailure;
    }
  }
  return kUsage;
}

}  // namespace inloop::cli
