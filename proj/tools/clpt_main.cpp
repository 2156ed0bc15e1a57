#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "clpt/errors.hpp"
#include "clpt/experiment.hpp"
#include "clpt/io.hpp"
#include "clpt/lmc.hpp"
#include "clpt/quantum.hpp"

namespace {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace clpt;

// Options write into a staging config during parsing; `finalize` then
// layers defaults < preset < JSON config file < explicitly-passed options
// (command line or INI config) into the effective config.
struct ExperimentCli {
  ExperimentConfig staged;
  ExperimentConfig cfg;
  std::string preset;
  std::string config_json;
  bool no_resume = false;
  std::vector<std::string> metric_names{"avg", "set", "prt"};
  std::string init_kind = "uniform01";
  double epsilon = 0.0;
  std::uint32_t bins = 0;  // 0 = Freedman-Diaconis
  std::vector<std::function<void()>> appliers;

  template <typename T>
  void bind(CLI::Option* opt, T& staged_field, T& cfg_field) {
    appliers.push_back([opt, &staged_field, &cfg_field] {
      if (opt->count() > 0) cfg_field = staged_field;
    });
  }

  void add_model_options(CLI::App* sub) {
    bind(sub->add_option("--J", staged.model.J, "Ising coupling"),
         staged.model.J, cfg.model.J);
    bind(sub->add_option("--h-z", staged.model.h_z, "longitudinal field"),
         staged.model.h_z, cfg.model.h_z);
    bind(sub->add_option("--h-x", staged.model.h_x,
                         "transverse field scale multiplying s(t)"),
         staged.model.h_x, cfg.model.h_x);
    bind(sub->add_option("--h-init", staged.model.h_init,
                         "transverse coefficient of the initial-state "
                         "Hamiltonian"),
         staged.model.h_init, cfg.model.h_init);
    bind(sub->add_option("--h-target", staged.model.h_target,
                         "transverse coefficient of the target-state "
                         "Hamiltonian"),
         staged.model.h_target, cfg.model.h_target);
  }

  void add_sampler_options(CLI::App* sub) {
    auto& s = staged.sampler;
    auto& c = cfg.sampler;
    bind(sub->add_option("--steps,-L", s.steps, "protocol sites"), s.steps,
         c.steps);
    bind(sub->add_option("--beta", s.beta, "inverse temperature"), s.beta,
         c.beta);
    bind(sub->add_option("--sigma", s.sigma, "proposal width"), s.sigma,
         c.sigma);
    bind(sub->add_option("--burn-in", s.burn_in, "discarded sweeps"),
         s.burn_in, c.burn_in);
    bind(sub->add_option("--delta-n", s.delta_n, "sweeps between samples"),
         s.delta_n, c.delta_n);
    bind(sub->add_option("--samples,-M", s.samples, "samples per run"),
         s.samples, c.samples);
    bind(sub->add_option("--runs,-R", s.runs, "runs per ensemble"), s.runs,
         c.runs);
    bind(sub->add_option("--seed", s.seed, "ensemble seed"), s.seed, c.seed);
    bind(sub->add_flag("--anneal,!--no-anneal", s.anneal.enabled,
                       "geometric beta ramp over the burn-in"),
         s.anneal.enabled, c.anneal.enabled);
    bind(sub->add_option("--beta-start", s.anneal.beta_start,
                         "anneal ramp start"),
         s.anneal.beta_start, c.anneal.beta_start);
    bind(sub->add_option("--ramp-sweeps", s.anneal.ramp_sweeps,
                         "anneal ramp length (0 = burn-in)"),
         s.anneal.ramp_sweeps, c.anneal.ramp_sweeps);
    sub->add_option("--init", init_kind,
                    "initial protocol draw: uniform01, uniform_sym, zero")
        ->check(CLI::IsMember({"uniform01", "uniform_sym", "zero"}));
  }

  void add_analysis_options(CLI::App* sub) {
    auto& s = staged.analysis;
    auto& c = cfg.analysis;
    sub->add_option("--metrics", metric_names,
                    "distance metrics to compute (avg, set, prt)");
    sub->add_option("--epsilon", epsilon,
                    "fixed clustering scale (default: per-point automatic)");
    sub->add_option("--bins", bins,
                    "fixed histogram bin count (0 = Freedman-Diaconis)");
    bind(sub->add_option("--gap-min", s.gap.min_gap,
                         "smallest merge-height gap treated as a boundary"),
         s.gap.min_gap, c.gap.min_gap);
    bind(sub->add_option("--gap-min-size", s.gap.min_component,
                         "smallest component an automatic scale may produce"),
         s.gap.min_component, c.gap.min_component);
    bind(sub->add_option("--qsl-tol", s.qsl_tol,
                         "infidelity threshold for the controllable phase"),
         s.qsl_tol, c.qsl_tol);
    bind(sub->add_option("--subsample", s.subsample,
                         "per-run sample cap for avg/set distances (0 = all)"),
         s.subsample, c.subsample);
    bind(sub->add_option("--filter-margin", s.filter_margin,
                         "optimality margin before clustering"),
         s.filter_margin, c.filter_margin);
    bind(sub->add_option("--trap-margin", s.trap_margin,
                         "trapped-component infidelity margin"),
         s.trap_margin, c.trap_margin);
    bind(sub->add_option("--m-threshold", s.m_threshold,
                         "magnetization threshold for symmetric components"),
         s.m_threshold, c.m_threshold);
    bind(sub->add_option("--match-tol", s.match_tol,
                         "cross-duration component matching tolerance"),
         s.match_tol, c.match_tol);
  }

  void add_output_options(CLI::App* sub) {
    bind(sub->add_option("--output-dir,-o", staged.output_dir,
                         "artifact directory"),
         staged.output_dir, cfg.output_dir);
    bind(sub->add_option("--workers,-w", staged.workers,
                         "parallelism degree"),
         staged.workers, cfg.workers);
    sub->add_option("--preset", preset, "desk or paper parameter set")
        ->check(CLI::IsMember({"desk", "paper"}));
    sub->add_option("--config-json", config_json,
                    "JSON config file (overridden by explicit flags)");
    sub->add_flag("--no-resume", no_resume,
                  "resample even when matching artifacts exist");
    sub->set_config("--config", "", "INI config file (key=value)");
  }

  void add_all(CLI::App* sub) {
    add_model_options(sub);
    add_sampler_options(sub);
    add_analysis_options(sub);
    add_output_options(sub);
  }

  void apply_json_file(const std::string& path);

  // Layer the precedence; call once after parsing.
  void finalize(const CLI::App* sub) {
    const auto count_of = [sub](const std::string& name) -> std::size_t {
      const CLI::Option* o = sub->get_option_no_throw(name);
      return o ? o->count() : 0;
    };
    if (!preset.empty()) apply_preset(cfg, preset);
    if (!config_json.empty()) apply_json_file(config_json);
    for (auto& apply : appliers) apply();
    if (count_of("--metrics") > 0 || cfg.metrics.empty()) {
      cfg.metrics.clear();
      for (const std::string& name : metric_names)
        cfg.metrics.push_back(metric_from_name(name));
    }
    if (count_of("--epsilon") > 0) cfg.analysis.epsilon = epsilon;
    if (count_of("--bins") > 0) {
      if (bins == 0) {
        cfg.analysis.hist.mode = HistogramConfig::Bins::FreedmanDiaconis;
      } else {
        cfg.analysis.hist.mode = HistogramConfig::Bins::Fixed;
        cfg.analysis.hist.fixed_count = bins;
      }
    }
    if (count_of("--init") > 0)
      cfg.sampler.init.kind = init_kind_from_name(init_kind);
  }
};

json load_json_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  try {
    json j;
    in >> j;
    return j;
  } catch (const json::parse_error& e) {
    throw ConfigError("malformed JSON in " + path + ": " + e.what());
  }
}

void ExperimentCli::apply_json_file(const std::string& path) {
  const json j = load_json_file(path);
  if (!j.is_object()) throw ConfigError("config root must be an object");
  for (const auto& [key, val] : j.items()) {
    if (key == "model") {
      for (const auto& [k, v] : val.items()) {
        if (k == "J") cfg.model.J = v.get<double>();
        else if (k == "h_z") cfg.model.h_z = v.get<double>();
        else if (k == "h_x") cfg.model.h_x = v.get<double>();
        else if (k == "h_init") cfg.model.h_init = v.get<double>();
        else if (k == "h_target") cfg.model.h_target = v.get<double>();
        else throw ConfigError("unknown model key: " + k);
      }
    } else if (key == "sampler") {
      auto& s = cfg.sampler;
      for (const auto& [k, v] : val.items()) {
        if (k == "steps") s.steps = v.get<std::uint32_t>();
        else if (k == "duration") s.duration = v.get<double>();
        else if (k == "beta") s.beta = v.get<double>();
        else if (k == "sigma") s.sigma = v.get<double>();
        else if (k == "burn_in") s.burn_in = v.get<std::uint32_t>();
        else if (k == "delta_n") s.delta_n = v.get<std::uint32_t>();
        else if (k == "samples") s.samples = v.get<std::uint32_t>();
        else if (k == "runs") s.runs = v.get<std::uint32_t>();
        else if (k == "seed")
          s.seed = v.is_string() ? std::stoull(v.get<std::string>())
                                 : v.get<std::uint64_t>();
        else if (k == "anneal") {
          for (const auto& [ak, av] : v.items()) {
            if (ak == "enabled") s.anneal.enabled = av.get<bool>();
            else if (ak == "beta_start") s.anneal.beta_start = av.get<double>();
            else if (ak == "ramp_sweeps")
              s.anneal.ramp_sweeps = av.get<std::uint32_t>();
            else throw ConfigError("unknown anneal key: " + ak);
          }
        } else if (k == "init") {
          for (const auto& [ik, iv] : v.items()) {
            if (ik == "kind")
              s.init.kind = init_kind_from_name(iv.get<std::string>());
            else if (ik == "custom")
              s.init.custom = iv.get<std::vector<double>>();
            else throw ConfigError("unknown init key: " + ik);
          }
        } else {
          throw ConfigError("unknown sampler key: " + k);
        }
      }
    } else if (key == "t_grid") {
      cfg.t_grid = val.get<std::vector<double>>();
    } else if (key == "metrics") {
      cfg.metrics.clear();
      for (const auto& v : val)
        cfg.metrics.push_back(metric_from_name(v.get<std::string>()));
    } else if (key == "analysis") {
      auto& a = cfg.analysis;
      for (const auto& [k, v] : val.items()) {
        if (k == "epsilon")
          a.epsilon = v.is_null() ? std::optional<double>{}
                                  : std::optional<double>{v.get<double>()};
        else if (k == "gap_min") a.gap.min_gap = v.get<double>();
        else if (k == "gap_min_size") a.gap.min_component = v.get<std::uint32_t>();
        else if (k == "bins") {
          const auto n = v.get<std::uint32_t>();
          a.hist.mode = n == 0 ? HistogramConfig::Bins::FreedmanDiaconis
                               : HistogramConfig::Bins::Fixed;
          if (n > 0) a.hist.fixed_count = n;
        } else if (k == "qsl_tol") a.qsl_tol = v.get<double>();
        else if (k == "subsample") a.subsample = v.get<std::size_t>();
        else if (k == "filter_margin") a.filter_margin = v.get<double>();
        else if (k == "trap_margin") a.trap_margin = v.get<double>();
        else if (k == "m_threshold") a.m_threshold = v.get<double>();
        else if (k == "match_tol") a.match_tol = v.get<double>();
        else throw ConfigError("unknown analysis key: " + k);
      }
    } else if (key == "output_dir") {
      cfg.output_dir = val.get<std::string>();
    } else if (key == "workers") {
      cfg.workers = val.get<int>();
    } else {
      throw ConfigError("unknown config key: " + key);
    }
  }
}

Logger stderr_logger() {
  return [](const std::string& msg) { std::cerr << "[clpt] " << msg << "\n"; };
}

json state_to_json(const QuantumState& psi) {
  json re = json::array();
  json im = json::array();
  for (int i = 0; i < 4; ++i) {
    re.push_back(io::round_sig12(psi[i].real()));
    im.push_back(io::round_sig12(psi[i].imag()));
  }
  return json{{"re", std::move(re)}, {"im", std::move(im)}};
}

void print_state(const std::string& name, const QuantumState& psi) {
  std::cout << name << ":";
  for (int i = 0; i < 4; ++i) {
    std::cout << " " << io::fmt12(io::round_sig12(psi[i].real()));
    if (psi[i].imag() != 0.0)
      std::cout << "+" << io::fmt12(io::round_sig12(psi[i].imag())) << "i";
  }
  std::cout << "\n";
}

int cmd_ground_states(const ModelParams& mp, bool as_json) {
  const QuantumState psi0 = initial_state(mp);
  const QuantumState psis = target_state(mp);
  const double overlap_sq = std::norm(psis.dot(psi0));
  const double infidelity_t0 = 1.0 - overlap_sq;

  if (as_json) {
    json j{{"schema_version", io::kSchemaVersion},
           {"kind", "ground_states"},
           {"model",
            {{"J", mp.J},
             {"h_z", mp.h_z},
             {"h_x", mp.h_x},
             {"h_init", mp.h_init},
             {"h_target", mp.h_target}}},
           {"initial_state", state_to_json(psi0)},
           {"target_state", state_to_json(psis)},
           {"overlap_sq", io::round_sig12(overlap_sq)},
           {"infidelity_t0", io::round_sig12(infidelity_t0)}};
    std::cout << j.dump(2) << "\n";
  } else {
    print_state("initial_state", psi0);
    print_state("target_state", psis);
    std::cout << "overlap_sq: " << io::fmt12(io::round_sig12(overlap_sq))
              << "\n";
    std::cout << "infidelity_t0: "
              << io::fmt12(io::round_sig12(infidelity_t0)) << "\n";
  }
  return 0;
}

int cmd_evaluate(const ModelParams& mp, const std::string& file,
                 double duration_override, const std::string& traj_path,
                 const std::string& frames_dir) {
  io::ProtocolFile pf = io::read_protocol_csv(file);
  if (duration_override > 0.0)
    for (Protocol& q : pf.protocols) q.duration = duration_override;

  if (!frames_dir.empty()) io::ensure_dir(frames_dir);
  const QuantumState psi0 = initial_state(mp);
  for (std::size_t i = 0; i < pf.protocols.size(); ++i) {
    const Protocol& q = pf.protocols[i];
    const auto states = evolve_trajectory(mp, q, psi0);
    if (i == 0 && !traj_path.empty())
      io::write_trajectory_csv(traj_path, q, states);
    if (!frames_dir.empty()) {
      char name[32];
      std::snprintf(name, sizeof(name), "frame_%04zu.csv", i);
      io::write_trajectory_csv(fs::path(frames_dir) / name, q, states);
    }
    std::cout << io::fmt12(io::round_sig12(infidelity(mp, q))) << "\n";
  }
  return 0;
}

int cmd_sample(const ExperimentConfig& cfg, double t, bool resume) {
  SampledEnsemble ens = sample_point(cfg, t, resume, stderr_logger());
  double best = 1.0;
  double acc = 0.0;
  for (const LmcRun& r : ens.runs) {
    best = std::min(best, r.best_infidelity);
    acc += r.acceptance_rate;
  }
  acc /= static_cast<double>(ens.runs.size());
  std::cout << "runs: " << ens.runs.size() << "\n";
  std::cout << "best_infidelity: " << io::fmt12(best) << "\n";
  std::cout << "mean_acceptance: " << io::fmt12(io::round_sig12(acc)) << "\n";
  std::cout << "dir: " << (cfg.output_dir / t_dir_name(t)).string() << "\n";
  return 0;
}

void print_point(const PointRecord& rec) {
  std::cout << "T=" << io::fmt12(rec.t) << " b0=" << rec.b0
            << " epsilon=" << io::fmt12(rec.epsilon)
            << " min_infidelity=" << io::fmt12(rec.min_infidelity)
            << " order_param=" << io::fmt12(rec.order_param) << " peaks=[";
  for (std::size_t i = 0; i < rec.peaks.size(); ++i)
    std::cout << (i ? " " : "") << io::fmt12(rec.peaks[i]);
  std::cout << "]\n";
}

int cmd_analyze(const ExperimentConfig& cfg, const std::string& dir) {
  PointResult res = analyze_dir(cfg, dir, stderr_logger());
  print_point(res.record);
  return 0;
}

int cmd_sweep(const ExperimentConfig& cfg, bool resume) {
  SweepResult res = run_sweep(cfg, resume, stderr_logger());
  for (const PointRecord& rec : res.diagram.points) print_point(rec);
  for (const TransitionEstimate& tr : res.diagram.transitions) {
    std::cout << tr.name << ": " << io::fmt12(tr.value) << " +/- "
              << io::fmt12(tr.uncertainty)
              << (tr.bracketed ? "" : " (unbracketed)") << "\n";
  }
  if (res.curves && res.curves->crossover_t)
    std::cout << "symmetric_crossover_t: "
              << io::fmt12(*res.curves->crossover_t) << "\n";
  if (!res.tracking_error.empty())
    std::cout << "warning: component tracking failed: " << res.tracking_error
              << "\n";
  std::cout << "phase_diagram: "
            << (cfg.output_dir / "phase_diagram.json").string() << "\n";
  return 0;
}

int cmd_beta_scan(const ExperimentConfig& cfg, double t,
                  const std::vector<double>& betas, bool resume) {
  io::BetaScanArtifact art =
      run_beta_scan(cfg, t, betas, resume, stderr_logger());
  for (const BetaScanPoint& pt : art.points)
    std::cout << "beta=" << io::fmt12(pt.beta) << " b0=" << pt.b0
              << " magnetized_pair=" << (pt.magnetized_pair ? "yes" : "no")
              << "\n";
  if (art.collapsed) {
    std::cout << "beta_star: " << io::fmt12(art.barrier.beta_star) << "\n";
    std::cout << "barrier: " << io::fmt12(io::round_sig12(art.barrier.barrier))
              << "\n";
  } else {
    std::cout << "warning: " << art.warning << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Two-qubit control landscape sampler and analyzer"};
  app.require_subcommand(1);

  ExperimentCli gs;
  bool gs_json = false;
  auto* sub_gs = app.add_subcommand(
      "ground-states", "print the endpoint ground states and their overlap");
  gs.add_model_options(sub_gs);
  sub_gs->add_flag("--json", gs_json, "machine-readable output");

  ExperimentCli ev;
  std::string ev_file;
  double ev_duration = 0.0;
  std::string ev_traj = "trajectory.csv";
  std::string ev_frames;
  auto* sub_ev = app.add_subcommand(
      "evaluate", "evaluate protocols from a CSV file and write trajectories");
  ev.add_model_options(sub_ev);
  sub_ev->add_option("file", ev_file, "protocol CSV (s_1..s_L,T,L columns)")
      ->required();
  sub_ev->add_option("--duration,-T", ev_duration,
                     "override the file's durations");
  sub_ev->add_option("--trajectory", ev_traj,
                     "trajectory CSV for the first protocol (empty = skip)");
  sub_ev->add_option("--frames-dir", ev_frames,
                     "write one trajectory CSV per protocol row here");

  ExperimentCli sa;
  double sa_t = 0.0;
  auto* sub_sa =
      app.add_subcommand("sample", "sample one ensemble at a duration");
  sa.add_all(sub_sa);
  sub_sa->add_option("--t,-T", sa_t, "protocol duration")->required();

  ExperimentCli an;
  std::string an_dir;
  auto* sub_an = app.add_subcommand(
      "analyze", "re-run the analysis over an existing point directory");
  an.add_all(sub_an);
  sub_an->add_option("--dir,-d", an_dir, "point directory (holds run_*.csv)")
      ->required();

  ExperimentCli sw;
  auto* sub_sw = app.add_subcommand(
      "sweep", "sample and analyze every duration on the grid");
  sw.add_all(sub_sw);
  sub_sw->add_option("--t-grid", sw.staged.t_grid,
                     "strictly increasing durations");
  sw.appliers.push_back([&sw, sub_sw] {
    if (sub_sw->count("--t-grid") > 0) sw.cfg.t_grid = sw.staged.t_grid;
  });

  ExperimentCli bs;
  double bs_t = 0.0;
  std::vector<double> bs_betas{1e1, 1e2, 1e3, 1e4, 1e5, 1e6};
  auto* sub_bs = app.add_subcommand(
      "beta-scan", "repeat one duration across betas and locate the collapse");
  bs.add_all(sub_bs);
  sub_bs->add_option("--t,-T", bs_t, "protocol duration")->required();
  sub_bs->add_option("--betas", bs_betas, "betas to scan (any order)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (sub_gs->parsed()) {
      gs.finalize(sub_gs);
      return cmd_ground_states(gs.cfg.model, gs_json);
    }
    if (sub_ev->parsed()) {
      ev.finalize(sub_ev);
      return cmd_evaluate(ev.cfg.model, ev_file, ev_duration, ev_traj,
                          ev_frames);
    }
    if (sub_sa->parsed()) {
      sa.finalize(sub_sa);
      return cmd_sample(sa.cfg, sa_t, !sa.no_resume);
    }
    if (sub_an->parsed()) {
      an.finalize(sub_an);
      return cmd_analyze(an.cfg, an_dir);
    }
    if (sub_sw->parsed()) {
      sw.finalize(sub_sw);
      return cmd_sweep(sw.cfg, !sw.no_resume);
    }
    if (sub_bs->parsed()) {
      bs.finalize(sub_bs);
      return cmd_beta_scan(bs.cfg, bs_t, bs_betas, !bs.no_resume);
    }
    std::cerr << "no subcommand\n";
    return 2;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const IoError& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}
