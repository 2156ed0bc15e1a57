#include "clpt/io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "clpt/errors.hpp"

namespace clpt::io {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

std::string fmt12(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

double round_sig12(double v) {
  if (!std::isfinite(v)) return v;
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.11e", v);
  return std::strtod(buf, nullptr);
}

void canonicalize_run(LmcRun& run) {
  auto round_protocol = [](Protocol& q) {
    q.duration = round_sig12(q.duration);
    for (double& v : q.values) v = round_sig12(v);
  };
  for (Protocol& q : run.samples.protocols) round_protocol(q);
  for (double& v : run.samples.infidelities) v = round_sig12(v);
  round_protocol(run.best_protocol);
  run.best_infidelity = round_sig12(run.best_infidelity);
  run.acceptance_rate = round_sig12(run.acceptance_rate);
  run.min_abs_m = round_sig12(run.min_abs_m);
  run.per_sample_m.resize(run.samples.protocols.size());
  for (std::size_t i = 0; i < run.samples.protocols.size(); ++i)
    run.per_sample_m[i] = magnetization(run.samples.protocols[i]);
}

std::string iso8601_utc_now() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory " + dir.string());
}

void write_text_atomic(const fs::path& p, const std::string& content) {
  const fs::path tmp = p.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + tmp.string());
    out << content;
    if (!out) throw IoError("write failed for " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, p, ec);
  if (ec) throw IoError("cannot rename into " + p.string());
}

namespace {

void write_json_atomic(const fs::path& p, const json& j) {
  write_text_atomic(p, j.dump(2) + "\n");
}

json load_json(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw IoError("cannot open " + p.string());
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw ConfigError("malformed JSON in " + p.string() + ": " + e.what());
  }
  return j;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur += ch;
    }
  }
  out.push_back(cur);
  return out;
}

double parse_double(const std::string& s, const std::string& where) {
  const char* b = s.c_str();
  char* end = nullptr;
  const double v = std::strtod(b, &end);
  if (end == b || *end != '\0')
    throw ConfigError("bad number '" + s + "' in " + where);
  return v;
}

std::string run_stem(std::uint32_t run_id) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "run_%04u", run_id);
  return buf;
}

json model_to_json(const ModelParams& mp) {
  return json{{"J", round_sig12(mp.J)},
              {"h_z", round_sig12(mp.h_z)},
              {"h_x", round_sig12(mp.h_x)},
              {"h_init", round_sig12(mp.h_init)},
              {"h_target", round_sig12(mp.h_target)}};
}

ModelParams model_from_json(const json& j) {
  ModelParams mp;
  mp.J = j.at("J").get<double>();
  mp.h_z = j.at("h_z").get<double>();
  mp.h_x = j.at("h_x").get<double>();
  mp.h_init = j.at("h_init").get<double>();
  mp.h_target = j.at("h_target").get<double>();
  return mp;
}

json config_to_json(const LmcConfig& cfg) {
  json j{{"steps", cfg.steps},
         {"duration", round_sig12(cfg.duration)},
         {"beta", round_sig12(cfg.beta)},
         {"sigma", round_sig12(cfg.sigma)},
         {"burn_in", cfg.burn_in},
         {"delta_n", cfg.delta_n},
         {"samples", cfg.samples},
         {"runs", cfg.runs},
         {"seed", std::to_string(cfg.seed)},
         {"anneal",
          {{"enabled", cfg.anneal.enabled},
           {"beta_start", round_sig12(cfg.anneal.beta_start)},
           {"ramp_sweeps", cfg.anneal.ramp_sweeps}}},
         {"init", {{"kind", init_kind_name(cfg.init.kind)}}}};
  if (cfg.init.kind == InitKind::Custom) {
    json vals = json::array();
    for (double v : cfg.init.custom) vals.push_back(round_sig12(v));
    j["init"]["custom"] = std::move(vals);
  }
  return j;
}

LmcConfig config_from_json(const json& j) {
  LmcConfig cfg;
  cfg.steps = j.at("steps").get<std::uint32_t>();
  cfg.duration = j.at("duration").get<double>();
  cfg.beta = j.at("beta").get<double>();
  cfg.sigma = j.at("sigma").get<double>();
  cfg.burn_in = j.at("burn_in").get<std::uint32_t>();
  cfg.delta_n = j.at("delta_n").get<std::uint32_t>();
  cfg.samples = j.at("samples").get<std::uint32_t>();
  cfg.runs = j.at("runs").get<std::uint32_t>();
  const auto& seed = j.at("seed");
  cfg.seed = seed.is_string() ? std::stoull(seed.get<std::string>())
                              : seed.get<std::uint64_t>();
  const auto& an = j.at("anneal");
  cfg.anneal.enabled = an.at("enabled").get<bool>();
  cfg.anneal.beta_start = an.at("beta_start").get<double>();
  cfg.anneal.ramp_sweeps = an.at("ramp_sweeps").get<std::uint32_t>();
  const auto& in = j.at("init");
  cfg.init.kind = init_kind_from_name(in.at("kind").get<std::string>());
  if (cfg.init.kind == InitKind::Custom)
    cfg.init.custom = in.at("custom").get<std::vector<double>>();
  return cfg;
}

}  // namespace

ModelParams round12(ModelParams mp) {
  mp.J = round_sig12(mp.J);
  mp.h_z = round_sig12(mp.h_z);
  mp.h_x = round_sig12(mp.h_x);
  mp.h_init = round_sig12(mp.h_init);
  mp.h_target = round_sig12(mp.h_target);
  return mp;
}

LmcConfig round12(LmcConfig cfg) {
  cfg.duration = round_sig12(cfg.duration);
  cfg.beta = round_sig12(cfg.beta);
  cfg.sigma = round_sig12(cfg.sigma);
  cfg.anneal.beta_start = round_sig12(cfg.anneal.beta_start);
  for (double& v : cfg.init.custom) v = round_sig12(v);
  return cfg;
}

void write_trajectory_csv(const fs::path& p, const Protocol& q,
                          std::span<const QuantumState> states) {
  std::ostringstream out;
  out << "t,re_a1,re_a2,re_a3,re_a4,im_a1,im_a2,im_a3,im_a4,"
         "n_x,n_y,n_z,abs_n,entropy\n";
  const double dt = q.dt();
  for (std::size_t k = 0; k < states.size(); ++k) {
    const QuantumState& psi = states[k];
    const BlochPoint n = reduced_bloch(psi);
    const double norm = n.norm();
    out << fmt12(round_sig12(static_cast<double>(k) * dt));
    for (int i = 0; i < 4; ++i) out << ',' << fmt12(round_sig12(psi[i].real()));
    for (int i = 0; i < 4; ++i) out << ',' << fmt12(round_sig12(psi[i].imag()));
    out << ',' << fmt12(round_sig12(n.n_x)) << ',' << fmt12(round_sig12(n.n_y))
        << ',' << fmt12(round_sig12(n.n_z)) << ',' << fmt12(round_sig12(norm))
        << ',' << fmt12(round_sig12(entanglement_entropy(norm))) << '\n';
  }
  write_text_atomic(p, out.str());
}

void write_protocol_csv(const fs::path& p,
                        std::span<const Protocol> protocols,
                        std::span<const double> infidelities) {
  if (protocols.empty()) throw ShapeMismatch("no protocols to write");
  if (!infidelities.empty() && infidelities.size() != protocols.size())
    throw ShapeMismatch("infidelity count != protocol count");
  const std::size_t l = protocols.front().steps();
  std::ostringstream out;
  for (std::size_t i = 1; i <= l; ++i) out << "s_" << i << ',';
  out << "T,L,infidelity\n";
  for (std::size_t r = 0; r < protocols.size(); ++r) {
    const Protocol& q = protocols[r];
    if (q.steps() != l) throw ShapeMismatch("ragged protocol list");
    for (double v : q.values) out << fmt12(v) << ',';
    const double inf = infidelities.empty()
                           ? std::numeric_limits<double>::quiet_NaN()
                           : infidelities[r];
    out << fmt12(q.duration) << ',' << l << ','
        << (std::isnan(inf) ? std::string("nan") : fmt12(inf)) << '\n';
  }
  write_text_atomic(p, out.str());
}

ProtocolFile read_protocol_csv(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw IoError("cannot open " + p.string());
  std::string line;
  if (!std::getline(in, line)) throw ConfigError("empty protocol file");
  const auto header = split_csv_line(line);

  std::size_t l = 0;
  int t_col = -1;
  int l_col = -1;
  int inf_col = -1;
  for (std::size_t i = 0; i < header.size(); ++i) {
    const std::string& h = header[i];
    if (h.rfind("s_", 0) == 0) {
      ++l;
      if (i + 1 != l || h != "s_" + std::to_string(l))
        throw ConfigError("protocol columns out of order");
    } else if (h == "T") {
      t_col = static_cast<int>(i);
    } else if (h == "L") {
      l_col = static_cast<int>(i);
    } else if (h == "infidelity") {
      inf_col = static_cast<int>(i);
    } else {
      throw ConfigError("unknown protocol column: " + h);
    }
  }
  if (l == 0 || t_col < 0 || l_col < 0)
    throw ConfigError("protocol header needs s_1.. plus T and L");

  ProtocolFile out;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) continue;
    const auto f = split_csv_line(line);
    const std::string where = p.string() + ":" + std::to_string(row);
    if (f.size() != header.size())
      throw ConfigError("wrong field count in " + where);
    Protocol q;
    q.values.reserve(l);
    for (std::size_t i = 0; i < l; ++i)
      q.values.push_back(parse_double(f[i], where));
    q.duration = parse_double(f[static_cast<std::size_t>(t_col)], where);
    const double l_val = parse_double(f[static_cast<std::size_t>(l_col)], where);
    if (l_val != static_cast<double>(l))
      throw ConfigError("L column disagrees with width in " + where);
    validate_protocol(q);
    double inf = std::numeric_limits<double>::quiet_NaN();
    if (inf_col >= 0 && f[static_cast<std::size_t>(inf_col)] != "nan")
      inf = parse_double(f[static_cast<std::size_t>(inf_col)], where);
    out.protocols.push_back(std::move(q));
    out.infidelities.push_back(inf);
  }
  if (out.protocols.empty()) throw ConfigError("no protocols in " + p.string());
  return out;
}

void write_run(const fs::path& dir, const LmcConfig& cfg, const LmcRun& run) {
  const std::string stem = run_stem(run.samples.run_id);
  write_protocol_csv(dir / (stem + "_samples.csv"), run.samples.protocols,
                     run.samples.infidelities);
  const double best_inf[] = {run.best_infidelity};
  const Protocol best_prot[] = {run.best_protocol};
  write_protocol_csv(dir / (stem + "_best.csv"), best_prot, best_inf);

  json j{{"schema_version", kSchemaVersion},
         {"kind", "run_manifest"},
         {"run_id", run.samples.run_id},
         {"seed", std::to_string(run.samples.seed)},
         {"acceptance_rate", run.acceptance_rate},
         {"best_infidelity", run.best_infidelity},
         {"min_abs_m", run.min_abs_m},
         {"config", config_to_json(cfg)},
         {"generated_at", iso8601_utc_now()}};
  write_json_atomic(dir / (stem + "_manifest.json"), j);
}

LmcRun read_run(const fs::path& dir, std::uint32_t run_id) {
  const std::string stem = run_stem(run_id);
  LmcRun run;
  ProtocolFile samples = read_protocol_csv(dir / (stem + "_samples.csv"));
  run.samples.protocols = std::move(samples.protocols);
  run.samples.infidelities = std::move(samples.infidelities);

  ProtocolFile best = read_protocol_csv(dir / (stem + "_best.csv"));
  run.best_protocol = best.protocols.front();

  const json j = load_json(dir / (stem + "_manifest.json"));
  if (j.at("run_id").get<std::uint32_t>() != run_id)
    throw ConfigError("run manifest id mismatch in " + dir.string());
  run.samples.run_id = run_id;
  run.samples.seed = std::stoull(j.at("seed").get<std::string>());
  run.acceptance_rate = j.at("acceptance_rate").get<double>();
  run.best_infidelity = j.at("best_infidelity").get<double>();
  run.min_abs_m = j.at("min_abs_m").get<double>();

  run.per_sample_m.resize(run.samples.protocols.size());
  for (std::size_t i = 0; i < run.samples.protocols.size(); ++i)
    run.per_sample_m[i] = magnetization(run.samples.protocols[i]);
  return run;
}

void write_ensemble_manifest(const fs::path& dir, const ModelParams& mp,
                             const LmcConfig& cfg, double elapsed_seconds,
                             int workers) {
  json j{{"schema_version", kSchemaVersion},
         {"kind", "ensemble"},
         {"model", model_to_json(mp)},
         {"sampler", config_to_json(cfg)},
         {"elapsed_seconds", round_sig12(elapsed_seconds)},
         {"workers", workers},
         {"generated_at", iso8601_utc_now()}};
  write_json_atomic(dir / "ensemble.json", j);
}

EnsembleDir read_ensemble(const fs::path& dir) {
  const json j = load_json(dir / "ensemble.json");
  EnsembleDir out;
  out.model = model_from_json(j.at("model"));
  out.config = config_from_json(j.at("sampler"));
  out.runs.reserve(out.config.runs);
  for (std::uint32_t r = 0; r < out.config.runs; ++r)
    out.runs.push_back(read_run(dir, r));
  return out;
}

void write_distances_csv(const fs::path& p,
                         std::span<const DistanceDistribution> dists) {
  std::ostringstream out;
  out << "metric,run_i,run_j,distance\n";
  for (const auto& d : dists) {
    const std::string tag = metric_name(d.metric);
    for (std::size_t i = 0; i < d.count; ++i)
      for (std::size_t j = i + 1; j < d.count; ++j)
        out << tag << ',' << i << ',' << j << ','
            << fmt12(round_sig12(d.matrix[i * d.count + j])) << '\n';
  }
  write_text_atomic(p, out.str());
}

void write_histogram_csv(const fs::path& p,
                         std::span<const DistanceDistribution> dists) {
  std::ostringstream out;
  out << "metric,bin_lo,bin_hi,count\n";
  for (const auto& d : dists) {
    const std::string tag = metric_name(d.metric);
    for (std::size_t b = 0; b < d.histogram.counts.size(); ++b)
      out << tag << ',' << fmt12(round_sig12(d.histogram.edges[b])) << ','
          << fmt12(round_sig12(d.histogram.edges[b + 1])) << ','
          << d.histogram.counts[b] << '\n';
  }
  write_text_atomic(p, out.str());
}

namespace {

json summary_to_json(const ComponentSummary& c) {
  json prot = json::array();
  for (double v : c.mean_protocol.values) prot.push_back(round_sig12(v));
  return json{{"label", c.label},
              {"size", c.size},
              {"mean_m", round_sig12(c.mean_m)},
              {"mean_min_abs_m", round_sig12(c.mean_min_abs_m)},
              {"min_infidelity", round_sig12(c.min_infidelity)},
              {"mean_protocol", std::move(prot)}};
}

json partition_to_json(const ComponentPartition& part) {
  json cd = json::array();
  for (std::uint32_t a = 0; a < part.b0; ++a) {
    json row = json::array();
    for (std::uint32_t b = 0; b < part.b0; ++b)
      row.push_back(round_sig12(part.component_distances[a * part.b0 + b]));
    cd.push_back(std::move(row));
  }
  return json{{"epsilon", round_sig12(part.epsilon)},
              {"b0", part.b0},
              {"labels", part.labels},
              {"sizes", part.sizes},
              {"component_distances", std::move(cd)}};
}

}  // namespace

void write_components_json(const fs::path& p, const ComponentsArtifact& art) {
  json comps = json::array();
  for (const auto& c : art.components) comps.push_back(summary_to_json(c));

  json per_run = json::array();
  for (double v : art.order.per_run) {
    if (std::isnan(v))
      per_run.push_back(nullptr);
    else
      per_run.push_back(round_sig12(v));
  }

  json trap_comps = json::array();
  for (const auto& c : art.trap.components) trap_comps.push_back(summary_to_json(c));
  json trapped = json::array();
  for (std::uint8_t f : art.trap.trapped) trapped.push_back(f != 0);

  json j{{"schema_version", kSchemaVersion},
         {"kind", "components"},
         {"linkage_metric", metric_name(art.linkage_metric)},
         {"distance_metric", metric_name(art.distance_metric)},
         {"T", round_sig12(art.t)},
         {"partition", partition_to_json(art.partition)},
         {"components", std::move(comps)},
         {"filter",
          {{"margin", round_sig12(art.filter_margin)},
           {"optimal_indices", art.optimal_indices}}},
         {"order_parameter",
          {{"value", round_sig12(art.order.value)},
           {"excluded_components", art.order.excluded_components},
           {"per_run", std::move(per_run)}}},
         {"trap",
          {{"optimal_infidelity", round_sig12(art.trap.optimal_infidelity)},
           {"trapped_fraction", round_sig12(art.trap.trapped_fraction)},
           {"components", std::move(trap_comps)},
           {"trapped", std::move(trapped)}}}};
  write_json_atomic(p, j);
}

namespace {

json point_to_json(const PointRecord& rec) {
  json peaks = json::array();
  for (double v : rec.peaks) peaks.push_back(round_sig12(v));
  return json{{"schema_version", kSchemaVersion},
              {"kind", "point"},
              {"T", round_sig12(rec.t)},
              {"b0", rec.b0},
              {"epsilon", round_sig12(rec.epsilon)},
              {"min_infidelity", round_sig12(rec.min_infidelity)},
              {"order_param", round_sig12(rec.order_param)},
              {"peaks", std::move(peaks)}};
}

}  // namespace

void write_point_json(const fs::path& p, const PointRecord& rec) {
  write_json_atomic(p, point_to_json(rec));
}

PointRecord read_point_json(const fs::path& p) {
  const json j = load_json(p);
  PointRecord rec;
  rec.t = j.at("T").get<double>();
  rec.b0 = j.at("b0").get<std::uint32_t>();
  rec.epsilon = j.at("epsilon").get<double>();
  rec.min_infidelity = j.at("min_infidelity").get<double>();
  rec.order_param = j.at("order_param").get<double>();
  rec.peaks = j.at("peaks").get<std::vector<double>>();
  return rec;
}

void write_phase_diagram_json(const fs::path& p, const PhaseDiagram& pd,
                              const TrapCurves* curves,
                              const std::string& tracking_error) {
  json points = json::array();
  json grid = json::array();
  for (const auto& rec : pd.points) {
    points.push_back(point_to_json(rec));
    grid.push_back(round_sig12(rec.t));
  }
  json trans = json::array();
  for (const auto& e : pd.transitions)
    trans.push_back(json{{"name", e.name},
                         {"bracketed", e.bracketed},
                         {"value", round_sig12(e.value)},
                         {"uncertainty", round_sig12(e.uncertainty)},
                         {"lo", round_sig12(e.lo)},
                         {"hi", round_sig12(e.hi)}});

  json j{{"schema_version", kSchemaVersion},
         {"kind", "phase_diagram"},
         {"t_grid", std::move(grid)},
         {"points", std::move(points)},
         {"transitions", std::move(trans)}};

  if (curves != nullptr) {
    json chains = json::array();
    json infs = json::array();
    for (std::size_t c = 0; c < curves->chains.size(); ++c) {
      chains.push_back(curves->chains[c]);
      json row = json::array();
      for (double v : curves->min_infidelity[c]) {
        if (std::isnan(v))
          row.push_back(nullptr);
        else
          row.push_back(round_sig12(v));
      }
      infs.push_back(std::move(row));
    }
    json mm = json::array();
    for (double v : curves->chain_mean_abs_m) mm.push_back(round_sig12(v));
    json tc{{"chains", std::move(chains)},
            {"min_infidelity", std::move(infs)},
            {"chain_mean_abs_m", std::move(mm)}};
    if (curves->crossover_t)
      tc["crossover_t"] = round_sig12(*curves->crossover_t);
    else
      tc["crossover_t"] = nullptr;
    j["trap_curves"] = std::move(tc);
  } else if (!tracking_error.empty()) {
    j["trap_curves"] = json{{"error", tracking_error}};
  }
  write_json_atomic(p, j);
}

void write_sweep_manifest(const fs::path& p, const ModelParams& mp,
                          const LmcConfig& cfg, std::span<const double> t_grid,
                          std::span<const Metric> metrics,
                          double elapsed_seconds, int workers) {
  json grid = json::array();
  for (double t : t_grid) grid.push_back(round_sig12(t));
  json tags = json::array();
  for (Metric m : metrics) tags.push_back(metric_name(m));
  json j{{"schema_version", kSchemaVersion},
         {"kind", "sweep"},
         {"model", model_to_json(mp)},
         {"sampler", config_to_json(cfg)},
         {"t_grid", std::move(grid)},
         {"metrics", std::move(tags)},
         {"elapsed_seconds", round_sig12(elapsed_seconds)},
         {"workers", workers},
         {"generated_at", iso8601_utc_now()}};
  write_json_atomic(p, j);
}

void write_beta_scan_json(const fs::path& p, const BetaScanArtifact& art) {
  json pts = json::array();
  json betas = json::array();
  for (const auto& pt : art.points) {
    betas.push_back(round_sig12(pt.beta));
    pts.push_back(json{{"beta", round_sig12(pt.beta)},
                       {"b0", pt.b0},
                       {"epsilon", round_sig12(pt.epsilon)},
                       {"magnetized_pair", pt.magnetized_pair}});
  }
  json j{{"schema_version", kSchemaVersion},
         {"kind", "beta_scan"},
         {"T", round_sig12(art.t)},
         {"steps", art.steps},
         {"betas", std::move(betas)},
         {"points", std::move(pts)},
         {"collapsed", art.collapsed}};
  if (art.collapsed) {
    j["beta_star"] = round_sig12(art.barrier.beta_star);
    j["barrier"] = round_sig12(art.barrier.barrier);
  } else {
    j["beta_star"] = nullptr;
    j["barrier"] = nullptr;
    j["warning"] = art.warning;
  }
  write_json_atomic(p, j);
}

}  // namespace clpt::io
