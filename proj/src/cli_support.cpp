#include "nhreduce/cli_support.hpp"

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <future>
#include <iostream>
#include <mutex>
#include <sstream>

#include <json.hpp>

#include "nhreduce/connections.hpp"
#include "nhreduce/llreduce.hpp"
#include "nhreduce/staged.hpp"
#include "nhreduce/suslov.hpp"

namespace nhreduce::cli {

using nlohmann::json;

namespace {

void read_array(const json& j, const char* key, double* out, size_t n) {
  if (!j.contains(key)) return;
  const auto& arr = j.at(key);
  if (!arr.is_array() || arr.size() != n)
    throw ConfigError(std::string(key) + " must be an array of " + std::to_string(n));
  for (size_t i = 0; i < n; ++i) out[i] = arr[i].get<double>();
}

RunConfig parse_config(const json& j) {
  RunConfig c;
  if (!j.contains("system") || !j.contains("level"))
    throw ConfigError("system and level are required");
  c.system = j.at("system").get<std::string>();
  c.level = j.at("level").get<std::string>();

  read_array(j, "inertia", c.inertia, 5);
  read_array(j, "omega0", c.omega0, 2);
  read_array(j, "connection_h", c.connection_h, 3);
  read_array(j, "q0", c.q0, 3);
  read_array(j, "dq0", c.dq0, 2);
  if (j.contains("g0")) {
    c.g0 = j.at("g0").get<std::vector<double>>();
    if (c.g0.size() != 9) throw ConfigError("g0 must have 9 entries (row-major)");
  }
  if (j.contains("h_step")) c.h_step = j.at("h_step").get<double>();
  if (j.contains("steps")) c.steps = j.at("steps").get<int>();
  if (j.contains("newton_tol")) c.newton_tol = j.at("newton_tol").get<double>();
  if (j.contains("max_iter")) c.max_iter = j.at("max_iter").get<int>();
  if (j.contains("verify_tol")) c.verify_tol = j.at("verify_tol").get<double>();

  if (c.system != "suslov" && c.system != "particle")
    throw ConfigError("unknown system '" + c.system + "'");
  if (c.steps < 0) throw ConfigError("steps must be non-negative");
  if (c.newton_tol <= 0.0) throw ConfigError("newton_tol must be positive");
  if (c.max_iter <= 0) throw ConfigError("max_iter must be positive");
  if (c.system == "particle" && c.h_step <= 0.0)
    throw ConfigError("h_step must be positive");
  return c;
}

json load_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read " + path);
  try {
    json j;
    in >> j;
    return j;
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("parse error: ") + e.what());
  }
}

std::vector<std::string> mat_columns(const std::string& prefix) {
  std::vector<std::string> cols;
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c)
      cols.push_back(prefix + "_" + std::to_string(r) + std::to_string(c));
  return cols;
}

}  // namespace

RunConfig load_config_file(const std::string& path) {
  const json j = load_json(path);
  if (!j.is_object()) throw ConfigError("top-level JSON object expected");
  return parse_config(j);
}

LevelSetup build_setup(const RunConfig& c) {
  LevelSetup setup;
  if (c.system == "suslov") {
    InertiaParams params{c.inertia[0], c.inertia[1], c.inertia[2], c.inertia[3],
                         c.inertia[4]};
    Mat3 g0 = Mat3::Identity();
    if (!c.g0.empty()) {
      Eigen::VectorXd v(9);
      for (int i = 0; i < 9; ++i) v[i] = c.g0[static_cast<size_t>(i)];
      try {
        g0 = So3Element(unflatten(v)).mat();
      } catch (const Error& e) {
        throw ConfigError(std::string("g0: ") + e.what());
      }
    }
    try {
      if (c.level == "full") {
        setup.system = build_suslov(SuslovLevel::full, params);
        setup.columns = mat_columns("g_rowmajor");
        setup.point_rows = true;
        setup.initial = suslov_initial(SuslovLevel::full, params, c.omega0[0],
                                       c.omega0[1], g0);
      } else if (c.level == "eta") {
        setup.system = build_suslov(SuslovLevel::eta, params);
        setup.columns = mat_columns("W_rowmajor");
        setup.initial = suslov_initial(SuslovLevel::eta, params, c.omega0[0],
                                       c.omega0[1]);
      } else if (c.level == "momentum") {
        setup.system = build_suslov(SuslovLevel::momentum, params);
        setup.columns = {"p1", "p2", "p3"};
        setup.initial = suslov_initial(SuslovLevel::momentum, params, c.omega0[0],
                                       c.omega0[1]);
      } else {
        throw ConfigError("unknown suslov level '" + c.level + "'");
      }
    } catch (const InvalidInertia& e) {
      throw ConfigError(e.what());
    }
    return setup;
  }

  // particle
  const PathPair full_initial =
      particle_initial(c.q0[0], c.q0[1], c.q0[2], c.dq0[0], c.dq0[1]);
  if (c.level == "full") {
    setup.system = build_particle_full(c.h_step);
    setup.columns = {"x", "y", "z"};
    setup.point_rows = true;
    setup.initial = full_initial;
  } else if (c.level == "h_reduced") {
    setup.system = build_particle_reduced(ParticleStage::H, c.h_step);
    setup.columns = {"x0", "y0", "w", "x1", "y1"};
    setup.initial = upsilon_staged(ParticleStage::H).forward(full_initial);
  } else if (c.level == "g_reduced") {
    setup.system = build_particle_reduced(ParticleStage::G, c.h_step);
    setup.columns = {"y0", "u", "w", "y1"};
    setup.initial = upsilon_staged(ParticleStage::G).forward(full_initial);
  } else if (c.level == "gh_reduced") {
    setup.system = build_particle_reduced(ParticleStage::GH, c.h_step);
    setup.columns = {"y0", "w", "u", "y1"};
    setup.initial = upsilon_staged(ParticleStage::GH)
                        .forward(upsilon_staged(ParticleStage::H).forward(full_initial));
  } else {
    throw ConfigError("unknown particle level '" + c.level + "'");
  }
  return setup;
}

namespace {

std::string format_value(double x) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

std::vector<VectorXd> path_rows(const DiscretePath& path, const LevelSetup& setup) {
  std::vector<VectorXd> rows;
  if (setup.point_rows) {
    if (!path.pairs.empty()) {
      rows.push_back(path.pairs.front().eps);
      for (const PathPair& p : path.pairs) rows.push_back(p.m_next);
    }
  } else {
    for (const PathPair& p : path.pairs) {
      VectorXd row(p.eps.size() + p.m_next.size());
      row << p.eps, p.m_next;
      rows.push_back(row);
    }
  }
  return rows;
}

}  // namespace

std::string to_csv(const DiscretePath& path, const LevelSetup& setup) {
  std::ostringstream out;
  for (size_t i = 0; i < setup.columns.size(); ++i)
    out << (i ? "," : "") << setup.columns[i];
  out << "\n";
  for (const VectorXd& row : path_rows(path, setup)) {
    for (Eigen::Index i = 0; i < row.size(); ++i)
      out << (i ? "," : "") << format_value(row[i]);
    out << "\n";
  }
  return out.str();
}

void write_csv(const std::string& path, const DiscretePath& traj,
               const LevelSetup& setup) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path);
  out << to_csv(traj, setup);
}

DiscretePath read_csv(const std::string& path, const LevelSetup& setup) {
  std::ifstream in(path);
  if (!in) throw SchemaError("cannot read " + path);

  std::string header;
  if (!std::getline(in, header)) throw SchemaError("empty file " + path);
  std::string expected;
  for (size_t i = 0; i < setup.columns.size(); ++i)
    expected += (i ? "," : "") + setup.columns[i];
  if (header != expected)
    throw SchemaError("header mismatch in " + path + " (expected '" + expected + "')");

  std::vector<VectorXd> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::vector<double> values;
    while (std::getline(ss, cell, ',')) {
      try {
        values.push_back(std::stod(cell));
      } catch (const std::exception&) {
        throw SchemaError("non-numeric cell '" + cell + "' in " + path);
      }
    }
    if (values.size() != setup.columns.size())
      throw SchemaError("row width mismatch in " + path);
    VectorXd row(static_cast<Eigen::Index>(values.size()));
    for (size_t i = 0; i < values.size(); ++i)
      row[static_cast<Eigen::Index>(i)] = values[i];
    rows.push_back(row);
  }

  DiscretePath out;
  const int eps_dim = setup.system.bundle.total.ambient_dim;
  const int base_dim = setup.system.bundle.base.ambient_dim;
  if (setup.point_rows) {
    if (rows.size() < 2) {
      if (rows.size() == 1) throw SchemaError("point file needs at least two rows");
      return out;
    }
    for (size_t k = 0; k + 1 < rows.size(); ++k)
      out.pairs.push_back(PathPair{rows[k], rows[k + 1]});
  } else {
    for (const VectorXd& row : rows)
      out.pairs.push_back(PathPair{row.head(eps_dim), row.tail(base_dim)});
  }
  return out;
}

bool log_enabled(int level) {
  static const int configured = [] {
    const char* env = std::getenv("NHREDUCE_LOG");
    if (env == nullptr) return 0;
    const std::string s(env);
    if (s == "debug" || s == "2") return 2;
    if (s.empty() || s == "0" || s == "off") return 0;
    return 1;
  }();
  return configured >= level;
}

namespace {

void print_report(const TrajectoryReport& rep, double wall_seconds) {
  static std::mutex mu;  // keeps sweep-mode report blocks contiguous
  const std::lock_guard<std::mutex> lock(mu);
  std::printf("steps:                  %d\n", static_cast<int>(rep.steps.size()));
  std::printf("max dynamic residual:   %.3e\n", rep.max_dynamic);
  std::printf("max kinematic residual: %.3e\n", rep.max_kinematic);
  std::printf("max manifold drift:     %.3e\n", rep.max_drift);
  std::printf("max compatibility gap:  %.3e\n", rep.max_compat);
  std::printf("wall time:              %.3f s\n", wall_seconds);
  if (rep.pass)
    std::printf("verdict:                PASS\n");
  else
    std::printf("verdict:                FAIL (first failing step %d)\n", rep.first_fail);
  if (log_enabled(2)) {
    for (size_t k = 0; k < rep.steps.size(); ++k)
      std::fprintf(stderr, "step %zu: dyn %.3e kin %.3e drift %.3e\n", k,
                   rep.steps[k].dynamic, rep.steps[k].kinematic, rep.steps[k].drift);
  }
}

int simulate_once(const RunConfig& cfg, const std::string& out_path) {
  const LevelSetup setup = build_setup(cfg);
  NewtonOptions opt;
  opt.tol = cfg.newton_tol;
  opt.max_iter = cfg.max_iter;

  const auto t0 = std::chrono::steady_clock::now();
  DiscretePath path;
  try {
    path = integrate(setup.system, setup.initial, cfg.steps, opt);
  } catch (const NoConvergence& e) {
    std::cerr << "solver: " << e.what() << "\n";
    return kExitNoConvergence;
  } catch (const SingularJacobian& e) {
    std::cerr << "solver: " << e.what() << "\n";
    return kExitNoConvergence;
  }
  const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - t0;

  write_csv(out_path, path, setup);
  const TrajectoryReport rep = verify_trajectory(setup.system, path, cfg.verify_tol);
  print_report(rep, elapsed.count());
  return rep.pass ? kExitOk : kExitVerifyFail;
}

}  // namespace

int cmd_simulate(const std::string& config_path, const std::string& out_path) {
  try {
    return simulate_once(load_config_file(config_path), out_path);
  } catch (const ConfigError& e) {
    std::cerr << e.what() << "\n";
    return kExitConfig;
  } catch (const Error& e) {
    std::cerr << e.what() << "\n";
    return kExitVerifyFail;
  }
}

int cmd_check(const std::string& config_path, const std::string& csv_path) {
  try {
    const RunConfig cfg = load_config_file(config_path);
    const LevelSetup setup = build_setup(cfg);
    const DiscretePath path = read_csv(csv_path, setup);
    const auto t0 = std::chrono::steady_clock::now();
    const TrajectoryReport rep = verify_trajectory(setup.system, path, cfg.verify_tol);
    const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - t0;
    print_report(rep, elapsed.count());
    return rep.pass ? kExitOk : kExitVerifyFail;
  } catch (const ConfigError& e) {
    std::cerr << e.what() << "\n";
    return kExitConfig;
  } catch (const SchemaError& e) {
    std::cerr << e.what() << "\n";
    return kExitConfig;
  } catch (const Error& e) {
    std::cerr << e.what() << "\n";
    return kExitVerifyFail;
  }
}

namespace {

double pair_distance(const PathPair& a, const PathPair& b) {
  const double de = (a.eps - b.eps).cwiseAbs().maxCoeff();
  const double dm = a.m_next.size() > 0 && b.m_next.size() > 0
                        ? (a.m_next - b.m_next).cwiseAbs().maxCoeff()
                        : 0.0;
  return std::max(de, dm);
}

int compare_impl(const RunConfig& cfg, const std::string& full_csv,
                 const std::string& reduced_csv, const std::string& mode, double tol) {
  RunConfig full_cfg = cfg;
  full_cfg.level = "full";
  const LevelSetup full_setup = build_setup(full_cfg);
  const DiscretePath full_path = read_csv(full_csv, full_setup);

  double deviation = 0.0;

  if (cfg.system == "suslov") {
    const Mat3 h = cay(Vec3(cfg.connection_h[0], cfg.connection_h[1], cfg.connection_h[2]));
    RunConfig red_cfg = cfg;

    if (mode == "project" || mode == "reconstruct" || mode == "connection") {
      red_cfg.level = "eta";
    } else if (mode == "momentum") {
      red_cfg.level = "momentum";
    } else {
      throw ConfigError("mode '" + mode + "' not valid for suslov");
    }
    const LevelSetup red_setup = build_setup(red_cfg);
    const DiscretePath red_path = read_csv(reduced_csv, red_setup);
    if (red_path.size() != full_path.size())
      throw SchemaError("path lengths differ (" + std::to_string(full_path.size()) +
                        " vs " + std::to_string(red_path.size()) + ")");

    // Reduced files from `simulate` always hold the identity-connection
    // model; connection_h only drives the explicit connection mode.
    if (mode == "project") {
      const ReductionMap proj = upsilon_ll(canonical_group_connection());
      for (int k = 0; k < full_path.size(); ++k)
        deviation = std::max(deviation,
                             pair_distance(proj.forward(full_path.pairs[static_cast<size_t>(k)]),
                                           red_path.pairs[static_cast<size_t>(k)]));
    } else if (mode == "reconstruct") {
      const DiscretePath lifted = reconstruct(canonical_group_connection(), red_path,
                                              unflatten(full_path.pairs[0].eps));
      for (int k = 0; k < full_path.size(); ++k)
        deviation = std::max(deviation, pair_distance(lifted.pairs[static_cast<size_t>(k)],
                                                      full_path.pairs[static_cast<size_t>(k)]));
    } else if (mode == "momentum") {
      const InertiaParams params{cfg.inertia[0], cfg.inertia[1], cfg.inertia[2],
                                 cfg.inertia[3], cfg.inertia[4]};
      const Mat3 j = mass_tensor(params);
      const ReductionMap proj = upsilon_ll(canonical_group_connection());
      for (int k = 0; k < full_path.size(); ++k) {
        const Mat3 w = unflatten(proj.forward(full_path.pairs[static_cast<size_t>(k)]).eps);
        const Vec3 p = vee(suslov_legendre(j, w));
        deviation = std::max(deviation,
                             (p - Vec3(red_path.pairs[static_cast<size_t>(k)].eps))
                                 .cwiseAbs()
                                 .maxCoeff());
      }
    } else {  // connection
      // Turn the identity-model file into the h-model path V = W h^{-1},
      // verify it under the transported system, and cross-check against the
      // projection of the full file through A^h.
      const InertiaParams params{cfg.inertia[0], cfg.inertia[1], cfg.inertia[2],
                                 cfg.inertia[3], cfg.inertia[4]};
      const LlSystemSpec spec = build_suslov_spec(params);
      const ReductionMap proj_h = upsilon_ll(canonical_group_connection(h));
      DiscretePath v_path;
      for (int k = 0; k < red_path.size(); ++k) {
        const Mat3 w = unflatten(red_path.pairs[static_cast<size_t>(k)].eps);
        v_path.pairs.push_back(PathPair{flatten(w * h.transpose()), VectorXd(0)});
        deviation = std::max(
            deviation,
            pair_distance(v_path.pairs.back(),
                          proj_h.forward(full_path.pairs[static_cast<size_t>(k)])));
      }
      const TrajectoryReport rep =
          verify_trajectory(eta_system_for_connection(spec, h), v_path, tol);
      deviation = std::max({deviation, rep.max_dynamic, rep.max_kinematic});
    }
  } else {
    if (mode != "staged" && mode != "project")
      throw ConfigError("mode '" + mode + "' not valid for particle");
    RunConfig red_cfg = cfg;
    if (red_cfg.level == "full") throw ConfigError("config level must name a reduced level");
    const LevelSetup red_setup = build_setup(red_cfg);
    const DiscretePath red_path = read_csv(reduced_csv, red_setup);
    if (red_path.size() != full_path.size())
      throw SchemaError("path lengths differ");

    const ReductionMap uh = upsilon_staged(ParticleStage::H);
    for (int k = 0; k < full_path.size(); ++k) {
      const PathPair& fp = full_path.pairs[static_cast<size_t>(k)];
      PathPair projected;
      if (cfg.level == "h_reduced") {
        projected = uh.forward(fp);
      } else if (cfg.level == "g_reduced") {
        projected = upsilon_staged(ParticleStage::G).forward(fp);
      } else {
        projected = upsilon_staged(ParticleStage::GH).forward(uh.forward(fp));
        // Two-stage vs one-stage correspondence through F.
        const PathPair via_f = staged_f_map(red_path.pairs[static_cast<size_t>(k)]);
        const PathPair one_stage = upsilon_staged(ParticleStage::G).forward(fp);
        deviation = std::max(deviation, pair_distance(via_f, one_stage));
      }
      deviation = std::max(deviation,
                           pair_distance(projected, red_path.pairs[static_cast<size_t>(k)]));
    }
  }

  std::printf("max deviation: %.3e\n", deviation);
  return deviation <= tol ? kExitOk : kExitCompareFail;
}

}  // namespace

int cmd_compare(const std::string& config_path, const std::string& full_csv,
                const std::string& reduced_csv, const std::string& mode, double tol) {
  try {
    return compare_impl(load_config_file(config_path), full_csv, reduced_csv, mode, tol);
  } catch (const ConfigError& e) {
    std::cerr << e.what() << "\n";
    return kExitConfig;
  } catch (const SchemaError& e) {
    std::cerr << e.what() << "\n";
    return kExitConfig;
  } catch (const Error& e) {
    std::cerr << e.what() << "\n";
    return kExitCompareFail;
  }
}

int cmd_sweep(const std::string& config_path, const std::string& out_prefix) {
  std::vector<RunConfig> configs;
  try {
    std::ifstream in(config_path);
    if (!in) throw ConfigError("cannot read " + config_path);
    json j;
    in >> j;
    if (!j.is_array()) throw ConfigError("sweep config must be a JSON array");
    for (const auto& entry : j) configs.push_back(parse_config(entry));
  } catch (const json::exception& e) {
    std::cerr << "config: " << e.what() << "\n";
    return kExitConfig;
  } catch (const ConfigError& e) {
    std::cerr << e.what() << "\n";
    return kExitConfig;
  }

  std::vector<std::future<int>> results;
  for (size_t i = 0; i < configs.size(); ++i) {
    const RunConfig cfg = configs[i];
    const std::string out = out_prefix + "_" + std::to_string(i) + ".csv";
    results.push_back(std::async(std::launch::async,
                                 [cfg, out] { return simulate_once(cfg, out); }));
  }
  int worst = kExitOk;
  for (auto& f : results) worst = std::max(worst, f.get());
  return worst;
}

}  // namespace nhreduce::cli
