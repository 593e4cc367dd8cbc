#include "purcell/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <limits>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string_view>

#include "purcell/errors.hpp"
#include "purcell/integrator.hpp"
#include "purcell/pmp.hpp"

namespace purcell::io {

namespace {

namespace fs = std::filesystem;

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

// 17 significant digits: enough for an exact double round trip.
std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double to_double(const std::string& key, std::string_view value) {
  std::string_view v = value;
  if (!v.empty() && v.front() == '+') v.remove_prefix(1);
  double out = 0.0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || ptr != v.data() + v.size() || !std::isfinite(out)) {
    throw ConfigError("config key '" + key + "': expected a finite number, got '" +
                      std::string(value) + "'");
  }
  return out;
}

double to_positive(const std::string& key, std::string_view value) {
  const double d = to_double(key, value);
  if (!(d > 0.0)) throw ConfigError("config key '" + key + "': must be positive");
  return d;
}

double to_unit_open(const std::string& key, std::string_view value) {
  const double d = to_double(key, value);
  if (!(d > 0.0 && d < 1.0)) throw ConfigError("config key '" + key + "': must lie in (0, 1)");
  return d;
}

int to_count(const std::string& key, std::string_view value) {
  long out = 0;
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc{} || ptr != value.data() + value.size()) {
    throw ConfigError("config key '" + key + "': expected an integer, got '" +
                      std::string(value) + "'");
  }
  if (out < 1 || out > std::numeric_limits<int>::max()) {
    throw ConfigError("config key '" + key + "': must be a positive integer");
  }
  return static_cast<int>(out);
}

void apply(RunConfig& c, const std::string& key, const std::string& value) {
  if (key == "geometry.len0") {
    c.geometry.len0 = to_positive(key, value);
  } else if (key == "geometry.len1") {
    c.geometry.len1 = to_positive(key, value);
  } else if (key == "geometry.len2") {
    c.geometry.len2 = to_positive(key, value);
  } else if (key == "geometry.drag_tangential") {
    c.geometry.drag_tangential = to_positive(key, value);
  } else if (key == "geometry.drag_normal") {
    c.geometry.drag_normal = to_positive(key, value);
  } else if (key == "discretization.h") {
    c.discretization.h = to_positive(key, value);
  } else if (key == "discretization.steps") {
    c.discretization.steps = to_count(key, value);
  } else if (key == "problem.alpha_bar1") {
    c.alpha_bar.alpha1 = to_double(key, value);
  } else if (key == "problem.alpha_bar2") {
    c.alpha_bar.alpha2 = to_double(key, value);
  } else if (key == "problem.target_x") {
    c.target_x = to_double(key, value);
  } else if (key == "problem.target_y") {
    c.target_y = to_double(key, value);
  } else if (key == "problem.target_theta") {
    c.target_theta = to_double(key, value);
  } else if (key == "solver.method") {
    if (value == "direct") {
      c.solver.method = SolveMethod::direct;
    } else if (value == "shooting") {
      c.solver.method = SolveMethod::shooting;
    } else {
      throw ConfigError("config key 'solver.method': expected direct or shooting, got '" + value +
                        "'");
    }
  } else if (key == "solver.max_outer_iterations") {
    c.solver.max_outer_iterations = to_count(key, value);
  } else if (key == "solver.max_inner_iterations") {
    c.solver.max_inner_iterations = to_count(key, value);
  } else if (key == "solver.constraint_tolerance") {
    c.solver.constraint_tolerance = to_positive(key, value);
  } else if (key == "solver.stationarity_tolerance") {
    c.solver.stationarity_tolerance = to_positive(key, value);
  } else if (key == "solver.initial_guess") {
    if (value == "zero") {
      c.solver.initial_guess = InitialGuess::zero;
    } else if (value == "seeded") {
      c.solver.initial_guess = InitialGuess::seeded;
    } else if (value == "file") {
      c.solver.initial_guess = InitialGuess::file;
    } else {
      throw ConfigError("config key 'solver.initial_guess': expected zero, seeded, or file, got '" +
                        value + "'");
    }
  } else if (key == "solver.seed_amplitude") {
    c.solver.seed_amplitude = to_double(key, value);
  } else if (key == "solver.guess_file") {
    c.guess_file = value;
  } else if (key == "solver.penalty_initial") {
    c.solver.penalty_initial = to_positive(key, value);
  } else if (key == "solver.penalty_growth") {
    c.solver.penalty_growth = to_positive(key, value);
  } else if (key == "solver.penalty_cap") {
    c.solver.penalty_cap = to_positive(key, value);
  } else if (key == "solver.linesearch_backtrack") {
    c.solver.linesearch_backtrack = to_unit_open(key, value);
  } else if (key == "solver.linesearch_decrease") {
    c.solver.linesearch_decrease = to_unit_open(key, value);
  } else if (key == "solver.shooting_seed") {
    if (value == "none") {
      c.solver.shooting_seed.reset();
    } else {
      std::istringstream parts{value};
      std::vector<std::string> toks;
      for (std::string tok; parts >> tok;) toks.push_back(tok);
      if (toks.size() != 5) {
        throw ConfigError(
            "config key 'solver.shooting_seed': expected five numbers (rho_x rho_y rho_theta "
            "xi1 xi2) or none");
      }
      Eigen::Matrix<double, 5, 1> z;
      for (int i = 0; i < 5; ++i) z[i] = to_double(key, toks[i]);
      c.solver.shooting_seed = z;
    }
  } else if (key == "output.directory") {
    if (value.empty()) throw ConfigError("config key 'output.directory': must not be empty");
    c.out_dir = value;
  } else if (key == "output.units") {
    if (value == "degrees" || value == "deg") {
      c.units = Units::degrees;
    } else if (value == "radians" || value == "rad") {
      c.units = Units::radians;
    } else {
      throw ConfigError("config key 'output.units': expected radians or degrees, got '" + value +
                        "'");
    }
  } else if (key == "output.phase_interval") {
    c.phase_interval = to_positive(key, value);
  } else {
    throw ConfigError("unknown config key '" + key + "'");
  }
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::vector<std::string_view> split(std::string_view text, char sep) {
  std::vector<std::string_view> out;
  size_t start = 0;
  while (true) {
    const size_t pos = text.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(text.substr(start));
      return out;
    }
    out.push_back(text.substr(start, pos - start));
    start = pos + 1;
  }
}

bool numeric_cell(std::string_view cell) {
  cell = trim(cell);
  if (!cell.empty() && cell.front() == '+') cell.remove_prefix(1);
  double out = 0.0;
  const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), out);
  return ec == std::errc{} && ptr == cell.data() + cell.size();
}

size_t column_index(const Table& table, const std::string& name) {
  for (size_t j = 0; j < table.columns.size(); ++j) {
    if (table.columns[j] == name) return j;
  }
  throw IoError("table is missing column '" + name + "'");
}

}  // namespace

RunConfig parse_config(const std::string& text) {
  RunConfig config;
  int lineno = 0;
  for (std::string_view raw : split(text, '\n')) {
    ++lineno;
    const size_t hash = raw.find('#');
    if (hash != std::string_view::npos) raw = raw.substr(0, hash);
    const std::string_view line = trim(raw);
    if (line.empty()) continue;
    const size_t eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError("config line " + std::to_string(lineno) + ": expected 'key = value'");
    }
    const std::string key{trim(line.substr(0, eq))};
    const std::string value{trim(line.substr(eq + 1))};
    if (key.empty()) {
      throw ConfigError("config line " + std::to_string(lineno) + ": empty key");
    }
    apply(config, key, value);
  }
  return config;
}

RunConfig load_config(const std::string& path) { return parse_config(slurp(path)); }

std::string format_config(const RunConfig& c) {
  std::ostringstream out;
  out << "# three-link swimmer run configuration\n";
  out << "# angles and rates in this file are radians; output.units affects exports only\n\n";
  out << "geometry.len0 = " << fmt(c.geometry.len0) << "\n";
  out << "geometry.len1 = " << fmt(c.geometry.len1) << "\n";
  out << "geometry.len2 = " << fmt(c.geometry.len2) << "\n";
  out << "geometry.drag_tangential = " << fmt(c.geometry.drag_tangential) << "\n";
  out << "geometry.drag_normal = " << fmt(c.geometry.drag_normal) << "\n\n";
  out << "discretization.h = " << fmt(c.discretization.h) << "\n";
  out << "discretization.steps = " << c.discretization.steps << "\n\n";
  out << "problem.alpha_bar1 = " << fmt(c.alpha_bar.alpha1) << "\n";
  out << "problem.alpha_bar2 = " << fmt(c.alpha_bar.alpha2) << "\n";
  out << "problem.target_x = " << fmt(c.target_x) << "\n";
  out << "problem.target_y = " << fmt(c.target_y) << "\n";
  out << "problem.target_theta = " << fmt(c.target_theta) << "\n\n";
  out << "solver.method = " << (c.solver.method == SolveMethod::direct ? "direct" : "shooting")
      << "\n";
  out << "solver.max_outer_iterations = " << c.solver.max_outer_iterations << "\n";
  out << "solver.max_inner_iterations = " << c.solver.max_inner_iterations << "\n";
  out << "solver.constraint_tolerance = " << fmt(c.solver.constraint_tolerance) << "\n";
  out << "solver.stationarity_tolerance = " << fmt(c.solver.stationarity_tolerance) << "\n";
  const char* guess = c.solver.initial_guess == InitialGuess::zero     ? "zero"
                      : c.solver.initial_guess == InitialGuess::seeded ? "seeded"
                                                                       : "file";
  out << "solver.initial_guess = " << guess << "\n";
  out << "solver.seed_amplitude = " << fmt(c.solver.seed_amplitude) << "\n";
  out << "solver.guess_file = " << c.guess_file << "\n";
  out << "solver.penalty_initial = " << fmt(c.solver.penalty_initial) << "\n";
  out << "solver.penalty_growth = " << fmt(c.solver.penalty_growth) << "\n";
  out << "solver.penalty_cap = " << fmt(c.solver.penalty_cap) << "\n";
  out << "solver.linesearch_backtrack = " << fmt(c.solver.linesearch_backtrack) << "\n";
  out << "solver.linesearch_decrease = " << fmt(c.solver.linesearch_decrease) << "\n";
  if (c.solver.shooting_seed) {
    const auto& z = *c.solver.shooting_seed;
    out << "solver.shooting_seed = " << fmt(z[0]) << " " << fmt(z[1]) << " " << fmt(z[2]) << " "
        << fmt(z[3]) << " " << fmt(z[4]) << "\n\n";
  } else {
    out << "solver.shooting_seed = none\n\n";
  }
  out << "output.directory = " << c.out_dir << "\n";
  out << "output.units = " << (c.units == Units::degrees ? "degrees" : "radians") << "\n";
  out << "output.phase_interval = " << fmt(c.phase_interval) << "\n";
  return out.str();
}

ProblemSpec problem_spec(const RunConfig& config) {
  ProblemSpec spec;
  spec.geometry = config.geometry;
  spec.params = config.discretization;
  spec.alpha_bar = config.alpha_bar;
  spec.g_bar = se2::GroupElement{config.target_x, config.target_y, config.target_theta};
  return spec;
}

std::pair<ProblemSpec, SolverConfig> resolve(const RunConfig& config) {
  SolverConfig solver = config.solver;
  if (solver.initial_guess == InitialGuess::file) {
    if (config.guess_file.empty()) {
      throw ConfigError("config key 'solver.guess_file': required when solver.initial_guess = file");
    }
    solver.guess_controls = read_controls(config.guess_file);
  }
  return {problem_spec(config), std::move(solver)};
}

void write_text_file(const std::string& path, const std::string& content) {
  const fs::path target{path};
  if (target.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(target.parent_path(), ec);
    if (ec) throw IoError("cannot create directory '" + target.parent_path().string() + "'");
  }
  fs::path tmp = target;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out << content;
    out.flush();
    if (!out) throw IoError("write failed: '" + tmp.string() + "'");
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) throw IoError("rename failed: '" + target.string() + "'");
}

void write_table(const Table& table, const std::string& path) {
  std::string out;
  out.reserve(32 + table.rows.size() * (table.columns.size() + 1) * 26);
  for (size_t j = 0; j < table.columns.size(); ++j) {
    if (j) out += ',';
    out += table.columns[j];
  }
  out += '\n';
  for (const auto& row : table.rows) {
    if (row.size() != table.columns.size()) throw IoError("ragged table row");
    for (size_t j = 0; j < row.size(); ++j) {
      if (j) out += ',';
      out += fmt(row[j]);
    }
    out += '\n';
  }
  write_text_file(path, out);
}

Table read_table(const std::string& path) {
  const std::string text = slurp(path);
  Table table;
  bool have_header = false;
  int lineno = 0;
  for (std::string_view raw : split(text, '\n')) {
    ++lineno;
    if (!raw.empty() && raw.back() == '\r') raw.remove_suffix(1);
    const std::string_view line = trim(raw);
    if (line.empty() || line.front() == '#') continue;
    const std::vector<std::string_view> cells = split(line, ',');
    if (!have_header) {
      have_header = true;
      bool all_numeric = true;
      for (const auto cell : cells) all_numeric = all_numeric && numeric_cell(cell);
      if (!all_numeric) {
        for (const auto cell : cells) table.columns.emplace_back(trim(cell));
        continue;
      }
      for (size_t j = 0; j < cells.size(); ++j) table.columns.push_back("col" + std::to_string(j + 1));
    }
    if (cells.size() != table.columns.size()) {
      throw IoError(path + " line " + std::to_string(lineno) + ": expected " +
                    std::to_string(table.columns.size()) + " cells, got " +
                    std::to_string(cells.size()));
    }
    std::vector<double> row(cells.size());
    for (size_t j = 0; j < cells.size(); ++j) {
      std::string_view cell = trim(cells[j]);
      if (!cell.empty() && cell.front() == '+') cell.remove_prefix(1);
      const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), row[j]);
      if (ec != std::errc{} || ptr != cell.data() + cell.size()) {
        throw IoError(path + " line " + std::to_string(lineno) + ": bad number in column '" +
                      table.columns[j] + "'");
      }
    }
    table.rows.push_back(std::move(row));
  }
  if (!have_header) throw IoError(path + ": empty table");
  return table;
}

Table trajectory_table(const StateTrajectory& traj, Units units) {
  const double ang = units == Units::degrees ? kDegPerRad : 1.0;
  const int n = traj.steps();
  Table table;
  table.columns = {"Time", "alpha1", "alpha2", "u1", "u2", "x", "y", "theta"};
  if (traj.poses.empty()) return table;  // failed run: header-only diagnostics
  table.rows.reserve(n + 1);
  for (int k = 0; k <= n; ++k) {
    const ControlVector u = n > 0 ? traj.controls[std::min(k, n - 1)] : ControlVector::Zero();
    const auto& g = traj.poses[k];
    table.rows.push_back({k * traj.h, traj.alphas[k].alpha1 * ang, traj.alphas[k].alpha2 * ang,
                          u[0] * ang, u[1] * ang, g.x, g.y, g.theta * ang});
  }
  return table;
}

Table phase_table(const StateTrajectory& traj, Units units, double interval) {
  if (!(interval > 0.0)) throw ConfigError("phase interval must be positive");
  const double ang = units == Units::degrees ? kDegPerRad : 1.0;
  const int n = traj.steps();
  Table table;
  table.columns = {"Time", "alpha1", "alpha2", "x", "y", "theta"};
  if (traj.poses.empty() || !(traj.h > 0.0)) return table;
  const double eff = std::max(interval, traj.h);  // cannot sample finer than the grid
  long last = -1;
  for (int m = 0;; ++m) {
    const long k = std::lround(m * eff / traj.h);
    if (k > n) break;
    if (k == last) continue;
    last = k;
    const auto& g = traj.poses[k];
    table.rows.push_back(
        {k * traj.h, traj.alphas[k].alpha1 * ang, traj.alphas[k].alpha2 * ang, g.x, g.y, g.theta * ang});
  }
  return table;
}

Table controls_table(const StateTrajectory& traj) {
  Table table;
  table.columns = {"Time", "u1", "u2"};
  table.rows.reserve(traj.controls.size());
  for (size_t k = 0; k < traj.controls.size(); ++k) {
    table.rows.push_back({k * traj.h, traj.controls[k][0], traj.controls[k][1]});
  }
  return table;
}

Table costates_table(const std::vector<Costate>& costates, double h, double nu) {
  Table table;
  table.columns = {"Time", "zeta_x", "zeta_y", "zeta_theta", "rho_x",
                   "rho_y", "rho_theta", "xi1", "xi2", "nu"};
  table.rows.reserve(costates.size());
  for (size_t k = 0; k < costates.size(); ++k) {
    const Costate& c = costates[k];
    table.rows.push_back({k * h, c.zeta.fx, c.zeta.fy, c.zeta.tau, c.rho.fx, c.rho.fy, c.rho.tau,
                          c.xi[0], c.xi[1], nu});
  }
  return table;
}

StateTrajectory trajectory_from_table(const Table& table, Units units) {
  if (table.rows.size() < 2) throw IoError("trajectory table needs at least 2 rows");
  const size_t jt = column_index(table, "Time");
  const size_t ja1 = column_index(table, "alpha1");
  const size_t ja2 = column_index(table, "alpha2");
  const size_t ju1 = column_index(table, "u1");
  const size_t ju2 = column_index(table, "u2");
  const size_t jx = column_index(table, "x");
  const size_t jy = column_index(table, "y");
  const size_t jth = column_index(table, "theta");
  const double rad = units == Units::degrees ? 1.0 / kDegPerRad : 1.0;
  StateTrajectory traj;
  traj.h = table.rows[1][jt] - table.rows[0][jt];
  if (!(traj.h > 0.0)) throw IoError("trajectory table Time column is not increasing");
  const size_t n = table.rows.size() - 1;
  traj.alphas.reserve(n + 1);
  traj.poses.reserve(n + 1);
  traj.controls.reserve(n);
  for (size_t k = 0; k <= n; ++k) {
    const auto& row = table.rows[k];
    traj.alphas.push_back({row[ja1] * rad, row[ja2] * rad});
    traj.poses.push_back({row[jx], row[jy], row[jth] * rad});
    if (k < n) traj.controls.push_back(ControlVector{row[ju1] * rad, row[ju2] * rad});
  }
  return traj;
}

std::pair<std::vector<Costate>, double> costates_from_table(const Table& table) {
  const size_t jzx = column_index(table, "zeta_x");
  const size_t jzy = column_index(table, "zeta_y");
  const size_t jzt = column_index(table, "zeta_theta");
  const size_t jrx = column_index(table, "rho_x");
  const size_t jry = column_index(table, "rho_y");
  const size_t jrt = column_index(table, "rho_theta");
  const size_t jx1 = column_index(table, "xi1");
  const size_t jx2 = column_index(table, "xi2");
  const size_t jnu = column_index(table, "nu");
  std::vector<Costate> costates;
  costates.reserve(table.rows.size());
  double nu = -1.0;
  for (size_t k = 0; k < table.rows.size(); ++k) {
    const auto& row = table.rows[k];
    Costate c;
    c.zeta = {row[jzx], row[jzy], row[jzt]};
    c.rho = {row[jrx], row[jry], row[jrt]};
    c.xi = Eigen::Vector2d{row[jx1], row[jx2]};
    costates.push_back(c);
    if (k == 0) nu = row[jnu];
  }
  return {std::move(costates), nu};
}

std::vector<ControlVector> read_controls(const std::string& path) {
  const Table table = read_table(path);
  size_t j1 = 0;
  size_t j2 = 1;
  bool named = true;
  try {
    j1 = column_index(table, "u1");
    j2 = column_index(table, "u2");
  } catch (const IoError&) {
    named = false;
  }
  if (!named) {
    if (table.columns.size() != 2) {
      throw IoError(path + ": expected u1/u2 columns or a plain two-column table");
    }
    j1 = 0;
    j2 = 1;
  }
  std::vector<ControlVector> controls;
  controls.reserve(table.rows.size());
  for (const auto& row : table.rows) controls.emplace_back(row[j1], row[j2]);
  return controls;
}

std::vector<std::string> write_solution(const Solution& solution, const RunConfig& config) {
  const fs::path dir{config.out_dir};
  const double tol =
      std::max(config.solver.constraint_tolerance, config.solver.stationarity_tolerance);

  std::ostringstream residuals;
  const char* status = solution.status == SolveStatus::certified        ? "certified"
                       : solution.status == SolveStatus::max_iterations ? "max_iterations"
                                                                        : "diverged";
  residuals << "status: " << status << "\n";
  if (!solution.message.empty()) residuals << "message: " << solution.message << "\n";
  residuals << "cost: " << fmt(solution.cost) << "\n";
  residuals << "terminal_residual_norm: " << fmt(solution.terminal.norm()) << "\n";
  residuals << "nu: " << fmt(solution.nu) << "\n\n";
  residuals << format_report(solution.residuals, tol);

  std::vector<std::string> paths;
  const auto emit_table = [&](const char* name, const Table& table) {
    const std::string path = (dir / name).string();
    write_table(table, path);
    paths.push_back(path);
  };
  const auto emit_text = [&](const char* name, const std::string& content) {
    const std::string path = (dir / name).string();
    write_text_file(path, content);
    paths.push_back(path);
  };
  emit_table("trajectory.csv", trajectory_table(solution.trajectory, config.units));
  emit_table("phase_portrait.csv",
             phase_table(solution.trajectory, config.units, config.phase_interval));
  emit_table("controls.csv", controls_table(solution.trajectory));
  emit_table("costates.csv",
             costates_table(solution.costates, solution.trajectory.h, solution.nu));
  emit_text("residuals.txt", residuals.str());
  emit_text("convergence.txt", format_log(solution.log));
  emit_text("config.txt", format_config(config));
  return paths;
}

}  // namespace purcell::io
