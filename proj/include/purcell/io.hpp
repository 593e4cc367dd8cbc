#pragma once

#include <numbers>
#include <string>
#include <utility>
#include <vector>

#include "purcell/solver.hpp"

namespace purcell::io {

inline constexpr double kDegPerRad = 180.0 / std::numbers::pi;

enum class Units { radians, degrees };

// Everything a run needs, in one flat config file. Angles in the file are
// always radians; `units` only selects the export convention for tables.
struct RunConfig {
  SwimmerGeometry geometry;
  DiscretizationParams discretization;
  ShapeState alpha_bar{0.0, 0.0};
  // Target holonomy as pose coordinates (x, y, theta).
  double target_x = 0.1;
  double target_y = 0.1;
  double target_theta = 0.0;
  SolverConfig solver;
  std::string guess_file;  // loaded into solver.guess_controls when initial_guess == file
  std::string out_dir = "out";
  Units units = Units::degrees;
  double phase_interval = 5.0;  // seconds between phase-portrait rows
};

// Flat "key = value" lines, '#' starts a comment, later assignments win.
// Unknown keys and unparseable values throw ConfigError naming the key.
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::string& path);

// Emits every key; parse_config(format_config(c)) reproduces c exactly
// (numbers are printed with 17 significant digits).
std::string format_config(const RunConfig& config);

ProblemSpec problem_spec(const RunConfig& config);

// problem_spec + solver config, with guess_file read from disk when the
// initial-guess mode asks for it.
std::pair<ProblemSpec, SolverConfig> resolve(const RunConfig& config);

// Rectangular numeric data with named columns; the on-disk form is
// comma-separated, one header line, LF endings, '.' decimal separator.
struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
};

// Atomic: writes path + ".tmp" then renames. Parent directories are created.
void write_table(const Table& table, const std::string& path);
void write_text_file(const std::string& path, const std::string& content);

// A headerless all-numeric first line gets synthesized column names
// col1..colK. Ragged rows or junk cells throw IoError.
Table read_table(const std::string& path);

// Columns: Time,alpha1,alpha2,u1,u2,x,y,theta. steps+1 rows; the last row
// repeats the final control so state and control columns align (consumers of
// controls read the first steps rows). Angle columns are converted when
// units == degrees; x, y, Time stay in meters and seconds.
Table trajectory_table(const StateTrajectory& traj, Units units);

// Columns: Time,alpha1,alpha2,x,y,theta, sampled every `interval` seconds
// (nearest grid index, duplicates skipped; intervals below h sample each step).
Table phase_table(const StateTrajectory& traj, Units units, double interval);

// Columns: Time,u1,u2 with steps rows. Always radians so that a written file
// feeds back into rollout or initial_guess == file bit-identically.
Table controls_table(const StateTrajectory& traj);

// Columns: Time,zeta_x,zeta_y,zeta_theta,rho_x,rho_y,rho_theta,xi1,xi2,nu
// with one row per step, natural units.
Table costates_table(const std::vector<Costate>& costates, double h, double nu);

// Inverse of trajectory_table / costates_table for the audit subcommand.
// Columns are matched by name; the step size is recovered from the Time
// column. Missing columns or too few rows throw IoError.
StateTrajectory trajectory_from_table(const Table& table, Units units);
std::pair<std::vector<Costate>, double> costates_from_table(const Table& table);

// u1/u2 columns by name, or the two columns of a two-column table.
std::vector<ControlVector> read_controls(const std::string& path);

// Writes trajectory.csv, phase_portrait.csv, controls.csv, costates.csv,
// residuals.txt, convergence.txt, and config.txt into config.out_dir; returns
// the paths. Called for every solve exit so failed runs keep diagnostics.
std::vector<std::string> write_solution(const Solution& solution, const RunConfig& config);

}  // namespace purcell::io
