#include "cli.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <fmt/core.h>
#include <json.hpp>

#include "svg.hpp"
#include "torsionlab/csv.hpp"
#include "torsionlab/domain_io.hpp"
#include "torsionlab/identities.hpp"
#include "torsionlab/mesh.hpp"
#include "torsionlab/shapeflow.hpp"
#include "torsionlab/stability.hpp"
#include "torsionlab/torsion.hpp"

namespace tlab::cli {

namespace fs = std::filesystem;

namespace {

constexpr const char* kExitCodes =
    "Exit codes:\n"
    "  0  success\n"
    "  1  internal error\n"
    "  2  configuration error (bad flags, malformed input files)\n"
    "  3  domain error (invalid or non-star-shaped boundary)\n"
    "  4  mesh error (degenerate elements)\n"
    "  5  solver error (no convergence, flow stagnation)\n"
    "  6  resource error (unreadable input, unwritable output)\n"
    "Environment: TORSIONLAB_THREADS sets the worker thread count.";

StarDomain load_input_domain(const RunConfig& c) {
  if (c.seed) return random_fourier_domain(*c.seed);
  return load_domain(c.domain);
}

void write(const RunConfig& c, const std::string& name, const std::string& content, std::ostream& log) {
  const fs::path p = c.output / name;
  write_file_atomic(p, content);
  log << "wrote " << p.string() << '\n';
}

void run_solve(const RunConfig& c, std::ostream& log) {
  const StarDomain domain = load_input_domain(c);
  const auto mesh = std::make_shared<const TriMesh>(build_mesh(domain, c.level));
  const TorsionSolution sol = solve_torsion(mesh);

  nlohmann::ordered_json j;
  j["level"] = c.level;
  j["h"] = mesh->h();
  j["nodes"] = mesh->node_count();
  j["triangles"] = mesh->triangle_count();
  j["tau"] = sol.tau();
  j["R"] = sol.R();
  j["H0"] = sol.H0();
  j["z"] = {sol.z().x(), sol.z().y()};
  j["flux_deviation_l2"] = flux_deviation_l2(sol);
  j["area"] = sol.area();
  j["perimeter"] = sol.perimeter();
  j["cg_iterations"] = sol.cg_iterations();
  j["domain"] = nlohmann::ordered_json::parse(domain_to_json(domain));
  write(c, "summary.json", j.dump(2) + "\n", log);
  write_solution_csv(sol, c.output / "solution_nodes.csv", c.output / "solution_boundary.csv");
  log << "wrote solution_nodes.csv, solution_boundary.csv\n";
  if (c.dump_mesh) {
    write_mesh_csv(*mesh, c.output / "mesh_vertices.csv", c.output / "mesh_connectivity.csv");
    log << "wrote mesh_vertices.csv, mesh_connectivity.csv\n";
  }
  if (c.plots) write(c, "domain.svg", svg::boundaries({{"domain", domain}}, c.samples), log);
  log << fmt::format("tau = {}  R = {}  |u_nu - R|_2 = {}\n", format_number(sol.tau()),
                     format_number(sol.R()), format_number(flux_deviation_l2(sol)));
}

void run_verify(const RunConfig& c, std::ostream& log) {
  const StarDomain domain = load_input_domain(c);
  std::vector<std::vector<IdentityReport>> by_level = verify_levels(domain, c.levels, c.threads);
  for (std::size_t l = 0; l < by_level.size(); ++l) {
    for (IdentityReport r : {check_heintze_karcher(domain, c.samples), check_isoperimetric(domain)}) {
      r.level = c.levels[l];
      r.h = by_level[l].empty() ? 0.0 : by_level[l].front().h;
      by_level[l].push_back(r);
    }
  }
  write(c, "identities.csv", identities_csv(by_level), log);
  if (!by_level.empty()) {
    for (const IdentityReport& r : by_level.back()) {
      log << fmt::format("{:<16} level {}  abs {:.3e}  rel {:.3e}\n", r.name, r.level,
                         r.abs_residual, r.rel_residual);
    }
  }
}

void run_stability(const RunConfig& c, std::ostream& log) {
  const DomainFamily family = load_family(c.family);
  const std::vector<StabilityRecord> records = sweep(family, c.threads);
  write(c, "sweep.csv", records_csv(records), log);
  std::vector<ExponentFit> fits;
  std::string block = "x_field,y_field,slope,intercept,correlation,count\n";
  for (const auto& [x, y] : family.fits) {
    fits.push_back(fit_exponent(records, x, y));
    const ExponentFit& f = fits.back();
    block += fmt::format("{},{},{},{},{},{}\n", f.x_field, f.y_field, format_number(f.slope),
                         format_number(f.intercept), format_number(f.correlation), f.count);
  }
  write(c, "fits.csv", block, log);
  log << block;
  if (c.plots) write(c, "fits.svg", svg::loglog(records, fits), log);
}

void run_flow_command(const RunConfig& c, std::ostream& log) {
  const StarDomain domain = load_input_domain(c);
  FlowOptions opt;
  opt.level = c.level;
  opt.freeze_R = c.freeze_R;
  opt.orientation = parse_orientation(c.orientation);
  std::vector<FlowState> trajectory{initial_flow_state(domain, opt)};
  auto finish = [&] {
    write(c, "trajectory.csv", trajectory_csv(trajectory), log);
    if (c.plots) {
      write(c, "flow.svg",
            svg::boundaries({{"initial", trajectory.front().domain}, {"final", trajectory.back().domain}},
                            c.samples),
            log);
    }
  };
  try {
    while (trajectory.back().circle_distance >= opt.target_distance &&
           trajectory.back().step < c.max_steps) {
      trajectory.push_back(flow_step(trajectory.back(), c.dt, opt));
    }
  } catch (const Error&) {
    finish();
    throw;
  }
  finish();
  const FlowState& last = trajectory.back();
  log << fmt::format("steps {}  t = {}  J = {}  circle distance {:.3e}  |u_nu - R|_2 {:.3e}\n",
                     last.step, format_number(last.t), format_number(last.J), last.circle_distance,
                     last.flux_deviation);
}

std::vector<std::vector<std::string>> read_csv(const fs::path& p) {
  std::ifstream in(p);
  if (!in) throw ResourceError(fmt::format("cannot read '{}'", p.string()));
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    rows.push_back(std::move(cells));
  }
  return rows;
}

std::string markdown_table(const std::vector<std::vector<std::string>>& rows) {
  if (rows.empty()) return "(empty)\n";
  std::string out = "|";
  for (const std::string& h : rows[0]) out += " " + h + " |";
  out += "\n|";
  for (std::size_t i = 0; i < rows[0].size(); ++i) out += "---|";
  out += "\n";
  for (std::size_t r = 1; r < rows.size(); ++r) {
    out += "|";
    for (const std::string& v : rows[r]) out += " " + v + " |";
    out += "\n";
  }
  return out;
}

void run_report(const RunConfig& c, std::ostream& log) {
  std::string md = "# torsionlab report\n\n";
  int sections = 0;
  const fs::path summary = c.output / "summary.json";
  if (fs::exists(summary)) {
    std::ifstream in(summary);
    nlohmann::ordered_json j;
    try {
      j = nlohmann::ordered_json::parse(in);
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(fmt::format("{}: {}", summary.string(), e.what()));
    }
    md += "## Solve\n\n";
    for (const auto& [key, value] : j.items()) {
      if (key != "domain") md += fmt::format("- {}: {}\n", key, value.dump());
    }
    md += "\n";
    ++sections;
  }
  if (fs::exists(c.output / "identities.csv")) {
    auto rows = read_csv(c.output / "identities.csv");
    std::vector<std::vector<std::string>> last{rows.empty() ? std::vector<std::string>{} : rows[0]};
    if (rows.size() > 1) {
      const std::string level = rows.back()[1];
      for (std::size_t r = 1; r < rows.size(); ++r) {
        if (rows[r].size() > 1 && rows[r][1] == level) last.push_back(rows[r]);
      }
    }
    md += "## Identities (finest level)\n\n" + markdown_table(last) + "\n";
    ++sections;
  }
  if (fs::exists(c.output / "fits.csv")) {
    md += "## Stability exponents\n\n" + markdown_table(read_csv(c.output / "fits.csv")) + "\n";
    if (fs::exists(c.output / "sweep.csv")) {
      md += fmt::format("{} sweep records in sweep.csv.\n\n", read_csv(c.output / "sweep.csv").size() - 1);
    }
    ++sections;
  }
  if (fs::exists(c.output / "trajectory.csv")) {
    auto rows = read_csv(c.output / "trajectory.csv");
    std::vector<std::vector<std::string>> ends{rows[0]};
    if (rows.size() > 1) ends.push_back(rows[1]);
    if (rows.size() > 2) ends.push_back(rows.back());
    md += "## Flow (first and last state)\n\n" + markdown_table(ends) + "\n";
    ++sections;
  }
  if (sections == 0) {
    throw ConfigError(fmt::format("no results to report in '{}'", c.output.string()));
  }
  write(c, "report.md", md, log);
}

}  // namespace

int exit_code(ErrorCategory category) noexcept {
  switch (category) {
    case ErrorCategory::kConfig: return 2;
    case ErrorCategory::kDomain: return 3;
    case ErrorCategory::kMesh: return 4;
    case ErrorCategory::kSolver: return 5;
    case ErrorCategory::kResource: return 6;
    case ErrorCategory::kInternal: return 1;
  }
  return 1;
}

std::vector<int> parse_levels(const std::string& text) {
  std::vector<int> out;
  auto to_int = [&](const std::string& s) {
    try {
      std::size_t pos = 0;
      const int v = std::stoi(s, &pos);
      if (pos != s.size()) throw std::invalid_argument(s);
      return v;
    } catch (const std::exception&) {
      throw ConfigError(fmt::format("levels '{}': '{}' is not an integer", text, s));
    }
  };
  if (const auto dots = text.find(".."); dots != std::string::npos) {
    const int a = to_int(text.substr(0, dots));
    const int b = to_int(text.substr(dots + 2));
    if (b < a) throw ConfigError(fmt::format("levels '{}': empty range", text));
    for (int l = a; l <= b; ++l) out.push_back(l);
  } else {
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(to_int(item));
  }
  if (out.empty()) throw ConfigError("levels: empty list");
  return out;
}

int default_threads() {
  if (const char* env = std::getenv("TORSIONLAB_THREADS")) {
    try {
      const int n = std::stoi(env);
      if (n >= 1) return n;
    } catch (const std::exception&) {
    }
    throw ConfigError(fmt::format("TORSIONLAB_THREADS='{}' is not a positive integer", env));
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

void validate(const RunConfig& c) {
  auto check_level = [](int level) {
    if (level < 0) throw ConfigError(fmt::format("level {} is negative", level));
    if (level > 8) throw ResourceError(fmt::format("level {} exceeds the mesh cap of 8", level));
  };
  check_level(c.level);
  for (int l : c.levels) check_level(l);
  if (c.samples < 16) throw ConfigError(fmt::format("samples {} below 16", c.samples));
  if (c.threads < 1) throw ConfigError("threads must be at least 1");
  auto check_input = [](const fs::path& p, const char* what) {
    if (p.empty()) throw ConfigError(fmt::format("missing --{}", what));
    if (!fs::is_regular_file(p)) throw ResourceError(fmt::format("{} file '{}' not found", what, p.string()));
  };
  switch (c.subcommand) {
    case Subcommand::kSolve:
    case Subcommand::kVerify:
    case Subcommand::kFlow:
      if (!c.seed) check_input(c.domain, "domain");
      break;
    case Subcommand::kStability:
      check_input(c.family, "family");
      break;
    case Subcommand::kReport:
      if (!fs::is_directory(c.output)) {
        throw ResourceError(fmt::format("output directory '{}' not found", c.output.string()));
      }
      break;
  }
  if (c.subcommand == Subcommand::kFlow) {
    if (!(c.dt > 0.0)) throw ConfigError(fmt::format("dt {} must be positive", c.dt));
    if (c.max_steps < 0) throw ConfigError("max-steps must be non-negative");
    (void)parse_orientation(c.orientation);
  }
  std::error_code ec;
  fs::create_directories(c.output, ec);
  if (ec || !fs::is_directory(c.output)) {
    throw ResourceError(fmt::format("cannot create output directory '{}'", c.output.string()));
  }
}

void run(const RunConfig& c, std::ostream& log) {
  validate(c);
  switch (c.subcommand) {
    case Subcommand::kSolve: return run_solve(c, log);
    case Subcommand::kVerify: return run_verify(c, log);
    case Subcommand::kStability: return run_stability(c, log);
    case Subcommand::kFlow: return run_flow_command(c, log);
    case Subcommand::kReport: return run_report(c, log);
  }
}

int main_entry(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  RunConfig c;
  std::string levels = "2..5";
  std::uint64_t seed = 0;
  int threads = 0;

  CLI::App app{"torsionlab: torsion problem laboratory on star-shaped planar domains"};
  app.footer(kExitCodes);
  app.require_subcommand(1);

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("-o,--output", c.output, "Output directory")->capture_default_str();
    sub->add_option("--threads", threads, "Worker threads (default: TORSIONLAB_THREADS or all cores)");
    sub->footer(kExitCodes);
  };
  auto add_domain = [&](CLI::App* sub) {
    auto* d = sub->add_option("--domain", c.domain, "Domain JSON file");
    auto* s = sub->add_option("--seed", seed, "Use a random near-circular domain from this seed");
    d->excludes(s);
    s->excludes(d);
  };

  CLI::App* solve = app.add_subcommand("solve", "Solve the torsion problem and write the solution");
  add_domain(solve);
  add_common(solve);
  solve->add_option("--level", c.level, "Mesh level [0, 8]")->capture_default_str();
  solve->add_flag("--plots", c.plots, "Also write an SVG of the boundary");
  solve->add_flag("--dump-mesh", c.dump_mesh, "Also write mesh vertex and connectivity CSVs");
  solve->add_option("-m,--samples", c.samples, "Boundary samples for plots")->capture_default_str();

  CLI::App* verify = app.add_subcommand("verify", "Check the integral identities across mesh levels");
  add_domain(verify);
  add_common(verify);
  verify->add_option("--levels", levels, "Levels as a..b or a,b,c")->capture_default_str();
  verify->add_option("-m,--samples", c.samples, "Boundary samples for geometric checks")
      ->capture_default_str();

  CLI::App* stability = app.add_subcommand("stability", "Sweep a domain family and fit exponents");
  stability->add_option("--family", c.family, "Family JSON file")->required();
  add_common(stability);
  stability->add_flag("--plots", c.plots, "Also write a log-log SVG of the fits");

  CLI::App* flow = app.add_subcommand("flow", "Evolve a domain by the privileged flow");
  add_domain(flow);
  add_common(flow);
  c.level = 5;
  int flow_level = 4;
  flow->add_option("--level", flow_level, "Mesh level [0, 8]")->capture_default_str();
  flow->add_option("--dt", c.dt, "Time step")->capture_default_str();
  flow->add_option("--max-steps", c.max_steps, "Step limit")->capture_default_str();
  flow->add_flag("--freeze-R,!--recompute-R", c.freeze_R, "Keep R from the initial domain (default)");
  flow->add_option("--orientation", c.orientation, "descent (J non-increasing) or toward-ball")
      ->capture_default_str();
  flow->add_flag("--plots", c.plots, "Also write an SVG of the initial and final boundaries");
  flow->add_option("-m,--samples", c.samples, "Boundary samples for plots")->capture_default_str();

  CLI::App* report = app.add_subcommand("report", "Summarize the results in an output directory");
  report->add_option("-o,--output", c.output, "Directory holding earlier results")->capture_default_str();
  report->footer(kExitCodes);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : exit_code(ErrorCategory::kConfig);
  }

  try {
    if (solve->parsed()) c.subcommand = Subcommand::kSolve;
    if (verify->parsed()) c.subcommand = Subcommand::kVerify;
    if (stability->parsed()) c.subcommand = Subcommand::kStability;
    if (report->parsed()) c.subcommand = Subcommand::kReport;
    if (flow->parsed()) {
      c.subcommand = Subcommand::kFlow;
      c.level = flow_level;
    }
    if (solve->count("--seed") + verify->count("--seed") + flow->count("--seed") > 0) c.seed = seed;
    c.levels = parse_levels(levels);
    c.threads = threads > 0 ? threads : default_threads();
    run(c, out);
    return 0;
  } catch (const Error& e) {
    err << "error [" << to_string(e.category()) << "]: " << e.what() << '\n';
    return exit_code(e.category());
  } catch (const std::bad_alloc&) {
    err << "error [resource]: out of memory\n";
    return exit_code(ErrorCategory::kResource);
  } catch (const std::exception& e) {
    err << "error [internal]: " << e.what() << '\n';
    return exit_code(ErrorCategory::kInternal);
  }
}

}  // namespace tlab::cli
