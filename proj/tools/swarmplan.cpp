// Command-line driver: plan, simulate, run (both) and export.
//
// Exit codes: 0 success, 2 parse/validation error, 3 planning failed, 4 I/O error.

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>

#include "swarmplan/errors.hpp"
#include "swarmplan/export.hpp"
#include "swarmplan/pipeline.hpp"

namespace fs = std::filesystem;
using namespace swarmplan;

namespace {

struct Options {
  std::string scenario;
  std::string out = "out";
  std::optional<std::uint64_t> seed;
  unsigned threads = 1;
  bool svg = true;
};

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw IoError("cannot create output directory " + dir.string());
}

std::string timing_text(const PhaseTiming& t, std::optional<double> sim_s) {
  std::ostringstream os;
  os << "roadmap_s " << t.roadmap_s << "\ntransport_s " << t.transport_s << "\nassembly_s " << t.assembly_s
     << "\nplanning_total_s " << t.total() << "\n";
  if (sim_s) os << "simulation_s " << *sim_s << "\n";
  return os.str();
}

PlanBundle do_plan(const Scenario& sc, const Options& o, std::uint64_t seed) {
  PlanBundle bundle = run_plan(sc, seed, o.threads);
  const fs::path out(o.out);
  write_json(out / "roadmap.json", roadmap_to_json(bundle.roadmap));
  write_json(out / "plan.json", plan_to_json(bundle));
  if (o.svg) write_text(out / "macro.svg", macro_svg(sc, bundle.roadmap, bundle.trajectory));
  std::cerr << "planned: " << bundle.roadmap.node_count() << " nodes, " << bundle.roadmap.edge_count()
            << " edges, " << bundle.trajectory.pairs().size() << " active pairs in " << bundle.timing.total()
            << " s\n";
  return bundle;
}

void do_sim(const Scenario& sc, const Options& o, const PlanBundle& bundle, std::uint64_t seed) {
  const SimBundle sim = run_sim(sc, bundle, seed, o.threads);
  const fs::path out(o.out);
  const std::string csv = trajectories_csv(sim.sim.trajectories);
  write_text(out / "trajectories.csv", csv);
  write_json(out / "metrics.json", sim.metrics);
  write_text(out / "timing.txt", timing_text(bundle.timing, sim.sim_seconds));
  // Drawn from the written CSV so that `export` reproduces the plot exactly.
  if (o.svg) write_text(out / "micro.svg", micro_svg(sc, parse_trajectories_csv(csv), sc.target));
  std::cerr << "simulated " << sim.robots.size() << " robots: D = " << sim.metrics["average_trajectory_length"]
            << " m, min SDF = " << sim.metrics["min_obstacle_sdf"] << " m\n";
}

PlanBundle load_plan(const Options& o) {
  const fs::path out(o.out);
  try {
    return plan_from_json(read_json(out / "roadmap.json"), read_json(out / "plan.json"));
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("plan bundle: ") + e.what(), 0, 0);
  } catch (const std::invalid_argument& e) {
    throw ValidationError("plan bundle", e.what());
  }
}

int run(const std::string& verb, const Options& o) {
  const Scenario sc = load_scenario(o.scenario);
  const std::uint64_t seed = o.seed.value_or(sc.seed);
  ensure_dir(o.out);
  if (verb == "plan") {
    const PlanBundle bundle = do_plan(sc, o, seed);
    write_text(fs::path(o.out) / "timing.txt", timing_text(bundle.timing, std::nullopt));
  } else if (verb == "simulate") {
    do_sim(sc, o, load_plan(o), seed);
  } else if (verb == "run") {
    do_sim(sc, o, do_plan(sc, o, seed), seed);
  } else {  // export
    const PlanBundle bundle = load_plan(o);
    write_text(fs::path(o.out) / "macro.svg", macro_svg(sc, bundle.roadmap, bundle.trajectory));
    const fs::path csv = fs::path(o.out) / "trajectories.csv";
    if (fs::exists(csv)) {
      write_text(fs::path(o.out) / "micro.svg", micro_svg(sc, parse_trajectories_csv(read_text(csv)), sc.target));
    }
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Risk-aware hierarchical swarm motion planner"};
  app.require_subcommand(1, 1);
  Options opts;
  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--scenario", opts.scenario, "Scenario YAML file")->required();
    cmd->add_option("--out", opts.out, "Output directory")->capture_default_str();
    cmd->add_option("--seed", opts.seed, "Override the scenario seed");
    cmd->add_option("--threads", opts.threads, "Worker threads (results do not depend on it)")
        ->check(CLI::Range(1u, 1024u))
        ->capture_default_str();
    cmd->add_flag("--svg,!--no-svg", opts.svg, "Write SVG plots");
  };
  add_common(app.add_subcommand("plan", "Build the roadmap and transport plan"));
  add_common(app.add_subcommand("simulate", "Simulate robots on a plan previously written to --out"));
  add_common(app.add_subcommand("run", "plan, then simulate"));
  add_common(app.add_subcommand("export", "Regenerate SVG plots from --out"));

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  const std::string verb = app.get_subcommands().front()->get_name();
  try {
    return run(verb, opts);
  } catch (const ParseError& e) {
    std::cerr << "parse error";
    if (e.line() > 0) std::cerr << " at line " << e.line() << ", column " << e.column();
    std::cerr << ": " << e.what() << "\n";
    return 2;
  } catch (const ValidationError& e) {
    std::cerr << "invalid scenario: " << e.what() << "\n";
    return 2;
  } catch (const IoError& e) {
    std::cerr << "i/o error: " << e.what() << "\n";
    return 4;
  } catch (const Error& e) {
    std::cerr << "planning failed: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "planning failed: " << e.what() << "\n";
    return 3;
  }
}
