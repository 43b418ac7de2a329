#include "gatherplan/cli.hpp"

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "gatherplan/collector_plan.hpp"
#include "gatherplan/planner.hpp"
#include "gatherplan/scenario.hpp"
#include "gatherplan/segmentation.hpp"
#include "gatherplan/sim.hpp"

namespace gatherplan {
namespace {

namespace fs = std::filesystem;

SegMethod parse_method(const std::string& name) {
  if (name == "bap") return SegMethod::BAP;
  if (name == "pap") return SegMethod::PAP;
  if (name == "rap") return SegMethod::RAP;
  throw std::runtime_error("unknown segmentation method: " + name);
}

std::string method_name(SegMethod m) {
  switch (m) {
    case SegMethod::BAP: return "bap";
    case SegMethod::PAP: return "pap";
    case SegMethod::RAP: return "rap";
  }
  return "?";
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  f << content;
}

std::string centroids_csv(const Segmentation& seg) {
  std::ostringstream out;
  out << "segment,col,row\n";
  for (size_t i = 0; i < seg.centroids.size(); ++i)
    out << (i + 1) << ',' << seg.centroids[i].col << ',' << seg.centroids[i].row << '\n';
  return out.str();
}

std::string labels_pgm(const GridMap& grid, const LabelField& labels, int n_w) {
  std::ostringstream out;
  out << "P2\n" << grid.width << ' ' << grid.height << '\n' << std::max(n_w, 1) << '\n';
  for (int r = 0; r < grid.height; ++r) {
    for (int c = 0; c < grid.width; ++c) {
      if (c) out << ' ';
      out << (grid.is_free({c, r}) ? labels.at({c, r}) : 0);
    }
    out << '\n';
  }
  return out.str();
}

Scenario load_checked(const std::string& path) {
  if (!fs::exists(path)) throw std::runtime_error("scenario file not found: " + path);
  return load_scenario_file(path);
}

struct SegmentOpts {
  std::string scenario;
  std::string method = "pap";
  int n_w = 1;
  std::string out_dir = ".";
  bool pgm = false;
};

struct PlanOpts {
  std::string scenario;
  std::vector<std::string> methods = {"bap", "pap", "rap"};
  int max_collectors = -1;
  double alpha = 0.5;
  double beta = 0.5;
  std::string out_dir = ".";
};

struct RunOpts {
  std::string scenario;
  std::string plan_file;
  bool plan_from_sweep = false;
  int cycles = 10;
  std::optional<uint64_t> seed;
  std::string out_dir = ".";
};

struct ReportOpts {
  std::vector<std::string> metrics_files;
  std::string out_file;
};

int cmd_segment(const SegmentOpts& opt, std::ostream& out) {
  const Scenario sc = load_checked(opt.scenario);
  const SegMethod method = parse_method(opt.method);
  Segmentation seg;
  switch (method) {
    case SegMethod::BAP: seg = segment_bap(sc, opt.n_w); break;
    case SegMethod::PAP: seg = segment_pap(sc, opt.n_w); break;
    case SegMethod::RAP: seg = segment_rap(sc, opt.n_w); break;
  }
  const fs::path dir(opt.out_dir);
  fs::create_directories(dir);
  write_file(dir / "labels.csv", labels_to_csv(seg.labels));
  write_file(dir / "centroids.csv", centroids_csv(seg));
  if (opt.pgm) write_file(dir / "segments.pgm", labels_pgm(sc.grid, seg.labels, seg.n_w));
  out << "segmented " << opt.scenario << " method=" << opt.method << " n_w=" << seg.n_w
      << " balanced=" << (seg.balanced ? 1 : 0) << '\n';
  return 0;
}

int cmd_plan(const PlanOpts& opt, std::ostream& out) {
  const Scenario sc = load_checked(opt.scenario);
  std::vector<SegMethod> methods;
  for (const std::string& m : opt.methods) methods.push_back(parse_method(m));
  const SweepResult res = sweep(sc, methods, opt.max_collectors, opt.alpha, opt.beta);
  const DeploymentPlan best = assemble_best(sc, res);
  const fs::path dir(opt.out_dir);
  fs::create_directories(dir);
  write_file(dir / "sweep.csv", sweep_to_csv(res));
  write_file(dir / "best_plan.json", plan_to_json(best, scenario_hash(sc)));
  const auto& e = res.evaluations[static_cast<size_t>(res.best)];
  out << "best method=" << method_name(e.method) << " n_c=" << e.n_c << " U=" << std::fixed
      << std::setprecision(4) << e.utility << '\n';
  return 0;
}

int cmd_run(const RunOpts& opt, std::ostream& out) {
  const Scenario sc = load_checked(opt.scenario);
  DeploymentPlan plan;
  if (opt.plan_from_sweep) {
    plan = assemble_best(sc, sweep(sc, {SegMethod::BAP, SegMethod::PAP, SegMethod::RAP}));
  } else {
    if (!fs::exists(opt.plan_file))
      throw std::runtime_error("plan file not found: " + opt.plan_file);
    std::ifstream f(opt.plan_file, std::ios::binary);
    std::stringstream buf;
    buf << f.rdbuf();
    std::string hash;
    plan = plan_from_json(buf.str(), &hash);
    if (hash != scenario_hash(sc))
      throw std::runtime_error("plan was built from a different scenario (hash mismatch)");
  }
  const uint64_t seed = opt.seed.value_or(sc.rng_seed);
  const fs::path dir(opt.out_dir);
  fs::create_directories(dir);
  std::ostringstream trace;
  const MissionMetrics metrics = run_mission(sc, plan, opt.cycles, seed, &trace);
  write_file(dir / "metrics.csv", metrics_to_csv(metrics));
  write_file(dir / "trace.jsonl", trace.str());
  out << "T_refresh_mean=" << std::fixed << std::setprecision(4) << metrics.t_refresh_mean
      << " N_goals_rate=" << std::setprecision(4) << metrics.n_goals_rate << '\n';
  return 0;
}

int cmd_report(const ReportOpts& opt, std::ostream& out) {
  std::ostringstream csv;
  csv << "file,n_cycles,ticks_per_cycle,t_refresh_mean,n_goals_rate\n";
  double refresh_sum = 0.0, rate_sum = 0.0;
  for (const std::string& path : opt.metrics_files) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("metrics file not found: " + path);
    std::string line, summary;
    while (std::getline(f, line))
      if (line.rfind("summary,", 0) == 0) summary = line;
    if (summary.empty()) throw std::runtime_error("no summary row in " + path);
    std::map<std::string, std::string> kv;
    std::stringstream ss(summary.substr(8));
    std::string field;
    while (std::getline(ss, field, ',')) {
      const size_t eq = field.find('=');
      if (eq != std::string::npos) kv[field.substr(0, eq)] = field.substr(eq + 1);
    }
    for (const char* key : {"n_cycles", "ticks_per_cycle", "t_refresh_mean", "n_goals_rate"})
      if (!kv.count(key)) throw std::runtime_error("missing " + std::string(key) + " in " + path);
    csv << path << ',' << kv["n_cycles"] << ',' << kv["ticks_per_cycle"] << ','
        << kv["t_refresh_mean"] << ',' << kv["n_goals_rate"] << '\n';
    refresh_sum += std::stod(kv["t_refresh_mean"]);
    rate_sum += std::stod(kv["n_goals_rate"]);
  }
  const double n = static_cast<double>(opt.metrics_files.size());
  csv << "mean,,," << (refresh_sum / n) << ',' << (rate_sum / n) << '\n';
  if (opt.out_file.empty())
    out << csv.str();
  else
    write_file(opt.out_file, csv.str());
  return 0;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"multi-agent periodic data-gathering planner and simulator"};
  app.require_subcommand(1);

  SegmentOpts seg_opt;
  CLI::App* seg = app.add_subcommand("segment", "partition the map into worker segments");
  seg->add_option("scenario", seg_opt.scenario, "scenario file")->required();
  seg->add_option("--method", seg_opt.method, "segmentation method")
      ->check(CLI::IsMember({"bap", "pap", "rap"}));
  seg->add_option("--n-w", seg_opt.n_w, "number of segments")->required()
      ->check(CLI::Range(1, 1000000));
  seg->add_option("--out", seg_opt.out_dir, "output directory");
  seg->add_flag("--pgm", seg_opt.pgm, "also write a PGM label image");

  PlanOpts plan_opt;
  CLI::App* plan = app.add_subcommand("plan", "sweep configurations and emit the best plan");
  plan->add_option("scenario", plan_opt.scenario, "scenario file")->required();
  plan->add_option("--methods", plan_opt.methods, "methods to sweep")
      ->delimiter(',')
      ->check(CLI::IsMember({"bap", "pap", "rap"}));
  plan->add_option("--max-collectors", plan_opt.max_collectors,
                   "highest collector count (default min(8, n_agents-1))")
      ->check(CLI::Range(0, 1000));
  plan->add_option("--alpha", plan_opt.alpha, "refresh-time weight")
      ->check(CLI::NonNegativeNumber);
  plan->add_option("--beta", plan_opt.beta, "goal-rate weight")->check(CLI::NonNegativeNumber);
  plan->add_option("--out", plan_opt.out_dir, "output directory");

  RunOpts run_opt;
  CLI::App* run = app.add_subcommand("run", "simulate a plan over full cycles");
  run->add_option("scenario", run_opt.scenario, "scenario file")->required();
  CLI::Option* plan_file_opt = run->add_option("--plan", run_opt.plan_file, "plan JSON file");
  run->add_flag("--plan-from-sweep", run_opt.plan_from_sweep,
                "plan in-process with a default sweep")
      ->excludes(plan_file_opt);
  run->add_option("--cycles", run_opt.cycles, "number of cycles")->check(CLI::Range(1, 1000000));
  run->add_option("--seed", run_opt.seed, "RNG seed (default: scenario seed)");
  run->add_option("--out", run_opt.out_dir, "output directory");

  ReportOpts rep_opt;
  CLI::App* rep = app.add_subcommand("report", "aggregate run metrics into one CSV");
  rep->add_option("metrics", rep_opt.metrics_files, "metrics CSV files")->required();
  rep->add_option("--out", rep_opt.out_file, "output file (default: stdout)");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(std::move(reversed));
  } catch (const CLI::ParseError& e) {
    std::ostringstream msg;
    const int code = app.exit(e, msg, msg);
    (code == 0 ? out : err) << msg.str();
    return code == 0 ? 0 : 2;
  }

  if (run->parsed() && !run_opt.plan_from_sweep && run_opt.plan_file.empty()) {
    err << "run needs --plan FILE or --plan-from-sweep\n";
    return 2;
  }

  try {
    if (seg->parsed()) return cmd_segment(seg_opt, out);
    if (plan->parsed()) return cmd_plan(plan_opt, out);
    if (run->parsed()) return cmd_run(run_opt, out);
    if (rep->parsed()) return cmd_report(rep_opt, out);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}

}  // namespace gatherplan
