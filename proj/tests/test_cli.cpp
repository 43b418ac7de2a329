#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "gatherplan/cli.hpp"
#include "gatherplan/collector_plan.hpp"
#include "gatherplan/scenario.hpp"
#include "gatherplan/sim.hpp"

using namespace gatherplan;
namespace fs = std::filesystem;

namespace {

struct CliResult {
  int code;
  std::string out;
  std::string err;
};

CliResult cli(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

// fresh scratch directory per test case
fs::path scratch() {
  const fs::path dir = fs::temp_directory_path() / "gatherplan_cli_test";
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& path) {
  std::ifstream f(path, std::ios::binary);
  REQUIRE(f.good());
  std::stringstream buf;
  buf << f.rdbuf();
  return buf.str();
}

const char* kOffice = GATHERPLAN_SOURCE_DIR "/scenarios/office.scn";

// 9x1 two-worker micro corridor: metrics have a full hand schedule
// (see the mission micro-schedule suite)
fs::path write_micro_corridor(const fs::path& dir) {
  const fs::path scn = dir / "micro.scn";
  std::ofstream f(scn);
  f << "n_agents = 2\ncomm_range = 2.5\nagent_speed = 1\ncell_size = 1\n"
       "goals_per_segment_per_cycle = 1\ntransfer_time_per_goal = 1\nseed = 5\n\n"
       "O........\n";
  f.close();
  return scn;
}

fs::path write_micro_plan(const fs::path& dir, const fs::path& scn) {
  const Scenario sc = load_scenario_file(scn.string());
  DeploymentPlan plan;
  plan.method = SegMethod::PAP;
  plan.n_c = 0;
  plan.n_w = 2;
  LabelField lf{sc.grid.width, sc.grid.height,
                std::vector<int32_t>(static_cast<size_t>(sc.grid.width) * sc.grid.height, 0)};
  lf.label[6] = 1;
  lf.label[4] = 2;
  plan.segmentation = {SegMethod::PAP, 2, lf, {{6, 0}, {4, 0}}, true};
  plan.association = {-1, -1};
  const fs::path file = dir / "micro_plan.json";
  std::ofstream f(file, std::ios::binary);
  f << plan_to_json(plan, scenario_hash(sc));
  return file;
}

}  // namespace

TEST_SUITE("cli segment") {
  TEST_CASE("office map splits into the requested number of segments") {
    const fs::path dir = scratch();
    const auto res = cli({"segment", kOffice, "--method", "pap", "--n-w", "16", "--out",
                          (dir / "seg").string(), "--pgm"});
    CAPTURE(res.err);
    REQUIRE(res.code == 0);

    const std::string centroids = slurp(dir / "seg" / "centroids.csv");
    CHECK(std::count(centroids.begin(), centroids.end(), '\n') == 17);  // header + 16

    // matrix CSV: one line per grid row, one label per cell
    std::set<std::string> labels;
    std::stringstream ss(slurp(dir / "seg" / "labels.csv"));
    std::string line;
    while (std::getline(ss, line)) {
      std::stringstream ls(line);
      std::string cell;
      while (std::getline(ls, cell, ','))
        if (cell != "0") labels.insert(cell);
    }
    CHECK(labels.size() == 16);
    CHECK(slurp(dir / "seg" / "segments.pgm").rfind("P2", 0) == 0);
  }

  TEST_CASE("zero segments is a usage error") {
    const auto res = cli({"segment", kOffice, "--n-w", "0"});
    CHECK(res.code == 2);
  }

  TEST_CASE("a missing scenario file fails naming the path") {
    const auto res = cli({"segment", "no_such_map.scn", "--n-w", "2"});
    CHECK(res.code == 1);
    CHECK(res.err.find("no_such_map.scn") != std::string::npos);
  }
}

TEST_SUITE("cli plan") {
  TEST_CASE("single method and collector count yield one row") {
    const fs::path dir = scratch();
    const fs::path scn = write_micro_corridor(dir);
    const auto res = cli({"plan", scn.string(), "--methods", "bap", "--max-collectors", "0",
                          "--out", (dir / "p").string()});
    CAPTURE(res.err);
    REQUIRE(res.code == 0);
    CHECK(res.out.find("best method=bap n_c=0") != std::string::npos);
    const std::string csv = slurp(dir / "p" / "sweep.csv");
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 2);  // header + 1 row
    // best plan round-trips
    std::string hash;
    const DeploymentPlan plan = plan_from_json(slurp(dir / "p" / "best_plan.json"), &hash);
    CHECK(plan.n_c == 0);
    CHECK(hash == scenario_hash(load_scenario_file(scn.string())));
  }

  TEST_CASE("alpha 1 beta 0 selects the fastest-refresh configuration") {
    const fs::path dir = scratch();
    const fs::path scn = write_micro_corridor(dir);
    const auto res = cli({"plan", scn.string(), "--alpha", "1", "--beta", "0", "--out",
                          (dir / "p").string()});
    CAPTURE(res.err);
    REQUIRE(res.code == 0);
    // parse the sweep and confirm the printed best attains the minimum
    // est_t_refresh among feasible rows
    std::stringstream ss(slurp(dir / "p" / "sweep.csv"));
    std::string line;
    std::getline(ss, line);
    double min_refresh = 1e300, best_refresh = -1;
    while (std::getline(ss, line)) {
      std::vector<std::string> f;
      std::stringstream ls(line);
      std::string field;
      while (std::getline(ls, field, ',')) f.push_back(field);
      REQUIRE(f.size() == 8);
      if (f[2] != "1") continue;
      const double refresh = std::stod(f[3]);
      min_refresh = std::min(min_refresh, refresh);
      std::ostringstream printed;
      printed << "best method=" << f[0] << " n_c=" << f[1];
      if (res.out.find(printed.str()) != std::string::npos) best_refresh = refresh;
    }
    REQUIRE(best_refresh >= 0);
    CHECK(best_refresh == doctest::Approx(min_refresh));
  }
}

TEST_SUITE("cli run") {
  TEST_CASE("micro corridor end-to-end matches the hand schedule") {
    const fs::path dir = scratch();
    const fs::path scn = write_micro_corridor(dir);
    const fs::path plan = write_micro_plan(dir, scn);
    const auto res = cli({"run", scn.string(), "--plan", plan.string(), "--cycles", "2",
                          "--out", (dir / "r").string()});
    CAPTURE(res.err);
    REQUIRE(res.code == 0);
    CHECK(res.out.find("T_refresh_mean=7.0000") != std::string::npos);
    CHECK(res.out.find("N_goals_rate=2.0000") != std::string::npos);
    const std::string metrics = slurp(dir / "r" / "metrics.csv");
    CHECK(metrics.find("summary,n_cycles=2,ticks_per_cycle=13,t_refresh_mean=7,"
                       "n_goals_rate=2") != std::string::npos);
    CHECK(!slurp(dir / "r" / "trace.jsonl").empty());
  }

  TEST_CASE("repeat runs with a fixed seed are byte-identical") {
    const fs::path dir = scratch();
    const fs::path scn = write_micro_corridor(dir);
    const fs::path plan = write_micro_plan(dir, scn);
    for (const char* sub : {"a", "b"}) {
      const auto res = cli({"run", scn.string(), "--plan", plan.string(), "--cycles", "3",
                            "--seed", "99", "--out", (dir / sub).string()});
      REQUIRE(res.code == 0);
    }
    CHECK(slurp(dir / "a" / "metrics.csv") == slurp(dir / "b" / "metrics.csv"));
    CHECK(slurp(dir / "a" / "trace.jsonl") == slurp(dir / "b" / "trace.jsonl"));
  }

  TEST_CASE("a plan from a different scenario is rejected by the hash guard") {
    const fs::path dir = scratch();
    const fs::path scn = write_micro_corridor(dir);
    const fs::path plan = write_micro_plan(dir, scn);
    // same geometry, different comm range -> different content hash
    const fs::path other = dir / "other.scn";
    std::ofstream f(other);
    f << "n_agents = 2\ncomm_range = 3\nagent_speed = 1\ncell_size = 1\n"
         "goals_per_segment_per_cycle = 1\ntransfer_time_per_goal = 1\nseed = 5\n\n"
         "O........\n";
    f.close();
    const auto res = cli({"run", other.string(), "--plan", plan.string()});
    CHECK(res.code == 1);
    CHECK(res.err.find("hash") != std::string::npos);
  }

  TEST_CASE("run requires a plan source") {
    const fs::path dir = scratch();
    const fs::path scn = write_micro_corridor(dir);
    const auto res = cli({"run", scn.string()});
    CHECK(res.code == 2);
  }

  TEST_CASE("plan-from-sweep chains planning into the run") {
    const fs::path dir = scratch();
    const fs::path scn = write_micro_corridor(dir);
    const auto res = cli({"run", scn.string(), "--plan-from-sweep", "--cycles", "1", "--out",
                          (dir / "r").string()});
    CAPTURE(res.err);
    REQUIRE(res.code == 0);
    CHECK(fs::exists(dir / "r" / "metrics.csv"));
  }
}

TEST_SUITE("cli report") {
  TEST_CASE("aggregates summaries across runs") {
    const fs::path dir = scratch();
    const fs::path scn = write_micro_corridor(dir);
    const fs::path plan = write_micro_plan(dir, scn);
    REQUIRE(cli({"run", scn.string(), "--plan", plan.string(), "--cycles", "2", "--out",
                 (dir / "a").string()})
                .code == 0);
    REQUIRE(cli({"run", scn.string(), "--plan", plan.string(), "--cycles", "2", "--out",
                 (dir / "b").string()})
                .code == 0);
    const auto res = cli({"report", (dir / "a" / "metrics.csv").string(),
                          (dir / "b" / "metrics.csv").string(), "--out",
                          (dir / "agg.csv").string()});
    CAPTURE(res.err);
    REQUIRE(res.code == 0);
    const std::string csv = slurp(dir / "agg.csv");
    CHECK(csv.rfind("file,n_cycles,ticks_per_cycle,t_refresh_mean,n_goals_rate\n", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 4);  // header + 2 rows + mean
    CHECK(csv.find("mean,,,7,2") != std::string::npos);
  }

  TEST_CASE("missing metrics file fails") {
    const auto res = cli({"report", "nowhere.csv"});
    CHECK(res.code == 1);
    CHECK(res.err.find("nowhere.csv") != std::string::npos);
  }
}

TEST_SUITE("cli general") {
  TEST_CASE("help exits zero, unknown subcommand is a usage error") {
    CHECK(cli({"--help"}).code == 0);
    CHECK(cli({"frobnicate"}).code == 2);
    CHECK(cli({}).code == 2);
  }
}
