#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <sstream>

#include "tbill/cli.hpp"

using namespace tbill;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run run(std::vector<std::string> args) {
  std::ostringstream out, err;
  int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
  fs::path p = fs::temp_directory_path() / ("tbill_cli_test_" + name);
  fs::remove_all(p);
  return p;
}

}  // namespace

TEST_CASE("deviations end to end") {
  fs::path dir = scratch("dev");
  Run r = run({"deviations", "--arcs", "0.15,0.2,0.25,0.4,1.8", "--tau", "1.3", "--x0", "0.05", "--nmax", "1e5",
               "--seed", "7", "--out", dir.string()});
  CHECK(r.code == 0);
  CHECK(fs::exists(dir / "series.csv"));
  REQUIRE(fs::exists(dir / "report.json"));
  CHECK(read_text((dir / "series.csv").string()).rfind("n,dev_abs,running_max\n", 0) == 0);
  Json rep = read_json((dir / "report.json").string());
  CHECK(rep["format_version"] == kFormatVersion);
  CHECK(rep.contains("m_re"));
  CHECK(rep.contains("m_im"));
  CHECK(rep.contains("ci"));
  CHECK(summary_line(rep) + "\n" == r.out);
}

TEST_CASE("missing flag names the flag") {
  Run r = run({"deviations", "--arcs", "0.15,0.2,0.25,0.4,1.8", "--x0", "0.05", "--nmax", "1000", "--out",
               scratch("missing").string()});
  CHECK(r.code == 1);
  CHECK(r.err.find("--tau") != std::string::npos);
  CHECK(run({"deviations", "--bogus", "1"}).code == 1);
  CHECK(run({}).code == 1);
  CHECK(run({"simulate", "--arcs", "0.15,0.2,0.25,0.4,1.8", "--tau", "1.3141", "--x0", "0.0512345", "--nmax", "2.5"}).code ==
        1);
}

TEST_CASE("precondition violations are usage errors") {
  Run r = run({"deviations", "--arcs", "0.15,0.2,0.25,0.4,1.8", "--tau", "2.5", "--x0", "0.05", "--nmax", "1000",
               "--out", scratch("tau").string()});
  CHECK(r.code == 1);
  CHECK(r.err.find("TauOutOfRange") != std::string::npos);
}

TEST_CASE("hypothesis failures exit with 2") {
  Run r = run({"selfsim", "search", "--d", "2", "--maxlen", "4", "--out", scratch("hyp").string()});
  CHECK(r.code == 2);
  CHECK(r.err.find("SpectralHypothesisFailed") != std::string::npos);
}

TEST_CASE("qcheck") {
  fs::path dir = scratch("q");
  Run r = run({"qcheck", "--arcs", "0.15,0.2,0.25,0.4,1.8", "--samples", "50", "--out", dir.string()});
  CHECK(r.code == 0);
  CHECK(r.out.find("rank=3") != std::string::npos);
  CHECK(summary_line(read_json((dir / "report.json").string())) + "\n" == r.out);
}

TEST_CASE("config file, overrides and unknown keys") {
  fs::path dir = scratch("cfg");
  fs::create_directories(dir);
  std::string cfg = "# run\nformat_version=1\ncommand=simulate\nparams.arcs=0.15,0.2,0.25,0.4,1.8\ntau=1.3141\n"
                    "x0=0.0512345\nnmax=20\nout=" + (dir / "a").string() + "\n";
  write_text((dir / "run.cfg").string(), cfg);
  Run a = run({"--config", (dir / "run.cfg").string()});
  CHECK(a.code == 0);
  CHECK(a.out.find("steps=20") != std::string::npos);
  Run b = run({"--config", (dir / "run.cfg").string(), "simulate", "--nmax", "30"});
  CHECK(b.code == 0);
  CHECK(b.out.find("steps=30") != std::string::npos);

  write_text((dir / "bad.cfg").string(), cfg + "colour=red\n");
  Run c = run({"--config", (dir / "bad.cfg").string()});
  CHECK(c.code == 1);
  CHECK(c.err.find("colour") != std::string::npos);

  auto parsed = parse_config("a = 1\n\n# c\nparams.b=x y\n");
  CHECK(parsed.at("a") == "1");
  CHECK(parsed.at("b") == "x y");
}

TEST_CASE("identical runs write identical files") {
  for (const char* name : {"s1", "s2"}) {
    Run r = run({"simulate", "--arcs", "0.15,0.2,0.25,0.4,1.8", "--tau", "1.3141", "--x0", "0.0512345", "--nmax", "200",
                 "--out", scratch(name).string()});
    REQUIRE(r.code == 0);
  }
  for (const char* f : {"trajectory.csv", "trajectory.svg", "report.json"})
    CHECK(read_text((fs::temp_directory_path() / "tbill_cli_test_s1" / f).string()) ==
          read_text((fs::temp_directory_path() / "tbill_cli_test_s2" / f).string()));
}

TEST_CASE("ensemble with several jobs matches one job") {
  std::vector<std::string> base = {"deviations", "--samples", "6", "--seed", "3", "--nmax", "20000"};
  auto one = base, four = base;
  one.insert(one.end(), {"--jobs", "1", "--out", scratch("e1").string()});
  four.insert(four.end(), {"--jobs", "4", "--out", scratch("e4").string()});
  Run a = run(one), b = run(four);
  CHECK(a.code == 0);
  CHECK(a.out == b.out);
  CHECK(read_text((fs::temp_directory_path() / "tbill_cli_test_e1" / "ensemble.csv").string()) ==
        read_text((fs::temp_directory_path() / "tbill_cli_test_e4" / "ensemble.csv").string()));
}

TEST_CASE("selfsim search then verify") {
  fs::path dir = scratch("ss");
  Run s = run({"selfsim-search", "--d", "4", "--maxlen", "9", "--out", dir.string()});
  REQUIRE(s.code == 0);
  fs::path vdir = scratch("sv");
  Run v = run({"selfsim", "verify", "--system", (dir / "system.json").string(), "--aN", "1.5", "--nmax", "1e4",
               "--out", vdir.string()});
  CHECK(v.code == 0);
  CHECK(v.out.find("upper_ok=true") != std::string::npos);
  CHECK(summary_line(read_json((vdir / "report.json").string())) + "\n" == v.out);
}

TEST_CASE("lyapunov command") {
  fs::path dir = scratch("ly");
  Run r = run({"lyapunov", "--d", "4", "--nmax", "500", "--seed", "1", "--out", dir.string()});
  CHECK(r.code == 0);
  CHECK(r.out.rfind("lyapunov theta=", 0) == 0);
}

TEST_CASE("installed executable") {
  const char* exe = std::getenv("TBILL_EXE");
  if (!exe) return;
  fs::path dir = scratch("exe");
  std::string cmd = std::string(exe) + " qcheck --samples 20 --out " + dir.string() + " > /dev/null";
  CHECK(std::system(cmd.c_str()) == 0);
  std::string bad = std::string(exe) + " deviations --nmax 10 --out " + dir.string() + " 2> /dev/null";
  int status = std::system(bad.c_str());
  CHECK(WEXITSTATUS(status) == 1);
}
