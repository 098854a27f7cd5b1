#include <unistd.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "cli.hpp"
#include "doctest.h"
#include "holder/spec_io.hpp"

namespace fs = std::filesystem;
using holder::Json;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("holder_cli_" + std::to_string(::getpid()) + "_" + std::to_string(counter()++));
    fs::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
  std::string operator/(const std::string& name) const { return (path / name).string(); }
  static int& counter() {
    static int c = 0;
    return c;
  }
};

struct Result {
  int code;
  std::string out, err;
};

Result cli(std::vector<std::string> args) {
  args.insert(args.begin(), "holder_forge");
  std::ostringstream out, err;
  int code = holder::cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void spit(const std::string& path, const std::string& text) { std::ofstream(path, std::ios::binary) << text; }

std::vector<std::vector<std::string>> csv_rows(const std::string& path) {
  std::vector<std::vector<std::string>> rows;
  std::ifstream in(path);
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string c;
    while (std::getline(ss, c, ',')) cells.push_back(c);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    rows.push_back(cells);
  }
  return rows;
}

const char* kFn =
    R"({"type":"separable","gamma":1,"components":[{"alpha":0.6,"base":"auto"},{"alpha":0.8,"base":"auto"}]})";
const char* kExperiment = R"({"baseline":{"type":"quadratic","coefficients":[[0,0,1],[0,0,1]]},"delta":0.01,
 "function":{"type":"separable","gamma":1,"components":[{"alpha":0.6,"base":"auto"},{"alpha":0.8,"base":"auto"}]},
 "family":{"n":10,"gamma":1,"domain":{"lo":[0,0],"hi":[1,1]}},"count":20,"seed":20240601})";

struct EnvGuard {
  std::string name;
  EnvGuard(const char* n, const char* v) : name(n) { ::setenv(n, v, 1); }
  ~EnvGuard() { ::unsetenv(name.c_str()); }
};

}  // namespace

TEST_CASE("cli: increments table and manifest") {
  TempDir dir;
  auto r = cli({"increments", "--alpha", "1/2", "--base", "16", "--m", "3", "--out", dir / "r.csv"});
  CHECK(r.code == 0);
  auto rows = csv_rows(dir / "r.csv");
  REQUIRE(rows.size() == 1 + 8738);  // 2 (1 + 16 + 256 + 4096)
  CHECK(rows[0] == std::vector<std::string>{"m", "j", "delta", "delta_num", "delta_den", "ratio", "ratio_num",
                                            "ratio_den", "pass"});
  for (std::size_t i = 1; i < rows.size(); ++i) CHECK(rows[i].back() == "true");
  CHECK(rows[1] == std::vector<std::string>{"0", "0", "1", "1", "1", "1.5", "3", "2", "true"});

  Json m = holder::read_json_file(dir / "r.csv.manifest.json");
  CHECK(m["subcommand"] == "increments");
  CHECK(m["exit_code"] == 0);
  CHECK(m["params"]["base"] == 16);
  CHECK(m["version"] == "0.1.0");
  CHECK(m["seed"].is_null());
  // No temp files left behind.
  for (const auto& e : fs::directory_iterator(dir.path))
    CHECK(e.path().string().find(".tmp.") == std::string::npos);
}

TEST_CASE("cli: corrupted increment table exits 2") {
  TempDir dir;
  REQUIRE(cli({"increments", "--alpha", "1/2", "--base", "16", "--m", "2", "--out", dir / "r.csv"}).code == 0);
  auto ok = cli({"validate", "--increments", dir / "r.csv", "--alpha", "1/2", "--base", "16", "--out", dir / "v.json"});
  CHECK(ok.code == 0);

  auto rows = csv_rows(dir / "r.csv");
  auto write_rows = [&](const std::string& path, const std::vector<std::vector<std::string>>& rs) {
    std::ofstream os(path);
    for (const auto& row : rs) {
      for (std::size_t i = 0; i < row.size(); ++i) os << (i ? "," : "") << row[i];
      os << '\n';
    }
  };
  auto bad = rows;
  bad[40][3] = "1";        // delta_num
  bad[40][4] = "1000000";  // delta_den: far below the floor at level 1 or 2
  write_rows(dir / "bad.csv", bad);
  auto r = cli({"validate", "--increments", dir / "bad.csv", "--alpha", "1/2", "--base", "16", "--out", dir / "v2.json"});
  CHECK(r.code == 2);
  Json rep = holder::read_json_file(dir / "v2.json");
  CHECK(rep["violations"] == 1);
  CHECK(holder::read_json_file(dir / "v2.json.manifest.json")["exit_code"] == 2);

  // Wrong value that still clears the bound: inconsistent, not a violation.
  auto off = rows;
  off[1][3] = "7";
  write_rows(dir / "off.csv", off);
  CHECK(cli({"validate", "--increments", dir / "off.csv", "--alpha", "1/2", "--base", "16", "--out", dir / "v3.json"})
            .code == 1);

  spit(dir / "junk.csv", "m,j\n1,2\n");
  CHECK(cli({"validate", "--increments", dir / "junk.csv", "--alpha", "1/2", "--base", "16", "--out", dir / "v4.json"})
            .code == 1);
}

TEST_CASE("cli: usage errors") {
  TempDir dir;
  auto r = cli({"increments", "--alpha", "1/2", "--base", "16", "--m", "1", "--frobnicate", "--out", dir / "x.csv"});
  CHECK(r.code == 1);
  CHECK(r.err.find("Usage") != std::string::npos);
  CHECK(cli({}).code == 1);
  CHECK(cli({"launch"}).code == 1);
  CHECK(cli({"--help"}).code == 0);

  spit(dir / "fam.json", R"({"n":10,"gamma":1,"domain":{"lo":[0,0],"hi":[1,1]}})");
  spit(dir / "saw.json", R"({"type":"sawtooth","alpha":0.5,"base":16})");
  spit(dir / "exp.json", kExperiment);
  Json noseed = holder::parse_json_text(kExperiment);
  noseed.erase("seed");
  spit(dir / "exp_noseed.json", noseed.dump());

  // Randomized subcommands never pick a seed on their own.
  CHECK(cli({"sample", "--spec", dir / "fam.json", "--count", "3", "--out", dir / "c.json"}).code == 1);
  CHECK(cli({"exponent", "--spec", dir / "saw.json", "--m-max", "6", "--out", dir / "e.json"}).code == 1);
  CHECK(cli({"perturb", "--spec", dir / "exp_noseed.json", "--out", dir / "p.json"}).code == 1);
  CHECK(cli({"perturb", "--spec", dir / "exp.json", "--seed", "7", "--out", dir / "p.json"}).code == 1);
  CHECK(cli({"perturb", "--spec", dir / "exp_noseed.json", "--seed", "7", "--out", dir / "p.json"}).code == 0);
  CHECK(cli({"perturb", "--spec", dir / "exp.json", "--seed", "20240601", "--out", dir / "p.json"}).code == 0);

  // Library errors are validation errors.
  CHECK(cli({"increments", "--alpha", "1/2", "--base", "10", "--m", "1", "--out", dir / "x.csv"}).code == 1);
  CHECK(cli({"increments", "--alpha", "0.5", "--base", "15", "--m", "1", "--out", dir / "x.csv"}).code == 1);
  spit(dir / "broken.json", "{not json");
  CHECK(cli({"validate", "--spec", dir / "broken.json", "--out", dir / "v.json"}).code == 1);
}

TEST_CASE("cli: budget precedence") {
  TempDir dir;
  auto args = [&](std::vector<std::string> extra) {
    std::vector<std::string> a{"increments", "--alpha", "1/2", "--base", "16", "--m", "2", "--out", dir / "b.csv"};
    a.insert(a.end(), extra.begin(), extra.end());
    return a;
  };
  // Levels 0..2 hold 2 + 32 + 512 = 546 intervals.
  CHECK(cli(args({"--budget", "545"})).code == 1);
  CHECK(cli(args({"--budget", "546"})).code == 0);
  {
    EnvGuard env("HOLDER_FORGE_BUDGET", "100");
    CHECK(cli(args({})).code == 1);
    CHECK(cli(args({"--budget", "1000"})).code == 0);
    CHECK(holder::read_json_file(dir / "b.csv.manifest.json")["params"]["budget"] == 1000);
  }
  {
    EnvGuard env("HOLDER_FORGE_BUDGET", "lots");
    CHECK(cli(args({})).code == 1);
  }
  CHECK(cli(args({})).code == 0);
  CHECK(holder::read_json_file(dir / "b.csv.manifest.json")["params"]["budget"] == 4000000);
}

TEST_CASE("cli: eval in float and exact mode") {
  TempDir dir;
  spit(dir / "saw.json", R"({"type":"sawtooth","alpha":"1/2","base":16})");
  spit(dir / "pts.csv", "x\n0.0625\n0\n0.5\n");
  auto r = cli({"eval", "--spec", dir / "saw.json", "--points", dir / "pts.csv", "--tol", "1e-9", "--out", dir / "v.csv"});
  CHECK(r.code == 0);
  auto rows = csv_rows(dir / "v.csv");
  REQUIRE(rows.size() == 4);
  CHECK(std::stod(rows[1][1]) == doctest::Approx(0.3125).epsilon(1e-12));
  CHECK(std::stod(rows[2][1]) == 0);

  spit(dir / "q.csv", "x\n1/16\n3/4096\n");
  auto e1 = cli({"eval", "--exact", "--alpha", "1/2", "--base", "16", "--points", dir / "q.csv", "--out", dir / "e1.csv"});
  auto e2 = cli({"eval", "--exact", "--alpha", "1/2", "--base", "16", "--points", dir / "q.csv", "--out", dir / "e2.csv"});
  CHECK(e1.code == 0);
  CHECK(e2.code == 0);
  CHECK(slurp(dir / "e1.csv") == slurp(dir / "e2.csv"));
  auto ex = csv_rows(dir / "e1.csv");
  CHECK(ex[1] == std::vector<std::string>{"1/16", "0.3125", "5", "16"});

  spit(dir / "third.csv", "x\n1/3\n");
  CHECK(cli({"eval", "--exact", "--alpha", "1/2", "--base", "16", "--points", dir / "third.csv", "--out",
             dir / "e3.csv"})
            .code == 1);

  spit(dir / "fn.json", kFn);
  spit(dir / "p2.csv", "x,y\n0,0\n0.25,0.5\n");
  CHECK(cli({"eval", "--spec", dir / "fn.json", "--points", dir / "p2.csv", "--out", dir / "v2.csv"}).code == 0);
  CHECK(cli({"eval", "--spec", dir / "fn.json", "--points", dir / "pts.csv", "--out", dir / "v3.csv"}).code == 1);
}

TEST_CASE("cli: manifest digests match an independent sha256") {
  TempDir dir;
  spit(dir / "saw.json", R"({"type":"sawtooth","alpha":0.5,"base":16})");
  REQUIRE(cli({"exponent", "--spec", dir / "saw.json", "--m-max", "7", "--seed", "4", "--out", dir / "e.json"}).code ==
          0);
  Json m = holder::read_json_file(dir / "e.json.manifest.json");
  CHECK(m["seed"] == 4);
  std::string cmd = "sha256sum '" + (dir / "saw.json") + "'";
  FILE* p = ::popen(cmd.c_str(), "r");
  REQUIRE(p);
  char buf[128] = {};
  REQUIRE(std::fgets(buf, sizeof buf, p));
  ::pclose(p);
  CHECK(m["input_digests"][dir / "saw.json"] == std::string(buf, 64));
  Json e = holder::read_json_file(dir / "e.json");
  CHECK(e["alpha_hat"].get<double>() == doctest::Approx(0.5).epsilon(0.1));
  CHECK(fs::exists(e["profile_csv"].get<std::string>()));
}

TEST_CASE("cli: quotient growth, sampling and probes") {
  TempDir dir;
  auto q = cli({"quotient-growth", "--alpha", "1/2", "--base", "16", "--beta", "1", "--m-max", "3", "--out",
                dir / "q.csv"});
  CHECK(q.code == 0);
  auto rows = csv_rows(dir / "q.csv");
  REQUIRE(rows.size() == 5);
  // Q_1 = 5 at (1/2, 16): max increment 5/16 times 16.
  CHECK(rows[2][7] == "5");
  CHECK(rows[2][8] == "1");

  spit(dir / "fam.json", R"({"n":10,"gamma":1,"domain":{"lo":[0,0],"hi":[1,1]}})");
  REQUIRE(cli({"sample", "--spec", dir / "fam.json", "--count", "8", "--seed", "3", "--out", dir / "c.json"}).code == 0);
  auto curves = holder::curves_from_json(holder::read_json_file(dir / "c.json"));
  CHECK(curves.size() == 8);
  spit(dir / "fn.json", kFn);
  REQUIRE(cli({"fn-probe", "--spec", dir / "fn.json", "--curve", dir / "c.json", "--n", "10", "--out", dir / "fp.csv"})
              .code == 0);
  auto fp = csv_rows(dir / "fp.csv");
  REQUIRE(fp.size() == 9);
  for (std::size_t i = 1; i < fp.size(); ++i) CHECK(fp[i][1] == "false");

  spit(dir / "diag.json", R"({"type":"line","origin":[0.37,0.61],"direction":["1/2","1/2"],"half_len":0.25})");
  CHECK(cli({"curve-probe", "--spec", dir / "fn.json", "--curve", dir / "diag.json", "--out", dir / "cp.csv"}).code ==
        1);  // (1/2, 1/2) is not a unit vector
  spit(dir / "diag.json",
       R"({"type":"line","origin":[0.37,0.61],"direction":[0.7071067811865476,0.7071067811865476],"half_len":0.25})");
  REQUIRE(cli({"curve-probe", "--spec", dir / "fn.json", "--curve", dir / "diag.json", "--m-max", "6", "--out",
               dir / "cp.csv"})
              .code == 0);
  auto cp = csv_rows(dir / "cp.csv");
  REQUIRE(cp.size() == 7);
  CHECK(std::stod(cp.back()[2]) > 1e3);

  CHECK(cli({"validate", "--curve", dir / "diag.json", "--out", dir / "vc.json"}).code == 0);
  CHECK(holder::read_json_file(dir / "vc.json")["passed"] == true);
  spit(dir / "table.json", R"({"type":"raw_table","points":[[0,0],[0.5,0.1],[1,0.4],[1.5,0.9]]})");
  CHECK(cli({"validate", "--curve", dir / "table.json", "--out", dir / "vt.json"}).code == 0);
  CHECK(cli({"validate", "--spec", dir / "fam.json", "--out", dir / "vf.json"}).code == 0);
  CHECK(holder::read_json_file(dir / "vf.json")["kind"] == "family");
}

TEST_CASE("cli: perturb report is reproducible") {
  TempDir dir;
  spit(dir / "exp.json", kExperiment);
  REQUIRE(cli({"perturb", "--spec", dir / "exp.json", "--out", dir / "a.json"}).code == 0);
  REQUIRE(cli({"perturb", "--spec", dir / "exp.json", "--out", dir / "b.json"}).code == 0);
  Json a = holder::read_json_file(dir / "a.json"), b = holder::read_json_file(dir / "b.json");
  CHECK(a["escape_fraction"] == 1.0);
  a.erase("curves_csv");
  b.erase("curves_csv");
  CHECK(a == b);
  CHECK(slurp(dir / "a.curves.csv") == slurp(dir / "b.curves.csv"));
  REQUIRE(cli({"perturb", "--spec", dir / "exp.json", "--delta", "0", "--out", dir / "c.json"}).code == 0);
  CHECK(holder::read_json_file(dir / "c.json")["escape_fraction"] == 0.0);
}
