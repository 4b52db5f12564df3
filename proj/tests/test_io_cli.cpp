#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <unistd.h>

#include "cli_app.hpp"
#include "nesteq/network_io.hpp"
#include "support/fixtures.hpp"

using namespace nesteq;
using namespace testsupport;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  REQUIRE(in);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

int run_cli(std::initializer_list<std::string> args) {
  std::vector<std::string> owned{"nesteq"};
  owned.insert(owned.end(), args);
  std::vector<const char*> argv;
  for (const auto& a : owned) argv.push_back(a.c_str());
  return nesteq::cli::run(static_cast<int>(argv.size()), argv.data());
}

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("nesteq_test_" + std::to_string(::getpid()) + "_" +
            std::to_string(counter()++));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  static int& counter() {
    static int c = 0;
    return c;
  }
};

// Strip a trailing CSV column (used to drop nondeterministic timings).
std::string drop_last_column(const std::string& csv) {
  std::istringstream in(csv);
  std::ostringstream out;
  std::string line;
  while (std::getline(in, line)) {
    const auto comma = line.rfind(',');
    out << line.substr(0, comma) << "\n";
  }
  return out.str();
}

} // namespace

TEST_CASE("network serialization round trip is the identity on canonical form") {
  for (const HierNetwork& h :
       {pigou(0.1, 1.5), two_level(0.5, 0.25, 1.0), capacitated()}) {
    const std::string once = serialize_network(h);
    const std::string twice = serialize_network(parse_network(once));
    CHECK(once == twice);
    CHECK(validate(parse_network(once)).ok());
  }
}

TEST_CASE("parser rejects unknown keys by name") {
  const std::string text = R"({
    "levels": [{"nodes": ["s","t"], "edges": [], "od_pairs": [], "bogus_key": 1}],
    "gamma": [1.0],
    "demands": []
  })";
  CHECK_THROWS_WITH_AS(static_cast<void>(parse_network(text)),
                       doctest::Contains("bogus_key"), ParseError);
}

TEST_CASE("parser rejects malformed structure") {
  CHECK_THROWS_AS(static_cast<void>(parse_network("not json")), ParseError);
  CHECK_THROWS_AS(static_cast<void>(parse_network("{\"levels\": []}")), ParseError);
  const std::string bad_family = R"({
    "levels": [{"nodes": ["s","t"],
      "edges": [{"id":"e","tail":"s","head":"t","kind":"cost","cost":{"family":"cubic","t0":1}}],
      "od_pairs": [{"origin":"s","destination":"t"}]}],
    "gamma": [1.0], "demands": [{"od":0,"value":1.0}]
  })";
  CHECK_THROWS_WITH_AS(static_cast<void>(parse_network(bad_family)),
                       doctest::Contains("cubic"), ParseError);
}

TEST_CASE("cli: validate") {
  TempDir tmp;
  const fs::path net = tmp.path / "net.json";
  save_network(pigou(), net.string());
  CHECK(run_cli({"validate", net.string()}) == 0);

  HierNetwork bad = pigou();
  bad.gamma[0] = -1.0;
  save_network(bad, (tmp.path / "bad.json").string());
  CHECK(run_cli({"validate", (tmp.path / "bad.json").string()}) == 1);
}

TEST_CASE("cli: solve happy path writes artifacts") {
  TempDir tmp;
  const fs::path net = tmp.path / "pigou.json";
  save_network(pigou(0.1, 2.0), net.string());
  const fs::path out = tmp.path / "out";
  CHECK(run_cli({"solve", net.string(), "--eps", "1e-6", "--out-dir", out.string()}) ==
        0);
  for (const char* name :
       {"flows.csv", "demands.csv", "certificate.csv", "convergence.csv"}) {
    CHECK(fs::exists(out / name));
  }
  // Two cost edges -> two data rows.
  const std::string flows = slurp(out / "flows.csv");
  CHECK(std::count(flows.begin(), flows.end(), '\n') == 3);
}

TEST_CASE("cli: malformed input exits 1 naming the offending key") {
  TempDir tmp;
  const fs::path net = tmp.path / "broken.json";
  std::ofstream(net) << R"({"levels": [{"nodes": [], "wat": 2}], "gamma": [], "demands": []})";
  CHECK(run_cli({"solve", net.string(), "--out-dir", (tmp.path / "o").string()}) == 1);
}

TEST_CASE("cli: budget exhaustion exits 2 with a partial certificate") {
  TempDir tmp;
  const fs::path net = tmp.path / "pigou.json";
  save_network(pigou(0.05, 2.0), net.string());
  const fs::path out = tmp.path / "out";
  CHECK(run_cli({"solve", net.string(), "--eps", "1e-13", "--max-iters", "2",
                 "--out-dir", out.string()}) == 2);
  const std::string cert = slurp(out / "certificate.csv");
  CHECK(cert.find("\n") != std::string::npos);
  CHECK(cert.substr(cert.size() - 2) == "0\n"); // converged flag false
}

TEST_CASE("cli: zero demand produces an all-zero flows file") {
  TempDir tmp;
  const fs::path net = tmp.path / "empty.json";
  save_network(pigou(0.1, 0.0), net.string());
  const fs::path out = tmp.path / "out";
  CHECK(run_cli({"solve", net.string(), "--out-dir", out.string()}) == 0);
  std::istringstream flows(slurp(out / "flows.csv"));
  std::string line;
  std::getline(flows, line); // header
  while (std::getline(flows, line)) {
    const auto first = line.find(',');
    const auto second = line.find(',', first + 1);
    const auto third = line.find(',', second + 1);
    CHECK(std::stod(line.substr(second + 1, third - second - 1)) == 0.0);
  }
}

TEST_CASE("cli: induced demands echo expansion flows") {
  TempDir tmp;
  const fs::path net_path = tmp.path / "two_level.json";
  save_network(two_level(0.5, 0.25, 1.5), net_path.string());
  const fs::path out = tmp.path / "out";
  REQUIRE(run_cli({"solve", net_path.string(), "--out-dir", out.string()}) == 0);

  // Level-2 demand equals the expansion edge's flow, i.e. total demand minus
  // the direct edge's flow.
  double direct_flow = -1.0, level2_demand = -1.0;
  {
    std::istringstream flows(slurp(out / "flows.csv"));
    std::string line;
    std::getline(flows, line);
    while (std::getline(flows, line)) {
      if (line.rfind("direct,", 0) == 0) {
        const auto a = line.find(',');
        const auto b = line.find(',', a + 1);
        const auto c = line.find(',', b + 1);
        direct_flow = std::stod(line.substr(b + 1, c - b - 1));
      }
    }
  }
  {
    std::istringstream demands(slurp(out / "demands.csv"));
    std::string line;
    std::getline(demands, line);
    while (std::getline(demands, line)) {
      if (line.rfind("2,", 0) == 0) {
        const auto last = line.rfind(',');
        level2_demand = std::stod(line.substr(last + 1));
      }
    }
  }
  REQUIRE(direct_flow >= 0.0);
  REQUIRE(level2_demand >= 0.0);
  CHECK(level2_demand == doctest::Approx(1.5 - direct_flow).epsilon(1e-9));
}

TEST_CASE("cli: same seed gives byte-identical outputs") {
  TempDir tmp;
  const fs::path net = tmp.path / "pigou.json";
  save_network(pigou(0.2, 1.0), net.string());

  const fs::path out1 = tmp.path / "a", out2 = tmp.path / "b";
  for (const auto& out : {out1, out2}) {
    REQUIRE(run_cli({"simulate", net.string(), "--mode", "agents", "--agents", "200",
                     "--horizon", "5", "--seed", "9", "--out-dir", out.string()}) == 0);
    REQUIRE(run_cli({"solve", net.string(), "--out-dir", out.string()}) == 0);
  }
  CHECK(slurp(out1 / "trajectory.csv") == slurp(out2 / "trajectory.csv"));
  CHECK(slurp(out1 / "flows.csv") == slurp(out2 / "flows.csv"));
  CHECK(slurp(out1 / "demands.csv") == slurp(out2 / "demands.csv"));
  CHECK(slurp(out1 / "certificate.csv") == slurp(out2 / "certificate.csv"));
  // convergence.csv is deterministic except for its elapsed-time column.
  CHECK(drop_last_column(slurp(out1 / "convergence.csv")) ==
        drop_last_column(slurp(out2 / "convergence.csv")));
}

TEST_CASE("cli: oracle, flatten and softpath eval run end to end") {
  TempDir tmp;
  const fs::path net = tmp.path / "two_level.json";
  save_network(two_level(0.4, 0.4, 1.0), net.string());
  const fs::path out = tmp.path / "out";

  CHECK(run_cli({"oracle", net.string(), "--out-dir", out.string()}) == 0);
  CHECK(fs::exists(out / "paths.csv"));
  CHECK(fs::exists(out / "oracle_flows.csv"));

  CHECK(run_cli({"flatten", net.string(), "--out-dir", out.string()}) == 0);
  CHECK(fs::exists(out / "flattened.json"));
  CHECK(fs::exists(out / "provenance.csv"));
  CHECK(validate(load_network((out / "flattened.json").string())).ok());

  CHECK(run_cli({"softpath", "eval", net.string()}) == 0);

  const fs::path tolls = tmp.path / "tolls.csv";
  std::ofstream(tolls) << "edge,toll\ndirect,2.5\ninner_a,0.9\n";
  CHECK(run_cli({"softpath", "eval", net.string(), "--tolls", tolls.string()}) == 0);
}
