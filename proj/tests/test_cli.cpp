#include <doctest.h>

#include <array>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

using nlohmann::json;

namespace {

struct RunResult {
  int exit_code = -1;
  std::string out;
};

RunResult run_cli(const std::string& args) {
  const std::string cmd = std::string(TAU1_CLI_PATH) + " " + args + " 2>/dev/null";
  RunResult r;
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  std::array<char, 4096> buf{};
  std::size_t got = 0;
  while ((got = fread(buf.data(), 1, buf.size(), pipe)) > 0) r.out.append(buf.data(), got);
  const int status = pclose(pipe);
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string temp_path(const std::string& name) {
  return std::string("/tmp/tau1_cli_test_") + name;
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary);
  REQUIRE(f.good());
  f << content;
}

}  // namespace

TEST_CASE("cli: profile from records and from counts") {
  const std::string recs = temp_path("recs.txt");
  write_file(recs, "a\nb\na\nc\nc\nc\n");
  auto r = run_cli("profile --in " + recs);
  REQUIRE(r.exit_code == 0);
  const json j = json::parse(r.out);
  CHECK(j["n"] == 6);
  CHECK(j["k"] == 3);
  CHECK(j["z"]["1"] == 1);
  CHECK(j["z"]["2"] == 1);
  CHECK(j["z"]["3"] == 1);

  const std::string counts = temp_path("counts.csv");
  write_file(counts, "cell,count\nA,1\nB,2\n");
  r = run_cli("profile --in " + counts + " --counts");
  REQUIRE(r.exit_code == 0);
  const json j2 = json::parse(r.out);
  CHECK(j2["n"] == 3);
  CHECK(j2["k"] == 2);

  // key-column selection over a CSV
  const std::string csv = temp_path("rows.csv");
  write_file(csv, "age,sex,zip\n30,F,1\n30,F,1\n31,M,2\n");
  r = run_cli("profile --in " + csv + " --key-cols 1,2,3 --skip-header");
  REQUIRE(r.exit_code == 0);
  const json j3 = json::parse(r.out);
  CHECK(j3["n"] == 3);
  CHECK(j3["k"] == 2);
}

TEST_CASE("cli: profile reads stdin with --in -") {
  const std::string cmd =
      std::string("printf 'a\\na\\nb\\n' | ") + TAU1_CLI_PATH + " profile --in - 2>/dev/null";
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  std::string out;
  std::array<char, 4096> buf{};
  std::size_t got = 0;
  while ((got = fread(buf.data(), 1, buf.size(), pipe)) > 0) out.append(buf.data(), got);
  REQUIRE(pclose(pipe) == 0);
  const json j = json::parse(out);
  CHECK(j["n"] == 3);
  CHECK(j["k"] == 2);
  CHECK(j["z"]["1"] == 1);
  CHECK(j["z"]["2"] == 1);
}

TEST_CASE("cli: estimate returns six reports for lambda = 9") {
  const std::string prof = temp_path("prof.json");
  // n = 245, K = 160: z1=100, z2=40, z3=15, z4=5
  write_file(prof, R"({"n":245,"k":160,"z":{"1":100,"2":40,"3":15,"4":5}})");
  const auto r = run_cli("estimate --profile " + prof + " --lambda 9 --nbar 1000000 --estimator all");
  REQUIRE(r.exit_code == 0);
  const json j = json::parse(r.out);
  REQUIRE(j.contains("config"));
  REQUIRE(j.contains("reports"));
  REQUIRE(j["reports"].size() == 6);
  for (const auto& rep : j["reports"]) {
    CHECK(rep.contains("value"));
    CHECK(rep.contains("clamped"));
    const double clamped = rep["clamped"].get<double>();
    CHECK(clamped >= 0.0);
    CHECK(clamped <= 100.0);
  }
  // unbiased replaces the smoothed pair below lambda = 1
  const auto r2 = run_cli("estimate --profile " + prof + " --lambda 0.5 --nbar 1000 --estimator all");
  REQUIRE(r2.exit_code == 0);
  const json j2 = json::parse(r2.out);
  CHECK(j2["reports"].size() == 5);
  CHECK(j2["reports"][0]["name"] == "unbiased");
}

TEST_CASE("cli: estimate json and csv carry identical numbers") {
  const std::string prof = temp_path("prof2.json");
  write_file(prof, R"({"n":245,"k":160,"z":{"1":100,"2":40,"3":15,"4":5}})");
  const std::string base = "estimate --profile " + prof + " --lambda 9 --nbar 1000000 --estimator poisson";
  const auto rj = run_cli(base);
  const auto rc = run_cli(base + " --format csv");
  REQUIRE(rj.exit_code == 0);
  REQUIRE(rc.exit_code == 0);
  const double jv = json::parse(rj.out)["reports"][0]["value"].get<double>();
  // csv: second line is the header, third the single report
  std::istringstream is(rc.out);
  std::string line, header, data;
  std::getline(is, line);  // # config
  std::getline(is, header);
  std::getline(is, data);
  CHECK(header.rfind("name,value", 0) == 0);
  const auto first_comma = data.find(',');
  const auto second_comma = data.find(',', first_comma + 1);
  const double cv = std::stod(data.substr(first_comma + 1, second_comma - first_comma - 1));
  CHECK(jv == cv);
}

TEST_CASE("cli: estimate honors smoothing overrides") {
  const std::string prof = temp_path("prof3.json");
  write_file(prof, R"({"n":245,"k":160,"z":{"1":100,"2":40,"3":15,"4":5}})");
  const auto r =
      run_cli("estimate --profile " + prof + " --lambda 9 --estimator poisson --beta 0.125");
  REQUIRE(r.exit_code == 0);
  const json j = json::parse(r.out);
  CHECK(j["reports"][0]["smoothing"]["beta"].get<double>() == 0.125);
  const auto r2 = run_cli("estimate --profile " + prof + " --lambda 9 --estimator binomial2 --x0 0");
  REQUIRE(r2.exit_code == 0);
  const json j2 = json::parse(r2.out);
  CHECK(j2["reports"][0]["value"].get<double>() == 100.0);  // degenerate truncation returns Z1
}

TEST_CASE("cli: exit codes") {
  // usage error: unknown flag
  CHECK(run_cli("estimate --no-such-flag").exit_code == 1);
  // usage error: missing required subcommand
  CHECK(run_cli("").exit_code == 1);
  // numeric/domain error: unbiased estimator at lambda >= 1
  const std::string prof = temp_path("prof4.json");
  write_file(prof, R"({"n":3,"k":2,"z":{"1":1,"2":1}})");
  CHECK(run_cli("estimate --profile " + prof + " --lambda 9 --estimator unbiased").exit_code == 2);
  // malformed profile
  const std::string bad = temp_path("bad.json");
  write_file(bad, "{\"n\": 5}");
  CHECK(run_cli("estimate --profile " + bad + " --lambda 9 --nbar 10").exit_code == 2);
}

TEST_CASE("cli: simulate golden determinism across runs and thread counts") {
  const auto a = run_cli("--seed 42 simulate --table 1 --scale 0.01 --iterations 8");
  const auto b = run_cli("--seed 42 simulate --table 1 --scale 0.01 --iterations 8");
  const auto c = run_cli("--seed 42 --threads 4 simulate --table 1 --scale 0.01 --iterations 8");
  REQUIRE(a.exit_code == 0);
  CHECK(a.out == b.out);
  CHECK(a.out == c.out);
  int rows = 0;
  std::istringstream is(a.out);
  std::string line;
  while (std::getline(is, line))
    if (!line.empty() && line[0] != '#') ++rows;
  CHECK(rows == 8);

  const auto d = run_cli("--seed 43 simulate --table 1 --scale 0.01 --iterations 8");
  CHECK(a.out != d.out);
}

TEST_CASE("cli: simulate json mirrors the csv numbers") {
  const auto csv = run_cli("--seed 11 simulate --table 2 --scale 0.005 --iterations 3");
  const auto js = run_cli("--seed 11 --format json simulate --table 2 --scale 0.005 --iterations 3");
  REQUIRE(csv.exit_code == 0);
  REQUIRE(js.exit_code == 0);
  const json j = json::parse(js.out);
  REQUIRE(j["columns"].size() == 7);
  // pull the true_tau1 mean of the first column out of the csv
  std::istringstream is(csv.out);
  std::string line;
  std::string true_row;
  while (std::getline(is, line))
    if (line.rfind("true_tau1,", 0) == 0) true_row = line;
  REQUIRE(!true_row.empty());
  const auto c1 = true_row.find(',');
  const auto c2 = true_row.find(',', c1 + 1);
  const double csv_mean = std::stod(true_row.substr(c1 + 1, c2 - c1 - 1));
  CHECK(csv_mean == j["columns"][0]["estimates"]["true_tau1"]["mean"].get<double>());
}

TEST_CASE("cli: bounds curve csv") {
  const auto r = run_cli("--format csv bounds --lambda-min 1 --lambda-max 20 --lambda-steps 19 --n 100000");
  REQUIRE(r.exit_code == 0);
  std::istringstream is(r.out);
  std::string line;
  std::getline(is, line);
  CHECK(line.rfind("# config:", 0) == 0);
  std::getline(is, line);
  CHECK(line == "kind,lambda,n,value");
  int rows = 0;
  bool saw_minimax = false, saw_nmse = false;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    ++rows;
    if (line.rfind("minimax_lower,", 0) == 0) saw_minimax = true;
    if (line.rfind("nmse_poisson,", 0) == 0) saw_nmse = true;
  }
  CHECK(rows > 50);
  CHECK(saw_minimax);
  CHECK(saw_nmse);
}

TEST_CASE("cli: polyapprox report") {
  const auto r = run_cli("polyapprox --n 100000 --lambda 9 --L 6");
  REQUIRE(r.exit_code == 0);
  const json j = json::parse(r.out);
  const auto& rep = j["report"];
  CHECK(rep["eq19_holds"].get<bool>());
  CHECK(rep["E_gamma"].get<double>() > 0.0);
  CHECK(rep["E_g"].get<double>() > 0.0);
  CHECK(rep["rescale_rel_err"].get<double>() < 1e-8);
  CHECK(rep["alternations"].get<int>() >= 8);
  // explicit parameter override
  const auto r2 = run_cli("polyapprox --xi 16 --B 8 --L 5");
  REQUIRE(r2.exit_code == 0);
  CHECK(json::parse(r2.out)["report"]["xi"].get<double>() == 16.0);
}
