#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "json.hpp"
#include "jetplasma/cli.hpp"
#include "jetplasma/scenario.hpp"

namespace fs = std::filesystem;
using jetplasma::cli::run;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result cli(std::vector<std::string> args) {
  args.insert(args.begin(), "jetplasma");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string data(const std::string& name) { return std::string(JETPLASMA_SOURCE_DIR) + "/tests/data/" + name; }
std::string scenario(const std::string& name) { return std::string(JETPLASMA_SOURCE_DIR) + "/scenarios/" + name; }

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

fs::path temp_dir() {
  const fs::path d = fs::temp_directory_path() / "jetplasma_cli_tests";
  fs::create_directories(d);
  return d;
}

fs::path write_temp(const std::string& name, const std::string& text) {
  const fs::path p = temp_dir() / name;
  std::ofstream(p, std::ios::binary) << text;
  return p;
}

// Data rows of a CSV output as cells, skipping the comment line and header.
std::vector<std::vector<std::string>> rows(const std::string& csv, std::vector<std::string>* header = nullptr) {
  std::vector<std::vector<std::string>> out;
  std::istringstream in(csv);
  std::string line;
  bool seen_header = false;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> cells(1);
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
      const char ch = line[i];
      if (ch == '"') {
        if (quoted && i + 1 < line.size() && line[i + 1] == '"') {
          cells.back() += '"';
          ++i;
        } else {
          quoted = !quoted;
        }
      } else if (ch == ',' && !quoted) {
        cells.emplace_back();
      } else {
        cells.back() += ch;
      }
    }
    if (!seen_header) {
      seen_header = true;
      if (header) *header = cells;
      continue;
    }
    out.push_back(cells);
  }
  return out;
}

std::size_t column(const std::vector<std::string>& header, const std::string& name) {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) return i;
  }
  FAIL("missing column " << name);
  return 0;
}

}  // namespace

TEST_CASE("exit codes on the canned scenarios") {
  CHECK(cli({"--scenario", data("clean.json"), "verify"}).code == 0);
  const Result bad = cli({"--scenario", data("violating.json"), "verify"});
  CHECK(bad.code == 1);
  CHECK(nlohmann::json::parse(bad.out)["passed"] == false);
  const Result malformed = cli({"--scenario", data("malformed.json"), "verify"});
  CHECK(malformed.code == 2);
  CHECK(malformed.err.find("antisymmetric") != std::string::npos);
}

TEST_CASE("input errors exit with 2") {
  CHECK(cli({"verify"}).code == 2);
  CHECK(cli({"--scenario", data("clean.json")}).code == 2);
  CHECK(cli({"--scenario", data("no_such_file.json"), "verify"}).code == 2);
  CHECK(cli({"--scenario", data("clean.json"), "frobnicate"}).code == 2);
  CHECK(cli({"--scenario", data("clean.json"), "--tol", "-1", "verify"}).code == 2);
  const auto unknown = write_temp("unknown_key.json",
                                  R"({"framework": "riemann", "n": 2, "model": {"name": "flat"}, "pressure": "1",
                                      "density": "1", "velocity": ["1", "0"], "colour": "red"})");
  const Result r = cli({"--scenario", unknown.string(), "verify"});
  CHECK(r.code == 2);
  CHECK(r.err.find("colour") != std::string::npos);
  const auto parse = write_temp("parse_error.json",
                                R"({"framework": "riemann", "n": 2, "model": {"name": "flat"}, "pressure": "1 +",
                                    "density": "1", "velocity": ["1", "0"]})");
  CHECK(cli({"--scenario", parse.string(), "verify"}).code == 2);
  CHECK(cli({"--scenario", data("clean.json"), "streamsheet"}).code == 2);
  CHECK(cli({"--scenario", scenario("multitime_bsml.json"), "streamline", "--x0=0,0", "--v0=1,0"}).code == 2);
  CHECK(cli({"--scenario", data("clean.json"), "streamline", "--x0=0,0", "--v0=1,0,0"}).code == 2);
  CHECK(cli({"--scenario", data("clean.json"), "connection", "--at=1,2"}).code == 2);
}

TEST_CASE("verify report lists worst offenders and records the seed") {
  const Result r = cli({"--scenario", scenario("riemann_generic.json"), "--seed", "99", "--points", "7", "verify"});
  REQUIRE(r.code == 0);
  const auto j = nlohmann::json::parse(r.out);
  CHECK(j["seed"] == 99);
  CHECK(j["points"] == 7);
  CHECK(j["worst_offenders"].size() == 5);
  CHECK(j["scenario"].get<std::string>().size() == 64);
  CHECK(j["version"] == jetplasma::kVersion);
  // A tolerance below the rounding floor fails honestly.
  CHECK(cli({"--scenario", scenario("riemann_generic.json"), "--tol", "1e-30", "verify"}).code == 1);
}

TEST_CASE("bsml verify includes the degeneracy blocks") {
  const Result r = cli({"--scenario", scenario("multitime_bsml.json"), "--points", "5", "verify"});
  CHECK(r.code == 0);
  const auto j = nlohmann::json::parse(r.out);
  std::vector<std::string> names;
  for (const auto& e : j["invariants"]) names.push_back(e["name"]);
  for (const char* k : {"bsml_G_block", "bsml_C_block", "bsml_L_block"}) {
    CHECK(std::find(names.begin(), names.end(), k) != names.end());
  }
}

TEST_CASE("residuals are byte-identical across runs and carry the header line") {
  const fs::path a = temp_dir() / "res_a.csv", b = temp_dir() / "res_b.csv";
  for (const auto& p : {a, b}) {
    REQUIRE(cli({"--scenario", scenario("riemann_generic.json"), "--seed", "42", "--out", p.string(), "residuals"}).code == 0);
  }
  const std::string text = slurp(a);
  CHECK(text == slurp(b));
  const std::string sha = jetplasma::sha256_hex(slurp(scenario("riemann_generic.json")));
  CHECK(text.rfind("# scenario=" + sha + " version=0.1.0 seed=42\n", 0) == 0);
  CHECK(text.find('\r') == std::string::npos);
  std::vector<std::string> header;
  const auto data_rows = rows(text, &header);
  CHECK(data_rows.size() == 100);
  CHECK(header.front() == "point");
  CHECK(header.back() == "error");
  const std::size_t ci = column(header, "contraction_identity.max");
  for (const auto& row : data_rows) CHECK(std::abs(std::stod(row[ci])) < 1e-10);
  // A different seed moves the points.
  CHECK(cli({"--scenario", scenario("riemann_generic.json"), "--seed", "43", "residuals"}).out != text);
}

TEST_CASE("constant flat scenario has vanishing residuals") {
  const Result r = cli({"--scenario", data("clean.json"), "residuals"});
  REQUIRE(r.code == 0);
  std::vector<std::string> header;
  for (const auto& row : rows(r.out, &header)) {
    for (std::size_t c = 0; c < header.size(); ++c) {
      const auto& h = header[c];
      if (h.size() > 4 && h.ends_with(".max") && h.rfind("stress", 0) != 0 && h.rfind("energy", 0) != 0) {
        CHECK(std::stod(row[c]) < 1e-12);
      }
    }
  }
}

TEST_CASE("per-point failures become error rows") {
  // u = (x1, 0) cannot be normalized at x1 = 0.
  const auto p = write_temp("null_velocity.json",
                            R"({"framework": "riemann", "n": 2, "model": {"name": "flat"}, "pressure": "1",
                                "density": "1", "velocity": ["x1", "0"],
                                "eval": {"points": [[1, 0], [0, 0], [2, 1]]}})");
  const Result r = cli({"--scenario", p.string(), "residuals"});
  CHECK(r.code == 1);
  std::vector<std::string> header;
  const auto data_rows = rows(r.out, &header);
  REQUIRE(data_rows.size() == 3);
  CHECK(data_rows[0].back().empty());
  CHECK_FALSE(data_rows[1].back().empty());
  CHECK(data_rows[1].size() == header.size());
  CHECK(data_rows[2].back().empty());
  CHECK(cli({"--scenario", p.string(), "verify"}).code == 1);
}

TEST_CASE("connection dump") {
  SUBCASE("polar at r = 2") {
    const Result r = cli({"--scenario", scenario("polar_riemann.json"), "connection", "--at=2,0.7"});
    REQUIRE(r.code == 0);
    const auto j = nlohmann::json::parse(r.out);
    const auto& entries = j["blocks"]["gamma"]["entries"];
    REQUIRE(entries.size() == 8);
    CHECK(entries[0]["index"] == "1;1,1");
    for (const auto& e : entries) {
      const std::string idx = e["index"];
      const double v = e["value"];
      if (idx == "1;2,2") CHECK(v == doctest::Approx(-2.0).epsilon(1e-14));
      else if (idx == "2;1,2" || idx == "2;2,1") CHECK(v == doctest::Approx(0.5).epsilon(1e-14));
      else CHECK(v == 0.0);
    }
  }
  SUBCASE("flat is all zeros") {
    const auto j = nlohmann::json::parse(cli({"--scenario", data("clean.json"), "connection"}).out);
    for (const auto& e : j["blocks"]["gamma"]["entries"]) CHECK(e["value"] == 0.0);
  }
  SUBCASE("lagrange and multitime blocks") {
    const auto l = nlohmann::json::parse(cli({"--scenario", scenario("lagrange_generic.json"), "connection"}).out);
    CHECK(l["blocks"].contains("L"));
    CHECK(l["blocks"].contains("C"));
    CHECK(l["blocks"].contains("N"));
    const auto m = nlohmann::json::parse(cli({"--scenario", scenario("multitime_bsml.json"), "connection"}).out);
    for (const char* k : {"kappa", "G", "L", "C"}) CHECK(m["blocks"].contains(k));
    for (const char* k : {"G", "C"}) {
      for (const auto& e : m["blocks"][k]["entries"]) CHECK(std::abs(e["value"].get<double>()) < 1e-11);
    }
    CHECK(m["blocks"]["C"]["entries"][0]["index"] == "1,1;1,1");
  }
}

TEST_CASE("streamline") {
  SUBCASE("flat geodesic is a straight line") {
    const Result r = cli({"--scenario", data("clean.json"), "streamline", "--x0=0.1,-0.2,0.3", "--v0=1,0.5,-0.25"});
    REQUIRE(r.code == 0);
    std::vector<std::string> header;
    const auto data_rows = rows(r.out, &header);
    CHECK(header == std::vector<std::string>{"s", "x1", "x2", "x3", "xdot1", "xdot2", "xdot3", "speed"});
    REQUIRE(data_rows.size() == 1001);
    const auto& last = data_rows.back();
    CHECK(std::stod(last[0]) == doctest::Approx(1.0));
    CHECK(std::abs(std::stod(last[1]) - 1.1) < 1e-10);
    CHECK(std::abs(std::stod(last[2]) - 0.3) < 1e-10);
    CHECK(std::abs(std::stod(last[3]) - 0.05) < 1e-10);
  }
  SUBCASE("lagrange fills the vertical monitor") {
    const Result r = cli({"--scenario", scenario("lagrange_generic.json"), "streamline", "--x0=0,0", "--v0=1,0.2",
                          "--steps", "50", "--step", "0.01"});
    REQUIRE(r.code == 0);
    std::vector<std::string> header;
    const auto data_rows = rows(r.out, &header);
    const std::size_t c = column(header, "v_constraint");
    REQUIRE(data_rows.size() == 51);
    for (const auto& row : data_rows) CHECK_FALSE(row[c].empty());
  }
  SUBCASE("integration abort exits 1") {
    // Motion toward r = 0 in polar coordinates blows up.
    const Result r = cli({"--scenario", scenario("polar_riemann.json"), "streamline", "--x0=1,0", "--v0=-1,0",
                          "--step", "0.01", "--steps", "400"});
    CHECK(r.code == 1);
    CHECK(r.err.find("step") != std::string::npos);
  }
}

TEST_CASE("streamsheet") {
  SUBCASE("affine flat sheet has no horizontal residual") {
    const Result r = cli({"--scenario", scenario("sheet_flat_bsml.json"), "streamsheet"});
    REQUIRE(r.code == 0);
    std::vector<std::string> header;
    const auto data_rows = rows(r.out, &header);
    CHECK(data_rows.size() == 36);
    const std::size_t h = column(header, "h.max");
    for (const auto& row : data_rows) CHECK(std::stod(row[h]) < 1e-10);
  }
  SUBCASE("coefficient dump adds columns") {
    const Result r = cli({"--scenario", scenario("sheet_smooth.json"), "streamsheet", "--dump-coefficients"});
    REQUIRE(r.code == 0);
    std::vector<std::string> header;
    rows(r.out, &header);
    for (const char* k : {"eps0", "H1", "H2", "V1_1", "V2_2"}) CHECK(std::find(header.begin(), header.end(), k) != header.end());
  }
  SUBCASE("sampled grid file matches the expression sheet") {
    const Result expr = cli({"--scenario", scenario("sheet_smooth.json"), "streamsheet"});
    REQUIRE(expr.code == 0);
    std::vector<std::string> header;
    const auto er = rows(expr.out, &header);
    std::ostringstream sampled;
    sampled << "t1,t2,x1,x2\n";
    for (const auto& row : er) {
      sampled << row[column(header, "t1")] << ',' << row[column(header, "t2")] << ',' << row[column(header, "x1")] << ','
              << row[column(header, "x2")] << '\n';
    }
    const auto file = write_temp("sheet.csv", sampled.str());
    const Result grid = cli({"--scenario", scenario("sheet_smooth.json"), "streamsheet", "--sheet", file.string()});
    REQUIRE(grid.code == 0);
    const auto gr = rows(grid.out);
    REQUIRE(gr.size() == er.size());
    for (const char* k : {"h.max", "v.max"}) {
      const std::size_t c = column(header, k);
      for (std::size_t i = 0; i < er.size(); ++i) CHECK(std::stod(gr[i][c]) == doctest::Approx(std::stod(er[i][c])).epsilon(1e-8));
    }
  }
  SUBCASE("too small a grid is an input error") {
    const auto file = write_temp("tiny.csv", "t1,t2,x1,x2\n0,0,1,0\n0,1,1,1\n1,0,2,0\n1,1,2,1\n");
    CHECK(cli({"--scenario", scenario("sheet_smooth.json"), "streamsheet", "--sheet", file.string()}).code == 2);
  }
}
