#include "jetplasma/scenario.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <random>
#include <set>
#include <sstream>

#include "json.hpp"
#include "jetplasma/errors.hpp"

namespace jetplasma {

using nlohmann::json;

std::string to_string(Framework f) {
  switch (f) {
    case Framework::Riemann: return "riemann";
    case Framework::Lagrange: return "lagrange";
    case Framework::Multitime: return "multitime";
  }
  return "?";
}

std::string format_double(double v) {
  if (v == 0.0) v = 0.0;  // drop the sign of -0
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::string sha256_hex(const std::string& bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw Error("SHA-256 computation failed");
  }
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[digest[i] >> 4];
    out += hex[digest[i] & 15];
  }
  return out;
}

namespace {

[[noreturn]] void fail(const std::string& where, const std::string& what) {
  throw ScenarioError(where + ": " + what);
}

std::string expr_text(const json& j, const std::string& where) {
  if (j.is_string()) return j.get<std::string>();
  if (j.is_number()) return format_double(j.get<double>());
  fail(where, "expected an expression string or a number");
}

ScalarField scalar(const json& j, const std::vector<std::string>& coords, const std::string& where) {
  const std::string text = expr_text(j, where);
  try {
    return ScalarField::expression(text, coords);
  } catch (const Error& e) {
    fail(where, std::string(e.what()));
  }
}

std::vector<std::string> expr_list(const json& j, const std::string& where) {
  if (!j.is_array()) fail(where, "expected an array");
  std::vector<std::string> out;
  for (std::size_t i = 0; i < j.size(); ++i) out.push_back(expr_text(j[i], where + "[" + std::to_string(i) + "]"));
  return out;
}

std::vector<double> number_list(const json& j, const std::string& where) {
  if (!j.is_array()) fail(where, "expected an array of numbers");
  std::vector<double> out;
  for (const auto& v : j) {
    if (!v.is_number()) fail(where, "expected an array of numbers");
    out.push_back(v.get<double>());
  }
  return out;
}

// A symmetric or antisymmetric matrix given as upper-triangle rows
// (row i holds n - i entries, or n - 1 - i when strict), as a flat
// upper-triangle list, or as a full square matrix.  Full matrices are
// checked numerically by validate_at().
struct MatrixInput {
  TensorField field;
  bool full = false;
};

MatrixInput matrix(const json& j, int n, Slot slot, bool antisymmetric, const std::vector<std::string>& coords,
                   const std::string& where) {
  if (!j.is_array()) fail(where, "expected a matrix (array of rows)");
  const int skip = antisymmetric ? 1 : 0;
  const std::size_t tri = static_cast<std::size_t>(antisymmetric ? n * (n - 1) / 2 : n * (n + 1) / 2);
  std::vector<ScalarField> upper;
  auto push = [&](const json& e, const std::string& w) { upper.push_back(scalar(e, coords, w)); };
  const bool flat = std::all_of(j.begin(), j.end(), [](const json& e) { return !e.is_array(); });
  if (flat) {
    if (j.size() != tri) fail(where, "expected " + std::to_string(tri) + " upper-triangle entries, got " + std::to_string(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i) push(j[i], where + "[" + std::to_string(i) + "]");
  } else {
    bool square = j.size() == static_cast<std::size_t>(n);
    for (const auto& row : j) square = square && row.is_array() && row.size() == static_cast<std::size_t>(n);
    if (square && n > 1) {
      std::vector<ScalarField> all;
      for (int a = 0; a < n; ++a) {
        for (int b = 0; b < n; ++b) {
          all.push_back(scalar(j[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)], coords,
                               where + "[" + std::to_string(a) + "][" + std::to_string(b) + "]"));
        }
      }
      return {TensorField::components({n, n}, {slot, slot}, all), true};
    }
    for (int a = 0; a < n - skip; ++a) {
      const std::size_t want = static_cast<std::size_t>(n - a - skip);
      if (static_cast<std::size_t>(a) >= j.size() || !j[static_cast<std::size_t>(a)].is_array() ||
          j[static_cast<std::size_t>(a)].size() != want) {
        fail(where, "row " + std::to_string(a + 1) + " must hold " + std::to_string(want) + " entries");
      }
      for (std::size_t b = 0; b < want; ++b) {
        push(j[static_cast<std::size_t>(a)][b], where + "[" + std::to_string(a) + "][" + std::to_string(b) + "]");
      }
    }
    const std::size_t rows = static_cast<std::size_t>(n - skip);
    for (std::size_t extra = rows; extra < j.size(); ++extra) {
      if (!(j[extra].is_array() && j[extra].empty())) fail(where, "too many rows");
    }
  }
  if (antisymmetric) return {TensorField::antisymmetric(n, slot, upper), false};
  return {TensorField::symmetric(n, slot, upper), false};
}

void check_keys(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!allowed.count(it.key())) fail(where, "unknown key '" + it.key() + "'");
  }
}

int positive_int(const json& j, const std::string& where, int hi) {
  if (!j.is_number_integer()) fail(where, "expected an integer");
  const int v = j.get<int>();
  if (v < 1 || v > hi) fail(where, "must be in [1, " + std::to_string(hi) + "]");
  return v;
}

EvalSpec parse_eval(const json& j, int dims, int n, int p, Framework fw, const std::filesystem::path& base) {
  EvalSpec e;
  if (!j.is_object()) fail("eval", "expected an object");
  check_keys(j, {"points", "box", "count", "seed", "grid"}, "eval");
  if (j.contains("points")) {
    if (!j["points"].is_array()) fail("eval.points", "expected an array of points");
    for (std::size_t i = 0; i < j["points"].size(); ++i) {
      auto pt = number_list(j["points"][i], "eval.points[" + std::to_string(i) + "]");
      if (static_cast<int>(pt.size()) != dims) {
        fail("eval.points[" + std::to_string(i) + "]", "expected " + std::to_string(dims) + " coordinates");
      }
      e.points.push_back(std::move(pt));
    }
  }
  if (j.contains("box")) {
    const json& b = j["box"];
    if (!b.is_array() || static_cast<int>(b.size()) != dims) {
      fail("eval.box", "expected one [lo, hi] pair per coordinate (" + std::to_string(dims) + ")");
    }
    Box box;
    for (std::size_t i = 0; i < b.size(); ++i) {
      auto pr = number_list(b[i], "eval.box[" + std::to_string(i) + "]");
      if (pr.size() != 2 || !(pr[0] <= pr[1])) fail("eval.box[" + std::to_string(i) + "]", "expected [lo, hi] with lo <= hi");
      box.lo.push_back(pr[0]);
      box.hi.push_back(pr[1]);
    }
    e.box = box;
    e.count = j.contains("count") ? positive_int(j["count"], "eval.count", 1000000) : 10;
  } else if (j.contains("count")) {
    fail("eval.count", "needs eval.box");
  }
  if (j.contains("seed")) {
    if (!j["seed"].is_number_unsigned()) fail("eval.seed", "expected a non-negative integer");
    e.seed = j["seed"].get<std::uint64_t>();
  }
  if (j.contains("grid")) {
    if (fw != Framework::Multitime) fail("eval.grid", "grids need the multitime framework");
    const json& g = j["grid"];
    if (!g.is_object()) fail("eval.grid", "expected an object");
    check_keys(g, {"origin", "spacing", "nodes", "sheet", "file"}, "eval.grid");
    GridSpec gs;
    if (g.contains("file")) {
      if (!g["file"].is_string()) fail("eval.grid.file", "expected a path");
      gs.file = base / g["file"].get<std::string>();
      if (g.contains("sheet") || g.contains("origin") || g.contains("spacing") || g.contains("nodes")) {
        fail("eval.grid", "a sampled grid file carries its own nodes; drop origin, spacing, nodes and sheet");
      }
    } else {
      for (const char* k : {"origin", "spacing", "nodes", "sheet"}) {
        if (!g.contains(k)) fail("eval.grid", std::string("missing '") + k + "'");
      }
      gs.origin = number_list(g["origin"], "eval.grid.origin");
      gs.spacing = number_list(g["spacing"], "eval.grid.spacing");
      for (const auto& v : g["nodes"]) {
        if (!v.is_number_integer()) fail("eval.grid.nodes", "expected integers");
        gs.nodes.push_back(v.get<int>());
      }
      gs.sheet = expr_list(g["sheet"], "eval.grid.sheet");
      if (static_cast<int>(gs.origin.size()) != p || static_cast<int>(gs.spacing.size()) != p ||
          static_cast<int>(gs.nodes.size()) != p) {
        fail("eval.grid", "origin, spacing and nodes need p = " + std::to_string(p) + " entries");
      }
      if (static_cast<int>(gs.sheet.size()) != n) fail("eval.grid.sheet", "expected n = " + std::to_string(n) + " expressions");
      for (int k : gs.nodes) {
        if (k < 3) fail("eval.grid.nodes", "at least 3 nodes per axis");
      }
      for (double h : gs.spacing) {
        if (!(h > 0)) fail("eval.grid.spacing", "spacing must be positive");
      }
    }
    e.grid = gs;
  }
  return e;
}

}  // namespace

Scenario parse_scenario(const std::string& text, const std::filesystem::path& base_dir) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ScenarioError(std::string("scenario is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ScenarioError("scenario must be a JSON object");
  check_keys(j, {"framework", "n", "p", "c", "model", "metric", "h_metric", "connection", "pressure", "density",
                 "velocity", "em", "eval"},
             "scenario");

  Scenario s;
  s.sha256 = sha256_hex(text);
  if (!j.contains("framework") || !j["framework"].is_string()) fail("framework", "required: riemann, lagrange or multitime");
  const std::string fw = j["framework"].get<std::string>();
  if (fw == "riemann") s.framework = Framework::Riemann;
  else if (fw == "lagrange") s.framework = Framework::Lagrange;
  else if (fw == "multitime") s.framework = Framework::Multitime;
  else fail("framework", "unknown framework '" + fw + "'");

  if (!j.contains("n")) fail("n", "required");
  s.n = positive_int(j["n"], "n", 4);
  const int n = s.n;
  if (s.framework == Framework::Multitime) {
    if (!j.contains("p")) fail("p", "required for multitime");
    s.p = positive_int(j["p"], "p", 2);
    if (n * s.p > kMaxExtent * kMaxExtent) fail("p", "too large");
  } else if (j.contains("p")) {
    fail("p", "only the multitime framework has p");
  }
  const int p = s.p;
  if (j.contains("c")) {
    if (!j["c"].is_number() || !(j["c"].get<double>() > 0)) fail("c", "must be a positive number");
    s.c = j["c"].get<double>();
  }
  switch (s.framework) {
    case Framework::Riemann: s.coordinates = riemann_coordinates(n); break;
    case Framework::Lagrange: s.coordinates = lagrange_coordinates(n); break;
    case Framework::Multitime: s.coordinates = multitime_coordinates(n, p); break;
  }
  const auto& coords = s.coordinates;

  auto metric_from = [&](const json& m, int dim, Slot slot, const std::string& where) {
    MatrixInput in = matrix(m, dim, slot, false, coords, where);
    if (in.full) s.symmetric_checks.emplace_back(where, in.field);
    return MetricField{in.field, {}};
  };

  // Spatial metric, either inline or from a model.
  if (j.contains("model") == j.contains("metric")) fail("scenario", "give exactly one of 'model' and 'metric'");
  MetricField g;
  std::optional<std::string> finsler_F;
  if (j.contains("model")) {
    const json& m = j["model"];
    if (!m.is_object() || !m.contains("name") || !m["name"].is_string()) fail("model", "expected {\"name\": ..., \"params\": {...}}");
    check_keys(m, {"name", "params"}, "model");
    models::ModelDescriptor d;
    d.name = m["name"].get<std::string>();
    if (m.contains("params")) {
      if (!m["params"].is_object()) fail("model.params", "expected an object");
      for (auto it = m["params"].begin(); it != m["params"].end(); ++it) {
        const std::string w = "model.params." + it.key();
        if (it.value().is_array()) {
          // phi may come as upper-triangle rows; flatten them.
          std::vector<std::string> flat;
          for (std::size_t i = 0; i < it.value().size(); ++i) {
            const json& e = it.value()[i];
            if (e.is_array()) {
              for (const auto& s2 : expr_list(e, w)) flat.push_back(s2);
            } else {
              flat.push_back(expr_text(e, w));
            }
          }
          d.params[it.key()] = flat;
        } else {
          d.params[it.key()] = {expr_text(it.value(), w)};
        }
      }
    }
    s.model = d;
  } else {
    const json& m = j["metric"];
    if (m.is_object()) {
      check_keys(m, {"finsler"}, "metric");
      if (s.framework != Framework::Lagrange || !m.contains("finsler")) {
        fail("metric", "an object metric must be {\"finsler\": F} in the lagrange framework");
      }
      finsler_F = expr_text(m["finsler"], "metric.finsler");
    } else {
      g = metric_from(m, n, kLatinDown, "metric");
    }
  }

  MetricField h = MetricField::identity(std::max(p, 1), kGreekDown);
  if (j.contains("h_metric")) {
    if (s.framework != Framework::Multitime) fail("h_metric", "only the multitime framework has a temporal metric");
    h = metric_from(j["h_metric"], p, kGreekDown, "h_metric");
  }

  // Plasma state.
  for (const char* k : {"pressure", "density"}) {
    if (!j.contains(k)) fail(k, "required");
  }
  const ScalarField pressure = scalar(j["pressure"], coords, "pressure");
  const ScalarField density = scalar(j["density"], coords, "density");

  s.em = riemann::ElectromagneticPair::zero(n);
  if (j.contains("em")) {
    const json& e = j["em"];
    if (!e.is_object()) fail("em", "expected {\"H\": matrix, \"G\": matrix | \"self-dual\"}");
    check_keys(e, {"H", "G"}, "em");
    if (!e.contains("H") || !e.contains("G")) fail("em", "needs both H and G");
    MatrixInput H = matrix(e["H"], n, kLatinDown, true, coords, "em.H");
    if (H.full) s.antisymmetric_checks.emplace_back("em.H", H.field);
    TensorField G;
    if (e["G"].is_string() && e["G"].get<std::string>() == "self-dual") {
      const TensorField Hf = H.field;
      G = TensorField({n, n}, {kLatinDown, kLatinDown}, [Hf](const Jet& jet) {
        DiffTensor t = Hf(jet);
        for (auto& v : t.data()) v = -v;
        return t;
      });
    } else {
      MatrixInput Gi = matrix(e["G"], n, kLatinDown, true, coords, "em.G");
      if (Gi.full) s.antisymmetric_checks.emplace_back("em.G", Gi.field);
      G = Gi.field;
    }
    s.em = {H.field, G};
  }

  if (j.contains("velocity") && s.framework != Framework::Riemann) {
    fail("velocity", "only the riemann framework takes a velocity field; elsewhere the fiber coordinates are the velocity");
  }
  if (j.contains("connection") && s.framework == Framework::Riemann) fail("connection", "the riemann framework has no nonlinear connection");

  try {
    switch (s.framework) {
      case Framework::Riemann: {
        if (s.model) g = models::build_base_metric(*s.model, n, coords);
        s.riemann_space = {n, g};
        TensorField v;
        if (j.contains("velocity")) {
          const auto list = expr_list(j["velocity"], "velocity");
          if (static_cast<int>(list.size()) != n) fail("velocity", "expected n = " + std::to_string(n) + " expressions");
          std::vector<ScalarField> comps;
          for (const auto& e : list) comps.push_back(scalar(e, coords, "velocity"));
          v = TensorField::components({n}, {kLatinUp}, comps);
        }
        s.riemann_state = {pressure, density, s.c, v};
        break;
      }
      case Framework::Lagrange: {
        if (s.model) g = models::build_base_metric(*s.model, n, coords);
        std::string conn = finsler_F ? "spray" : "canonical";
        TensorField N;
        if (j.contains("connection")) {
          const json& c = j["connection"];
          if (c.is_string()) {
            conn = c.get<std::string>();
            if (conn != "canonical" && conn != "spray") fail("connection", "expected \"canonical\", \"spray\" or {\"N\": matrix}");
            if (conn == "spray" && !finsler_F) fail("connection", "\"spray\" needs a Finsler metric {\"finsler\": F}");
          } else if (c.is_object()) {
            check_keys(c, {"N"}, "connection");
            if (!c.contains("N") || !c["N"].is_array() || c["N"].size() != static_cast<std::size_t>(n)) {
              fail("connection.N", "expected an n x n matrix N^i_j");
            }
            std::vector<ScalarField> comps;
            for (int a = 0; a < n; ++a) {
              const auto row = expr_list(c["N"][static_cast<std::size_t>(a)], "connection.N");
              if (static_cast<int>(row.size()) != n) fail("connection.N", "expected an n x n matrix N^i_j");
              for (const auto& e : row) comps.push_back(scalar(e, coords, "connection.N"));
            }
            N = TensorField::components({n, n}, {kLatinUp, kLatinDown}, comps);
            conn = "inline";
          } else {
            fail("connection", "expected \"canonical\", \"spray\" or {\"N\": matrix}");
          }
        }
        if (finsler_F) {
          s.finsler = lagrange::finsler_space_from_F(scalar(*finsler_F, coords, "metric.finsler"), n);
          g = s.finsler->space.g;
          if (conn == "spray") N = s.finsler->space.N;
        }
        if (conn == "canonical") N = lagrange::canonical_connection(g, n);
        s.connection = conn;
        s.lagrange_space = {n, g, N};
        s.lagrange_state = {pressure, density, s.c, s.em};
        break;
      }
      case Framework::Multitime: {
        if (s.model) {
          if (j.contains("connection")) fail("connection", "a model fixes its own nonlinear connection");
          s.multitime_space = models::build_model(*s.model, h, n, p);
          s.connection = "model";
        } else {
          TensorField N;
          std::string conn = "canonical";
          if (j.contains("connection")) {
            const json& c = j["connection"];
            if (c.is_string()) {
              if (c.get<std::string>() != "canonical") fail("connection", "expected \"canonical\" or {\"N\": [i][a][j]}");
            } else if (c.is_object()) {
              check_keys(c, {"N"}, "connection");
              const json& Nj = c.contains("N") ? c["N"] : json();
              std::vector<ScalarField> comps;
              if (!Nj.is_array() || Nj.size() != static_cast<std::size_t>(n)) fail("connection.N", "expected N[i][a][j] with shape (n, p, n)");
              for (const auto& row : Nj) {
                if (!row.is_array() || row.size() != static_cast<std::size_t>(p)) fail("connection.N", "expected N[i][a][j] with shape (n, p, n)");
                for (const auto& inner : row) {
                  const auto list = expr_list(inner, "connection.N");
                  if (static_cast<int>(list.size()) != n) fail("connection.N", "expected N[i][a][j] with shape (n, p, n)");
                  for (const auto& e : list) comps.push_back(scalar(e, coords, "connection.N"));
                }
              }
              N = TensorField::components({n, p, n}, {kLatinUp, kGreekDown, kLatinDown}, comps);
              conn = "inline";
            } else {
              fail("connection", "expected \"canonical\" or {\"N\": [i][a][j]}");
            }
          }
          if (conn == "canonical") N = models::canonical_connection(h, g, n, p).N;
          s.connection = conn;
          s.multitime_space = {p, n, h, g, N};
        }
        s.multitime_state = {pressure, density, s.c, s.em};
        break;
      }
    }
  } catch (const ScenarioError&) {
    throw;
  } catch (const Error& e) {
    throw ScenarioError(std::string("model: ") + e.what());
  }

  const int dims = static_cast<int>(coords.size());
  if (j.contains("eval")) s.eval = parse_eval(j["eval"], dims, n, p, s.framework, base_dir);

  return s;
}

Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ScenarioError("cannot read scenario file '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_scenario(buf.str(), path.parent_path());
}

std::vector<std::vector<double>> evaluation_points(const Scenario& s, std::optional<int> count,
                                                   std::optional<std::uint64_t> seed) {
  std::vector<std::vector<double>> out = s.eval.points;
  if (s.eval.box) {
    const int k = count.value_or(s.eval.count);
    if (k < 1) throw ScenarioError("--points must be positive");
    std::mt19937_64 rng(seed.value_or(s.eval.seed));
    const Box& b = *s.eval.box;
    for (int i = 0; i < k; ++i) {
      std::vector<double> pt(b.lo.size());
      for (std::size_t c = 0; c < pt.size(); ++c) {
        std::uniform_real_distribution<double> d(b.lo[c], b.hi[c]);
        pt[c] = b.lo[c] == b.hi[c] ? b.lo[c] : d(rng);
      }
      out.push_back(std::move(pt));
    }
  }
  if (out.empty()) throw ScenarioError("eval: no evaluation points (give eval.points or eval.box)");
  return out;
}

void validate_at(const Scenario& s, const std::vector<std::vector<double>>& points) {
  auto where = [](const std::vector<double>& pt) {
    std::string r = "(";
    for (std::size_t i = 0; i < pt.size(); ++i) r += (i ? ", " : "") + format_double(pt[i]);
    return r + ")";
  };
  for (const auto& pt : points) {
    for (const auto& [name, field] : s.symmetric_checks) {
      const RealTensor v = field.value(pt);
      const int n = v.extent(0);
      for (int a = 0; a < n; ++a) {
        for (int b = a + 1; b < n; ++b) {
          if (std::abs(v(a, b) - v(b, a)) > 1e-12 * std::max({1.0, std::abs(v(a, b)), std::abs(v(b, a))})) {
            throw ScenarioError(name + " is not symmetric at " + where(pt));
          }
        }
      }
    }
    for (const auto& [name, field] : s.antisymmetric_checks) {
      const RealTensor v = field.value(pt);
      const int n = v.extent(0);
      for (int a = 0; a < n; ++a) {
        for (int b = a; b < n; ++b) {
          if (std::abs(v(a, b) + v(b, a)) > 1e-12 * std::max({1.0, std::abs(v(a, b)), std::abs(v(b, a))})) {
            throw ScenarioError(name + " is not antisymmetric at " + where(pt));
          }
        }
      }
    }
  }
}

namespace {

bool bsml_like(const Scenario& s) {
  if (!s.model) return false;
  const auto& n = s.model->name;
  return n == "bsml" || n == "flat" || n == "polar" || n == "conformal";
}

multitime::JetPoint jet_point(const Scenario& s, std::span<const double> pt) {
  const auto p = static_cast<std::size_t>(s.p), n = static_cast<std::size_t>(s.n);
  return {{pt.begin(), pt.begin() + static_cast<long>(p)},
          {pt.begin() + static_cast<long>(p), pt.begin() + static_cast<long>(p + n)},
          {pt.begin() + static_cast<long>(p + n), pt.end()}};
}

}  // namespace

ResidualReport scenario_residuals(const Scenario& s, std::span<const double> point) {
  if (static_cast<int>(point.size()) != s.coordinate_count()) {
    throw ScenarioError("point needs " + std::to_string(s.coordinate_count()) + " coordinates");
  }
  const auto n = static_cast<std::size_t>(s.n);
  switch (s.framework) {
    case Framework::Riemann:
      if (!s.riemann_state.velocity) throw ScenarioError("velocity: required for residuals in the riemann framework");
      return riemann::residuals(s.riemann_state, s.riemann_space, s.em, point);
    case Framework::Lagrange:
      return lagrange::residuals(s.lagrange_state, s.lagrange_space,
                                 {{point.begin(), point.begin() + static_cast<long>(n)}, {point.begin() + static_cast<long>(n), point.end()}});
    case Framework::Multitime: {
      const auto jp = jet_point(s, point);
      ResidualReport r = multitime::residuals(s.multitime_state, s.multitime_space, jp);
      if (bsml_like(s)) {
        const auto d = models::bsml_degeneracy(s.multitime_space, jp);
        r.add("bsml_G_block", d.G);
        r.add("bsml_C_block", d.C);
        r.add("bsml_L_block", d.L);
      }
      return r;
    }
  }
  throw Error("unknown framework");
}

std::vector<std::string> scenario_invariant_names(const Scenario& s) {
  switch (s.framework) {
    case Framework::Riemann: return riemann::invariant_names();
    case Framework::Lagrange: return lagrange::invariant_names();
    case Framework::Multitime: {
      auto names = multitime::invariant_names();
      if (bsml_like(s)) {
        for (const char* k : {"bsml_G_block", "bsml_C_block", "bsml_L_block"}) names.emplace_back(k);
      }
      return names;
    }
  }
  return {};
}

namespace {

std::vector<std::string> time_names(int p) {
  std::vector<std::string> t;
  for (int a = 1; a <= p; ++a) t.push_back("t" + std::to_string(a));
  return t;
}

std::vector<ScalarField> sheet_fields(const Scenario& s, const GridSpec& g) {
  std::vector<ScalarField> f;
  for (std::size_t i = 0; i < g.sheet.size(); ++i) {
    try {
      f.push_back(ScalarField::expression(g.sheet[i], time_names(s.p)));
    } catch (const Error& e) {
      throw ScenarioError("eval.grid.sheet[" + std::to_string(i) + "]: " + e.what());
    }
  }
  return f;
}

}  // namespace

multitime::StreamSheet sample_sheet(const Scenario& s, const GridSpec& g) {
  if (!g.file.empty()) return read_sheet_csv(g.file, s.n, s.p);
  const auto fields = sheet_fields(s, g);
  multitime::StreamSheet sh{s.n, g.origin, g.spacing, g.nodes, {}};
  for (std::size_t node = 0; node < sh.node_count(); ++node) {
    const auto t = sh.time(node);
    std::vector<double> x;
    for (const auto& f : fields) x.push_back(f.value(t));
    sh.values.push_back(std::move(x));
  }
  return sh;
}

std::vector<multitime::JetPoint> exact_sheet_jets(const Scenario& s, const GridSpec& g) {
  if (g.sheet.empty()) throw ScenarioError("exact sheet jets need an expression sheet");
  const auto fields = sheet_fields(s, g);
  multitime::StreamSheet sh{s.n, g.origin, g.spacing, g.nodes, {}};
  std::vector<multitime::JetPoint> out;
  for (std::size_t node = 0; node < sh.node_count(); ++node) {
    const auto t = sh.time(node);
    const Jet jet = Jet::seed(t, 1);
    multitime::JetPoint jp{t, {}, std::vector<double>(static_cast<std::size_t>(s.n * s.p))};
    for (int i = 0; i < s.n; ++i) {
      const DiffScalar v = fields[static_cast<std::size_t>(i)](jet);
      jp.x.push_back(v.value());
      for (int a = 0; a < s.p; ++a) jp.xdot[static_cast<std::size_t>(i * s.p + a)] = v.d(a);
    }
    out.push_back(std::move(jp));
  }
  return out;
}

multitime::StreamSheet read_sheet_csv(const std::filesystem::path& path, int n, int p) {
  std::ifstream in(path);
  if (!in) throw ScenarioError("cannot read sheet file '" + path.string() + "'");
  const std::string where = "sheet file " + path.filename().string();
  std::vector<std::string> expect = time_names(p);
  for (int i = 1; i <= n; ++i) expect.push_back("x" + std::to_string(i));
  std::string line;
  bool header = false;
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> cells;
    std::stringstream ls(line);
    for (std::string c; std::getline(ls, c, ',');) cells.push_back(c);
    if (!header) {
      if (cells != expect) {
        std::string want;
        for (const auto& e : expect) want += (want.empty() ? "" : ",") + e;
        throw ScenarioError(where + ": header must be " + want);
      }
      header = true;
      continue;
    }
    if (cells.size() != expect.size()) throw ScenarioError(where + ": row " + std::to_string(rows.size() + 1) + " has the wrong width");
    std::vector<double> r;
    for (const auto& c : cells) {
      double v = 0.0;
      const auto res = std::from_chars(c.data(), c.data() + c.size(), v);
      if (res.ec != std::errc() || res.ptr != c.data() + c.size()) throw ScenarioError(where + ": bad number '" + c + "'");
      r.push_back(v);
    }
    rows.push_back(std::move(r));
  }
  if (!header) throw ScenarioError(where + ": missing header");
  multitime::StreamSheet sh{n, {}, {}, {}, {}};
  for (int a = 0; a < p; ++a) {
    std::set<double> ts;
    for (const auto& r : rows) ts.insert(r[static_cast<std::size_t>(a)]);
    if (ts.size() < 3) throw ScenarioError(where + ": axis t" + std::to_string(a + 1) + " needs at least 3 nodes");
    const double lo = *ts.begin(), hi = *ts.rbegin();
    sh.origin.push_back(lo);
    sh.nodes.push_back(static_cast<int>(ts.size()));
    sh.spacing.push_back((hi - lo) / static_cast<double>(ts.size() - 1));
  }
  if (rows.size() != sh.node_count()) throw ScenarioError(where + ": grid is not a full tensor product of its axes");
  sh.values.assign(rows.size(), {});
  for (const auto& r : rows) {
    std::vector<int> idx(static_cast<std::size_t>(p));
    for (std::size_t a = 0; a < idx.size(); ++a) {
      const double f = (r[a] - sh.origin[a]) / sh.spacing[a];
      idx[a] = static_cast<int>(std::lround(f));
      if (std::abs(f - idx[a]) > 1e-6) throw ScenarioError(where + ": nodes are not equally spaced");
    }
    auto& slot = sh.values[sh.ravel(idx)];
    if (!slot.empty()) throw ScenarioError(where + ": duplicate node");
    slot.assign(r.begin() + p, r.end());
  }
  return sh;
}

}  // namespace jetplasma
