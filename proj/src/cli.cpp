#include "jetplasma/cli.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "jetplasma/covariant.hpp"
#include "jetplasma/errors.hpp"
#include "jetplasma/scenario.hpp"

namespace jetplasma::cli {

namespace {

using nlohmann::ordered_json;

struct Options {
  std::string scenario;
  std::string out;
  double tol = 1e-9;
  std::optional<std::uint64_t> seed;
  std::optional<int> points;
  std::vector<double> at;
  std::vector<double> x0, v0;
  double step = 1e-3;
  int steps = 1000;
  std::string sheet;
  bool dump_coefficients = false;
};

class InputError : public Error {
 public:
  using Error::Error;
};

std::uint64_t used_seed(const Scenario& s, const Options& o) { return o.seed.value_or(s.eval.seed); }

std::string header_line(const Scenario& s, const Options& o) {
  return "# scenario=" + s.sha256 + " version=" + kVersion + " seed=" + std::to_string(used_seed(s, o)) + "\n";
}

// 1-based component suffix "[i][j]" in row-major order.
std::vector<std::string> component_labels(const RealTensor& t) {
  std::vector<std::string> out;
  std::vector<int> idx(static_cast<std::size_t>(t.rank()));
  for (std::size_t f = 0; f < t.size(); ++f) {
    t.unravel(f, idx);
    std::string s;
    for (int i : idx) s += "[" + std::to_string(i + 1) + "]";
    out.push_back(s);
  }
  return out;
}

// Index label with upper indices before ';' and lower after, 1-based.
std::string index_label(const RealTensor& t, std::span<const int> idx) {
  std::string up, down;
  for (int s = 0; s < t.rank(); ++s) {
    std::string& dst = t.slot(s).variance == Variance::Up ? up : down;
    if (!dst.empty()) dst += ",";
    dst += std::to_string(idx[static_cast<std::size_t>(s)] + 1);
  }
  return up + ";" + down;
}

ordered_json tensor_json(const RealTensor& t) {
  ordered_json entries = ordered_json::array();
  std::vector<int> idx(static_cast<std::size_t>(t.rank()));
  for (std::size_t f = 0; f < t.size(); ++f) {
    t.unravel(f, idx);
    entries.push_back({{"index", index_label(t, idx)}, {"value", t.data()[f]}});
  }
  std::string slots;
  for (const auto& s : t.slots()) slots += to_string(s) + " ";
  if (!slots.empty()) slots.pop_back();
  return {{"shape", t.extents()}, {"slots", slots}, {"entries", entries}};
}

std::string point_text(std::span<const double> pt) {
  std::string s = "(";
  for (std::size_t i = 0; i < pt.size(); ++i) s += (i ? ", " : "") + format_double(pt[i]);
  return s + ")";
}

void emit(const std::string& text, const Options& o, std::ostream& out) {
  if (o.out.empty()) {
    out << text;
    return;
  }
  std::ofstream f(o.out, std::ios::binary);
  if (!f) throw InputError("cannot write '" + o.out + "'");
  f << text;
}

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string r = "\"";
  for (char c : s) {
    if (c == '"') r += '"';
    r += c;
  }
  return r + "\"";
}

// verify ---------------------------------------------------------------------

int cmd_verify(const Scenario& s, const Options& o, std::ostream& out, std::ostream& err) {
  const auto points = evaluation_points(s, o.points, o.seed);
  validate_at(s, points);
  const auto names = scenario_invariant_names(s);
  std::vector<double> worst(names.size(), 0.0);
  std::vector<int> worst_at(names.size(), -1);
  ordered_json errors = ordered_json::array();
  for (std::size_t i = 0; i < points.size(); ++i) {
    try {
      const ResidualReport r = scenario_residuals(s, points[i]);
      for (std::size_t k = 0; k < names.size(); ++k) {
        double v = r.norm(names[k]);
        if (std::isnan(v)) v = INFINITY;
        if (worst_at[k] < 0 || v > worst[k]) {
          worst[k] = v;
          worst_at[k] = static_cast<int>(i);
        }
      }
    } catch (const ScenarioError&) {
      throw;
    } catch (const Error& e) {
      errors.push_back({{"point", i}, {"coordinates", points[i]}, {"message", e.what()}});
    }
  }
  ordered_json inv = ordered_json::array();
  std::vector<std::size_t> order;
  bool pass = errors.empty();
  for (std::size_t k = 0; k < names.size(); ++k) {
    const bool ok = worst[k] < o.tol;
    pass = pass && ok;
    ordered_json e{{"name", names[k]}, {"max", worst[k]}, {"pass", ok}};
    if (worst_at[k] >= 0) e["worst_point"] = worst_at[k];
    inv.push_back(e);
    order.push_back(k);
  }
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return worst[a] > worst[b]; });
  ordered_json offenders = ordered_json::array();
  for (std::size_t k = 0; k < std::min<std::size_t>(5, order.size()); ++k) {
    const std::size_t i = order[k];
    offenders.push_back({{"name", names[i]}, {"max", worst[i]}, {"worst_point", worst_at[i]}});
  }
  ordered_json report{{"scenario", s.sha256}, {"version", kVersion}, {"seed", used_seed(s, o)},
                      {"framework", to_string(s.framework)}, {"tolerance", o.tol}, {"points", points.size()},
                      {"passed", pass}, {"worst_offenders", offenders}, {"invariants", inv}, {"errors", errors}};
  emit(report.dump(2) + "\n", o, out);
  err << "verify: " << (pass ? "PASS" : "FAIL") << " (" << points.size() << " points, tolerance " << format_double(o.tol)
      << ", worst " << (order.empty() ? "none" : names[order[0]] + " = " + format_double(worst[order[0]])) << ")\n";
  return pass ? kSuccess : kFailure;
}

// connection -----------------------------------------------------------------

int cmd_connection(const Scenario& s, const Options& o, std::ostream& out, std::ostream&) {
  std::vector<double> pt = o.at;
  if (pt.empty()) pt = evaluation_points(s, 1, o.seed).front();
  if (static_cast<int>(pt.size()) != s.coordinate_count()) {
    throw InputError("--at needs " + std::to_string(s.coordinate_count()) + " coordinates");
  }
  validate_at(s, {pt});
  ordered_json blocks;
  const auto n = static_cast<std::size_t>(s.n);
  switch (s.framework) {
    case Framework::Riemann:
      blocks["gamma"] = tensor_json(riemann::christoffel(s.riemann_space, pt));
      break;
    case Framework::Lagrange: {
      const lagrange::TangentPoint tp{{pt.begin(), pt.begin() + static_cast<long>(n)}, {pt.begin() + static_cast<long>(n), pt.end()}};
      const auto c = lagrange::cartan_connection(s.lagrange_space, tp);
      if (s.lagrange_space.N) blocks["N"] = tensor_json(s.lagrange_space.N.value(tp.coordinates()));
      blocks["L"] = tensor_json(c.L);
      blocks["C"] = tensor_json(c.C);
      break;
    }
    case Framework::Multitime: {
      const auto p = static_cast<std::size_t>(s.p);
      const multitime::JetPoint jp{{pt.begin(), pt.begin() + static_cast<long>(p)},
                                   {pt.begin() + static_cast<long>(p), pt.begin() + static_cast<long>(p + n)},
                                   {pt.begin() + static_cast<long>(p + n), pt.end()}};
      const auto c = multitime::cartan_gamma(s.multitime_space, jp);
      if (s.multitime_space.N) blocks["N"] = tensor_json(s.multitime_space.N.value(pt));
      blocks["kappa"] = tensor_json(c.kappa);
      blocks["G"] = tensor_json(c.G);
      blocks["L"] = tensor_json(c.L);
      blocks["C"] = tensor_json(c.C);
      break;
    }
  }
  ordered_json doc{{"scenario", s.sha256}, {"version", kVersion}, {"framework", to_string(s.framework)},
                   {"coordinates", s.coordinates}, {"point", pt}, {"connection", s.connection}, {"blocks", blocks}};
  emit(doc.dump(2) + "\n", o, out);
  return kSuccess;
}

// residuals ------------------------------------------------------------------

int cmd_residuals(const Scenario& s, const Options& o, std::ostream& out, std::ostream& err) {
  const auto points = evaluation_points(s, o.points, o.seed);
  validate_at(s, points);
  std::vector<std::optional<ResidualReport>> reports;
  std::vector<std::string> errors;
  for (const auto& pt : points) {
    try {
      reports.emplace_back(scenario_residuals(s, pt));
      errors.emplace_back();
    } catch (const ScenarioError&) {
      throw;
    } catch (const Error& e) {
      reports.emplace_back();
      errors.emplace_back(e.what());
    }
  }
  // The column layout comes from the first successful point.
  const ResidualReport* layout = nullptr;
  for (const auto& r : reports) {
    if (r) {
      layout = &*r;
      break;
    }
  }
  std::ostringstream csv;
  csv << header_line(s, o) << "point";
  for (const auto& c : s.coordinates) csv << ',' << c;
  std::vector<std::string> names;
  if (layout) {
    for (const auto& e : layout->entries()) {
      names.push_back(e.name);
      for (const auto& l : component_labels(e.value)) csv << ',' << e.name << l;
      csv << ',' << e.name << ".max";
    }
  }
  csv << ",error\n";
  std::vector<double> summary(names.size(), 0.0);
  std::size_t failed = 0;
  for (std::size_t i = 0; i < points.size(); ++i) {
    csv << i;
    for (double v : points[i]) csv << ',' << format_double(v);
    if (reports[i]) {
      for (std::size_t k = 0; k < names.size(); ++k) {
        const RealTensor& t = reports[i]->at(names[k]);
        for (double v : t.data()) csv << ',' << format_double(v);
        const double m = reports[i]->norm(names[k]);
        summary[k] = std::max(summary[k], m);
        csv << ',' << format_double(m);
      }
      csv << ",\n";
    } else {
      ++failed;
      if (layout) {
        for (const auto& e : layout->entries()) {
          for (std::size_t c = 0; c <= e.value.size(); ++c) csv << ',';
        }
      }
      csv << ',' << csv_escape(errors[i]) << '\n';
    }
  }
  emit(csv.str(), o, out);
  std::ostream& log = o.out.empty() ? err : out;
  log << "residuals: " << points.size() << " points, " << failed << " failed\n";
  for (std::size_t k = 0; k < names.size(); ++k) log << "  max " << names[k] << " = " << format_double(summary[k]) << '\n';
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (!errors[i].empty()) err << "point " << i << " " << point_text(points[i]) << ": " << errors[i] << '\n';
  }
  return failed ? kFailure : kSuccess;
}

// streamline -----------------------------------------------------------------

int cmd_streamline(const Scenario& s, const Options& o, std::ostream& out, std::ostream& err) {
  if (s.framework == Framework::Multitime) throw InputError("streamline needs the riemann or lagrange framework");
  const auto n = static_cast<std::size_t>(s.n);
  if (o.x0.size() != n || o.v0.size() != n) throw InputError("--x0 and --v0 need n = " + std::to_string(n) + " values");
  if (!(o.step > 0) || o.steps < 1) throw InputError("--step must be positive and --steps at least 1");
  std::vector<riemann::TrajectoryRow> rows;
  try {
    if (s.framework == Framework::Riemann) {
      rows = riemann::integrate_stream_line(s.riemann_state, s.riemann_space, s.em, o.x0, o.v0, o.step, o.steps);
    } else {
      rows = lagrange::integrate_stream_line(s.lagrange_state, s.lagrange_space, o.x0, o.v0, o.step, o.steps);
    }
  } catch (const IntegrationError& e) {
    err << "streamline: " << e.what() << '\n';
    return kFailure;
  }
  std::ostringstream csv;
  csv << header_line(s, o) << 's';
  for (std::size_t i = 1; i <= n; ++i) csv << ",x" << i;
  for (std::size_t i = 1; i <= n; ++i) csv << ",xdot" << i;
  csv << ",speed";
  if (s.framework == Framework::Lagrange) csv << ",v_constraint";
  csv << '\n';
  for (const auto& r : rows) {
    csv << format_double(r.s);
    for (double v : r.x) csv << ',' << format_double(v);
    for (double v : r.xdot) csv << ',' << format_double(v);
    RealTensor g;
    if (s.framework == Framework::Riemann) {
      g = s.riemann_space.phi.g.value(r.x);
    } else {
      std::vector<double> c = r.x;
      c.insert(c.end(), r.xdot.begin(), r.xdot.end());
      g = s.lagrange_space.g.g.value(c);
    }
    double q = 0.0;
    for (std::size_t a = 0; a < n; ++a) {
      for (std::size_t b = 0; b < n; ++b) q += g(a, b) * r.xdot[a] * r.xdot[b];
    }
    csv << ',' << format_double(std::sqrt(std::abs(q)));
    if (s.framework == Framework::Lagrange) {
      csv << ',' << format_double(max_abs(lagrange::v_stream_constraint_residual(s.lagrange_state, s.lagrange_space, r.x, r.xdot)));
    }
    csv << '\n';
  }
  emit(csv.str(), o, out);
  return kSuccess;
}

// streamsheet ----------------------------------------------------------------

int cmd_streamsheet(const Scenario& s, const Options& o, std::ostream& out, std::ostream& err) {
  if (s.framework != Framework::Multitime) throw InputError("streamsheet needs the multitime framework");
  multitime::StreamSheet sheet;
  if (!o.sheet.empty()) {
    sheet = read_sheet_csv(o.sheet, s.n, s.p);
  } else {
    if (!s.eval.grid) throw ScenarioError("eval.grid: required by streamsheet (or pass --sheet)");
    sheet = sample_sheet(s, *s.eval.grid);
  }
  std::vector<multitime::JetPoint> jets;
  try {
    jets = multitime::prolong_sheet(sheet, s.multitime_space);
  } catch (const ShapeError& e) {
    throw InputError(e.what());
  }
  const int n = s.n, p = s.p;
  std::ostringstream csv;
  csv << header_line(s, o) << "node";
  for (int a = 1; a <= p; ++a) csv << ",t" << a;
  csv << ",interior";
  for (int i = 1; i <= n; ++i) csv << ",x" << i;
  for (int i = 1; i <= n; ++i) {
    for (int a = 1; a <= p; ++a) csv << ",x" << i << '_' << a;
  }
  for (int k = 1; k <= n; ++k) csv << ",h" << k;
  for (int k = 1; k <= n; ++k) {
    for (int a = 1; a <= p; ++a) csv << ",v" << k << '_' << a;
  }
  csv << ",h.max,v.max";
  if (o.dump_coefficients) {
    csv << ",eps0";
    for (int m = 1; m <= n; ++m) csv << ",H" << m;
    for (int m = 1; m <= n; ++m) {
      for (int a = 1; a <= p; ++a) csv << ",V" << m << '_' << a;
    }
  }
  csv << ",error\n";
  const int blank = n + n * p + 2 + (o.dump_coefficients ? 1 + n + n * p : 0);
  std::size_t failed = 0;
  double worst_h = 0.0, worst_v = 0.0;
  for (std::size_t node = 0; node < jets.size(); ++node) {
    const auto& jp = jets[node];
    csv << node;
    for (double t : jp.t) csv << ',' << format_double(t);
    csv << ',' << (sheet.interior(node) ? 1 : 0);
    for (double v : jp.x) csv << ',' << format_double(v);
    for (double v : jp.xdot) csv << ',' << format_double(v);
    try {
      const auto r = multitime::stream_sheet_residuals(s.multitime_state, s.multitime_space, jp);
      std::optional<multitime::SheetCoefficients> co;
      if (o.dump_coefficients) co = multitime::stream_sheet_coefficients(s.multitime_state, s.multitime_space, jp);
      for (double v : r.horizontal.data()) csv << ',' << format_double(v);
      for (double v : r.vertical.data()) csv << ',' << format_double(v);
      const double hm = max_abs(r.horizontal), vm = max_abs(r.vertical);
      worst_h = std::max(worst_h, hm);
      worst_v = std::max(worst_v, vm);
      csv << ',' << format_double(hm) << ',' << format_double(vm);
      if (co) {
        csv << ',' << format_double(co->eps0);
        for (double v : co->H.data()) csv << ',' << format_double(v);
        for (double v : co->V.data()) csv << ',' << format_double(v);
      }
      csv << ",\n";
    } catch (const ScenarioError&) {
      throw;
    } catch (const Error& e) {
      ++failed;
      for (int c = 0; c < blank; ++c) csv << ',';
      csv << ',' << csv_escape(e.what()) << '\n';
      err << "node " << node << ": " << e.what() << '\n';
    }
  }
  emit(csv.str(), o, out);
  (o.out.empty() ? err : out) << "streamsheet: " << jets.size() << " nodes, " << failed << " failed, max |h| = "
                              << format_double(worst_h) << ", max |v| = " << format_double(worst_v) << '\n';
  return failed ? kFailure : kSuccess;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Plasma conservation laws on Riemann, Lagrange and multi-time jet spaces", "jetplasma"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);
  app.fallthrough();
  Options o;
  std::uint64_t seed = 0;
  int points = 0;
  app.add_option("--scenario", o.scenario, "Scenario JSON file")->required();
  app.add_option("--out", o.out, "Output file (default: standard output)");
  app.add_option("--tol", o.tol, "Invariant tolerance for verify")->check(CLI::PositiveNumber);
  auto* seed_opt = app.add_option("--seed", seed, "Seed for random evaluation points");
  auto* points_opt = app.add_option("--points", points, "Number of random evaluation points")->check(CLI::PositiveNumber);

  auto* verify = app.add_subcommand("verify", "Check every invariant of the framework at the evaluation points");
  auto* connection = app.add_subcommand("connection", "Dump the connection coefficients at one point");
  connection->add_option("--at", o.at, "Coordinates of the point (comma separated)")->delimiter(',');
  auto* residuals = app.add_subcommand("residuals", "Evaluate every residual at the evaluation points (CSV)");
  auto* streamline = app.add_subcommand("streamline", "Integrate a stream line with RK4 (CSV)");
  streamline->add_option("--x0", o.x0, "Initial position (comma separated)")->delimiter(',')->required();
  streamline->add_option("--v0", o.v0, "Initial velocity (comma separated)")->delimiter(',')->required();
  streamline->add_option("--step", o.step, "Step size");
  streamline->add_option("--steps", o.steps, "Number of steps");
  auto* streamsheet = app.add_subcommand("streamsheet", "Stream-sheet residuals over a grid in T (CSV)");
  streamsheet->add_option("--sheet", o.sheet, "Sampled sheet CSV (t1..tp, x1..xn) replacing eval.grid");
  streamsheet->add_flag("--dump-coefficients", o.dump_coefficients, "Add eps0, H_m and V^(mu)_(m) columns");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kInputError;
  }
  if (*seed_opt) o.seed = seed;
  if (*points_opt) o.points = points;

  try {
    const Scenario s = load_scenario(o.scenario);
    if (*verify) return cmd_verify(s, o, out, err);
    if (*connection) return cmd_connection(s, o, out, err);
    if (*residuals) return cmd_residuals(s, o, out, err);
    if (*streamline) return cmd_streamline(s, o, out, err);
    if (*streamsheet) return cmd_streamsheet(s, o, out, err);
  } catch (const ScenarioError& e) {
    err << "scenario error: " << e.what() << '\n';
    return kInputError;
  } catch (const InputError& e) {
    err << "input error: " << e.what() << '\n';
    return kInputError;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kFailure;
  }
  return kInputError;
}

}  // namespace jetplasma::cli
