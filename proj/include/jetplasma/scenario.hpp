#pragma once

// Scenario documents: a single JSON object describing a space, a plasma
// state and an evaluation set.  See README.md for the schema.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "jetplasma/lagrange.hpp"
#include "jetplasma/models.hpp"
#include "jetplasma/multitime.hpp"
#include "jetplasma/riemann.hpp"

namespace jetplasma {

inline constexpr const char* kVersion = "0.1.0";

enum class Framework { Riemann, Lagrange, Multitime };

std::string to_string(Framework f);

struct Box {
  std::vector<double> lo;
  std::vector<double> hi;
};

/// Regular grid in T carrying either expressions x^i(t) or sampled values.
struct GridSpec {
  std::vector<double> origin;
  std::vector<double> spacing;
  std::vector<int> nodes;
  std::vector<std::string> sheet;  // n expressions in t1..tp; empty when sampled
  std::filesystem::path file;      // sampled CSV, resolved against the scenario directory
};

struct EvalSpec {
  std::vector<std::vector<double>> points;
  std::optional<Box> box;
  int count = 0;
  std::uint64_t seed = 0;
  std::optional<GridSpec> grid;
};

struct Scenario {
  Framework framework = Framework::Riemann;
  int n = 0;
  int p = 0;  // multitime only
  double c = 1.0;
  std::string sha256;  // of the source bytes
  std::vector<std::string> coordinates;
  std::optional<models::ModelDescriptor> model;
  std::string connection = "none";  // canonical | spray | inline | model | none

  riemann::Space riemann_space;
  riemann::FluidState riemann_state;
  riemann::ElectromagneticPair em;  // shared by every framework

  lagrange::Space lagrange_space;
  lagrange::FluidState lagrange_state;
  std::optional<lagrange::FinslerSpace> finsler;

  multitime::Space multitime_space;
  multitime::FluidState multitime_state;

  EvalSpec eval;

  // Full-matrix inputs that validate_at() checks numerically.
  std::vector<std::pair<std::string, TensorField>> symmetric_checks;
  std::vector<std::pair<std::string, TensorField>> antisymmetric_checks;

  int coordinate_count() const { return static_cast<int>(coordinates.size()); }
};

/// Parses and builds a scenario.  Throws ScenarioError (or ParseError for a
/// bad expression) on any schema violation.  `base_dir` resolves relative
/// file references.
Scenario parse_scenario(const std::string& text, const std::filesystem::path& base_dir = ".");
Scenario load_scenario(const std::filesystem::path& path);

/// Explicit points, or `count` uniform draws from the box with `seed`.
std::vector<std::vector<double>> evaluation_points(const Scenario& s, std::optional<int> count = std::nullopt,
                                                   std::optional<std::uint64_t> seed = std::nullopt);

/// Numeric checks that cannot be done while parsing: symmetry of full-matrix
/// metrics and antisymmetry of H and G at the given points.
void validate_at(const Scenario& s, const std::vector<std::vector<double>>& points);

/// Full residual report of the scenario's framework at one coordinate point.
ResidualReport scenario_residuals(const Scenario& s, std::span<const double> point);
std::vector<std::string> scenario_invariant_names(const Scenario& s);

/// Builds the stream sheet of a grid spec (sampled values) and, for
/// expression sheets, the exact jets at every node.
multitime::StreamSheet sample_sheet(const Scenario& s, const GridSpec& g);
std::vector<multitime::JetPoint> exact_sheet_jets(const Scenario& s, const GridSpec& g);
multitime::StreamSheet read_sheet_csv(const std::filesystem::path& path, int n, int p);

std::string sha256_hex(const std::string& bytes);

/// Shortest decimal text that reads back to the same double.
std::string format_double(double v);

}  // namespace jetplasma
