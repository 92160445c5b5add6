#pragma once

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "retrograph/planner.hpp"

namespace retrograph {

struct CurveRow {
  int limit = 0;
  std::size_t solved = 0;
  double success_rate = 0.0;
};

struct SuccessCurve {
  std::size_t targets = 0;
  std::vector<CurveRow> rows;
  /// Iterations to first success, failures (or successes past the largest
  /// limit) counted at the largest limit.
  double mean_iterations_capped = 0.0;
  /// Iterations to first success over targets solved within the largest
  /// limit only; 0 when none is.
  double mean_iterations_solved = 0.0;
  /// Per run.
  double mean_molecule_nodes = 0.0;
  double mean_reaction_nodes = 0.0;
};

/// Fraction of targets whose first success came within each limit.
/// Throws std::invalid_argument unless limits are non-empty and ascending.
SuccessCurve success_curve(const std::vector<PlanResult>& results, const std::vector<int>& limits);

struct RedundancyPoint {
  std::string target;
  std::size_t expanded = 0;
  std::size_t unique = 0;
};

/// One point per single-target run: expansions and distinct molecules among
/// them. Multi-target runs are rejected with std::invalid_argument.
std::vector<RedundancyPoint> redundancy_points(const std::vector<PlanResult>& runs);

struct RedundancyStudy {
  std::vector<RedundancyPoint> points;
  std::size_t expanded_total = 0;
  std::size_t unique_total = 0;
  /// Least-squares fit unique = slope * expanded + intercept.
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
  /// Mean of unique / expanded over points with expanded > 0.
  double mean_ratio = 0.0;
};

/// Throws std::invalid_argument with fewer than 2 points or when every
/// point has the same expansion count.
RedundancyStudy redundancy_study(const std::vector<RedundancyPoint>& points);

struct ReuseHistogram {
  /// Intermediate key and the number of routes containing it, most frequent
  /// first, ties by key.
  std::vector<std::pair<std::string, std::size_t>> counts;
  double mean = 0.0;

  std::vector<std::pair<std::string, std::size_t>> top(std::size_t k) const;
};

/// Intermediates are route molecules that are neither the root nor a leaf;
/// each is counted once per route it appears in.
ReuseHistogram reuse_histogram(const std::vector<RouteTree>& routes);

std::string curve_csv(const SuccessCurve& c);
std::string redundancy_csv(const RedundancyStudy& s);
std::string reuse_csv(const ReuseHistogram& h);
nlohmann::json to_json(const SuccessCurve& c);
nlohmann::json to_json(const RedundancyStudy& s);
nlohmann::json to_json(const ReuseHistogram& h, std::size_t top_k = 20);

/// Routes of all successful targets in the given results.
std::vector<RouteTree> routes_of(const std::vector<PlanResult>& results);

/// Shortest round-trip decimal form of a double, for CSV output.
std::string format_double(double v);

}  // namespace retrograph
