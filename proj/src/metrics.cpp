#include "retrograph/metrics.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>
#include <set>
#include <stdexcept>

namespace retrograph {

using nlohmann::json;

std::string format_double(double v) {
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, p);
}

SuccessCurve success_curve(const std::vector<PlanResult>& results, const std::vector<int>& limits) {
  if (limits.empty()) throw std::invalid_argument("success_curve: no limits");
  if (!std::is_sorted(limits.begin(), limits.end())) throw std::invalid_argument("success_curve: limits not ascending");
  SuccessCurve c;
  const int max_limit = limits.back();
  std::vector<std::optional<int>> firsts;
  for (const auto& r : results) {
    for (const auto& t : r.targets) firsts.push_back(t.success ? t.first_success_iteration : std::nullopt);
    c.mean_molecule_nodes += static_cast<double>(r.molecule_nodes);
    c.mean_reaction_nodes += static_cast<double>(r.reaction_nodes);
  }
  if (!results.empty()) {
    c.mean_molecule_nodes /= static_cast<double>(results.size());
    c.mean_reaction_nodes /= static_cast<double>(results.size());
  }
  c.targets = firsts.size();
  for (int limit : limits) {
    CurveRow row;
    row.limit = limit;
    for (const auto& f : firsts) row.solved += f && *f <= limit;
    row.success_rate = c.targets ? static_cast<double>(row.solved) / static_cast<double>(c.targets) : 0.0;
    c.rows.push_back(row);
  }
  double capped = 0.0, solved = 0.0;
  std::size_t n_solved = 0;
  for (const auto& f : firsts) {
    if (f && *f <= max_limit) {
      capped += *f;
      solved += *f;
      ++n_solved;
    } else {
      capped += max_limit;
    }
  }
  c.mean_iterations_capped = c.targets ? capped / static_cast<double>(c.targets) : 0.0;
  c.mean_iterations_solved = n_solved ? solved / static_cast<double>(n_solved) : 0.0;
  return c;
}

std::vector<RedundancyPoint> redundancy_points(const std::vector<PlanResult>& runs) {
  std::vector<RedundancyPoint> out;
  for (const auto& r : runs) {
    if (r.targets.size() != 1) throw std::invalid_argument("redundancy_points: expected single-target runs");
    const auto keys = r.expanded();
    const std::set<std::string> uniq(keys.begin(), keys.end());
    out.push_back(RedundancyPoint{r.targets.front().target.key(), keys.size(), uniq.size()});
  }
  return out;
}

RedundancyStudy redundancy_study(const std::vector<RedundancyPoint>& points) {
  if (points.size() < 2) throw std::invalid_argument("redundancy_study: need at least 2 points for a slope");
  RedundancyStudy s;
  s.points = points;
  const double n = static_cast<double>(points.size());
  double mx = 0.0, my = 0.0;
  std::size_t ratio_n = 0;
  for (const auto& p : points) {
    s.expanded_total += p.expanded;
    s.unique_total += p.unique;
    mx += static_cast<double>(p.expanded);
    my += static_cast<double>(p.unique);
    if (p.expanded > 0) {
      s.mean_ratio += static_cast<double>(p.unique) / static_cast<double>(p.expanded);
      ++ratio_n;
    }
  }
  if (ratio_n) s.mean_ratio /= static_cast<double>(ratio_n);
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (const auto& p : points) {
    const double dx = static_cast<double>(p.expanded) - mx;
    const double dy = static_cast<double>(p.unique) - my;
    sxx += dx * dx;
    sxy += dx * dy;
    syy += dy * dy;
  }
  if (sxx == 0.0) throw std::invalid_argument("redundancy_study: all points have the same expansion count");
  s.slope = sxy / sxx;
  s.intercept = my - s.slope * mx;
  double ss_res = 0.0;
  for (const auto& p : points) {
    const double e = static_cast<double>(p.unique) - (s.slope * static_cast<double>(p.expanded) + s.intercept);
    ss_res += e * e;
  }
  s.r2 = syy == 0.0 ? 1.0 : 1.0 - ss_res / syy;
  return s;
}

std::vector<std::pair<std::string, std::size_t>> ReuseHistogram::top(std::size_t k) const {
  return {counts.begin(), counts.begin() + static_cast<std::ptrdiff_t>(std::min(k, counts.size()))};
}

ReuseHistogram reuse_histogram(const std::vector<RouteTree>& routes) {
  std::map<std::string, std::size_t> counts;
  for (const auto& r : routes) {
    std::set<std::string> inter;
    auto visit = [&](auto&& self, const RouteTree& t, bool root) -> void {
      if (t.is_leaf()) return;
      if (!root) inter.insert(t.molecule.key());
      for (const auto& c : t.children) self(self, c, false);
    };
    visit(visit, r, true);
    for (const auto& k : inter) ++counts[k];
  }
  ReuseHistogram h;
  h.counts.assign(counts.begin(), counts.end());
  std::stable_sort(h.counts.begin(), h.counts.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  if (!h.counts.empty()) {
    double total = 0.0;
    for (const auto& [_, c] : h.counts) total += static_cast<double>(c);
    h.mean = total / static_cast<double>(h.counts.size());
  }
  return h;
}

std::string curve_csv(const SuccessCurve& c) {
  std::string out = "limit,solved,targets,success_rate\n";
  for (const auto& r : c.rows) {
    out += std::to_string(r.limit) + "," + std::to_string(r.solved) + "," + std::to_string(c.targets) + "," +
           format_double(r.success_rate) + "\n";
  }
  return out;
}

std::string redundancy_csv(const RedundancyStudy& s) {
  std::string out = "target,expanded,unique\n";
  for (const auto& p : s.points) {
    out += p.target + "," + std::to_string(p.expanded) + "," + std::to_string(p.unique) + "\n";
  }
  return out;
}

std::string reuse_csv(const ReuseHistogram& h) {
  std::string out = "molecule,routes\n";
  for (const auto& [k, c] : h.counts) out += k + "," + std::to_string(c) + "\n";
  return out;
}

json to_json(const SuccessCurve& c) {
  json rows = json::array();
  for (const auto& r : c.rows) rows.push_back({{"limit", r.limit}, {"solved", r.solved}, {"success_rate", r.success_rate}});
  return json{{"targets", c.targets},
              {"curve", std::move(rows)},
              {"mean_iterations_capped", c.mean_iterations_capped},
              {"mean_iterations_solved", c.mean_iterations_solved},
              {"mean_molecule_nodes", c.mean_molecule_nodes},
              {"mean_reaction_nodes", c.mean_reaction_nodes}};
}

json to_json(const RedundancyStudy& s) {
  return json{{"points", s.points.size()},     {"expanded_total", s.expanded_total},
              {"unique_total", s.unique_total}, {"slope", s.slope},
              {"intercept", s.intercept},       {"r2", s.r2},
              {"mean_ratio", s.mean_ratio}};
}

json to_json(const ReuseHistogram& h, std::size_t top_k) {
  json top = json::array();
  for (const auto& [k, c] : h.top(top_k)) top.push_back({{"molecule", k}, {"routes", c}});
  return json{{"intermediates", h.counts.size()}, {"mean_occurrences", h.mean}, {"top", std::move(top)}};
}

std::vector<RouteTree> routes_of(const std::vector<PlanResult>& results) {
  std::vector<RouteTree> out;
  for (const auto& r : results) {
    for (const auto& t : r.targets) {
      if (t.route) out.push_back(*t.route);
    }
  }
  return out;
}

}  // namespace retrograph
