#include "pcbf/outputs.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <nlohmann/json.hpp>

namespace pcbf {

namespace {

using nlohmann::json;

json number(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

void write_value(std::ostream& os, double v) {
  if (std::isnan(v)) os << "nan";
  else os << v;
}

std::string fmt(double v) {
  std::ostringstream os;
  os << std::setprecision(6) << v;
  return os.str();
}

}  // namespace

std::vector<std::string> log_columns(int dof, int task_dim) {
  std::vector<std::string> cols{"t"};
  auto add = [&](const char* prefix, int count) {
    for (int i = 1; i <= count; ++i) cols.push_back(prefix + std::to_string(i));
  };
  add("q", dof);
  add("qd", dof);
  add("x", task_dim);
  add("xd", task_dim);
  add("tau", dof);
  add("fc", task_dim);
  add("fext", task_dim);
  for (const char* c : {"h_jl", "h_sca", "h_eca", "h_sa", "mi", "self_clearance", "obstacle_clearance", "storage",
                        "storage_rate", "power", "passive_feasible", "passivity_violation", "qp_status",
                        "qp_iterations", "fallback", "slack_max", "soft_uncovered", "tracking_residual", "active"})
    cols.emplace_back(c);
  return cols;
}

void write_log_csv(const RunLog& log, std::ostream& out) {
  const auto cols = log_columns(log.dof, log.task_dim);
  for (std::size_t i = 0; i < cols.size(); ++i) out << (i ? "," : "") << cols[i];
  out << '\n';
  out << std::setprecision(10);
  for (const auto& r : log.rows) {
    out << r.t;
    for (const Vec* v : {&r.q, &r.qdot, &r.x, &r.xdot, &r.tau, &r.force, &r.force_ext})
      for (Eigen::Index i = 0; i < v->size(); ++i) out << ',' << (*v)[i];
    for (double v : {r.h_jl, r.h_sca, r.h_eca, r.h_sa, r.manipulability, r.self_clearance, r.obstacle_clearance,
                     r.storage, r.storage_rate, r.power}) {
      out << ',';
      write_value(out, v);
    }
    out << ',' << (r.passive_feasible ? 1 : 0) << ',' << (r.passivity_violation ? 1 : 0) << ','
        << to_string(r.qp_status) << ',' << r.qp_iterations << ',' << (r.fallback ? 1 : 0) << ',' << r.slack_max << ','
        << r.soft_uncovered << ',' << r.tracking_residual << ',' << r.active << '\n';
  }
}

json summary_json(const RunLog& log) {
  const RunSummary& s = log.summary;
  json j;
  j["scenario"] = log.scenario;
  j["steps"] = s.steps;
  j["duration"] = s.duration;
  j["aborted"] = s.aborted;
  if (s.aborted) j["abort_reason"] = s.abort_reason;
  j["min_h"] = {{"jl", number(s.min_h_jl)}, {"sca", number(s.min_h_sca)}, {"eca", number(s.min_h_eca)},
                {"sa", number(s.min_h_sa)}};
  j["min_manipulability"] = number(s.min_manipulability);
  j["min_self_clearance"] = number(s.min_self_clearance);
  j["min_obstacle_clearance"] = number(s.min_obstacle_clearance);
  j["violations"] = {{"hard_steps", s.hard_violations},
                     {"soft_steps", s.soft_violations},
                     {"max_soft_uncovered", s.max_soft_uncovered}};
  j["qp"] = {{"fallback_steps", s.fallback_steps},
             {"infeasible_steps", s.infeasible_steps},
             {"max_iteration_steps", s.max_iteration_steps}};
  j["passivity"] = {{"feasible_steps", s.feasible_steps},
                    {"violations", s.passivity_violations},
                    {"satisfied_fraction", s.passivity_fraction},
                    {"max_tracking_ratio", s.max_tracking_ratio}};
  j["error"] = {{"final", number(s.final_error)}, {"min", number(s.min_error)}};
  j["ok"] = run_ok(log);
  return j;
}

json timing_json(const RunLog& log) {
  return {{"steps", log.summary.steps},
          {"qp_mean_seconds", log.summary.mean_solve_seconds},
          {"qp_max_seconds", log.summary.max_solve_seconds}};
}

std::string svg_plot(const std::string& title, const std::vector<double>& t, const std::vector<PlotPanel>& panels) {
  constexpr double width = 800.0, panel_h = 180.0, left = 70.0, right = 20.0, top = 36.0, gap = 40.0;
  const double height = top + static_cast<double>(panels.size()) * (panel_h + gap);
  const double t0 = t.empty() ? 0.0 : t.front();
  const double t1 = t.empty() ? 1.0 : std::max(t.back(), t0 + 1e-12);
  const double plot_w = width - left - right;
  const std::size_t stride = std::max<std::size_t>(1, t.size() / 2000);

  std::ostringstream os;
  os << std::setprecision(6);
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height << "\" viewBox=\"0 0 "
     << width << ' ' << height << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << width / 2 << "\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">" << title << "</text>\n";
  for (std::size_t p = 0; p < panels.size(); ++p) {
    const PlotPanel& panel = panels[p];
    const double y0 = top + static_cast<double>(p) * (panel_h + gap);
    double lo = INFINITY, hi = -INFINITY;
    for (const auto& s : panel.series)
      for (double v : s.values)
        if (std::isfinite(v)) {
          lo = std::min(lo, v);
          hi = std::max(hi, v);
        }
    if (panel.zero_line) {
      lo = std::min(lo, 0.0);
      hi = std::max(hi, 0.0);
    }
    if (!std::isfinite(lo)) {
      lo = 0.0;
      hi = 1.0;
    }
    if (hi - lo < 1e-12) {
      lo -= 0.5;
      hi += 0.5;
    }
    const double pad = 0.05 * (hi - lo);
    lo -= pad;
    hi += pad;
    auto px = [&](double tt) { return left + (tt - t0) / (t1 - t0) * plot_w; };
    auto py = [&](double v) { return y0 + panel_h - (v - lo) / (hi - lo) * panel_h; };

    os << "<rect x=\"" << left << "\" y=\"" << y0 << "\" width=\"" << plot_w << "\" height=\"" << panel_h
       << "\" fill=\"none\" stroke=\"black\"/>\n";
    os << "<text x=\"" << left - 6 << "\" y=\"" << y0 + 10 << "\" text-anchor=\"end\">" << fmt(hi) << "</text>\n";
    os << "<text x=\"" << left - 6 << "\" y=\"" << y0 + panel_h << "\" text-anchor=\"end\">" << fmt(lo) << "</text>\n";
    os << "<text x=\"14\" y=\"" << y0 + panel_h / 2 << "\" transform=\"rotate(-90 14 " << y0 + panel_h / 2
       << ")\" text-anchor=\"middle\">" << panel.ylabel << "</text>\n";
    os << "<text x=\"" << left << "\" y=\"" << y0 + panel_h + 14 << "\" text-anchor=\"middle\">" << fmt(t0)
       << "</text>\n";
    os << "<text x=\"" << left + plot_w << "\" y=\"" << y0 + panel_h + 14 << "\" text-anchor=\"middle\">" << fmt(t1)
       << " s</text>\n";
    if (panel.zero_line && lo < 0.0 && hi > 0.0)
      os << "<line x1=\"" << left << "\" x2=\"" << left + plot_w << "\" y1=\"" << py(0.0) << "\" y2=\"" << py(0.0)
         << "\" stroke=\"gray\" stroke-dasharray=\"4 3\"/>\n";
    for (std::size_t k = 0; k < panel.series.size(); ++k) {
      const PlotSeries& s = panel.series[k];
      os << "<polyline fill=\"none\" stroke=\"" << s.color << "\" stroke-width=\"1.2\" points=\"";
      bool first = true;
      for (std::size_t i = 0; i < s.values.size() && i < t.size(); i += stride) {
        if (!std::isfinite(s.values[i])) continue;
        os << (first ? "" : " ") << px(t[i]) << ',' << py(s.values[i]);
        first = false;
      }
      if (!s.values.empty() && s.values.size() == t.size() && (t.size() - 1) % stride != 0 &&
          std::isfinite(s.values.back()))
        os << ' ' << px(t.back()) << ',' << py(s.values.back());
      os << "\"/>\n";
      os << "<text x=\"" << left + 8 + 110.0 * static_cast<double>(k) << "\" y=\"" << y0 + 14 << "\" fill=\""
         << s.color << "\">" << s.name << "</text>\n";
    }
  }
  os << "</svg>\n";
  return os.str();
}

void emit_outputs(const RunLog& log, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  auto open = [&](const char* name) {
    std::ofstream os(dir / name);
    if (!os) throw std::runtime_error("cannot write " + (dir / name).string());
    return os;
  };
  {
    auto os = open("log.csv");
    write_log_csv(log, os);
  }
  {
    auto os = open("summary.json");
    os << summary_json(log).dump(2) << '\n';
  }
  {
    auto os = open("timing.json");
    os << timing_json(log).dump(2) << '\n';
  }

  std::vector<double> t;
  std::vector<double> jl, sca, eca, sa, mi, storage, rate, power;
  for (const auto& r : log.rows) {
    t.push_back(r.t);
    jl.push_back(r.h_jl);
    sca.push_back(r.h_sca);
    eca.push_back(r.h_eca);
    sa.push_back(r.h_sa);
    mi.push_back(r.manipulability);
    storage.push_back(r.storage);
    rate.push_back(r.storage_rate);
    power.push_back(r.power);
  }
  auto any_finite = [](const std::vector<double>& v) {
    return std::any_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
  };
  std::vector<PlotPanel> barrier_panels{{"h_JL [rad]", {{"h_JL", jl, "#1f77b4"}}, true}};
  if (any_finite(sca)) barrier_panels.push_back({"h_SCA [classifier]", {{"h_SCA", sca, "#d62728"}}, true});
  if (any_finite(eca)) barrier_panels.push_back({"h_ECA [m]", {{"h_ECA", eca, "#2ca02c"}}, true});
  barrier_panels.push_back({"h_SA", {{"h_SA", sa, "#9467bd"}}, true});
  {
    auto os = open("barriers.svg");
    os << svg_plot(log.scenario + ": barrier functions", t, barrier_panels);
  }
  {
    auto os = open("manipulability.svg");
    os << svg_plot(log.scenario + ": manipulability index", t, {{"MI", {{"MI", mi, "#9467bd"}}, false}});
  }
  {
    auto os = open("passivity.svg");
    os << svg_plot(log.scenario + ": storage and supplied power", t,
                   {{"S [J]", {{"S", storage, "#1f77b4"}}, false},
                    {"[W]", {{"dS/dt", rate, "#ff7f0e"}, {"F_ext . xdot", power, "#2ca02c"}}, true}});
  }
}

}  // namespace pcbf
