#include "mblab/experiments/report.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

#include "mblab/core/dataset_csv.hpp"

namespace mblab::experiments {
namespace fs = std::filesystem;

namespace {

constexpr double kWidth = 640.0;
constexpr double kHeight = 420.0;
constexpr double kLeft = 70.0;
constexpr double kRight = 150.0;
constexpr double kTop = 40.0;
constexpr double kBottom = 50.0;

const char* color_for(std::size_t i) {
  static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};
  return colors[i % 6];
}

std::string num(double v) {
  std::ostringstream s;
  s << std::setprecision(4) << v;
  return s.str();
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '<') out += "&lt;";
    else if (c == '>') out += "&gt;";
    else if (c == '&') out += "&amp;";
    else out += c;
  }
  return out;
}

class Svg {
 public:
  Svg() {
    s_ << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
       << "\" viewBox=\"0 0 " << kWidth << ' ' << kHeight << "\" font-family=\"sans-serif\" font-size=\"12\">\n"
       << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  }
  void line(double x1, double y1, double x2, double y2, const std::string& stroke, double w = 1.0,
            const std::string& dash = "") {
    s_ << "<line x1=\"" << num(x1) << "\" y1=\"" << num(y1) << "\" x2=\"" << num(x2) << "\" y2=\"" << num(y2)
       << "\" stroke=\"" << stroke << "\" stroke-width=\"" << w << '"' << dash_attr(dash) << "/>\n";
  }
  void polyline(const std::vector<std::pair<double, double>>& pts, const std::string& stroke, double w,
                const std::string& dash = "", const std::string& cls = "") {
    s_ << "<polyline fill=\"none\" stroke=\"" << stroke << "\" stroke-width=\"" << w << '"' << dash_attr(dash);
    if (!cls.empty()) s_ << " class=\"" << cls << '"';
    s_ << " points=\"";
    for (const auto& [x, y] : pts) s_ << num(x) << ',' << num(y) << ' ';
    s_ << "\"/>\n";
  }
  void polygon(const std::vector<std::pair<double, double>>& pts, const std::string& fill, double opacity) {
    s_ << "<polygon fill=\"" << fill << "\" fill-opacity=\"" << opacity << "\" stroke=\"none\" points=\"";
    for (const auto& [x, y] : pts) s_ << num(x) << ',' << num(y) << ' ';
    s_ << "\"/>\n";
  }
  void circle(double x, double y, double r, const std::string& fill, const std::string& cls = "") {
    s_ << "<circle cx=\"" << num(x) << "\" cy=\"" << num(y) << "\" r=\"" << r << "\" fill=\"" << fill << '"';
    if (!cls.empty()) s_ << " class=\"" << cls << '"';
    s_ << "/>\n";
  }
  void cross(double x, double y, double r, const std::string& stroke, const std::string& cls) {
    s_ << "<g class=\"" << cls << "\">";
    s_ << "<line x1=\"" << num(x - r) << "\" y1=\"" << num(y - r) << "\" x2=\"" << num(x + r) << "\" y2=\""
       << num(y + r) << "\" stroke=\"" << stroke << "\" stroke-width=\"2\"/>";
    s_ << "<line x1=\"" << num(x - r) << "\" y1=\"" << num(y + r) << "\" x2=\"" << num(x + r) << "\" y2=\""
       << num(y - r) << "\" stroke=\"" << stroke << "\" stroke-width=\"2\"/></g>\n";
  }
  void text(double x, double y, const std::string& t, const std::string& anchor = "start", int size = 12) {
    s_ << "<text x=\"" << num(x) << "\" y=\"" << num(y) << "\" text-anchor=\"" << anchor << "\" font-size=\"" << size
       << "\">" << escape(t) << "</text>\n";
  }
  void save(const fs::path& path) {
    std::ofstream out(path);
    out << s_.str() << "</svg>\n";
    if (!out) throw std::runtime_error("cannot write " + path.string());
  }

 private:
  static std::string dash_attr(const std::string& d) { return d.empty() ? "" : " stroke-dasharray=\"" + d + "\""; }
  std::ostringstream s_;
};

struct Axis {
  double lo, hi;
  bool log;
  double px_lo, px_hi;
  double map(double v) const {
    const double a = log ? std::log(v) : v;
    const double l = log ? std::log(lo) : lo;
    const double h = log ? std::log(hi) : hi;
    if (h == l) return 0.5 * (px_lo + px_hi);
    return px_lo + (a - l) / (h - l) * (px_hi - px_lo);
  }
};

Axis padded(double lo, double hi, double px_lo, double px_hi) {
  if (lo == hi) {
    const double d = lo == 0.0 ? 1.0 : 0.1 * std::abs(lo);
    return {lo - d, hi + d, false, px_lo, px_hi};
  }
  const double pad = 0.05 * (hi - lo);
  return {lo - pad, hi + pad, false, px_lo, px_hi};
}

void frame(Svg& svg, const Axis& x, const Axis& y, const std::string& title, const std::string& xl,
           const std::string& yl, const std::vector<double>& xticks) {
  const double x0 = kLeft, x1 = kWidth - kRight, y0 = kHeight - kBottom, y1 = kTop;
  svg.line(x0, y0, x1, y0, "black");
  svg.line(x0, y0, x0, y1, "black");
  svg.text(0.5 * (x0 + x1), 22, title, "middle", 14);
  svg.text(0.5 * (x0 + x1), kHeight - 12, xl, "middle");
  svg.text(16, 0.5 * (y0 + y1), yl, "middle");
  for (double t : xticks) {
    const double px = x.map(t);
    svg.line(px, y0, px, y0 + 5, "black");
    svg.text(px, y0 + 18, num(t), "middle");
  }
  for (int i = 0; i <= 4; ++i) {
    const double v = y.lo + (y.hi - y.lo) * i / 4.0;
    const double py = y.map(v);
    svg.line(x0 - 5, py, x0, py, "black");
    svg.line(x0, py, x1, py, "#dddddd", 0.5);
    svg.text(x0 - 8, py + 4, num(v), "end");
  }
}

double median_of(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

void metric_chart(const std::vector<PlotPoint>& pts, const std::string& metric, const std::vector<std::string>& modes,
                  const fs::path& path) {
  std::set<std::size_t> ns;
  double lo = INFINITY, hi = -INFINITY;
  for (const auto& p : pts) {
    if (p.metric != metric) continue;
    ns.insert(p.n);
    if (std::isfinite(p.value)) {
      lo = std::min(lo, p.value);
      hi = std::max(hi, p.value);
    }
  }
  if (!std::isfinite(lo)) lo = hi = 0.0;
  Axis x{static_cast<double>(*ns.begin()), static_cast<double>(*ns.rbegin()), true, kLeft + 20,
         kWidth - kRight - 20};
  const Axis y = padded(lo, hi, kHeight - kBottom, kTop);
  Svg svg;
  frame(svg, x, y, metric + " vs N", "N (training rows)", metric,
        std::vector<double>(ns.begin(), ns.end()));
  for (std::size_t mi = 0; mi < modes.size(); ++mi) {
    const char* c = color_for(mi);
    std::vector<std::pair<double, double>> med, upper, lower;
    for (std::size_t n : ns) {
      std::vector<double> v;
      for (const auto& p : pts) {
        if (p.metric == metric && p.mode == modes[mi] && p.n == n && std::isfinite(p.value)) {
          v.push_back(p.value);
          svg.circle(x.map(static_cast<double>(n)), y.map(p.value), 2.5, c, "seed");
        }
      }
      if (v.empty()) continue;
      const double px = x.map(static_cast<double>(n));
      med.emplace_back(px, y.map(median_of(v)));
      upper.emplace_back(px, y.map(*std::max_element(v.begin(), v.end())));
      lower.emplace_back(px, y.map(*std::min_element(v.begin(), v.end())));
    }
    if (med.empty()) continue;
    std::vector<std::pair<double, double>> band = upper;
    band.insert(band.end(), lower.rbegin(), lower.rend());
    if (band.size() > 2) svg.polygon(band, c, 0.15);
    svg.polyline(med, c, 2.0);
    const double ly = kTop + 20.0 * static_cast<double>(mi + 1);
    svg.line(kWidth - kRight + 10, ly - 4, kWidth - kRight + 30, ly - 4, c, 2.0);
    svg.text(kWidth - kRight + 35, ly, modes[mi]);
  }
  svg.save(path);
}

void overlay_chart(const std::vector<CellTrajectory>& runs, const std::string& shape,
                   const std::vector<std::string>& modes, const fs::path& path) {
  std::vector<const CellTrajectory*> chosen;
  for (const auto& m : modes) {
    const CellTrajectory* best = nullptr;
    for (const auto& r : runs) {
      if (r.mode != m || r.run.shape != shape) continue;
      if (!best || r.n > best->n || (r.n == best->n && r.seed < best->seed)) best = &r;
    }
    if (best) chosen.push_back(best);
  }
  if (chosen.empty()) return;
  double xlo = INFINITY, xhi = -INFINITY, ylo = INFINITY, yhi = -INFINITY;
  auto extend = [&](const Vec3& p) {
    if (!std::isfinite(p[0]) || !std::isfinite(p[1])) return;
    xlo = std::min(xlo, p[0]);
    xhi = std::max(xhi, p[0]);
    ylo = std::min(ylo, p[1]);
    yhi = std::max(yhi, p[1]);
  };
  for (const auto* c : chosen) {
    for (const auto& p : c->run.goals) extend(p);
    for (const auto& p : c->run.realized) extend(p);
  }
  // Equal scale on both axes.
  const double span = std::max({xhi - xlo, yhi - ylo, 1e-6}) * 1.1;
  const double cx = 0.5 * (xlo + xhi), cy = 0.5 * (ylo + yhi);
  const double plot_w = kWidth - kLeft - kRight, plot_h = kHeight - kTop - kBottom;
  const double side = std::min(plot_w, plot_h);
  const double ox = kLeft + 0.5 * (plot_w - side), oy = kTop + 0.5 * (plot_h - side);
  const Axis x{cx - 0.5 * span, cx + 0.5 * span, false, ox, ox + side};
  const Axis y{cy - 0.5 * span, cy + 0.5 * span, false, oy + side, oy};
  Svg svg;
  svg.text(0.5 * (kLeft + kWidth - kRight), 22, shape + ": end-effector path (top view)", "middle", 14);
  svg.line(ox, oy + side, ox + side, oy + side, "black");
  svg.line(ox, oy + side, ox, oy, "black");
  svg.text(ox + 0.5 * side, oy + side + 18, "x [m]  (" + num(x.lo) + " .. " + num(x.hi) + ")", "middle");
  svg.text(ox - 10, oy + 0.5 * side, "y [m]", "end");
  std::vector<std::pair<double, double>> ref;
  for (const auto& g : chosen.front()->run.goals) ref.emplace_back(x.map(g[0]), y.map(g[1]));
  svg.polyline(ref, "black", 1.5, "6,4", "reference");
  svg.line(kWidth - kRight + 10, kTop + 16, kWidth - kRight + 30, kTop + 16, "black", 1.5, "6,4");
  svg.text(kWidth - kRight + 35, kTop + 20, "reference");
  for (std::size_t i = 0; i < chosen.size(); ++i) {
    const auto* c = chosen[i];
    const std::size_t mi = static_cast<std::size_t>(std::find(modes.begin(), modes.end(), c->mode) - modes.begin());
    const char* col = color_for(mi);
    std::vector<std::pair<double, double>> pts;
    for (const auto& p : c->run.realized) {
      if (std::isfinite(p[0]) && std::isfinite(p[1])) pts.emplace_back(x.map(p[0]), y.map(p[1]));
    }
    const bool trunc = c->run.truncated;
    svg.polyline(pts, col, 2.0, trunc ? "2,3" : "", trunc ? "realized truncated" : "realized");
    if (trunc && !pts.empty()) svg.cross(pts.back().first, pts.back().second, 6, col, "truncation-marker");
    const double ly = kTop + 20.0 * static_cast<double>(i + 2);
    svg.line(kWidth - kRight + 10, ly - 4, kWidth - kRight + 30, ly - 4, col, 2.0, trunc ? "2,3" : "");
    svg.text(kWidth - kRight + 35, ly,
             c->mode + " N=" + std::to_string(c->n) + (trunc ? " (truncated)" : ""));
  }
  svg.save(path);
}

}  // namespace

std::vector<PlotPoint> plot_points(const std::vector<SuiteRow>& rows) {
  std::vector<PlotPoint> out;
  for (const auto& r : rows) out.push_back({r.mode, r.n, r.seed, r.metric, r.value, r.truncated});
  return out;
}

void write_plot_data_csv(std::ostream& out, const std::vector<PlotPoint>& points) {
  out << "mode,n,seed,metric,value,truncated\n";
  for (const auto& p : points) {
    out << p.mode << ',' << p.n << ',' << p.seed << ',' << p.metric << ',' << format_double(p.value) << ','
        << (p.truncated ? 1 : 0) << '\n';
  }
}

std::vector<PlotPoint> read_plot_data_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::string line;
  std::getline(in, line);
  std::vector<PlotPoint> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::string cell;
    std::istringstream ss(line);
    while (std::getline(ss, cell, ',')) f.push_back(cell);
    if (f.size() != 6) throw std::invalid_argument("plot data: expected 6 fields");
    out.push_back({f[0], std::stoull(f[1]), std::stoull(f[2]), f[3], parse_double(f[4]), f[5] == "1"});
  }
  return out;
}

std::vector<std::string> render_report(const std::vector<SuiteRow>& rows,
                                       const std::vector<CellTrajectory>& trajectories, const std::string& out_dir) {
  if (rows.empty()) throw std::invalid_argument("report: no rows");
  fs::create_directories(out_dir);
  std::vector<std::string> written;
  std::vector<std::string> modes, metrics;
  for (const auto& r : rows) {
    if (std::find(modes.begin(), modes.end(), r.mode) == modes.end()) modes.push_back(r.mode);
    if (std::find(metrics.begin(), metrics.end(), r.metric) == metrics.end()) metrics.push_back(r.metric);
  }
  const auto pts = plot_points(rows);
  for (const auto& m : metrics) {
    const std::string name = m + "_vs_n.svg";
    metric_chart(pts, m, modes, fs::path(out_dir) / name);
    written.push_back(name);
  }
  std::vector<std::string> shapes;
  for (const auto& t : trajectories) {
    if (std::find(shapes.begin(), shapes.end(), t.run.shape) == shapes.end()) shapes.push_back(t.run.shape);
  }
  for (const auto& s : shapes) {
    const std::string name = "overlay_" + s + ".svg";
    overlay_chart(trajectories, s, modes, fs::path(out_dir) / name);
    written.push_back(name);
  }
  {
    std::ofstream out(fs::path(out_dir) / "plot_data.csv");
    write_plot_data_csv(out, pts);
    written.push_back("plot_data.csv");
  }
  {
    std::ofstream out(fs::path(out_dir) / "summary.md");
    out << "| mode | N | metric | seeds | mean | median | min | max | truncated |\n";
    out << "|---|---|---|---|---|---|---|---|---|\n";
    for (const auto& s : summarize(rows)) {
      out << "| " << s.mode << " | " << s.n << " | " << s.metric << " | " << s.count << " | " << num(s.mean) << " | "
          << num(s.median) << " | " << num(s.min) << " | " << num(s.max) << " | " << s.truncated << " |\n";
    }
    written.push_back("summary.md");
  }
  return written;
}

}  // namespace mblab::experiments
