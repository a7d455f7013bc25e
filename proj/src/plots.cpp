#include "edi/plots.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace edi {

namespace fs = std::filesystem;

namespace {

// Dark blue through greens to dark purple, lowest factor first.
const char* const kPalette[] = {"#08306b", "#4292c6", "#006d2c", "#74c476", "#e6ab02",
                                "#d95f02", "#e7298a", "#a6761d", "#9e9ac8", "#3f007d"};

std::string fmt(double v, const char* pattern = "%.4g") {
  char buf[32];
  std::snprintf(buf, sizeof buf, pattern, v);
  return buf;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '&') out += "&amp;";
    else if (c == '<') out += "&lt;";
    else if (c == '>') out += "&gt;";
    else out += c;
  }
  return out;
}

std::vector<double> nice_ticks(double lo, double hi) {
  const double span = hi - lo;
  const double raw = span / 5.0;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  double step = mag;
  for (double f : {1.0, 2.0, 5.0, 10.0})
    if (raw <= f * mag) {
      step = f * mag;
      break;
    }
  std::vector<double> ticks;
  for (double t = std::ceil(lo / step) * step; t <= hi + 1e-9 * span; t += step) ticks.push_back(t);
  return ticks;
}

class Chart {
 public:
  Chart(std::string title, std::string x_label, std::string y_label)
      : title_(std::move(title)), x_label_(std::move(x_label)), y_label_(std::move(y_label)) {}

  void set_x(double lo, double hi, bool log) { x_lo_ = lo, x_hi_ = hi, x_log_ = log; }
  void set_y(double lo, double hi, bool log) { y_lo_ = lo, y_hi_ = hi, y_log_ = log; }

  void line(const std::vector<std::pair<double, double>>& points, const std::string& color) {
    if (points.empty()) return;
    std::ostringstream os;
    os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
    for (const auto& [x, y] : points) os << fmt(px(x), "%.2f") << ',' << fmt(py(y), "%.2f") << ' ';
    os << "\"/>\n";
    for (const auto& [x, y] : points)
      os << "<circle cx=\"" << fmt(px(x), "%.2f") << "\" cy=\"" << fmt(py(y), "%.2f")
         << "\" r=\"2\" fill=\"" << color << "\"/>\n";
    body_ += os.str();
  }

  void point(double x, double y, double radius, const std::string& color) {
    body_ += "<circle cx=\"" + fmt(px(x), "%.2f") + "\" cy=\"" + fmt(py(y), "%.2f") + "\" r=\"" +
             fmt(radius, "%.1f") + "\" fill=\"" + color + "\" fill-opacity=\"0.6\"/>\n";
  }

  void legend(const std::string& label, const std::string& color) {
    legend_.emplace_back(label, color);
  }

  std::string svg() const {
    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\""
       << kHeight << "\" viewBox=\"0 0 " << kWidth << ' ' << kHeight << "\" font-family=\"sans-serif\">\n"
       << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
       << "<text x=\"" << kWidth / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">"
       << escape(title_) << "</text>\n"
       << "<rect x=\"" << kLeft << "\" y=\"" << kTop << "\" width=\"" << plot_w() << "\" height=\""
       << plot_h() << "\" fill=\"none\" stroke=\"#333\"/>\n";
    axis_ticks(os);
    os << "<text x=\"" << kLeft + plot_w() / 2 << "\" y=\"" << kHeight - 12
       << "\" text-anchor=\"middle\" font-size=\"13\">" << escape(x_label_) << "</text>\n"
       << "<text transform=\"translate(18," << kTop + plot_h() / 2
       << ") rotate(-90)\" text-anchor=\"middle\" font-size=\"13\">" << escape(y_label_)
       << "</text>\n";
    os << "<g>\n" << body_ << "</g>\n";
    double ly = kTop + 8;
    for (const auto& [label, color] : legend_) {
      const double lx = kLeft + plot_w() + 12;
      os << "<rect x=\"" << lx << "\" y=\"" << ly << "\" width=\"12\" height=\"12\" fill=\"" << color
         << "\"/><text x=\"" << lx + 18 << "\" y=\"" << ly + 10 << "\" font-size=\"12\">"
         << escape(label) << "</text>\n";
      ly += 18;
    }
    os << "</svg>\n";
    return os.str();
  }

 private:
  static constexpr double kWidth = 760, kHeight = 480;
  static constexpr double kLeft = 70, kRight = 130, kTop = 40, kBottom = 55;
  static double plot_w() { return kWidth - kLeft - kRight; }
  static double plot_h() { return kHeight - kTop - kBottom; }

  static double map(double v, double lo, double hi, bool log) {
    if (log) {
      v = std::log10(std::max(v, 1e-300));
      lo = std::log10(lo);
      hi = std::log10(hi);
    }
    return hi > lo ? (v - lo) / (hi - lo) : 0.5;
  }
  double px(double x) const { return kLeft + map(x, x_lo_, x_hi_, x_log_) * plot_w(); }
  double py(double y) const { return kTop + (1.0 - map(y, y_lo_, y_hi_, y_log_)) * plot_h(); }

  void axis_ticks(std::ostringstream& os) const {
    auto ticks = [](double lo, double hi, bool log) {
      std::vector<double> t;
      if (log) {
        for (int e = static_cast<int>(std::round(std::log10(lo)));
             e <= static_cast<int>(std::round(std::log10(hi))); ++e)
          t.push_back(std::pow(10.0, e));
      } else {
        t = nice_ticks(lo, hi);
      }
      return t;
    };
    for (double t : ticks(x_lo_, x_hi_, x_log_)) {
      const double x = px(t);
      os << "<line x1=\"" << fmt(x, "%.2f") << "\" y1=\"" << kTop + plot_h() << "\" x2=\""
         << fmt(x, "%.2f") << "\" y2=\"" << kTop + plot_h() + 5 << "\" stroke=\"#333\"/>"
         << "<text x=\"" << fmt(x, "%.2f") << "\" y=\"" << kTop + plot_h() + 18
         << "\" text-anchor=\"middle\" font-size=\"11\">"
         << (x_log_ ? "1e" + fmt(std::log10(t), "%.0f") : fmt(t)) << "</text>\n";
    }
    for (double t : ticks(y_lo_, y_hi_, y_log_)) {
      const double y = py(t);
      os << "<line x1=\"" << kLeft - 5 << "\" y1=\"" << fmt(y, "%.2f") << "\" x2=\"" << kLeft
         << "\" y2=\"" << fmt(y, "%.2f") << "\" stroke=\"#333\"/>"
         << "<text x=\"" << kLeft - 8 << "\" y=\"" << fmt(y + 4, "%.2f")
         << "\" text-anchor=\"end\" font-size=\"11\">"
         << (y_log_ ? "1e" + fmt(std::log10(t), "%.0f") : fmt(t)) << "</text>\n";
    }
  }

  std::string title_, x_label_, y_label_;
  double x_lo_ = 0, x_hi_ = 1, y_lo_ = 0, y_hi_ = 1;
  bool x_log_ = false, y_log_ = false;
  std::string body_;
  std::vector<std::pair<std::string, std::string>> legend_;
};

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

std::string factor_label(double rc) { return "Rc = " + fmt(rc * 100.0, "%.0f") + "%"; }

double gmac(std::uint64_t work) { return static_cast<double>(work) / 1e9; }

}  // namespace

LogAxis log_axis_for(double lo, double hi) {
  if (!(lo > 0.0) || !(hi >= lo)) throw std::invalid_argument("log axis needs 0 < lo <= hi");
  LogAxis axis;
  axis.low_exponent = static_cast<int>(std::floor(std::log10(lo)));
  axis.high_exponent = static_cast<int>(std::ceil(std::log10(hi)));
  if (axis.high_exponent == axis.low_exponent) ++axis.high_exponent;
  return axis;
}

std::vector<fs::path> emit_plots(const SweepResult& result, const fs::path& dir) {
  const auto records = result.all_records();
  if (records.empty()) throw std::invalid_argument("emit_plots: no records to plot");
  fs::create_directories(dir);

  std::set<double> factor_set;
  for (const auto& r : records) factor_set.insert(r.cluster_factor);
  const std::vector<double> factors(factor_set.begin(), factor_set.end());
  auto color_of = [&](double rc) {
    const auto idx = static_cast<std::size_t>(
        std::lower_bound(factors.begin(), factors.end(), rc) - factors.begin());
    return std::string(kPalette[idx % std::size(kPalette)]);
  };

  std::size_t min_bytes = records[0].storage_bytes, max_bytes = records[0].storage_bytes;
  for (const auto& r : records) {
    min_bytes = std::min(min_bytes, r.storage_bytes);
    max_bytes = std::max(max_bytes, r.storage_bytes);
  }
  const LogAxis storage_axis =
      log_axis_for(static_cast<double>(std::max<std::size_t>(min_bytes, 1)),
                   static_cast<double>(std::max<std::size_t>(max_bytes, 1)));
  const double storage_lo = std::pow(10.0, storage_axis.low_exponent);
  const double storage_hi = std::pow(10.0, storage_axis.high_exponent);

  std::vector<fs::path> written;
  std::map<int, std::vector<const CellResult*>> by_m;
  for (const auto& cell : result.cells)
    if (cell.status != CellStatus::failed && !cell.records.empty())
      by_m[cell.parent_count].push_back(&cell);

  for (const auto& [m, cells] : by_m) {
    double max_work = 0.0;
    for (const auto* cell : cells)
      for (const auto& r : cell->records) max_work = std::max(max_work, gmac(r.train_work));
    if (max_work <= 0.0) max_work = 1.0;

    const std::string x_label = "cumulative retraining compute (GMAC)";
    Chart acc(std::to_string(m) + "-parent synthesis: accuracy", x_label, "test accuracy");
    acc.set_x(0.0, max_work, false);
    acc.set_y(0.0, 1.0, false);
    Chart sto(std::to_string(m) + "-parent synthesis: storage", x_label, "storage (bytes)");
    sto.set_x(0.0, max_work, false);
    sto.set_y(storage_lo, storage_hi, true);
    for (const auto* cell : cells) {
      std::vector<std::pair<double, double>> a, s;
      for (const auto& r : cell->records) {
        a.emplace_back(gmac(r.train_work), r.accuracy);
        s.emplace_back(gmac(r.train_work), static_cast<double>(std::max<std::size_t>(r.storage_bytes, 1)));
      }
      const auto color = color_of(cell->cluster_factor);
      acc.line(a, color);
      sto.line(s, color);
      acc.legend(factor_label(cell->cluster_factor), color);
      sto.legend(factor_label(cell->cluster_factor), color);
    }
    const fs::path acc_path = dir / ("accuracy_m" + std::to_string(m) + ".svg");
    const fs::path sto_path = dir / ("storage_m" + std::to_string(m) + ".svg");
    write_file(acc_path, acc.svg());
    write_file(sto_path, sto.svg());
    written.push_back(acc_path);
    written.push_back(sto_path);
  }

  Chart scatter("accuracy against storage (point size grows with m)", "storage (bytes)",
                "test accuracy");
  scatter.set_x(storage_lo, storage_hi, true);
  scatter.set_y(0.0, 1.0, false);
  for (const auto& r : records)
    scatter.point(static_cast<double>(std::max<std::size_t>(r.storage_bytes, 1)), r.accuracy,
                  1.5 + 1.2 * r.parent_count, color_of(r.cluster_factor));
  for (double rc : factors) scatter.legend(factor_label(rc), color_of(rc));
  const fs::path scatter_path = dir / "scatter.svg";
  write_file(scatter_path, scatter.svg());
  written.push_back(scatter_path);
  return written;
}

}  // namespace edi
