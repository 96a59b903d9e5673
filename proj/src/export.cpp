#include "modalray/export.hpp"

#include "modalray/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

namespace modalray {

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string trace_row(int l, double alpha, const Vec2& mu, const RayState& s,
                      const AmplitudeSample& a) {
  std::string out = std::to_string(l);
  for (double v : {alpha, mu.x(), mu.y(), s.tau_nat, s.f(idx::tau), s.f(idx::x), s.f(idx::y),
                   s.f(idx::p_tau), s.f(idx::p_x), s.f(idx::p_y), s.phase, a.value, s.T_diss, a.det}) {
    out += ',';
    out += format_number(v);
  }
  out += ',';
  out += to_string(a.validity);
  return out;
}

std::string cutoff_row(int l, double alpha, const Vec2& mu, double tau_nat) {
  std::string out = std::to_string(l);
  for (double v : {alpha, mu.x(), mu.y(), tau_nat}) {
    out += ',';
    out += format_number(v);
  }
  for (int i = 0; i < 10; ++i) out += ",nan";
  out += ",cutoff";
  return out;
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorClass::post_processing, "IoError", "cannot write " + path);
  out << content;
  if (!out) throw Error(ErrorClass::post_processing, "IoError", "failed writing " + path);
}

namespace {

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e",
                          "#8c564b", "#e377c2", "#17becf", "#7f7f7f", "#bcbd22"};

std::string esc(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '<') out += "&lt;";
    else if (c == '>') out += "&gt;";
    else if (c == '&') out += "&amp;";
    else out += c;
  }
  return out;
}

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

}  // namespace

std::string render_svg(const std::vector<SvgPanel>& panels) {
  constexpr double pw = 420, ph = 420, pad = 50, legend_line = 16;
  std::vector<std::string> labels;
  for (const auto& p : panels)
    for (const auto& s : p.series)
      if (std::find(labels.begin(), labels.end(), s.label) == labels.end()) labels.push_back(s.label);
  auto color = [&](const std::string& label) {
    const auto it = std::find(labels.begin(), labels.end(), label);
    return kPalette[(it - labels.begin()) % (sizeof kPalette / sizeof *kPalette)];
  };

  const double width = panels.size() * (pw + pad) + pad;
  const double height = ph + 2 * pad + legend_line * (labels.size() + 1);
  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << num(width) << "\" height=\""
      << num(height) << "\" viewBox=\"0 0 " << num(width) << ' ' << num(height) << "\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";

  for (std::size_t k = 0; k < panels.size(); ++k) {
    const SvgPanel& panel = panels[k];
    double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
    for (const auto& s : panel.series)
      for (const auto& seg : s.segments)
        for (const Vec2& p : seg) {
          if (!std::isfinite(p.x()) || !std::isfinite(p.y())) continue;
          x0 = std::min(x0, p.x()), x1 = std::max(x1, p.x());
          y0 = std::min(y0, p.y()), y1 = std::max(y1, p.y());
        }
    if (!(x0 <= x1)) x0 = 0, x1 = 1, y0 = 0, y1 = 1;
    if (x1 - x0 == 0) x0 -= 0.5, x1 += 0.5;
    if (y1 - y0 == 0) y0 -= 0.5, y1 += 0.5;
    const double mx = 0.05 * (x1 - x0), my = 0.05 * (y1 - y0);
    x0 -= mx, x1 += mx, y0 -= my, y1 += my;

    const double ox = pad + k * (pw + pad), oy = pad;
    auto sx = [&](double x) { return ox + (x - x0) / (x1 - x0) * pw; };
    auto sy = [&](double y) { return oy + (y1 - y) / (y1 - y0) * ph; };

    svg << "<g>\n<rect x=\"" << num(ox) << "\" y=\"" << num(oy) << "\" width=\"" << num(pw)
        << "\" height=\"" << num(ph) << "\" fill=\"none\" stroke=\"#444\"/>\n";
    svg << "<text x=\"" << num(ox + pw / 2) << "\" y=\"" << num(oy - 18)
        << "\" text-anchor=\"middle\" font-size=\"14\">" << esc(panel.title) << "</text>\n";
    svg << "<text x=\"" << num(ox + pw / 2) << "\" y=\"" << num(oy + ph + 34)
        << "\" text-anchor=\"middle\" font-size=\"12\">" << esc(panel.x_label) << "</text>\n";
    svg << "<text x=\"" << num(ox - 36) << "\" y=\"" << num(oy + ph / 2)
        << "\" text-anchor=\"middle\" font-size=\"12\" transform=\"rotate(-90 " << num(ox - 36)
        << ' ' << num(oy + ph / 2) << ")\">" << esc(panel.y_label) << "</text>\n";
    svg << "<text x=\"" << num(ox) << "\" y=\"" << num(oy + ph + 16) << "\" font-size=\"10\">"
        << num(x0) << "</text>\n";
    svg << "<text x=\"" << num(ox + pw) << "\" y=\"" << num(oy + ph + 16)
        << "\" font-size=\"10\" text-anchor=\"end\">" << num(x1) << "</text>\n";
    svg << "<text x=\"" << num(ox - 4) << "\" y=\"" << num(oy + ph)
        << "\" font-size=\"10\" text-anchor=\"end\">" << num(y0) << "</text>\n";
    svg << "<text x=\"" << num(ox - 4) << "\" y=\"" << num(oy + 10)
        << "\" font-size=\"10\" text-anchor=\"end\">" << num(y1) << "</text>\n";

    for (const auto& s : panel.series)
      for (const auto& seg : s.segments) {
        if (seg.empty()) continue;
        svg << "<polyline fill=\"none\" stroke-width=\"1.2\" stroke=\"" << color(s.label)
            << "\" points=\"";
        for (std::size_t i = 0; i < seg.size(); ++i)
          svg << (i ? " " : "") << num(sx(seg[i].x())) << ',' << num(sy(seg[i].y()));
        svg << "\"/>\n";
      }
    svg << "</g>\n";
  }

  double ly = ph + 2 * pad + legend_line * 0.5;
  for (const auto& label : labels) {
    svg << "<line x1=\"" << num(pad) << "\" y1=\"" << num(ly) << "\" x2=\"" << num(pad + 24)
        << "\" y2=\"" << num(ly) << "\" stroke=\"" << color(label) << "\" stroke-width=\"2\"/>\n";
    svg << "<text x=\"" << num(pad + 30) << "\" y=\"" << num(ly + 4) << "\" font-size=\"12\">"
        << esc(label) << "</text>\n";
    ly += legend_line;
  }
  svg << "</svg>\n";
  return svg.str();
}

}  // namespace modalray
