/*
 * Copyright 2026 The malfare-bounds Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "malfare_bounds/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

namespace mfb::svg {
namespace {

constexpr double kPanelW = 380.0;
constexpr double kPanelH = 320.0;
constexpr double kLeft = 62.0;
constexpr double kRight = 14.0;
constexpr double kTop = 30.0;
constexpr double kBottom = 46.0;
constexpr double kTitleH = 26.0;

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string tick_label(double v) {
  char buf[32];
  if (v != 0.0 && (std::abs(v) >= 1e5 || std::abs(v) < 1e-3)) {
    std::snprintf(buf, sizeof buf, "%.0e", v);
  } else {
    std::snprintf(buf, sizeof buf, "%.4g", v);
  }
  return buf;
}

struct Axis {
  bool log = false;
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();

  bool usable(double v) const { return std::isfinite(v) && (!log || v > 0.0); }
  double tr(double v) const { return log ? std::log10(v) : v; }
  void add(double v) {
    if (!usable(v)) return;
    lo = std::min(lo, tr(v));
    hi = std::max(hi, tr(v));
  }
  void finish() {
    if (!(lo <= hi)) {
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
  }
  // Tick positions in data units.
  std::vector<double> ticks() const {
    std::vector<double> out;
    if (log) {
      const bool sparse = hi - lo < 1.5;
      for (int e = static_cast<int>(std::floor(lo)); e <= static_cast<int>(std::ceil(hi)); ++e) {
        for (double mult : {1.0, 2.0, 5.0}) {
          if (mult != 1.0 && !sparse) continue;
          const double v = mult * std::pow(10.0, e);
          if (tr(v) >= lo && tr(v) <= hi) out.push_back(v);
        }
      }
      return out;
    }
    const double raw = (hi - lo) / 5.0;
    const double base = std::pow(10.0, std::floor(std::log10(raw)));
    double step = base;
    for (double mult : {1.0, 2.0, 5.0, 10.0}) {
      step = mult * base;
      if (step >= raw) break;
    }
    for (double v = std::ceil(lo / step) * step; v <= hi + 1e-12 * step; v += step) {
      out.push_back(std::abs(v) < 1e-12 * step ? 0.0 : v);
    }
    return out;
  }
};

void panel_svg(std::ostringstream& out, const Panel& p, double ox, double oy) {
  Axis ax{p.logx}, ay{p.logy};
  for (const auto& l : p.lines) {
    for (double v : l.x) ax.add(v);
    for (const auto* ys : {&l.y, &l.lo, &l.hi}) {
      for (double v : *ys) ay.add(v);
    }
  }
  for (const auto& s : p.points) {
    for (double v : s.x) ax.add(v);
    for (double v : s.y) ay.add(v);
  }
  for (const auto& o : p.outlines) {
    for (double v : o.x) ax.add(v);
    for (double v : o.y) ay.add(v);
  }
  ax.finish();
  ay.finish();
  double w = kPanelW - kLeft - kRight;
  double h = kPanelH - kTop - kBottom;
  double x0 = ox + kLeft;
  double y0 = oy + kTop;
  if (p.equal_aspect) {
    const double sx = w / (ax.hi - ax.lo);
    const double sy = h / (ay.hi - ay.lo);
    const double s = std::min(sx, sy);
    x0 += 0.5 * (w - s * (ax.hi - ax.lo));
    y0 += 0.5 * (h - s * (ay.hi - ay.lo));
    w = s * (ax.hi - ax.lo);
    h = s * (ay.hi - ay.lo);
  }
  auto px = [&](double v) { return x0 + (ax.tr(v) - ax.lo) / (ax.hi - ax.lo) * w; };
  auto py = [&](double v) { return y0 + h - (ay.tr(v) - ay.lo) / (ay.hi - ay.lo) * h; };

  out << "<g>\n";
  out << "<text x=\"" << num(ox + kPanelW / 2) << "\" y=\"" << num(oy + 18)
      << "\" text-anchor=\"middle\" font-size=\"13\">" << escape(p.title) << "</text>\n";
  out << "<rect x=\"" << num(x0) << "\" y=\"" << num(y0) << "\" width=\"" << num(w) << "\" height=\"" << num(h)
      << "\" fill=\"none\" stroke=\"#000\"/>\n";
  for (double t : ax.ticks()) {
    out << "<line x1=\"" << num(px(t)) << "\" y1=\"" << num(y0 + h) << "\" x2=\"" << num(px(t)) << "\" y2=\""
        << num(y0 + h + 4) << "\" stroke=\"#000\"/>\n";
    out << "<text x=\"" << num(px(t)) << "\" y=\"" << num(y0 + h + 15) << "\" text-anchor=\"middle\" font-size=\"10\">"
        << tick_label(t) << "</text>\n";
  }
  for (double t : ay.ticks()) {
    out << "<line x1=\"" << num(x0 - 4) << "\" y1=\"" << num(py(t)) << "\" x2=\"" << num(x0) << "\" y2=\""
        << num(py(t)) << "\" stroke=\"#000\"/>\n";
    out << "<text x=\"" << num(x0 - 6) << "\" y=\"" << num(py(t) + 3) << "\" text-anchor=\"end\" font-size=\"10\">"
        << tick_label(t) << "</text>\n";
  }
  out << "<text x=\"" << num(x0 + w / 2) << "\" y=\"" << num(oy + kPanelH - 8)
      << "\" text-anchor=\"middle\" font-size=\"11\">" << escape(p.xlabel) << "</text>\n";
  out << "<text transform=\"translate(" << num(ox + 14) << ' ' << num(y0 + h / 2)
      << ") rotate(-90)\" text-anchor=\"middle\" font-size=\"11\">" << escape(p.ylabel) << "</text>\n";

  for (const auto& o : p.outlines) {
    out << "<polygon fill=\"none\" stroke=\"" << o.color << "\" points=\"";
    for (std::size_t k = 0; k < o.x.size(); ++k) {
      if (ax.usable(o.x[k]) && ay.usable(o.y[k])) out << num(px(o.x[k])) << ',' << num(py(o.y[k])) << ' ';
    }
    out << "\"/>\n";
  }
  for (const auto& l : p.lines) {
    if (!l.lo.empty() && l.lo.size() == l.x.size() && l.hi.size() == l.x.size()) {
      std::string fwd, back;
      for (std::size_t k = 0; k < l.x.size(); ++k) {
        if (!ax.usable(l.x[k]) || !ay.usable(l.lo[k]) || !ay.usable(l.hi[k])) continue;
        fwd += num(px(l.x[k])) + ',' + num(py(l.hi[k])) + ' ';
        back = num(px(l.x[k])) + ',' + num(py(l.lo[k])) + ' ' + back;
      }
      out << "<polygon fill=\"" << l.color << "\" fill-opacity=\"0.18\" stroke=\"none\" points=\"" << fwd << back
          << "\"/>\n";
    }
    out << "<polyline fill=\"none\" stroke=\"" << l.color << "\" stroke-width=\"1.6\""
        << (l.dashed ? " stroke-dasharray=\"5,3\"" : "") << " points=\"";
    for (std::size_t k = 0; k < l.x.size() && k < l.y.size(); ++k) {
      if (ax.usable(l.x[k]) && ay.usable(l.y[k])) out << num(px(l.x[k])) << ',' << num(py(l.y[k])) << ' ';
    }
    out << "\"/>\n";
  }
  for (const auto& s : p.points) {
    for (std::size_t k = 0; k < s.x.size() && k < s.y.size(); ++k) {
      if (!ax.usable(s.x[k]) || !ay.usable(s.y[k])) continue;
      out << "<circle cx=\"" << num(px(s.x[k])) << "\" cy=\"" << num(py(s.y[k])) << "\" r=\"" << num(s.radius)
          << "\" fill=\"" << s.color << "\" fill-opacity=\"" << num(s.opacity) << "\"/>\n";
    }
  }
  // Legend.
  double ly = y0 + 12;
  auto legend = [&](const std::string& label, const std::string& color, bool dashed) {
    if (label.empty()) return;
    out << "<line x1=\"" << num(x0 + w - 110) << "\" y1=\"" << num(ly - 3) << "\" x2=\"" << num(x0 + w - 92)
        << "\" y2=\"" << num(ly - 3) << "\" stroke=\"" << color << "\" stroke-width=\"2\""
        << (dashed ? " stroke-dasharray=\"4,2\"" : "") << "/>\n";
    out << "<text x=\"" << num(x0 + w - 88) << "\" y=\"" << num(ly) << "\" font-size=\"10\">" << escape(label)
        << "</text>\n";
    ly += 13;
  };
  for (const auto& l : p.lines) legend(l.label, l.color, l.dashed);
  for (const auto& s : p.points) legend(s.label, s.color, false);
  out << "</g>\n";
}

}  // namespace

std::string palette(std::size_t k) {
  static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#17becf"};
  return colors[k % (sizeof colors / sizeof colors[0])];
}

std::string render(std::span<const Panel> panels, std::string_view title) {
  const double top = title.empty() ? 0.0 : kTitleH;
  const double width = kPanelW * static_cast<double>(std::max<std::size_t>(panels.size(), 1));
  const double height = kPanelH + top;
  std::ostringstream out;
  out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" << num(width) << "\" height=\""
      << num(height) << "\" viewBox=\"0 0 " << num(width) << ' ' << num(height)
      << "\" font-family=\"sans-serif\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"#fff\"/>\n";
  if (!title.empty()) {
    out << "<text x=\"" << num(width / 2) << "\" y=\"18\" text-anchor=\"middle\" font-size=\"15\">" << escape(title)
        << "</text>\n";
  }
  for (std::size_t k = 0; k < panels.size(); ++k) panel_svg(out, panels[k], kPanelW * static_cast<double>(k), top);
  out << "</svg>\n";
  return out.str();
}

}  // namespace mfb::svg
