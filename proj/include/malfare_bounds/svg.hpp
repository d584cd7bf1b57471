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

#ifndef MALFARE_BOUNDS_SVG_HPP_
#define MALFARE_BOUNDS_SVG_HPP_

#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace mfb::svg {

/// Polyline, optionally with a shaded band between lo and hi.
struct Line {
  std::string label;
  std::vector<double> x, y;
  std::vector<double> lo, hi;  // empty, or same length as x
  std::string color = "#1f77b4";
  bool dashed = false;
};

struct Points {
  std::string label;
  std::vector<double> x, y;
  std::string color = "#1f77b4";
  double radius = 2.0;
  double opacity = 0.7;
};

/// Closed outline, e.g. the L1 ball.
struct Outline {
  std::vector<double> x, y;
  std::string color = "#444444";
};

struct Panel {
  std::string title;
  std::string xlabel;
  std::string ylabel;
  bool logx = false;
  bool logy = false;
  bool equal_aspect = false;
  std::vector<Line> lines;
  std::vector<Points> points;
  std::vector<Outline> outlines;
};

/// Static SVG 1.1 with the panels side by side. Non-finite values, and
/// non-positive ones on a log axis, are skipped.
std::string render(std::span<const Panel> panels, std::string_view title = {});

/// Colour for series k of a fixed palette.
std::string palette(std::size_t k);

}  // namespace mfb::svg

#endif  // MALFARE_BOUNDS_SVG_HPP_
