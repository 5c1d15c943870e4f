// Copyright 2026 The provaudit Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "provaudit/plot.h"

#include <algorithm>
#include <cmath>
#include <cstdlib>

namespace provaudit {
namespace {

constexpr int kMargin = 24;

void Put(RgbImage& img, int x, int y, std::array<uint8_t, 3> c) {
  if (x < 0 || y < 0 || x >= img.width || y >= img.height) return;
  std::copy(c.begin(), c.end(), img.at(x, y));
}

void Line(RgbImage& img, int x0, int y0, int x1, int y1,
          std::array<uint8_t, 3> c) {
  const int dx = std::abs(x1 - x0), sx = x0 < x1 ? 1 : -1;
  const int dy = -std::abs(y1 - y0), sy = y0 < y1 ? 1 : -1;
  int err = dx + dy;
  while (true) {
    Put(img, x0, y0, c);
    if (x0 == x1 && y0 == y1) break;
    const int e2 = 2 * err;
    if (e2 >= dy) { err += dy; x0 += sx; }
    if (e2 <= dx) { err += dx; y0 += sy; }
  }
}

}  // namespace

RgbImage RenderLinePlot(std::span<const PlotSeries> series, const PlotAxes& axes) {
  RgbImage img(axes.width, axes.height);
  std::fill(img.pixels.begin(), img.pixels.end(), 255);
  const int left = kMargin, right = axes.width - kMargin;
  const int top = kMargin, bottom = axes.height - kMargin;
  const double xs = axes.x_max > axes.x_min ? axes.x_max - axes.x_min : 1.0;
  const double ys = axes.y_max > axes.y_min ? axes.y_max - axes.y_min : 1.0;
  auto px = [&](double x) {
    return left + static_cast<int>(std::lround((x - axes.x_min) / xs * (right - left)));
  };
  auto py = [&](double y) {
    return bottom - static_cast<int>(std::lround((y - axes.y_min) / ys * (bottom - top)));
  };

  constexpr std::array<uint8_t, 3> kGrid = {225, 225, 225};
  constexpr std::array<uint8_t, 3> kFrame = {0, 0, 0};
  for (int q = 1; q < 4; ++q) {
    const int gx = left + q * (right - left) / 4;
    const int gy = top + q * (bottom - top) / 4;
    Line(img, gx, top, gx, bottom, kGrid);
    Line(img, left, gy, right, gy, kGrid);
  }
  Line(img, left, top, right, top, kFrame);
  Line(img, left, bottom, right, bottom, kFrame);
  Line(img, left, top, left, bottom, kFrame);
  Line(img, right, top, right, bottom, kFrame);

  for (const auto& s : series) {
    for (size_t i = 1; i < s.points.size(); ++i) {
      Line(img, px(s.points[i - 1].first), py(s.points[i - 1].second),
           px(s.points[i].first), py(s.points[i].second), s.color);
    }
  }
  return img;
}

}  // namespace provaudit
