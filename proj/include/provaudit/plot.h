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

#ifndef PROVAUDIT_PLOT_H_
#define PROVAUDIT_PLOT_H_

#include <array>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "provaudit/image.h"

namespace provaudit {

struct PlotSeries {
  std::vector<std::pair<double, double>> points;
  std::array<uint8_t, 3> color = {31, 119, 180};
};

struct PlotAxes {
  double x_min = 0.0, x_max = 1.0;
  double y_min = 0.0, y_max = 1.0;
  int width = 480, height = 360;
};

// Unlabelled line chart: frame, quarter gridlines, one polyline per series.
// Axis labels live in the CSV emitted next to each plot.
RgbImage RenderLinePlot(std::span<const PlotSeries> series, const PlotAxes& axes);

}  // namespace provaudit

#endif  // PROVAUDIT_PLOT_H_
