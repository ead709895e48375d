// Copyright 2026 The synthaug Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

namespace synthaug {

// Axis-aligned box in half-open pixel coordinates: covers x0 <= x < x1,
// y0 <= y < y1.
struct Box {
  double x0 = 0, y0 = 0, x1 = 0, y1 = 0;

  double width() const { return x1 - x0; }
  double height() const { return y1 - y0; }
  double area() const { return width() > 0 && height() > 0 ? width() * height() : 0.0; }
  bool valid() const { return x1 > x0 && y1 > y0; }
  friend bool operator==(const Box&, const Box&) = default;
};

struct GroundTruthBox {
  Box box;
  int class_index = 4;
};

struct Detection {
  Box box;
  int class_index = 4;
  double confidence = 0.0;
};

}  // namespace synthaug
