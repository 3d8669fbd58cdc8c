#pragma once

#include <string>
#include <vector>

#include "morphkit/geometry.hpp"

namespace morphkit {

// Names a landmark convention plus the semantic ids of the three
// designated points every scheme must declare.
struct LandmarkScheme {
  std::string id;
  int left_eye = -1;
  int right_eye = -1;
  int nose_tip = -1;

  friend bool operator==(const LandmarkScheme&, const LandmarkScheme&) = default;
};

enum class LandmarkDim { two_d, three_d };

// 2D landmarks store pixel coordinates in x,y with z == 0.
struct Landmark {
  int id = -1;
  Vec3 position{0, 0, 0};
};

struct LandmarkSet {
  LandmarkScheme scheme;
  LandmarkDim dim = LandmarkDim::three_d;
  std::vector<Landmark> landmarks;

  int size() const { return static_cast<int>(landmarks.size()); }
  const Landmark* find(int id) const;
  bool has(int id) const { return find(id) != nullptr; }
};

// Unique ids, finite positions, designated ids declared, z == 0 for 2D.
void validate(const LandmarkSet& set);

// Semantic ids present in both sets, in `a`'s order.
std::vector<int> common_ids(const LandmarkSet& a, const LandmarkSet& b);

}  // namespace morphkit
