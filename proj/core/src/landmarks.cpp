#include "morphkit/landmarks.hpp"

#include <set>
#include <string>

#include "morphkit/errors.hpp"

namespace morphkit {

const Landmark* LandmarkSet::find(int id) const {
  for (const Landmark& lm : landmarks)
    if (lm.id == id) return &lm;
  return nullptr;
}

void validate(const LandmarkSet& set) {
  std::set<int> seen;
  for (const Landmark& lm : set.landmarks) {
    if (!seen.insert(lm.id).second)
      throw ValidationError("duplicate landmark id " + std::to_string(lm.id));
    if (!lm.position.allFinite())
      throw ValidationError("landmark " + std::to_string(lm.id) +
                            " has non-finite position");
    if (set.dim == LandmarkDim::two_d && lm.position.z() != 0.0)
      throw ValidationError("2D landmark " + std::to_string(lm.id) +
                            " has non-zero z");
  }
  if (set.scheme.left_eye < 0 || set.scheme.right_eye < 0 ||
      set.scheme.nose_tip < 0)
    throw ValidationError("scheme '" + set.scheme.id +
                          "' does not declare the designated landmark ids");
}

std::vector<int> common_ids(const LandmarkSet& a, const LandmarkSet& b) {
  std::vector<int> ids;
  for (const Landmark& lm : a.landmarks)
    if (b.has(lm.id)) ids.push_back(lm.id);
  return ids;
}

}  // namespace morphkit
