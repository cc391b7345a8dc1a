#include "pitchbench/labels.hpp"

#include <algorithm>

#include "pitchbench/error.hpp"

namespace pitchbench {

double area_fraction(const ControlMap& map) {
    if (map.size() == 0) return 0.0;
    const auto& v = map.values();
    const auto above = std::count_if(v.begin(), v.end(), [](double c) { return c > 0.5; });
    return static_cast<double>(above) / static_cast<double>(v.size());
}

PatternLabel heuristic_label(const ControlMap& prev, const ControlMap& curr, double theta) {
    if (!prev.same_dims(curr)) throw Error(ErrorKind::DimMismatch, "label maps differ in grid size");
    const double delta = area_fraction(curr) - area_fraction(prev);
    if (delta > theta) return {Pattern::Pushing};
    if (delta < -theta) return {Pattern::Backing};
    return {Pattern::Staying};
}

}  // namespace pitchbench
