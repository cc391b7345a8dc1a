#pragma once

#include "pitchbench/types.hpp"

namespace pitchbench {

// Share of cells where the attacking team's control exceeds 0.5.
double area_fraction(const ControlMap& map);

// Pushing when the attacking area grows by more than theta, Backing when it
// shrinks by more than theta, Staying otherwise. Throws DimMismatch.
PatternLabel heuristic_label(const ControlMap& prev, const ControlMap& curr, double theta = 0.02);

}  // namespace pitchbench
