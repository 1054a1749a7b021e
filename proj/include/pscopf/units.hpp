#pragma once

namespace pscopf::units {

// Matrices are built from per-unit susceptances; quantities cross the API in
// MW. These are the only conversion points.
inline double to_per_unit(double mw, double base_mva) { return mw / base_mva; }
inline double to_mw(double per_unit, double base_mva) { return per_unit * base_mva; }
inline double susceptance(double reactance_pu) { return 1.0 / reactance_pu; }

}  // namespace pscopf::units
