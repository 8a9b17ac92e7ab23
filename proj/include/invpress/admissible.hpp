#pragma once

#include <optional>

#include "invpress/oracle.hpp"

namespace invpress {

enum class AdmissibleVerdict { Confirmed, Unconfirmed };

/// Finite-horizon search parameters for the admissibility heuristic.
struct AdmissibleSearch {
  double dt = 0.25;
  int horizon_steps = 4;
  std::optional<std::vector<Vector>> alphabet;  // default: box corners + center
  int grid_per_axis = 5;
  std::optional<double> delta;
  long long cap = kDefaultEnumerationCap;
};

/// Heuristic admissibility check for the pair (K, Q): confirmed iff every K
/// grid point has some enumerated control keeping its sampled trajectory in
/// Q over the search horizon. A confirmed verdict is finite-horizon evidence,
/// not a proof; unconfirmed is likewise not a disproof.
inline AdmissibleVerdict check_admissible(const LinearSystem& sys, const Region& k,
                                          const Region& q, const AdmissibleSearch& search = {}) {
  const auto* kbox = std::get_if<BoxRegion>(&k);
  if (kbox == nullptr) throw InputError("admissibility grid needs a box K");

  DiscretizedProblem p;
  p.sys = sys;
  p.dt = search.dt;
  p.horizon_steps = search.horizon_steps;
  p.alphabet = search.alphabet.value_or(default_alphabet(sys.U));
  p.k_points = grid_points(*kbox, search.grid_per_axis);
  p.q = q;
  p.delta = search.delta.value_or(0.0);

  const auto cover = cover_map(p, search.cap);
  uint64_t covered = 0;
  for (uint64_t mask : cover) covered |= mask;
  const uint64_t all = p.k_points.size() == 64 ? ~uint64_t{0}
                                               : ((uint64_t{1} << p.k_points.size()) - 1);
  return covered == all ? AdmissibleVerdict::Confirmed : AdmissibleVerdict::Unconfirmed;
}

}  // namespace invpress
