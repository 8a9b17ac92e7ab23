#pragma once

#include <algorithm>
#include <bit>
#include <cstdint>
#include <limits>
#include <vector>

#include "invpress/errors.hpp"

namespace invpress {

/// Weighted set-cover instance over at most 64 universe points.
/// coverage[i] is the bitmask of points candidate i covers.
struct CoverInstance {
  int n_points = 0;
  std::vector<uint64_t> coverage;
  std::vector<double> weights;

  uint64_t universe() const {
    return n_points == 64 ? ~uint64_t{0} : ((uint64_t{1} << n_points) - 1);
  }
};

struct CoverResult {
  std::vector<int> chosen;  // ascending candidate indices
  double weight = 0.0;      // canonical sum over chosen in ascending order
  bool optimal = false;
};

namespace detail {

inline double canonical_weight(const CoverInstance& inst, std::vector<int>& chosen) {
  std::sort(chosen.begin(), chosen.end());
  double w = 0.0;
  for (int i : chosen) w += inst.weights[static_cast<size_t>(i)];
  return w;
}

inline bool lex_less(const std::vector<int>& a, const std::vector<int>& b) {
  return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end());
}

struct ExactState {
  const CoverInstance* inst;
  std::vector<int> order;          // candidate indices, sorted by (weight, index)
  std::vector<double> cheapest_cover;  // per point: min weight of a candidate covering it
  std::vector<int> path;
  std::vector<int> best;
  double best_weight = std::numeric_limits<double>::infinity();
};

inline void exact_dfs(ExactState& st, uint64_t covered, double weight) {
  const auto& inst = *st.inst;
  if ((covered & inst.universe()) == inst.universe()) {
    std::vector<int> sorted = st.path;
    const double w = canonical_weight(inst, sorted);
    if (w < st.best_weight || (w == st.best_weight && lex_less(sorted, st.best))) {
      st.best_weight = w;
      st.best = sorted;
    }
    return;
  }
  // admissible bound: any completion pays at least the cheapest cover of the
  // most expensive uncovered point
  double bound_extra = 0.0;
  int pivot = -1;
  for (int p = 0; p < inst.n_points; ++p) {
    if (covered >> p & 1) continue;
    bound_extra = std::max(bound_extra, st.cheapest_cover[static_cast<size_t>(p)]);
    if (pivot < 0) pivot = p;
  }
  if (weight + bound_extra > st.best_weight) return;

  for (int idx : st.order) {
    if (!(inst.coverage[static_cast<size_t>(idx)] >> pivot & 1)) continue;
    st.path.push_back(idx);
    exact_dfs(st, covered | inst.coverage[static_cast<size_t>(idx)],
              weight + inst.weights[static_cast<size_t>(idx)]);
    st.path.pop_back();
  }
}

}  // namespace detail

/// Dominance pruning: drop any candidate whose coverage is contained in
/// another's with weight no larger; ties resolve to the lower index.
/// Returns the kept candidate indices in ascending order.
inline std::vector<int> dominant_candidates(const CoverInstance& inst) {
  const int n = static_cast<int>(inst.coverage.size());
  std::vector<int> keep;
  for (int i = 0; i < n; ++i) {
    if (inst.coverage[static_cast<size_t>(i)] == 0) continue;
    bool dominated = false;
    for (int j = 0; j < n && !dominated; ++j) {
      if (j == i) continue;
      const bool superset = (inst.coverage[static_cast<size_t>(i)] &
                             inst.coverage[static_cast<size_t>(j)]) ==
                            inst.coverage[static_cast<size_t>(i)];
      if (!superset) continue;
      const bool strictly_bigger = inst.coverage[static_cast<size_t>(j)] !=
                                   inst.coverage[static_cast<size_t>(i)];
      const double wi = inst.weights[static_cast<size_t>(i)];
      const double wj = inst.weights[static_cast<size_t>(j)];
      if (strictly_bigger ? wj <= wi : (wj < wi || (wj == wi && j < i))) dominated = true;
    }
    if (!dominated) keep.push_back(i);
  }
  return keep;
}

/// Provably minimal-weight cover via branch-and-bound with dominance pruning
/// and deterministic (weight, lexicographic chosen set) tie-breaking.
inline CoverResult solve_cover_exact(const CoverInstance& inst) {
  if (inst.n_points < 0 || inst.n_points > 64) throw InputError("set cover supports up to 64 points");
  if (inst.n_points == 0) return {{}, 0.0, true};

  uint64_t reachable = 0;
  for (uint64_t c : inst.coverage) reachable |= c;
  if ((reachable & inst.universe()) != inst.universe())
    throw InfeasibleError("some point is covered by no candidate");

  detail::ExactState st;
  st.inst = &inst;
  const std::vector<int> kept = dominant_candidates(inst);
  st.order = kept;
  std::stable_sort(st.order.begin(), st.order.end(), [&](int a, int b) {
    return inst.weights[static_cast<size_t>(a)] < inst.weights[static_cast<size_t>(b)];
  });
  st.cheapest_cover.assign(static_cast<size_t>(inst.n_points),
                           std::numeric_limits<double>::infinity());
  for (int idx : kept)
    for (int p = 0; p < inst.n_points; ++p)
      if (inst.coverage[static_cast<size_t>(idx)] >> p & 1)
        st.cheapest_cover[static_cast<size_t>(p)] =
            std::min(st.cheapest_cover[static_cast<size_t>(p)], inst.weights[static_cast<size_t>(idx)]);

  detail::exact_dfs(st, 0, 0.0);
  CoverResult out;
  out.chosen = st.best;
  out.weight = detail::canonical_weight(inst, out.chosen);
  out.optimal = true;
  return out;
}

/// Standard weighted greedy: repeatedly take the candidate minimizing
/// weight per newly covered point (ties to the lower index).
inline CoverResult solve_cover_greedy(const CoverInstance& inst) {
  if (inst.n_points < 0 || inst.n_points > 64) throw InputError("set cover supports up to 64 points");
  CoverResult out;
  uint64_t covered = 0;
  while ((covered & inst.universe()) != inst.universe()) {
    int best = -1;
    double best_ratio = std::numeric_limits<double>::infinity();
    for (int i = 0; i < static_cast<int>(inst.coverage.size()); ++i) {
      const int gain = std::popcount(inst.coverage[static_cast<size_t>(i)] & ~covered);
      if (gain == 0) continue;
      const double ratio = inst.weights[static_cast<size_t>(i)] / gain;
      if (ratio < best_ratio) {
        best_ratio = ratio;
        best = i;
      }
    }
    if (best < 0) throw InfeasibleError("some point is covered by no candidate");
    out.chosen.push_back(best);
    covered |= inst.coverage[static_cast<size_t>(best)];
  }
  out.weight = detail::canonical_weight(inst, out.chosen);
  out.optimal = false;
  return out;
}

}  // namespace invpress
