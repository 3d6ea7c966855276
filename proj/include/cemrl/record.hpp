#pragma once

#include <vector>

namespace cemrl {

/// One evaluation checkpoint of a run.
struct RunRecord {
  long total_steps = 0;  // training env steps so far; reporting rollouts excluded
  int generation = 0;
  double eval_mean = 0.0;
  std::vector<double> returns;  // raw per-episode returns of the reporting rollouts
  double wall_time_s = 0.0;
  double reuse_fraction = 0.0;
  double epsilon = 0.0;
  long report_steps = 0;        // env steps spent by the reporting rollouts, not counted above
  double similarity = 0.0;      // average pairwise population similarity, CEM family only
};

}  // namespace cemrl
