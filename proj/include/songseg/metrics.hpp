// SPDX-License-Identifier: Apache-2.0
//
// Boundary hit-rate F-measures at 0.5 s / 3 s tolerance and frame-wise label
// accuracy, with corpus-level aggregation.
#pragma once

#include <string>
#include <vector>

#include "songseg/annotation.hpp"

namespace songseg {

struct BoundaryPRF {
  double precision = 0.0;
  double recall = 0.0;
  double f = 0.0;
  int matched = 0;
  int ref_count = 0;
  int est_count = 0;
};

// Interior boundary times: segment starts excluding 0.0 and the end time.
// include_endpoints switches to the inclusive variant.
std::vector<double> boundary_times(const Annotation& ann, bool include_endpoints = false);

// Maximum-cardinality one-to-one matching between est and ref boundaries
// under |t_e - t_r| <= tol. Empty/empty scores F = 1; exactly one empty
// scores 0.
BoundaryPRF boundary_f(const Annotation& ref, const Annotation& est, double tol,
                       bool include_endpoints = false);

// Label agreement sampled every `step` seconds over [0, ref.end). Callers are
// expected to pass annotations already run through merge_eval_labels.
double frame_acc(const Annotation& ref, const Annotation& est, double step = 0.1);

struct TrackMetrics {
  std::string id;
  BoundaryPRF hr05;
  BoundaryPRF hr3;
  double acc = 0.0;
};

struct MetricReport {
  std::vector<TrackMetrics> tracks;
  TrackMetrics mean;  // unweighted across tracks, id = "mean"
};

struct EvalPair {
  std::string id;
  const Annotation* ref = nullptr;
  const Annotation* est = nullptr;
};

// Boundary metrics use the annotations as given; accuracy first applies
// merge_eval_labels to both sides.
MetricReport evaluate_corpus(const std::vector<EvalPair>& pairs);

// Line-per-track text form plus a summary block; field names are stable.
std::string format_report(const MetricReport& report);

}  // namespace songseg
