// SPDX-License-Identifier: Apache-2.0
#include "songseg/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace songseg {

std::vector<double> boundary_times(const Annotation& ann, bool include_endpoints) {
  std::vector<double> out;
  for (const auto& s : ann.segments) {
    if (!include_endpoints && s.start <= 1e-9) continue;
    out.push_back(s.start);
  }
  if (include_endpoints) {
    if (out.empty() || out.front() > 1e-9) out.insert(out.begin(), 0.0);
    out.push_back(ann.end);
  }
  return out;
}

namespace {

// Augmenting-path maximum matching on the tolerance graph.
struct ToleranceMatcher {
  const std::vector<double>& est;
  const std::vector<double>& ref;
  double tol;
  std::vector<int> est_match;  // index into ref or -1
  std::vector<int> ref_match;
  std::vector<char> visited;

  bool edge(std::size_t e, std::size_t r) const { return std::abs(est[e] - ref[r]) <= tol + 1e-12; }

  bool augment(std::size_t e) {
    for (std::size_t r = 0; r < ref.size(); ++r) {
      if (!edge(e, r) || visited[r]) continue;
      visited[r] = 1;
      if (ref_match[r] < 0 || augment(static_cast<std::size_t>(ref_match[r]))) {
        ref_match[r] = static_cast<int>(e);
        est_match[e] = static_cast<int>(r);
        return true;
      }
    }
    return false;
  }

  int solve() {
    est_match.assign(est.size(), -1);
    ref_match.assign(ref.size(), -1);
    int matched = 0;
    for (std::size_t e = 0; e < est.size(); ++e) {
      visited.assign(ref.size(), 0);
      if (augment(e)) ++matched;
    }
    return matched;
  }
};

}  // namespace

BoundaryPRF boundary_f(const Annotation& ref, const Annotation& est, double tol,
                       bool include_endpoints) {
  ref.validate();
  est.validate();
  const auto ref_b = boundary_times(ref, include_endpoints);
  const auto est_b = boundary_times(est, include_endpoints);

  BoundaryPRF r;
  r.ref_count = static_cast<int>(ref_b.size());
  r.est_count = static_cast<int>(est_b.size());
  if (ref_b.empty() && est_b.empty()) {
    r.precision = r.recall = r.f = 1.0;
    return r;
  }
  if (ref_b.empty() || est_b.empty()) return r;  // zeros

  ToleranceMatcher m{est_b, ref_b, tol, {}, {}, {}};
  r.matched = m.solve();
  r.precision = static_cast<double>(r.matched) / static_cast<double>(est_b.size());
  r.recall = static_cast<double>(r.matched) / static_cast<double>(ref_b.size());
  if (r.precision + r.recall > 0.0)
    r.f = 2.0 * r.precision * r.recall / (r.precision + r.recall);
  return r;
}

double frame_acc(const Annotation& ref, const Annotation& est, double step) {
  ref.validate();
  est.validate();
  const long samples = static_cast<long>(std::ceil(ref.end / step - 1e-9));
  if (samples <= 0) return 1.0;
  long hits = 0;
  for (long k = 0; k < samples; ++k) {
    const double t = static_cast<double>(k) * step;
    if (ref.label_at(t) == est.label_at(t)) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(samples);
}

MetricReport evaluate_corpus(const std::vector<EvalPair>& pairs) {
  if (pairs.empty()) fail(Errc::empty_corpus, "no (ref, est) pairs");
  MetricReport report;
  report.tracks.reserve(pairs.size());
  for (const auto& p : pairs) {
    TrackMetrics tm;
    tm.id = p.id;
    tm.hr05 = boundary_f(*p.ref, *p.est, 0.5);
    tm.hr3 = boundary_f(*p.ref, *p.est, 3.0);
    tm.acc = frame_acc(merge_eval_labels(*p.ref), merge_eval_labels(*p.est));
    report.tracks.push_back(std::move(tm));
  }
  TrackMetrics& mean = report.mean;
  mean.id = "mean";
  const double inv = 1.0 / static_cast<double>(report.tracks.size());
  for (const auto& t : report.tracks) {
    mean.hr05.precision += t.hr05.precision * inv;
    mean.hr05.recall += t.hr05.recall * inv;
    mean.hr05.f += t.hr05.f * inv;
    mean.hr05.matched += t.hr05.matched;
    mean.hr05.ref_count += t.hr05.ref_count;
    mean.hr05.est_count += t.hr05.est_count;
    mean.hr3.precision += t.hr3.precision * inv;
    mean.hr3.recall += t.hr3.recall * inv;
    mean.hr3.f += t.hr3.f * inv;
    mean.hr3.matched += t.hr3.matched;
    mean.hr3.ref_count += t.hr3.ref_count;
    mean.hr3.est_count += t.hr3.est_count;
    mean.acc += t.acc * inv;
  }
  return report;
}

namespace {

void format_track(std::string& out, const TrackMetrics& t) {
  char buf[512];
  std::snprintf(buf, sizeof(buf),
                "track=%s hr05_p=%.6f hr05_r=%.6f hr05_f=%.6f hr3_p=%.6f hr3_r=%.6f hr3_f=%.6f "
                "acc=%.6f matched05=%d matched3=%d ref=%d est=%d\n",
                t.id.c_str(), t.hr05.precision, t.hr05.recall, t.hr05.f, t.hr3.precision,
                t.hr3.recall, t.hr3.f, t.acc, t.hr05.matched, t.hr3.matched, t.hr05.ref_count,
                t.hr05.est_count);
  out += buf;
}

}  // namespace

std::string format_report(const MetricReport& report) {
  std::string out;
  for (const auto& t : report.tracks) format_track(out, t);
  char buf[256];
  std::snprintf(buf, sizeof(buf),
                "summary tracks=%zu hr05_f=%.6f hr3_f=%.6f acc=%.6f\n",
                report.tracks.size(), report.mean.hr05.f, report.mean.hr3.f, report.mean.acc);
  out += buf;
  return out;
}

}  // namespace songseg
