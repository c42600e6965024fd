#pragma once

#include "dagdec/dag.hpp"

namespace fixtures {

// Four-vertex fixture used across the suites; tokens 0/1/2 are a/b/<eos>.
inline dagdec::Dag d1() {
  dagdec::Mat p(4, 3);
  p << 0.9, 0.05, 0.05,
       0.2, 0.7, 0.1,
       0.3, 0.6, 0.1,
       0.05, 0.05, 0.9;
  dagdec::Mat e = dagdec::Mat::Zero(4, 4);
  e(0, 1) = 0.5;
  e(0, 2) = 0.3;
  e(0, 3) = 0.2;
  e(1, 2) = 0.55;
  e(1, 3) = 0.45;
  e(2, 3) = 1.0;
  return dagdec::Dag::from_linear(p, e);
}

inline dagdec::Dag chain(int L, int V) {
  dagdec::Mat p = dagdec::Mat::Zero(L, V);
  for (int u = 0; u < L; ++u) {
    for (int w = 0; w < V; ++w) p(u, w) = (w == u % V) ? 0.7 : 0.3 / (V - 1);
  }
  dagdec::Mat e = dagdec::Mat::Zero(L, L);
  for (int u = 0; u + 1 < L; ++u) e(u, u + 1) = 1.0;
  return dagdec::Dag::from_linear(p, e);
}

}  // namespace fixtures
