#include "dsr/distance_transform.h"

#include <cmath>
#include <limits>
#include <vector>

#include "dsr/parallel.h"

namespace dsr {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Lower envelope of parabolas (q - p)^2 + f(p) over the finite samples of f.
// Squared distances stay integers, so the result is exact in double.
void envelope_1d(const std::vector<double>& f, std::vector<double>& out, std::vector<int>& v,
                 std::vector<double>& z) {
  const int n = static_cast<int>(f.size());
  int k = -1;
  for (int q = 0; q < n; ++q) {
    if (f[q] == kInf) continue;
    if (k < 0) {
      k = 0;
      v[0] = q;
      z[0] = -kInf;
      z[1] = kInf;
      continue;
    }
    auto meet = [&](int p) {
      return ((f[q] + double(q) * q) - (f[p] + double(p) * p)) / (2.0 * (q - p));
    };
    double s = meet(v[k]);
    while (s <= z[k]) s = meet(v[--k]);
    ++k;
    v[k] = q;
    z[k] = s;
    z[k + 1] = kInf;
  }
  if (k < 0) {
    std::fill(out.begin(), out.end(), kInf);
    return;
  }
  int j = 0;
  for (int q = 0; q < n; ++q) {
    while (z[j + 1] < q) ++j;
    const double dq = q - v[j];
    out[q] = dq * dq + f[v[j]];
  }
}

}  // namespace

DistanceField distance_transform(const BinaryMask& mask) {
  DSR_CHECK_INPUT(mask.channels == 1 && mask.width > 0 && mask.height > 0,
                  "distance transform needs a non-empty single-channel mask");
  const int w = mask.width, h = mask.height;
  DistanceField out;
  out.source_mask = mask;
  out.d = Image<double>(w, h);
  bool any = false;
  for (auto v : mask.data) any = any || v != 0;
  if (!any) {
    out.empty = true;
    std::fill(out.d.data.begin(), out.d.data.end(), std::hypot(double(w), double(h)));
    return out;
  }
  Image<double> sq(w, h);
  parallel_for(w, [&](int c) {
    std::vector<double> f(h), g(h), z(h + 1);
    std::vector<int> v(h);
    for (int r = 0; r < h; ++r) f[r] = mask(r, c) ? 0.0 : kInf;
    envelope_1d(f, g, v, z);
    for (int r = 0; r < h; ++r) sq(r, c) = g[r];
  });
  parallel_for(h, [&](int r) {
    std::vector<double> f(w), g(w), z(w + 1);
    std::vector<int> v(w);
    for (int c = 0; c < w; ++c) f[c] = sq(r, c);
    envelope_1d(f, g, v, z);
    for (int c = 0; c < w; ++c) out.d(r, c) = std::sqrt(g[c]);
  });
  return out;
}

}  // namespace dsr
