// core/src/numerics.cc

// Copyright 2026  The subemb authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#include "subemb/numerics.h"

#include <algorithm>
#include <cmath>

namespace subemb {

double Dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size())
    throw DimensionError("Dot: size mismatch " + std::to_string(a.size()) +
                         " vs " + std::to_string(b.size()));
  double acc = 0.0;
  for (size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

double Norm(std::span<const double> v) { return std::sqrt(Dot(v, v)); }

double SquaredDistance(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size())
    throw DimensionError("SquaredDistance: size mismatch");
  double acc = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    acc += d * d;
  }
  return acc;
}

void Axpy(double alpha, std::span<const double> x, std::span<double> y) {
  if (x.size() != y.size()) throw DimensionError("Axpy: size mismatch");
  for (size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

void Scale(double alpha, std::span<double> v) {
  for (double &x : v) x *= alpha;
}

void MatVec(const Mat &m, std::span<const double> x, std::span<double> y) {
  if (static_cast<int>(x.size()) != m.NumCols() ||
      static_cast<int>(y.size()) != m.NumRows())
    throw DimensionError("MatVec: size mismatch");
  for (int r = 0; r < m.NumRows(); ++r) y[r] = Dot(m.Row(r), x);
}

void MatTVec(const Mat &m, std::span<const double> x, std::span<double> y) {
  if (static_cast<int>(x.size()) != m.NumRows() ||
      static_cast<int>(y.size()) != m.NumCols())
    throw DimensionError("MatTVec: size mismatch");
  std::fill(y.begin(), y.end(), 0.0);
  for (int r = 0; r < m.NumRows(); ++r) {
    const double xr = x[r];
    if (xr == 0.0) continue;
    auto row = m.Row(r);
    for (int c = 0; c < m.NumCols(); ++c) y[c] += xr * row[c];
  }
}

void AddOuter(double alpha, std::span<const double> a,
              std::span<const double> b, Mat *m) {
  if (static_cast<int>(a.size()) != m->NumRows() ||
      static_cast<int>(b.size()) != m->NumCols())
    throw DimensionError("AddOuter: size mismatch");
  for (int r = 0; r < m->NumRows(); ++r) {
    const double ar = alpha * a[r];
    if (ar == 0.0) continue;
    auto row = m->Row(r);
    for (int c = 0; c < m->NumCols(); ++c) row[c] += ar * b[c];
  }
}

bool AllFinite(std::span<const double> v) {
  for (double x : v)
    if (!std::isfinite(x)) return false;
  return true;
}

void CheckFinite(std::span<const double> v, const std::string &what) {
  for (size_t i = 0; i < v.size(); ++i) {
    if (!std::isfinite(v[i]))
      throw NumericError("non-finite value in " + what + " at index " +
                         std::to_string(i));
  }
}

void CheckFinite(double v, const std::string &what) {
  if (!std::isfinite(v)) throw NumericError("non-finite value in " + what);
}

Vec L2Normalize(std::span<const double> v) {
  const double n = Norm(v);
  if (n == 0.0) throw NumericError("L2Normalize: zero-norm input");
  if (!std::isfinite(n)) throw NumericError("L2Normalize: non-finite input");
  Vec out(v.begin(), v.end());
  Scale(1.0 / n, out);
  return out;
}

Vec L2NormalizeBackward(std::span<const double> unit, double norm,
                        std::span<const double> upstream) {
  if (unit.size() != upstream.size())
    throw DimensionError("L2NormalizeBackward: size mismatch");
  if (norm <= 0.0) throw NumericError("L2NormalizeBackward: bad norm");
  const double proj = Dot(unit, upstream);
  Vec out(unit.size());
  for (size_t i = 0; i < unit.size(); ++i)
    out[i] = (upstream[i] - proj * unit[i]) / norm;
  return out;
}

double LogSumExp(std::span<const double> x) {
  if (x.empty()) throw DimensionError("LogSumExp: empty input");
  const double m = *std::max_element(x.begin(), x.end());
  double acc = 0.0;
  for (double xi : x) acc += std::exp(xi - m);
  return m + std::log(acc);
}

Vec LogSoftmax(std::span<const double> logits) {
  CheckFinite(logits, "LogSoftmax input");
  const double lse = LogSumExp(logits);
  Vec out(logits.size());
  for (size_t i = 0; i < logits.size(); ++i) out[i] = logits[i] - lse;
  return out;
}

Vec Softmax(std::span<const double> logits) {
  Vec out = LogSoftmax(logits);
  for (double &x : out) x = std::exp(x);
  return out;
}

Vec FiniteDiffGrad(const std::function<double(const Vec &)> &f, const Vec &x,
                   double h) {
  if (h <= 0.0) throw ConfigError("FiniteDiffGrad: step must be positive");
  Vec grad(x.size());
  Vec probe = x;
  for (size_t i = 0; i < x.size(); ++i) {
    const double saved = probe[i];
    probe[i] = saved + h;
    const double fp = f(probe);
    probe[i] = saved - h;
    const double fm = f(probe);
    probe[i] = saved;
    if (!std::isfinite(fp) || !std::isfinite(fm))
      throw NumericError("FiniteDiffGrad: non-finite value at coordinate " +
                         std::to_string(i));
    grad[i] = (fp - fm) / (2.0 * h);
  }
  return grad;
}

}  // namespace subemb
