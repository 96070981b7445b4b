// subemb/numerics.h

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

#ifndef SUBEMB_NUMERICS_H_
#define SUBEMB_NUMERICS_H_

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "subemb/common.h"

namespace subemb {

// Dense double-precision storage. All heavy lifting in this library runs on
// these two types; everything is row-major and contiguous.
using Vec = std::vector<double>;

class Mat {
 public:
  Mat() : rows_(0), cols_(0) {}
  Mat(int rows, int cols, double fill = 0.0)
      : rows_(rows), cols_(cols),
        data_(static_cast<size_t>(rows) * cols, fill) {}

  double &operator()(int r, int c) { return data_[Index(r, c)]; }
  double operator()(int r, int c) const { return data_[Index(r, c)]; }

  std::span<double> Row(int r) {
    return {data_.data() + static_cast<size_t>(r) * cols_,
            static_cast<size_t>(cols_)};
  }
  std::span<const double> Row(int r) const {
    return {data_.data() + static_cast<size_t>(r) * cols_,
            static_cast<size_t>(cols_)};
  }

  int NumRows() const { return rows_; }
  int NumCols() const { return cols_; }
  Vec &Data() { return data_; }
  const Vec &Data() const { return data_; }

  void SetZero() { std::fill(data_.begin(), data_.end(), 0.0); }

 private:
  size_t Index(int r, int c) const {
    return static_cast<size_t>(r) * cols_ + c;
  }
  int rows_, cols_;
  Vec data_;
};

double Dot(std::span<const double> a, std::span<const double> b);
double Norm(std::span<const double> v);
double SquaredDistance(std::span<const double> a, std::span<const double> b);

// y += alpha * x
void Axpy(double alpha, std::span<const double> x, std::span<double> y);
void Scale(double alpha, std::span<double> v);

// y = M x  and  y = M^T x  (y overwritten).
void MatVec(const Mat &m, std::span<const double> x, std::span<double> y);
void MatTVec(const Mat &m, std::span<const double> x, std::span<double> y);

// M += alpha * a b^T
void AddOuter(double alpha, std::span<const double> a,
              std::span<const double> b, Mat *m);

bool AllFinite(std::span<const double> v);

// Throws NumericError naming `what` if any entry is NaN or Inf.
void CheckFinite(std::span<const double> v, const std::string &what);
void CheckFinite(double v, const std::string &what);

// Returns v / ||v||. Zero-norm input is a hard error, never an epsilon
// floor.
Vec L2Normalize(std::span<const double> v);

// Backward rule of L2Normalize: maps an upstream gradient g (with respect to
// the unit output u) to the gradient with respect to the raw input,
//   (I - u u^T) g / ||v||.
// `unit` must be the normalized output and `norm` the pre-normalization norm.
Vec L2NormalizeBackward(std::span<const double> unit, double norm,
                        std::span<const double> upstream);

// Numerically stable log softmax (max-shift + log-sum-exp).
Vec LogSoftmax(std::span<const double> logits);

// exp(LogSoftmax(logits)); sums to one within 1e-12.
Vec Softmax(std::span<const double> logits);

// log(sum_i exp(x_i)) with max shift.
double LogSumExp(std::span<const double> x);

// Central-difference gradient oracle, (f(x+h e_i) - f(x-h e_i)) / 2h.
// Throws NumericError naming the offending coordinate if f returns a
// non-finite value.
Vec FiniteDiffGrad(const std::function<double(const Vec &)> &f, const Vec &x,
                   double h);

}  // namespace subemb

#endif  // SUBEMB_NUMERICS_H_
