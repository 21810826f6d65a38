// Copyright (c) 2026 The synthasr Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "synthasr/nn/ops.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <limits>

#include "synthasr/error.hpp"

namespace synthasr::nn {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMat>;
using MutMap = Eigen::Map<RowMat>;

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kEps = 1e-7;

[[noreturn]] void ShapeError(const char* op, const std::string& detail) {
  throw Error(ErrorCode::kShapeMismatch, std::string(op) + ": " + detail);
}

struct Dims {
  std::size_t r;
  std::size_t c;
};

Dims Dims2(Var v, const char* op) {
  const auto& s = v.shape();
  if (s.size() != 2) ShapeError(op, "expected a 2-D tensor, got " + ShapeString(s));
  return {s[0], s[1]};
}

ConstMap View(const std::vector<double>& v, std::size_t r, std::size_t c) {
  return ConstMap(v.data(), static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
}

MutMap View(std::vector<double>& v, std::size_t r, std::size_t c) {
  return MutMap(v.data(), static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
}

bool Needs(Tape& t, std::size_t id) { return t.node(id).requires_grad; }

void RequireSameShape(Var a, Var b, const char* op) {
  if (a.shape() != b.shape()) {
    ShapeError(op, ShapeString(a.shape()) + " vs " + ShapeString(b.shape()));
  }
}

// Elementwise unary op; `deriv(x, y)` returns dy/dx.
template <class F, class D>
Var Unary(Var a, F f, D deriv) {
  Tape& t = *a.tape();
  std::vector<double> y(a.size());
  const auto& x = a.value();
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = f(x[i]);
  const std::size_t ia = a.id();
  return t.Push(a.shape(), std::move(y), {a}, [ia, deriv](Tape& tp, std::size_t self) {
    const auto& g = tp.node(self).grad;
    const auto& yv = tp.node(self).value;
    const auto& xv = tp.node(ia).value;
    auto& ga = tp.GradOf(ia);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * deriv(xv[i], yv[i]);
  });
}

double LogSumExp(double a, double b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  const double m = std::max(a, b);
  return m + std::log(std::exp(a - m) + std::exp(b - m));
}

}  // namespace

Var MatMul(Var a, Var b) {
  const auto [m, k] = Dims2(a, "matmul");
  const auto [k2, n] = Dims2(b, "matmul");
  if (k != k2) ShapeError("matmul", ShapeString(a.shape()) + " x " + ShapeString(b.shape()));
  std::vector<double> y(m * n);
  View(y, m, n).noalias() = View(a.value(), m, k) * View(b.value(), k, n);
  const auto ia = a.id(), ib = b.id();
  return a.tape()->Push({m, n}, std::move(y), {a, b},
                        [ia, ib, m = m, k = k, n = n](Tape& t, std::size_t self) {
                          const auto g = View(t.node(self).grad, m, n);
                          if (Needs(t, ia)) {
                            View(t.GradOf(ia), m, k).noalias() +=
                                g * View(t.node(ib).value, k, n).transpose();
                          }
                          if (Needs(t, ib)) {
                            View(t.GradOf(ib), k, n).noalias() +=
                                View(t.node(ia).value, m, k).transpose() * g;
                          }
                        });
}

Var MatMulNT(Var a, Var b) {
  const auto [m, k] = Dims2(a, "matmul_nt");
  const auto [n, k2] = Dims2(b, "matmul_nt");
  if (k != k2) {
    ShapeError("matmul_nt", ShapeString(a.shape()) + " x " + ShapeString(b.shape()) + "^T");
  }
  std::vector<double> y(m * n);
  View(y, m, n).noalias() = View(a.value(), m, k) * View(b.value(), n, k).transpose();
  const auto ia = a.id(), ib = b.id();
  return a.tape()->Push({m, n}, std::move(y), {a, b},
                        [ia, ib, m = m, k = k, n = n](Tape& t, std::size_t self) {
                          const auto g = View(t.node(self).grad, m, n);
                          if (Needs(t, ia)) {
                            View(t.GradOf(ia), m, k).noalias() += g * View(t.node(ib).value, n, k);
                          }
                          if (Needs(t, ib)) {
                            View(t.GradOf(ib), n, k).noalias() +=
                                g.transpose() * View(t.node(ia).value, m, k);
                          }
                        });
}

Var Add(Var a, Var b) {
  RequireSameShape(a, b, "add");
  std::vector<double> y(a.value());
  const auto& bv = b.value();
  for (std::size_t i = 0; i < y.size(); ++i) y[i] += bv[i];
  const auto ia = a.id(), ib = b.id();
  return a.tape()->Push(a.shape(), std::move(y), {a, b}, [ia, ib](Tape& t, std::size_t self) {
    const auto& g = t.node(self).grad;
    for (auto id : {ia, ib}) {
      if (!Needs(t, id)) continue;
      auto& gx = t.GradOf(id);
      for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i];
    }
  });
}

Var AddRow(Var a, Var row) {
  const auto [m, n] = Dims2(a, "add_row");
  if (row.size() != n) {
    ShapeError("add_row", ShapeString(a.shape()) + " + row " + ShapeString(row.shape()));
  }
  std::vector<double> y(a.value());
  const auto& rv = row.value();
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) y[i * n + j] += rv[j];
  }
  const auto ia = a.id(), ir = row.id();
  return a.tape()->Push(a.shape(), std::move(y), {a, row},
                        [ia, ir, m = m, n = n](Tape& t, std::size_t self) {
                          const auto& g = t.node(self).grad;
                          if (Needs(t, ia)) {
                            auto& ga = t.GradOf(ia);
                            for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
                          }
                          if (Needs(t, ir)) {
                            auto& gr = t.GradOf(ir);
                            for (std::size_t i = 0; i < m; ++i) {
                              for (std::size_t j = 0; j < n; ++j) gr[j] += g[i * n + j];
                            }
                          }
                        });
}

Var Sub(Var a, Var b) {
  RequireSameShape(a, b, "sub");
  std::vector<double> y(a.value());
  const auto& bv = b.value();
  for (std::size_t i = 0; i < y.size(); ++i) y[i] -= bv[i];
  const auto ia = a.id(), ib = b.id();
  return a.tape()->Push(a.shape(), std::move(y), {a, b}, [ia, ib](Tape& t, std::size_t self) {
    const auto& g = t.node(self).grad;
    if (Needs(t, ia)) {
      auto& ga = t.GradOf(ia);
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
    }
    if (Needs(t, ib)) {
      auto& gb = t.GradOf(ib);
      for (std::size_t i = 0; i < g.size(); ++i) gb[i] -= g[i];
    }
  });
}

Var Mul(Var a, Var b) {
  RequireSameShape(a, b, "mul");
  std::vector<double> y(a.value());
  const auto& bv = b.value();
  for (std::size_t i = 0; i < y.size(); ++i) y[i] *= bv[i];
  const auto ia = a.id(), ib = b.id();
  return a.tape()->Push(a.shape(), std::move(y), {a, b}, [ia, ib](Tape& t, std::size_t self) {
    const auto& g = t.node(self).grad;
    if (Needs(t, ia)) {
      auto& ga = t.GradOf(ia);
      const auto& bv2 = t.node(ib).value;
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * bv2[i];
    }
    if (Needs(t, ib)) {
      auto& gb = t.GradOf(ib);
      const auto& av = t.node(ia).value;
      for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * av[i];
    }
  });
}

Var Scale(Var a, double c) {
  return Unary(a, [c](double x) { return c * x; }, [c](double, double) { return c; });
}

Var AddScalar(Var a, double c) {
  return Unary(a, [c](double x) { return x + c; }, [](double, double) { return 1.0; });
}

Var Sigmoid(Var a) {
  return Unary(
      a,
      [](double x) {
        if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
        const double e = std::exp(x);
        return e / (1.0 + e);
      },
      [](double, double y) { return y * (1.0 - y); });
}

Var Tanh(Var a) {
  return Unary(a, [](double x) { return std::tanh(x); },
               [](double, double y) { return 1.0 - y * y; });
}

Var Relu(Var a) {
  return Unary(a, [](double x) { return x > 0.0 ? x : 0.0; },
               [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

Var Exp(Var a) {
  return Unary(a, [](double x) { return std::exp(x); }, [](double, double y) { return y; });
}

Var Log(Var a) {
  return Unary(a, [](double x) { return std::log(x); },
               [](double x, double) { return 1.0 / x; });
}

Var Softmax(Var a) {
  const auto [m, n] = Dims2(a, "softmax");
  std::vector<double> y(a.value());
  for (std::size_t i = 0; i < m; ++i) {
    double* row = y.data() + i * n;
    const double mx = *std::max_element(row, row + n);
    double s = 0.0;
    for (std::size_t j = 0; j < n; ++j) s += (row[j] = std::exp(row[j] - mx));
    for (std::size_t j = 0; j < n; ++j) row[j] /= s;
  }
  const auto ia = a.id();
  return a.tape()->Push(a.shape(), std::move(y), {a}, [ia, m = m, n = n](Tape& t, std::size_t self) {
    const auto& g = t.node(self).grad;
    const auto& yv = t.node(self).value;
    auto& ga = t.GradOf(ia);
    for (std::size_t i = 0; i < m; ++i) {
      double dot = 0.0;
      for (std::size_t j = 0; j < n; ++j) dot += g[i * n + j] * yv[i * n + j];
      for (std::size_t j = 0; j < n; ++j) ga[i * n + j] += yv[i * n + j] * (g[i * n + j] - dot);
    }
  });
}

Var LogSoftmax(Var a) {
  const auto [m, n] = Dims2(a, "log_softmax");
  std::vector<double> y(a.value());
  for (std::size_t i = 0; i < m; ++i) {
    double* row = y.data() + i * n;
    const double mx = *std::max_element(row, row + n);
    double s = 0.0;
    for (std::size_t j = 0; j < n; ++j) s += std::exp(row[j] - mx);
    const double lse = mx + std::log(s);
    for (std::size_t j = 0; j < n; ++j) row[j] -= lse;
  }
  const auto ia = a.id();
  return a.tape()->Push(a.shape(), std::move(y), {a}, [ia, m = m, n = n](Tape& t, std::size_t self) {
    const auto& g = t.node(self).grad;
    const auto& yv = t.node(self).value;
    auto& ga = t.GradOf(ia);
    for (std::size_t i = 0; i < m; ++i) {
      double gs = 0.0;
      for (std::size_t j = 0; j < n; ++j) gs += g[i * n + j];
      for (std::size_t j = 0; j < n; ++j) {
        ga[i * n + j] += g[i * n + j] - std::exp(yv[i * n + j]) * gs;
      }
    }
  });
}

Var ConcatCols(std::span<const Var> parts) {
  Require(!parts.empty(), "concat_cols: no inputs");
  const std::size_t m = Dims2(parts[0], "concat_cols").r;
  std::vector<std::size_t> offsets;
  std::size_t total = 0;
  for (const auto& p : parts) {
    const auto d = Dims2(p, "concat_cols");
    if (d.r != m) ShapeError("concat_cols", "row counts differ: " + std::to_string(m) + " vs " + std::to_string(d.r));
    offsets.push_back(total);
    total += d.c;
  }
  std::vector<double> y(m * total);
  std::vector<std::size_t> ids, widths;
  for (std::size_t p = 0; p < parts.size(); ++p) {
    const std::size_t c = parts[p].cols();
    const auto& v = parts[p].value();
    for (std::size_t i = 0; i < m; ++i) {
      std::copy_n(v.begin() + static_cast<std::ptrdiff_t>(i * c), c,
                  y.begin() + static_cast<std::ptrdiff_t>(i * total + offsets[p]));
    }
    ids.push_back(parts[p].id());
    widths.push_back(c);
  }
  return parts[0].tape()->Push(
      {m, total}, std::move(y), parts,
      [ids, widths, offsets, m, total](Tape& t, std::size_t self) {
        const auto& g = t.node(self).grad;
        for (std::size_t p = 0; p < ids.size(); ++p) {
          if (!Needs(t, ids[p])) continue;
          auto& gp = t.GradOf(ids[p]);
          for (std::size_t i = 0; i < m; ++i) {
            for (std::size_t j = 0; j < widths[p]; ++j) {
              gp[i * widths[p] + j] += g[i * total + offsets[p] + j];
            }
          }
        }
      });
}

Var ConcatRows(std::span<const Var> parts) {
  Require(!parts.empty(), "concat_rows: no inputs");
  const std::size_t n = Dims2(parts[0], "concat_rows").c;
  std::size_t rows = 0;
  std::vector<std::size_t> ids, offsets;
  for (const auto& p : parts) {
    const auto d = Dims2(p, "concat_rows");
    if (d.c != n) ShapeError("concat_rows", "column counts differ: " + std::to_string(n) + " vs " + std::to_string(d.c));
    offsets.push_back(rows * n);
    ids.push_back(p.id());
    rows += d.r;
  }
  std::vector<double> y;
  y.reserve(rows * n);
  for (const auto& p : parts) y.insert(y.end(), p.value().begin(), p.value().end());
  return parts[0].tape()->Push({rows, n}, std::move(y), parts,
                               [ids, offsets](Tape& t, std::size_t self) {
                                 const auto& g = t.node(self).grad;
                                 for (std::size_t p = 0; p < ids.size(); ++p) {
                                   if (!Needs(t, ids[p])) continue;
                                   auto& gp = t.GradOf(ids[p]);
                                   for (std::size_t i = 0; i < gp.size(); ++i) gp[i] += g[offsets[p] + i];
                                 }
                               });
}

Var SliceCols(Var a, std::size_t begin, std::size_t end) {
  const auto [m, n] = Dims2(a, "slice_cols");
  if (begin > end || end > n) {
    ShapeError("slice_cols", "range [" + std::to_string(begin) + "," + std::to_string(end) +
                                 ") outside " + ShapeString(a.shape()));
  }
  const std::size_t w = end - begin;
  std::vector<double> y(m * w);
  const auto& v = a.value();
  for (std::size_t i = 0; i < m; ++i) {
    std::copy_n(v.begin() + static_cast<std::ptrdiff_t>(i * n + begin), w,
                y.begin() + static_cast<std::ptrdiff_t>(i * w));
  }
  const auto ia = a.id();
  return a.tape()->Push({m, w}, std::move(y), {a},
                        [ia, m = m, n = n, w, begin](Tape& t, std::size_t self) {
                          const auto& g = t.node(self).grad;
                          auto& ga = t.GradOf(ia);
                          for (std::size_t i = 0; i < m; ++i) {
                            for (std::size_t j = 0; j < w; ++j) ga[i * n + begin + j] += g[i * w + j];
                          }
                        });
}

Var SliceRows(Var a, std::size_t begin, std::size_t end) {
  const auto [m, n] = Dims2(a, "slice_rows");
  if (begin > end || end > m) {
    ShapeError("slice_rows", "range [" + std::to_string(begin) + "," + std::to_string(end) +
                                 ") outside " + ShapeString(a.shape()));
  }
  std::vector<double> y(a.value().begin() + static_cast<std::ptrdiff_t>(begin * n),
                        a.value().begin() + static_cast<std::ptrdiff_t>(end * n));
  const auto ia = a.id();
  const std::size_t off = begin * n;
  return a.tape()->Push({end - begin, n}, std::move(y), {a}, [ia, off](Tape& t, std::size_t self) {
    const auto& g = t.node(self).grad;
    auto& ga = t.GradOf(ia);
    for (std::size_t i = 0; i < g.size(); ++i) ga[off + i] += g[i];
  });
}

Var Reshape(Var a, Shape shape) {
  if (NumElements(shape) != a.size()) {
    ShapeError("reshape", ShapeString(a.shape()) + " -> " + ShapeString(shape));
  }
  const auto ia = a.id();
  return a.tape()->Push(std::move(shape), a.value(), {a}, [ia](Tape& t, std::size_t self) {
    const auto& g = t.node(self).grad;
    auto& ga = t.GradOf(ia);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
  });
}

Var Transpose(Var a) {
  const auto [m, n] = Dims2(a, "transpose");
  std::vector<double> y(m * n);
  View(y, n, m) = View(a.value(), m, n).transpose();
  const auto ia = a.id();
  return a.tape()->Push({n, m}, std::move(y), {a}, [ia, m = m, n = n](Tape& t, std::size_t self) {
    View(t.GradOf(ia), m, n) += View(t.node(self).grad, n, m).transpose();
  });
}

Var GatherRows(Var table, std::span<const int> ids) {
  const auto [v, d] = Dims2(table, "gather_rows");
  std::vector<int> idx(ids.begin(), ids.end());
  std::vector<double> y(idx.size() * d);
  const auto& tv = table.value();
  for (std::size_t i = 0; i < idx.size(); ++i) {
    Require(idx[i] >= 0 && static_cast<std::size_t>(idx[i]) < v,
            "gather_rows: index " + std::to_string(idx[i]) + " outside table of " +
                std::to_string(v) + " rows");
    std::copy_n(tv.begin() + static_cast<std::ptrdiff_t>(idx[i] * d), d,
                y.begin() + static_cast<std::ptrdiff_t>(i * d));
  }
  const auto it = table.id();
  return table.tape()->Push({idx.size(), d}, std::move(y), {table},
                            [it, idx, d = d](Tape& t, std::size_t self) {
                              const auto& g = t.node(self).grad;
                              auto& gt = t.GradOf(it);
                              for (std::size_t i = 0; i < idx.size(); ++i) {
                                for (std::size_t j = 0; j < d; ++j) gt[idx[i] * d + j] += g[i * d + j];
                              }
                            });
}

Var Sum(Var a) {
  double s = 0.0;
  for (double x : a.value()) s += x;
  const auto ia = a.id();
  return a.tape()->Push({1, 1}, {s}, {a}, [ia](Tape& t, std::size_t self) {
    const double g = t.node(self).grad[0];
    for (double& x : t.GradOf(ia)) x += g;
  });
}

Var Mean(Var a) { return Scale(Sum(a), 1.0 / static_cast<double>(a.size())); }

Var Conv1d(Var x, Var w, Var b, std::size_t pad_left, std::size_t pad_right,
           double left_value, double right_value) {
  const auto [len, cin] = Dims2(x, "conv1d");
  const auto [cout, ck] = Dims2(w, "conv1d");
  if (cin == 0 || ck % cin != 0) {
    ShapeError("conv1d", "weight " + ShapeString(w.shape()) + " incompatible with input " +
                             ShapeString(x.shape()));
  }
  const std::size_t k = ck / cin;
  const std::size_t padded = len + pad_left + pad_right;
  if (padded < k) ShapeError("conv1d", "input shorter than the kernel");
  if (b.valid() && b.size() != cout) ShapeError("conv1d", "bias size mismatch");
  const std::size_t tout = padded - k + 1;
  std::vector<double> cols(tout * ck);
  const auto& xv = x.value();
  for (std::size_t t = 0; t < tout; ++t) {
    for (std::size_t ci = 0; ci < cin; ++ci) {
      for (std::size_t j = 0; j < k; ++j) {
        const std::size_t p = t + j;
        double v;
        if (p < pad_left) {
          v = left_value;
        } else if (p - pad_left < len) {
          v = xv[(p - pad_left) * cin + ci];
        } else {
          v = right_value;
        }
        cols[t * ck + ci * k + j] = v;
      }
    }
  }
  std::vector<double> y(tout * cout);
  View(y, tout, cout).noalias() = View(cols, tout, ck) * View(w.value(), cout, ck).transpose();
  if (b.valid()) {
    const auto& bv = b.value();
    for (std::size_t t = 0; t < tout; ++t) {
      for (std::size_t c = 0; c < cout; ++c) y[t * cout + c] += bv[c];
    }
  }
  const auto ix = x.id(), iw = w.id();
  const bool has_b = b.valid();
  const auto ib = has_b ? b.id() : 0;
  return x.tape()->Push(
      {tout, cout}, std::move(y), {x, w, b},
      [ix, iw, ib, has_b, cols = std::move(cols), tout, ck, cout = cout, cin = cin, k, len = len,
       pad_left](Tape& t, std::size_t self) {
        const auto g = View(t.node(self).grad, tout, cout);
        if (Needs(t, iw)) View(t.GradOf(iw), cout, ck).noalias() += g.transpose() * View(cols, tout, ck);
        if (has_b && Needs(t, ib)) {
          auto& gb = t.GradOf(ib);
          for (std::size_t r = 0; r < tout; ++r) {
            for (std::size_t c = 0; c < cout; ++c) gb[c] += g(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
          }
        }
        if (Needs(t, ix)) {
          RowMat dcols = g * View(t.node(iw).value, cout, ck);
          auto& gx = t.GradOf(ix);
          for (std::size_t r = 0; r < tout; ++r) {
            for (std::size_t ci = 0; ci < cin; ++ci) {
              for (std::size_t j = 0; j < k; ++j) {
                const std::size_t p = r + j;
                if (p < pad_left || p - pad_left >= len) continue;
                gx[(p - pad_left) * cin + ci] +=
                    dcols(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(ci * k + j));
              }
            }
          }
        }
      });
}

Var Conv2d(Var x, Var w, Var b, std::size_t kernel, std::size_t stride, std::size_t pad) {
  const auto& xs = x.shape();
  if (xs.size() != 3) ShapeError("conv2d", "expected [C,H,W] input, got " + ShapeString(xs));
  const std::size_t c = xs[0], h = xs[1], wd = xs[2];
  const auto [cout, ckk] = Dims2(w, "conv2d");
  if (ckk != c * kernel * kernel) {
    ShapeError("conv2d", "weight " + ShapeString(w.shape()) + " incompatible with input " +
                             ShapeString(xs) + " and kernel " + std::to_string(kernel));
  }
  Require(stride >= 1, "conv2d: stride must be >= 1");
  if (h + 2 * pad < kernel || wd + 2 * pad < kernel) ShapeError("conv2d", "input smaller than kernel");
  if (b.valid() && b.size() != cout) ShapeError("conv2d", "bias size mismatch");
  const std::size_t ho = (h + 2 * pad - kernel) / stride + 1;
  const std::size_t wo = (wd + 2 * pad - kernel) / stride + 1;
  const std::size_t npos = ho * wo;
  std::vector<double> cols(npos * ckk, 0.0);
  const auto& xv = x.value();
  for (std::size_t oh = 0; oh < ho; ++oh) {
    for (std::size_t ow = 0; ow < wo; ++ow) {
      double* row = cols.data() + (oh * wo + ow) * ckk;
      for (std::size_t ci = 0; ci < c; ++ci) {
        for (std::size_t kh = 0; kh < kernel; ++kh) {
          const auto ih = static_cast<std::ptrdiff_t>(oh * stride + kh) - static_cast<std::ptrdiff_t>(pad);
          if (ih < 0 || ih >= static_cast<std::ptrdiff_t>(h)) continue;
          for (std::size_t kw = 0; kw < kernel; ++kw) {
            const auto iw = static_cast<std::ptrdiff_t>(ow * stride + kw) - static_cast<std::ptrdiff_t>(pad);
            if (iw < 0 || iw >= static_cast<std::ptrdiff_t>(wd)) continue;
            row[ci * kernel * kernel + kh * kernel + kw] =
                xv[(ci * h + static_cast<std::size_t>(ih)) * wd + static_cast<std::size_t>(iw)];
          }
        }
      }
    }
  }
  RowMat out = View(cols, npos, ckk) * View(w.value(), cout, ckk).transpose();  // [npos, cout]
  std::vector<double> y(cout * npos);
  for (std::size_t co = 0; co < cout; ++co) {
    const double bias = b.valid() ? b.value()[co] : 0.0;
    for (std::size_t p = 0; p < npos; ++p) {
      y[co * npos + p] = out(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(co)) + bias;
    }
  }
  const auto ix = x.id(), iwt = w.id();
  const bool has_b = b.valid();
  const auto ib = has_b ? b.id() : 0;
  return x.tape()->Push(
      {cout, ho, wo}, std::move(y), {x, w, b},
      [=, cols = std::move(cols)](Tape& t, std::size_t self) {
        // g is [cout, npos]; work with its transpose [npos, cout].
        const RowMat g = View(t.node(self).grad, cout, npos).transpose();
        if (Needs(t, iwt)) View(t.GradOf(iwt), cout, ckk).noalias() += g.transpose() * View(cols, npos, ckk);
        if (has_b && Needs(t, ib)) {
          auto& gb = t.GradOf(ib);
          for (std::size_t co = 0; co < cout; ++co) gb[co] += g.col(static_cast<Eigen::Index>(co)).sum();
        }
        if (Needs(t, ix)) {
          const RowMat dcols = g * View(t.node(iwt).value, cout, ckk);
          auto& gx = t.GradOf(ix);
          for (std::size_t oh = 0; oh < ho; ++oh) {
            for (std::size_t ow = 0; ow < wo; ++ow) {
              const auto r = static_cast<Eigen::Index>(oh * wo + ow);
              for (std::size_t ci = 0; ci < c; ++ci) {
                for (std::size_t kh = 0; kh < kernel; ++kh) {
                  const auto ih = static_cast<std::ptrdiff_t>(oh * stride + kh) - static_cast<std::ptrdiff_t>(pad);
                  if (ih < 0 || ih >= static_cast<std::ptrdiff_t>(h)) continue;
                  for (std::size_t kw = 0; kw < kernel; ++kw) {
                    const auto iw2 = static_cast<std::ptrdiff_t>(ow * stride + kw) - static_cast<std::ptrdiff_t>(pad);
                    if (iw2 < 0 || iw2 >= static_cast<std::ptrdiff_t>(wd)) continue;
                    gx[(ci * h + static_cast<std::size_t>(ih)) * wd + static_cast<std::size_t>(iw2)] +=
                        dcols(r, static_cast<Eigen::Index>(ci * kernel * kernel + kh * kernel + kw));
                  }
                }
              }
            }
          }
        }
      });
}

Var MaxPoolTime(Var x, std::size_t factor) {
  const auto [len, f] = Dims2(x, "maxpool_time");
  Require(factor >= 1, "maxpool_time: factor must be >= 1");
  Require(len > 0, "maxpool_time: empty input");
  const std::size_t out_len = (len + factor - 1) / factor;
  std::vector<double> y(out_len * f);
  std::vector<std::size_t> arg(out_len * f);
  const auto& xv = x.value();
  for (std::size_t o = 0; o < out_len; ++o) {
    for (std::size_t d = 0; d < f; ++d) {
      std::size_t best = o * factor;
      for (std::size_t t = o * factor + 1; t < std::min(len, (o + 1) * factor); ++t) {
        if (xv[t * f + d] > xv[best * f + d]) best = t;
      }
      y[o * f + d] = xv[best * f + d];
      arg[o * f + d] = best * f + d;
    }
  }
  const auto ix = x.id();
  return x.tape()->Push({out_len, f}, std::move(y), {x}, [ix, arg = std::move(arg)](Tape& t, std::size_t self) {
    const auto& g = t.node(self).grad;
    auto& gx = t.GradOf(ix);
    for (std::size_t i = 0; i < g.size(); ++i) gx[arg[i]] += g[i];
  });
}

Var StackFrames(Var x, std::size_t k) {
  const auto [len, f] = Dims2(x, "stack_frames");
  Require(k >= 1, "stack_frames: k must be >= 1");
  if (len % k != 0) {
    ShapeError("stack_frames", std::to_string(len) + " frames not divisible by " + std::to_string(k));
  }
  return Reshape(x, {len / k, k * f});
}

Var LstmGates(Var gates, Var c_prev) {
  const auto [m, h4] = Dims2(gates, "lstm_gates");
  const auto [m2, h] = Dims2(c_prev, "lstm_gates");
  if (m != m2 || h4 != 4 * h) {
    ShapeError("lstm_gates", "gates " + ShapeString(gates.shape()) + " vs cell " + ShapeString(c_prev.shape()));
  }
  auto sig = [](double v) { return v >= 0 ? 1.0 / (1.0 + std::exp(-v)) : std::exp(v) / (1.0 + std::exp(v)); };
  // Cache activations: [i, f, g, o, tanh(c)] per row.
  std::vector<double> act(m * 5 * h);
  std::vector<double> y(m * 2 * h);
  const auto& gv = gates.value();
  const auto& cv = c_prev.value();
  for (std::size_t r = 0; r < m; ++r) {
    const double* a = gv.data() + r * h4;
    double* ac = act.data() + r * 5 * h;
    for (std::size_t j = 0; j < h; ++j) {
      const double i = sig(a[j]), f = sig(a[h + j]), g = std::tanh(a[2 * h + j]), o = sig(a[3 * h + j]);
      const double c = f * cv[r * h + j] + i * g;
      const double tc = std::tanh(c);
      ac[j] = i;
      ac[h + j] = f;
      ac[2 * h + j] = g;
      ac[3 * h + j] = o;
      ac[4 * h + j] = tc;
      y[r * 2 * h + j] = o * tc;
      y[r * 2 * h + h + j] = c;
    }
  }
  const auto ig = gates.id(), ic = c_prev.id();
  return gates.tape()->Push(
      {m, 2 * h}, std::move(y), {gates, c_prev},
      [ig, ic, m = m, h = h, act = std::move(act)](Tape& t, std::size_t self) {
        const auto& g = t.node(self).grad;
        const auto& cprev = t.node(ic).value;
        const bool need_g = Needs(t, ig), need_c = Needs(t, ic);
        std::vector<double>* gg = need_g ? &t.GradOf(ig) : nullptr;
        std::vector<double>* gc = need_c ? &t.GradOf(ic) : nullptr;
        for (std::size_t r = 0; r < m; ++r) {
          const double* ac = act.data() + r * 5 * h;
          for (std::size_t j = 0; j < h; ++j) {
            const double i = ac[j], f = ac[h + j], gt = ac[2 * h + j], o = ac[3 * h + j], tc = ac[4 * h + j];
            const double dh = g[r * 2 * h + j];
            const double dc = g[r * 2 * h + h + j] + dh * o * (1.0 - tc * tc);
            if (gg != nullptr) {
              double* da = gg->data() + r * 4 * h;
              da[j] += dc * gt * i * (1.0 - i);
              da[h + j] += dc * cprev[r * h + j] * f * (1.0 - f);
              da[2 * h + j] += dc * i * (1.0 - gt * gt);
              da[3 * h + j] += dh * tc * o * (1.0 - o);
            }
            if (gc != nullptr) (*gc)[r * h + j] += dc * f;
          }
        }
      });
}

Var L1Loss(Var pred, Var target) {
  RequireSameShape(pred, target, "l1_loss");
  const auto& p = pred.value();
  const auto& q = target.value();
  double s = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) s += std::abs(p[i] - q[i]);
  const double n = static_cast<double>(p.size());
  const auto ip = pred.id(), iq = target.id();
  return pred.tape()->Push({1, 1}, {s / n}, {pred, target}, [ip, iq, n](Tape& t, std::size_t self) {
    const double g = t.node(self).grad[0] / n;
    const auto& pv = t.node(ip).value;
    const auto& qv = t.node(iq).value;
    auto sign = [](double d) { return d > 0 ? 1.0 : (d < 0 ? -1.0 : 0.0); };
    if (Needs(t, ip)) {
      auto& gp = t.GradOf(ip);
      for (std::size_t i = 0; i < pv.size(); ++i) gp[i] += g * sign(pv[i] - qv[i]);
    }
    if (Needs(t, iq)) {
      auto& gq = t.GradOf(iq);
      for (std::size_t i = 0; i < pv.size(); ++i) gq[i] -= g * sign(pv[i] - qv[i]);
    }
  });
}

Var BceLoss(Var pred, Var target) {
  RequireSameShape(pred, target, "bce_loss");
  const auto& p = pred.value();
  const auto& q = target.value();
  double s = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    Require(q[i] >= 0.0 && q[i] <= 1.0, "bce_loss: target outside [0,1]");
    const double pc = std::clamp(p[i], kEps, 1.0 - kEps);
    s -= q[i] * std::log(pc) + (1.0 - q[i]) * std::log(1.0 - pc);
  }
  const double n = static_cast<double>(p.size());
  const auto ip = pred.id(), iq = target.id();
  return pred.tape()->Push({1, 1}, {s / n}, {pred, target}, [ip, iq, n](Tape& t, std::size_t self) {
    const double g = t.node(self).grad[0] / n;
    const auto& pv = t.node(ip).value;
    const auto& qv = t.node(iq).value;
    if (Needs(t, ip)) {
      auto& gp = t.GradOf(ip);
      for (std::size_t i = 0; i < pv.size(); ++i) {
        if (pv[i] < kEps || pv[i] > 1.0 - kEps) continue;
        gp[i] += g * (-qv[i] / pv[i] + (1.0 - qv[i]) / (1.0 - pv[i]));
      }
    }
    if (Needs(t, iq)) {
      auto& gq = t.GradOf(iq);
      for (std::size_t i = 0; i < pv.size(); ++i) {
        const double pc = std::clamp(pv[i], kEps, 1.0 - kEps);
        gq[i] -= g * (std::log(pc) - std::log(1.0 - pc));
      }
    }
  });
}

Var CrossEntropy(Var logits, std::span<const int> labels) {
  const auto [m, v] = Dims2(logits, "cross_entropy");
  if (labels.size() != m) {
    ShapeError("cross_entropy", std::to_string(labels.size()) + " labels for " + std::to_string(m) + " rows");
  }
  std::vector<double> probs(logits.value());
  double loss = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    Require(labels[i] >= 0 && static_cast<std::size_t>(labels[i]) < v,
            "cross_entropy: label " + std::to_string(labels[i]) + " out of vocabulary of size " +
                std::to_string(v));
    double* row = probs.data() + i * v;
    const double mx = *std::max_element(row, row + v);
    double s = 0.0;
    for (std::size_t j = 0; j < v; ++j) s += std::exp(row[j] - mx);
    const double lse = mx + std::log(s);
    loss += lse - row[labels[i]];
    for (std::size_t j = 0; j < v; ++j) row[j] = std::exp(row[j] - lse);
  }
  const double n = static_cast<double>(m);
  std::vector<int> lab(labels.begin(), labels.end());
  const auto il = logits.id();
  return logits.tape()->Push({1, 1}, {loss / n}, {logits},
                             [il, v = v, n, lab = std::move(lab), probs = std::move(probs)](Tape& t, std::size_t self) {
                               const double g = t.node(self).grad[0] / n;
                               auto& gl = t.GradOf(il);
                               for (std::size_t i = 0; i < lab.size(); ++i) {
                                 for (std::size_t j = 0; j < v; ++j) gl[i * v + j] += g * probs[i * v + j];
                                 gl[i * v + static_cast<std::size_t>(lab[i])] -= g;
                               }
                             });
}

std::size_t CtcMinFrames(std::span<const int> labels) {
  std::size_t n = labels.size();
  for (std::size_t i = 1; i < labels.size(); ++i) {
    if (labels[i] == labels[i - 1]) ++n;
  }
  return n;
}

Var CtcLoss(Var log_probs, std::span<const int> labels, int blank) {
  const auto [len, classes] = Dims2(log_probs, "ctc_loss");
  Require(blank >= 0 && static_cast<std::size_t>(blank) < classes, "ctc_loss: blank index out of range");
  for (int l : labels) {
    Require(l >= 0 && static_cast<std::size_t>(l) < classes && l != blank,
            "ctc_loss: label " + std::to_string(l) + " invalid");
  }
  const std::size_t need = CtcMinFrames(labels);
  if (len < need || len == 0) {
    throw Error(ErrorCode::kInfeasible, "ctc_loss: " + std::to_string(len) + " frames cannot align " +
                                            std::to_string(labels.size()) + " labels (need " +
                                            std::to_string(need) + ")");
  }
  const std::size_t s_len = 2 * labels.size() + 1;
  std::vector<int> ext(s_len, blank);
  for (std::size_t i = 0; i < labels.size(); ++i) ext[2 * i + 1] = labels[i];
  const auto& lp = log_probs.value();
  auto emit = [&](std::size_t t, std::size_t s) { return lp[t * classes + static_cast<std::size_t>(ext[s])]; };
  auto skip_ok = [&](std::size_t s) { return s >= 2 && ext[s] != blank && ext[s] != ext[s - 2]; };

  std::vector<double> alpha(len * s_len, kNegInf);
  alpha[0] = emit(0, 0);
  if (s_len > 1) alpha[1] = emit(0, 1);
  for (std::size_t t = 1; t < len; ++t) {
    for (std::size_t s = 0; s < s_len; ++s) {
      double a = alpha[(t - 1) * s_len + s];
      if (s >= 1) a = LogSumExp(a, alpha[(t - 1) * s_len + s - 1]);
      if (skip_ok(s)) a = LogSumExp(a, alpha[(t - 1) * s_len + s - 2]);
      alpha[t * s_len + s] = a == kNegInf ? kNegInf : a + emit(t, s);
    }
  }
  double log_p = alpha[(len - 1) * s_len + s_len - 1];
  if (s_len > 1) log_p = LogSumExp(log_p, alpha[(len - 1) * s_len + s_len - 2]);

  const auto il = log_probs.id();
  std::vector<int> ext_copy = ext;
  return log_probs.tape()->Push(
      {1, 1}, {-log_p}, {log_probs},
      [il, len = len, classes = classes, s_len, blank, ext = std::move(ext_copy),
       alpha = std::move(alpha), log_p](Tape& t, std::size_t self) {
        const double g = t.node(self).grad[0];
        const auto& lpv = t.node(il).value;
        auto emit2 = [&](std::size_t tt, std::size_t s) {
          return lpv[tt * classes + static_cast<std::size_t>(ext[s])];
        };
        auto skip_from = [&](std::size_t s) {
          // transition s -> s+2 allowed
          return s + 2 < s_len && ext[s + 2] != blank && ext[s + 2] != ext[s];
        };
        // beta excludes the emission at its own frame.
        std::vector<double> beta(len * s_len, kNegInf);
        beta[(len - 1) * s_len + s_len - 1] = 0.0;
        if (s_len > 1) beta[(len - 1) * s_len + s_len - 2] = 0.0;
        for (std::size_t tt = len - 1; tt-- > 0;) {
          for (std::size_t s = 0; s < s_len; ++s) {
            double b = beta[(tt + 1) * s_len + s] + emit2(tt + 1, s);
            if (s + 1 < s_len) b = LogSumExp(b, beta[(tt + 1) * s_len + s + 1] + emit2(tt + 1, s + 1));
            if (skip_from(s)) b = LogSumExp(b, beta[(tt + 1) * s_len + s + 2] + emit2(tt + 1, s + 2));
            beta[tt * s_len + s] = b;
          }
        }
        auto& gl = t.GradOf(il);
        for (std::size_t tt = 0; tt < len; ++tt) {
          for (std::size_t s = 0; s < s_len; ++s) {
            const double a = alpha[tt * s_len + s];
            const double b = beta[tt * s_len + s];
            if (a == kNegInf || b == kNegInf) continue;
            gl[tt * classes + static_cast<std::size_t>(ext[s])] -= g * std::exp(a + b - log_p);
          }
        }
      });
}

}  // namespace synthasr::nn
