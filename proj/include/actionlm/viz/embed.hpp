#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "actionlm/errors.hpp"
#include "actionlm/io.hpp"
#include "actionlm/tokenizer.hpp"

namespace actionlm::viz {

// Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.
// Deterministic sweep order; eigenpairs returned sorted by descending value.
struct EigenResult {
  long n = 0;
  std::vector<double> values;   // descending
  std::vector<double> vectors;  // column j (vectors[i*n+j]) pairs with values[j]
};

inline EigenResult jacobi_eigen(std::vector<double> a, long n) {
  std::vector<double> v(static_cast<std::size_t>(n) * n, 0.0);
  for (long i = 0; i < n; ++i) v[static_cast<std::size_t>(i) * n + i] = 1.0;
  auto at = [&](std::vector<double>& m, long i, long j) -> double& { return m[static_cast<std::size_t>(i) * n + j]; };

  double frob = 0.0;
  for (double x : a) frob += x * x;
  const double tol = 1e-14 * std::max(1.0, std::sqrt(frob));

  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (long p = 0; p < n; ++p)
      for (long q = p + 1; q < n; ++q) off += at(a, p, q) * at(a, p, q);
    if (std::sqrt(off) < tol) break;
    for (long p = 0; p < n; ++p)
      for (long q = p + 1; q < n; ++q) {
        const double apq = at(a, p, q);
        if (std::abs(apq) < tol / (n * n + 1)) continue;
        const double theta = (at(a, q, q) - at(a, p, p)) / (2.0 * apq);
        const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (long i = 0; i < n; ++i) {
          const double aip = at(a, i, p), aiq = at(a, i, q);
          at(a, i, p) = c * aip - s * aiq;
          at(a, i, q) = s * aip + c * aiq;
        }
        for (long i = 0; i < n; ++i) {
          const double api = at(a, p, i), aqi = at(a, q, i);
          at(a, p, i) = c * api - s * aqi;
          at(a, q, i) = s * api + c * aqi;
        }
        for (long i = 0; i < n; ++i) {
          const double vip = at(v, i, p), viq = at(v, i, q);
          at(v, i, p) = c * vip - s * viq;
          at(v, i, q) = s * vip + c * viq;
        }
      }
  }

  std::vector<long> idx(static_cast<std::size_t>(n));
  for (long i = 0; i < n; ++i) idx[static_cast<std::size_t>(i)] = i;
  std::stable_sort(idx.begin(), idx.end(),
                   [&](long x, long y) { return at(a, x, x) > at(a, y, y); });

  EigenResult r;
  r.n = n;
  r.values.resize(static_cast<std::size_t>(n));
  r.vectors.resize(static_cast<std::size_t>(n) * n);
  for (long j = 0; j < n; ++j) {
    r.values[static_cast<std::size_t>(j)] = at(a, idx[static_cast<std::size_t>(j)], idx[static_cast<std::size_t>(j)]);
    for (long i = 0; i < n; ++i)
      r.vectors[static_cast<std::size_t>(i) * n + j] = at(v, i, idx[static_cast<std::size_t>(j)]);
  }
  return r;
}

// Centered PCA onto the top-2 principal components.
struct PcaResult {
  std::vector<double> projected;    // n x 2 row-major
  std::vector<double> components;   // d x 2, column j = principal direction j
  std::vector<double> eigenvalues;  // all d, descending (of X_c^T X_c)
};

inline PcaResult pca_top2(const std::vector<double>& x, long n, long d) {
  if (n < 1 || d < 2) throw ValidationError("pca: need at least 1 row and 2 columns");
  std::vector<double> xc(x);
  for (long j = 0; j < d; ++j) {
    double mean = 0.0;
    for (long i = 0; i < n; ++i) mean += xc[static_cast<std::size_t>(i) * d + j];
    mean /= static_cast<double>(n);
    for (long i = 0; i < n; ++i) xc[static_cast<std::size_t>(i) * d + j] -= mean;
  }
  std::vector<double> cov(static_cast<std::size_t>(d) * d, 0.0);
  for (long i = 0; i < n; ++i)
    for (long a = 0; a < d; ++a) {
      const double va = xc[static_cast<std::size_t>(i) * d + a];
      if (va == 0.0) continue;
      for (long b = 0; b < d; ++b) cov[static_cast<std::size_t>(a) * d + b] += va * xc[static_cast<std::size_t>(i) * d + b];
    }
  EigenResult eig = jacobi_eigen(cov, d);

  PcaResult r;
  r.eigenvalues = eig.values;
  r.components.assign(static_cast<std::size_t>(d) * 2, 0.0);
  for (long j = 0; j < 2; ++j) {
    // Sign convention: the largest-magnitude component is positive.
    long arg = 0;
    for (long i = 1; i < d; ++i)
      if (std::abs(eig.vectors[static_cast<std::size_t>(i) * d + j]) >
          std::abs(eig.vectors[static_cast<std::size_t>(arg) * d + j]))
        arg = i;
    const double sign = eig.vectors[static_cast<std::size_t>(arg) * d + j] < 0 ? -1.0 : 1.0;
    for (long i = 0; i < d; ++i)
      r.components[static_cast<std::size_t>(i) * 2 + j] = sign * eig.vectors[static_cast<std::size_t>(i) * d + j];
  }
  r.projected.assign(static_cast<std::size_t>(n) * 2, 0.0);
  for (long i = 0; i < n; ++i)
    for (long j = 0; j < 2; ++j) {
      double s = 0.0;
      for (long a = 0; a < d; ++a)
        s += xc[static_cast<std::size_t>(i) * d + a] * r.components[static_cast<std::size_t>(a) * 2 + j];
      r.projected[static_cast<std::size_t>(i) * 2 + j] = s;
    }
  return r;
}

enum class Projection { none, pca };

inline Projection projection_from(const std::string& s) {
  if (s == "pca") return Projection::pca;
  if (s == "none") return Projection::none;
  throw ConfigError("unknown projection \"" + s + "\" (expected pca or none)");
}

// Per-token embedding table as CSV: metadata, the raw embedding, and a 2-d
// projection (zeros when projection = none). The raw columns make the file
// usable as input to an external UMAP run. The token column is quoted since
// token text contains commas.
inline std::string embeddings_csv(const std::vector<double>& embedding, long vocab_rows, long d,
                                  const tok::Vocabulary& vocab, Projection projection) {
  if (vocab_rows != vocab.size()) throw ValidationError("embeddings_csv: table rows != vocabulary size");
  std::vector<double> projected(static_cast<std::size_t>(vocab_rows) * 2, 0.0);
  if (projection == Projection::pca) projected = pca_top2(embedding, vocab_rows, d).projected;

  std::string out = "id,token,is_home,action_type,bx,by";
  for (long j = 0; j < d; ++j) out += ",e" + std::to_string(j);
  out += ",p0,p1\n";
  for (long i = 0; i < vocab_rows; ++i) {
    const tok::Token& t = vocab.token_of(i);
    out += std::to_string(i) + ",\"" + t.text() + "\"," + (t.is_home ? "True" : "False") + "," + t.action_type + "," +
           std::to_string(t.bin.bx) + "," + std::to_string(t.bin.by);
    for (long j = 0; j < d; ++j) out += "," + fmt_full(embedding[static_cast<std::size_t>(i) * d + j]);
    out += "," + fmt_full(projected[static_cast<std::size_t>(i) * 2]) + "," +
           fmt_full(projected[static_cast<std::size_t>(i) * 2 + 1]) + "\n";
  }
  return out;
}

}  // namespace actionlm::viz
