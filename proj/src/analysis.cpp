#include "grok/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <numeric>
#include <tuple>

namespace grok::analysis {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

// Cyclic Jacobi sweeps on a symmetric matrix, rotating until the off-diagonal
// mass is negligible against the starting scale. a is d x d row-major and is
// destroyed; v accumulates the eigenvectors as columns.
void jacobi_eigen(std::vector<double>& a, std::vector<double>& v, long d) {
  v.assign(static_cast<size_t>(d) * d, 0.0);
  for (long i = 0; i < d; ++i) v[i * d + i] = 1.0;

  double scale = 0;
  for (long i = 0; i < d; ++i) {
    for (long j = 0; j < d; ++j) scale += a[i * d + j] * a[i * d + j];
  }
  scale = std::sqrt(scale);
  if (scale == 0) return;  // zero matrix, eigenvectors stay the identity
  const double stop = 1e-14 * scale;

  for (int sweep = 0; sweep < 64; ++sweep) {
    double off = 0;
    for (long p = 0; p < d; ++p) {
      for (long q = p + 1; q < d; ++q) off += a[p * d + q] * a[p * d + q];
    }
    if (std::sqrt(2 * off) <= stop) break;

    for (long p = 0; p < d; ++p) {
      for (long q = p + 1; q < d; ++q) {
        double apq = a[p * d + q];
        if (std::abs(apq) <= 1e-300) continue;
        double theta = (a[q * d + q] - a[p * d + p]) / (2 * apq);
        double t = (theta >= 0 ? 1.0 : -1.0) /
                   (std::abs(theta) + std::sqrt(theta * theta + 1));
        double c = 1.0 / std::sqrt(t * t + 1);
        double s = t * c;

        for (long i = 0; i < d; ++i) {
          double aip = a[i * d + p];
          double aiq = a[i * d + q];
          a[i * d + p] = c * aip - s * aiq;
          a[i * d + q] = s * aip + c * aiq;
        }
        for (long i = 0; i < d; ++i) {
          double api = a[p * d + i];
          double aqi = a[q * d + i];
          a[p * d + i] = c * api - s * aqi;
          a[q * d + i] = s * api + c * aqi;
        }
        for (long i = 0; i < d; ++i) {
          double vip = v[i * d + p];
          double viq = v[i * d + q];
          v[i * d + p] = c * vip - s * viq;
          v[i * d + q] = s * vip + c * viq;
        }
      }
    }
  }
}

double wrap_gap(double delta) {
  double g = std::fmod(delta, kTwoPi);
  if (g < 0) g += kTwoPi;
  return g;
}

}  // namespace

EmbeddingProjection pca2(const std::vector<double>& x, long n, long d) {
  check(n >= 3, Err::ConfigError, "pca2 needs at least 3 rows");
  check(d >= 2, Err::ConfigError, "pca2 needs at least 2 columns");
  check(static_cast<long>(x.size()) == n * d, Err::ShapeMismatch,
        "matrix size does not match n x d");

  EmbeddingProjection proj;
  proj.token_ids.resize(static_cast<size_t>(n));
  std::iota(proj.token_ids.begin(), proj.token_ids.end(), 0);

  proj.mean.assign(static_cast<size_t>(d), 0.0);
  for (long i = 0; i < n; ++i) {
    for (long j = 0; j < d; ++j) proj.mean[static_cast<size_t>(j)] += x[i * d + j];
  }
  for (auto& m : proj.mean) m /= double(n);

  std::vector<double> xc(static_cast<size_t>(n) * d);
  for (long i = 0; i < n; ++i) {
    for (long j = 0; j < d; ++j) {
      xc[i * d + j] = x[i * d + j] - proj.mean[static_cast<size_t>(j)];
    }
  }

  std::vector<double> cov(static_cast<size_t>(d) * d, 0.0);
  for (long i = 0; i < n; ++i) {
    for (long j = 0; j < d; ++j) {
      double xij = xc[i * d + j];
      for (long k = j; k < d; ++k) cov[j * d + k] += xij * xc[i * d + k];
    }
  }
  for (long j = 0; j < d; ++j) {
    for (long k = j; k < d; ++k) {
      cov[j * d + k] /= double(n);
      cov[k * d + j] = cov[j * d + k];
    }
  }

  double total = 0;
  for (long j = 0; j < d; ++j) total += cov[j * d + j];
  proj.total_variance = total;
  check(total > 1e-30, Err::DegenerateData, "zero variance, all rows identical");

  std::vector<double> vecs;
  jacobi_eigen(cov, vecs, d);

  // pick the two largest eigenvalues (diagonal after the sweeps)
  long i1 = 0, i2 = -1;
  for (long j = 1; j < d; ++j) {
    if (cov[j * d + j] > cov[i1 * d + i1]) i1 = j;
  }
  for (long j = 0; j < d; ++j) {
    if (j == i1) continue;
    if (i2 < 0 || cov[j * d + j] > cov[i2 * d + i2]) i2 = j;
  }
  proj.explained_variance = {cov[i1 * d + i1], cov[i2 * d + i2]};

  proj.components.assign(2 * static_cast<size_t>(d), 0.0);
  for (int comp = 0; comp < 2; ++comp) {
    long col = comp == 0 ? i1 : i2;
    double* out = proj.components.data() + comp * d;
    for (long j = 0; j < d; ++j) out[j] = vecs[j * d + col];
    // sign convention: largest-magnitude entry positive
    long big = 0;
    for (long j = 1; j < d; ++j) {
      if (std::abs(out[j]) > std::abs(out[big])) big = j;
    }
    if (out[big] < 0) {
      for (long j = 0; j < d; ++j) out[j] = -out[j];
    }
  }

  proj.coords.assign(2 * static_cast<size_t>(n), 0.0);
  proj.angles.resize(static_cast<size_t>(n));
  for (long i = 0; i < n; ++i) {
    double cx = 0, cy = 0;
    for (long j = 0; j < d; ++j) {
      cx += xc[i * d + j] * proj.components[static_cast<size_t>(j)];
      cy += xc[i * d + j] * proj.components[static_cast<size_t>(d + j)];
    }
    proj.coords[2 * i] = cx;
    proj.coords[2 * i + 1] = cy;
    proj.angles[static_cast<size_t>(i)] = std::atan2(cy, cx);
  }

  // gaps walking the circle in angle order, wraparound closing the loop
  std::vector<long> by_angle(static_cast<size_t>(n));
  std::iota(by_angle.begin(), by_angle.end(), 0L);
  std::sort(by_angle.begin(), by_angle.end(), [&](long a, long b) {
    double aa = proj.angles[static_cast<size_t>(a)];
    double ab = proj.angles[static_cast<size_t>(b)];
    return aa != ab ? aa < ab : a < b;
  });
  proj.gaps_angular.resize(static_cast<size_t>(n));
  for (long j = 0; j < n; ++j) {
    long cur = by_angle[static_cast<size_t>(j)];
    long nxt = by_angle[static_cast<size_t>((j + 1) % n)];
    proj.gaps_angular[static_cast<size_t>(j)] =
        wrap_gap(proj.angles[static_cast<size_t>(nxt)] - proj.angles[static_cast<size_t>(cur)]);
  }

  // gaps walking numerals 0,1,...,n-1,0 in id order
  proj.gaps_numeral.resize(static_cast<size_t>(n));
  for (long i = 0; i < n; ++i) {
    proj.gaps_numeral[static_cast<size_t>(i)] =
        wrap_gap(proj.angles[static_cast<size_t>((i + 1) % n)] -
                 proj.angles[static_cast<size_t>(i)]);
  }
  return proj;
}

AngleStats angle_uniformity(const EmbeddingProjection& proj) {
  long n = static_cast<long>(proj.gaps_angular.size());
  check(n >= 3, Err::DegenerateData, "projection holds fewer than 3 tokens");
  for (long i = 0; i < n; ++i) {
    check(std::abs(proj.coords[2 * i]) > 1e-300 ||
              std::abs(proj.coords[2 * i + 1]) > 1e-300,
          Err::DegenerateData,
          "token " + std::to_string(i) + " projects onto the origin");
  }
  AngleStats st;
  for (double g : proj.gaps_angular) st.mean_gap += g;
  st.mean_gap /= double(n);
  double var = 0;
  for (double g : proj.gaps_angular) var += (g - st.mean_gap) * (g - st.mean_gap);
  st.std_gap = std::sqrt(var / double(n));
  st.coeff_var = st.std_gap / st.mean_gap;  // mean is 2*pi/n, never zero here
  return st;
}

std::string projection_csv(const EmbeddingProjection& proj) {
  std::string csv = "token,x,y,theta\n";
  char buf[160];
  for (size_t i = 0; i < proj.token_ids.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%d,%.9g,%.9g,%.9g\n", proj.token_ids[i],
                  proj.coords[2 * i], proj.coords[2 * i + 1], proj.angles[i]);
    csv += buf;
  }
  return csv;
}

std::vector<TableRow> aggregate_runs(const std::vector<RunRecord>& records) {
  check(!records.empty(), Err::EmptyGroup, "no run records to aggregate");

  std::map<std::tuple<std::string, long, std::string>, std::vector<const RunRecord*>> groups;
  for (const auto& r : records) {
    groups[{r.task, r.n_train, r.method}].push_back(&r);
  }

  std::vector<TableRow> rows;
  for (const auto& [key, runs] : groups) {
    TableRow row;
    row.operation = std::get<0>(key);
    row.n_train = std::get<1>(key);
    row.method = std::get<2>(key);
    row.n_seeds = static_cast<long>(runs.size());

    std::vector<double> steps;
    for (const RunRecord* r : runs) {
      row.final_acc_mean += r->final_test_acc;
      if (r->grok_step) steps.push_back(double(*r->grok_step));
    }
    row.final_acc_mean /= double(runs.size());
    row.n_grokked = static_cast<long>(steps.size());
    row.grokked_fraction = double(row.n_grokked) / double(row.n_seeds);
    if (!steps.empty()) {
      for (double s : steps) row.grok_step_mean += s;
      row.grok_step_mean /= double(steps.size());
      if (steps.size() > 1) {
        double var = 0;
        for (double s : steps) var += (s - row.grok_step_mean) * (s - row.grok_step_mean);
        row.grok_step_std = std::sqrt(var / double(steps.size() - 1));
      }
    }
    rows.push_back(std::move(row));
  }
  return rows;  // map iteration already sorted by the group key
}

namespace {

std::string step_cell(const TableRow& row) {
  if (row.n_grokked == 0) return "Non-grokked";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.0f±%.0f", row.grok_step_mean, row.grok_step_std);
  return buf;
}

std::string acc_cell(const TableRow& row) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", row.final_acc_mean);
  return buf;
}

}  // namespace

std::string report_csv(const std::vector<TableRow>& rows) {
  std::string csv = "Operation,N,Method,Grokking step,Final accuracy\n";
  for (const auto& row : rows) {
    csv += row.operation + "," + std::to_string(row.n_train) + "," + row.method + "," +
           step_cell(row) + "," + acc_cell(row) + "\n";
  }
  return csv;
}

std::string report_text(const std::vector<TableRow>& rows) {
  std::vector<std::array<std::string, 6>> cells;
  cells.push_back({"Operation", "N", "Method", "Grokked", "Grokking step", "Final accuracy"});
  for (const auto& row : rows) {
    cells.push_back({row.operation, std::to_string(row.n_train), row.method,
                     std::to_string(row.n_grokked) + "/" + std::to_string(row.n_seeds),
                     step_cell(row), acc_cell(row)});
  }
  std::array<size_t, 6> width{};
  for (const auto& line : cells) {
    for (int c = 0; c < 6; ++c) width[c] = std::max(width[c], line[c].size());
  }
  std::string out;
  for (const auto& line : cells) {
    for (int c = 0; c < 6; ++c) {
      out += line[c];
      if (c < 5) out += std::string(width[c] - line[c].size() + 2, ' ');
    }
    out += '\n';
  }
  return out;
}

}  // namespace grok::analysis
