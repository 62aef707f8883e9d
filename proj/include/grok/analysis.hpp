#pragma once

#include <array>
#include <string>
#include <vector>

#include "grok/common.hpp"
#include "grok/train.hpp"

// Post-hoc diagnostics: 2D PCA of numeral embeddings, circle-structure angle
// statistics, and run aggregation into the summary tables.
namespace grok::analysis {

struct EmbeddingProjection {
  std::vector<int> token_ids;             // input row order, 0..n-1
  std::vector<double> coords;             // n x 2 row-major, mean-centered scores
  std::vector<double> components;         // 2 x d row-major principal directions
  std::vector<double> mean;               // column means removed before projection
  std::array<double, 2> explained_variance{0, 0};  // descending
  double total_variance = 0;
  std::vector<double> angles;             // atan2(y_i, x_i) per token
  // consecutive gaps around the circle, wraparound included, both orderings:
  // walking tokens sorted by angle, and walking numerals 0,1,...,n-1,0
  std::vector<double> gaps_angular;
  std::vector<double> gaps_numeral;
};

// Top-2 principal components of an n x d row-major matrix via a Jacobi
// eigensolve of the covariance. Component signs are fixed by making each
// component's largest-magnitude entry positive.
EmbeddingProjection pca2(const std::vector<double>& x, long n, long d);

struct AngleStats {
  double mean_gap = 0;
  double std_gap = 0;   // population convention: gaps are the complete set
  double coeff_var = 0;
};

// Dispersion of the angular-order gaps; zero for a perfect circle of distinct
// points no matter how the numerals are ordered around it.
AngleStats angle_uniformity(const EmbeddingProjection& proj);

// token,x,y,theta rows for external plotting.
std::string projection_csv(const EmbeddingProjection& proj);

struct TableRow {
  std::string operation;       // task tag, e.g. "binary:add:p97"
  long n_train = 0;
  std::string method;          // "baseline", "CA", "DT", "ET", ...
  long n_seeds = 0;
  long n_grokked = 0;
  double grok_step_mean = 0;   // over the grokked runs only
  double grok_step_std = 0;    // sample std, 0 when fewer than 2 grokked
  double final_acc_mean = 0;   // over every run in the group
  double grokked_fraction = 0;
};

// Groups records by (task, n_train, method), sorted by the same key, so the
// output is invariant under record order.
std::vector<TableRow> aggregate_runs(const std::vector<RunRecord>& records);

// Five-column summary: Operation,N,Method,Grokking step,Final accuracy, with
// the step cell rendered as mean±std or "Non-grokked".
std::string report_csv(const std::vector<TableRow>& rows);

// The same table as padded text for terminals, with seed counts added.
std::string report_text(const std::vector<TableRow>& rows);

}  // namespace grok::analysis
