#pragma once

#include <vector>

namespace evogcn {

// One ranking query: candidates with scores and relevance flags. Queries
// with no relevant candidate must be dropped before computing MAP/MRR.
struct RankedQuery {
  std::vector<int> candidate_ids;
  std::vector<double> scores;
  std::vector<char> relevant;

  int size() const { return static_cast<int>(candidate_ids.size()); }
};

// Candidate order: descending score, ties broken by ascending candidate id.
std::vector<int> ranking_order(const RankedQuery& q);

double mrr(const std::vector<RankedQuery>& queries);
double mean_average_precision(const std::vector<RankedQuery>& queries);

struct Prf {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

struct PrfReport {
  Prf micro;
  std::vector<Prf> per_class;
  // false where a class appears in neither predictions nor labels (its
  // per-class scores are defined as 0).
  std::vector<char> class_present;
};

PrfReport prf1(const std::vector<int>& predictions, const std::vector<int>& labels,
               int num_classes);

}  // namespace evogcn
