#include "evogcn/metrics.hpp"

#include <algorithm>
#include <numeric>
#include <string>

#include "evogcn/errors.hpp"

namespace evogcn {

namespace {

void check_query(const RankedQuery& q) {
  if (q.candidate_ids.size() != q.scores.size() ||
      q.candidate_ids.size() != q.relevant.size()) {
    throw ArgumentError("ranked query field lengths disagree");
  }
  if (q.candidate_ids.empty()) throw ArgumentError("empty ranked query");
  if (std::find(q.relevant.begin(), q.relevant.end(), char(1)) == q.relevant.end()) {
    throw ArgumentError("ranked query has no relevant candidate; drop it before scoring");
  }
}

}  // namespace

std::vector<int> ranking_order(const RankedQuery& q) {
  std::vector<int> order(q.candidate_ids.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    if (q.scores[a] != q.scores[b]) return q.scores[a] > q.scores[b];
    return q.candidate_ids[a] < q.candidate_ids[b];
  });
  return order;
}

double mrr(const std::vector<RankedQuery>& queries) {
  if (queries.empty()) throw ArgumentError("mrr over an empty query set");
  double total = 0.0;
  for (const RankedQuery& q : queries) {
    check_query(q);
    const std::vector<int> order = ranking_order(q);
    for (std::size_t rank = 0; rank < order.size(); ++rank) {
      if (q.relevant[order[rank]]) {
        total += 1.0 / static_cast<double>(rank + 1);
        break;
      }
    }
  }
  return total / static_cast<double>(queries.size());
}

double mean_average_precision(const std::vector<RankedQuery>& queries) {
  if (queries.empty()) throw ArgumentError("map over an empty query set");
  double total = 0.0;
  for (const RankedQuery& q : queries) {
    check_query(q);
    const std::vector<int> order = ranking_order(q);
    double hits = 0.0;
    double ap = 0.0;
    for (std::size_t rank = 0; rank < order.size(); ++rank) {
      if (q.relevant[order[rank]]) {
        hits += 1.0;
        ap += hits / static_cast<double>(rank + 1);
      }
    }
    total += ap / hits;
  }
  return total / static_cast<double>(queries.size());
}

PrfReport prf1(const std::vector<int>& predictions, const std::vector<int>& labels,
               int num_classes) {
  if (predictions.empty()) throw ArgumentError("prf1 over an empty batch");
  if (predictions.size() != labels.size()) {
    throw ArgumentError("prf1 size mismatch: " + std::to_string(predictions.size()) +
                        " predictions vs " + std::to_string(labels.size()) + " labels");
  }
  if (num_classes < 1) throw ArgumentError("prf1 needs at least one class");

  std::vector<long> tp(num_classes, 0), fp(num_classes, 0), fn(num_classes, 0);
  std::vector<char> present(num_classes, 0);
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    const int p = predictions[i], y = labels[i];
    if (p < 0 || p >= num_classes || y < 0 || y >= num_classes) {
      throw ArgumentError("class id out of range at index " + std::to_string(i));
    }
    present[p] = 1;
    present[y] = 1;
    if (p == y) {
      ++tp[p];
    } else {
      ++fp[p];
      ++fn[y];
    }
  }

  auto make_prf = [](long tp_, long fp_, long fn_) {
    Prf r;
    r.precision = tp_ + fp_ > 0 ? static_cast<double>(tp_) / (tp_ + fp_) : 0.0;
    r.recall = tp_ + fn_ > 0 ? static_cast<double>(tp_) / (tp_ + fn_) : 0.0;
    r.f1 = r.precision + r.recall > 0.0
               ? 2.0 * r.precision * r.recall / (r.precision + r.recall)
               : 0.0;
    return r;
  };

  PrfReport report;
  long tp_sum = 0, fp_sum = 0, fn_sum = 0;
  for (int c = 0; c < num_classes; ++c) {
    tp_sum += tp[c];
    fp_sum += fp[c];
    fn_sum += fn[c];
    report.per_class.push_back(make_prf(tp[c], fp[c], fn[c]));
  }
  report.micro = make_prf(tp_sum, fp_sum, fn_sum);
  report.class_present = std::move(present);
  return report;
}

}  // namespace evogcn
