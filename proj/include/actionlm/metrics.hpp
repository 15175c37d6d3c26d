#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "actionlm/errors.hpp"
#include "actionlm/io.hpp"

namespace actionlm::train {

struct Metrics {
  std::string dataset;
  double accuracy = 0.0;
  double mean_log_likelihood = 0.0;  // natural log, per example
  long n = 0;
};

// Single metric code path shared by every model (including the Markov
// baseline, whose "logits" are log transition probabilities). Accuracy uses
// argmax with ties broken toward the lowest id; likelihoods are natural-log
// probabilities of the target under softmax(logits), accumulated in double.
struct MetricsAccum {
  long correct = 0;
  long n = 0;
  double sum_ll = 0.0;

  void add(const double* logits, long vocab, long target) {
    double mx = logits[0];
    long argmax = 0;
    for (long j = 1; j < vocab; ++j)
      if (logits[j] > mx) {
        mx = logits[j];
        argmax = j;
      }
    double total = 0.0;
    for (long j = 0; j < vocab; ++j) total += std::exp(logits[j] - mx);
    const double lse = mx + std::log(total);
    sum_ll += logits[target] - lse;
    if (argmax == target) ++correct;
    ++n;
  }

  Metrics finish(std::string dataset) const {
    if (n == 0) throw ValidationError("metrics: no examples");
    return Metrics{std::move(dataset), static_cast<double>(correct) / static_cast<double>(n),
                   sum_ll / static_cast<double>(n), n};
  }
};

inline std::string metrics_csv_header() { return "dataset,model,accuracy,mean_log_likelihood,n"; }

inline std::string metrics_csv_row(const Metrics& m, const std::string& model) {
  return m.dataset + "," + model + "," + fmt_full(m.accuracy) + "," + fmt_full(m.mean_log_likelihood) + "," +
         std::to_string(m.n);
}

}  // namespace actionlm::train
