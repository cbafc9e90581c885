#pragma once

#include <cstddef>
#include <cstdint>
#include <ostream>
#include <span>
#include <vector>

namespace grcan {

// Row = true class, column = predicted class.
struct ConfusionMatrix {
  std::size_t n_class = 0;
  std::vector<std::uint64_t> counts;

  std::uint64_t& at(std::size_t t, std::size_t p) { return counts[t * n_class + p]; }
  std::uint64_t at(std::size_t t, std::size_t p) const { return counts[t * n_class + p]; }
  std::uint64_t total() const;
  std::uint64_t trace() const;
};

struct ClassMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::uint64_t support = 0;
};

// One-vs-rest per class, macro (unweighted) averages across classes.
// Undefined ratios (no predicted or no true positives for a class) count
// as 0 for that class.
struct MetricsBundle {
  double accuracy = 0.0;
  double macro_precision = 0.0;
  double macro_recall = 0.0;
  double macro_f1 = 0.0;
  std::vector<ClassMetrics> per_class;
};

ConfusionMatrix confusion(std::span<const int> labels, std::span<const int> predictions,
                          std::size_t n_class);

MetricsBundle bundle(const ConfusionMatrix& cm);

void write_confusion_csv(std::ostream& out, const ConfusionMatrix& cm,
                         std::span<const std::string> class_names);
void write_metrics_csv(std::ostream& out, const MetricsBundle& m,
                       std::span<const std::string> class_names);

}  // namespace grcan
