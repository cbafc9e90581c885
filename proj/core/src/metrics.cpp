#include "grcan/metrics.hpp"

#include <cstdio>
#include <numeric>
#include <string>

#include "grcan/errors.hpp"

namespace grcan {

std::uint64_t ConfusionMatrix::total() const {
  return std::accumulate(counts.begin(), counts.end(), std::uint64_t{0});
}

std::uint64_t ConfusionMatrix::trace() const {
  std::uint64_t t = 0;
  for (std::size_t i = 0; i < n_class; ++i) t += at(i, i);
  return t;
}

ConfusionMatrix confusion(std::span<const int> labels, std::span<const int> predictions,
                          std::size_t n_class) {
  if (labels.size() != predictions.size()) {
    throw DimensionError("confusion: " + std::to_string(labels.size()) + " labels vs " +
                         std::to_string(predictions.size()) + " predictions");
  }
  ConfusionMatrix cm;
  cm.n_class = n_class;
  cm.counts.assign(n_class * n_class, 0);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const int t = labels[i], p = predictions[i];
    if (t < 0 || p < 0 || static_cast<std::size_t>(t) >= n_class ||
        static_cast<std::size_t>(p) >= n_class) {
      throw DataError("confusion: sample " + std::to_string(i) + " has class " +
                      std::to_string(t) + "/" + std::to_string(p) + " outside 0.." +
                      std::to_string(n_class - 1));
    }
    ++cm.at(static_cast<std::size_t>(t), static_cast<std::size_t>(p));
  }
  return cm;
}

MetricsBundle bundle(const ConfusionMatrix& cm) {
  const std::uint64_t total = cm.total();
  if (cm.n_class == 0 || total == 0) throw DataError("metrics requested for an empty evaluation");

  MetricsBundle m;
  m.accuracy = static_cast<double>(cm.trace()) / static_cast<double>(total);
  m.per_class.resize(cm.n_class);
  for (std::size_t c = 0; c < cm.n_class; ++c) {
    std::uint64_t tp = cm.at(c, c), fp = 0, fn = 0;
    for (std::size_t o = 0; o < cm.n_class; ++o) {
      if (o == c) continue;
      fp += cm.at(o, c);
      fn += cm.at(c, o);
    }
    ClassMetrics& pc = m.per_class[c];
    pc.support = tp + fn;
    pc.precision = (tp + fp) > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
    pc.recall = (tp + fn) > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0;
    pc.f1 = (pc.precision + pc.recall) > 0.0
                ? 2.0 * pc.precision * pc.recall / (pc.precision + pc.recall)
                : 0.0;
    m.macro_precision += pc.precision;
    m.macro_recall += pc.recall;
    m.macro_f1 += pc.f1;
  }
  m.macro_precision /= static_cast<double>(cm.n_class);
  m.macro_recall /= static_cast<double>(cm.n_class);
  m.macro_f1 /= static_cast<double>(cm.n_class);
  return m;
}

void write_confusion_csv(std::ostream& out, const ConfusionMatrix& cm,
                         std::span<const std::string> class_names) {
  out << "true\\pred";
  for (std::size_t c = 0; c < cm.n_class; ++c) out << "," << class_names[c];
  out << "\n";
  for (std::size_t t = 0; t < cm.n_class; ++t) {
    out << class_names[t];
    for (std::size_t p = 0; p < cm.n_class; ++p) out << "," << cm.at(t, p);
    out << "\n";
  }
}

void write_metrics_csv(std::ostream& out, const MetricsBundle& m,
                       std::span<const std::string> class_names) {
  char buf[64];
  auto fmt = [&buf](double v) {
    std::snprintf(buf, sizeof(buf), "%.6f", v);
    return std::string(buf);
  };
  out << "class,precision,recall,f1,support\n";
  for (std::size_t c = 0; c < m.per_class.size(); ++c) {
    const ClassMetrics& pc = m.per_class[c];
    out << class_names[c] << "," << fmt(pc.precision) << "," << fmt(pc.recall) << ","
        << fmt(pc.f1) << "," << pc.support << "\n";
  }
  out << "macro," << fmt(m.macro_precision) << "," << fmt(m.macro_recall) << ","
      << fmt(m.macro_f1) << ",\n";
  out << "accuracy," << fmt(m.accuracy) << ",,,\n";
}

}  // namespace grcan
