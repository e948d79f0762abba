#include <cmath>

#include "fleeta/nn/model.hpp"

namespace fleeta::nn {

namespace {

void check_lengths(const std::vector<double>& pred,
                   const std::vector<double>& label) {
  if (pred.size() != label.size() || pred.empty())
    throw ShapeMismatch("metrics need equally sized, non-empty vectors");
}

}  // namespace

double mape(const std::vector<double>& pred,
            const std::vector<double>& label) {
  check_lengths(pred, label);
  double total = 0.0;
  for (size_t i = 0; i < pred.size(); ++i) {
    if (label[i] <= 0.0)
      throw ZeroLabel("MAPE needs strictly positive labels");
    total += std::abs(pred[i] - label[i]) / label[i];
  }
  return 100.0 * total / static_cast<double>(pred.size());
}

double rmse(const std::vector<double>& pred,
            const std::vector<double>& label) {
  check_lengths(pred, label);
  double total = 0.0;
  for (size_t i = 0; i < pred.size(); ++i) {
    double d = pred[i] - label[i];
    total += d * d;
  }
  return std::sqrt(total / static_cast<double>(pred.size()));
}

double mae(const std::vector<double>& pred, const std::vector<double>& label) {
  check_lengths(pred, label);
  double total = 0.0;
  for (size_t i = 0; i < pred.size(); ++i)
    total += std::abs(pred[i] - label[i]);
  return total / static_cast<double>(pred.size());
}

}  // namespace fleeta::nn
