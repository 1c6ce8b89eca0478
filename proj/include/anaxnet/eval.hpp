/*
 * Copyright 2026 The AnaXNet Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <numeric>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "anaxnet/error.hpp"
#include "anaxnet/labels.hpp"
#include "anaxnet/matrix.hpp"

namespace anaxnet {

/**
 * Rank-based (Mann-Whitney) ROC-AUC with midranks for tied scores.
 * Returns nullopt when the labels are all positive or all negative.
 */
inline std::optional<double> roc_auc(std::span<const double> scores, std::span<const std::uint8_t> labels) {
  if (scores.size() != labels.size()) {
    throw ShapeError("roc_auc: " + std::to_string(scores.size()) + " scores for " + std::to_string(labels.size()) + " labels");
  }
  for (double s : scores)
    if (std::isnan(s)) throw DataError("roc_auc: NaN score");

  const std::size_t n = scores.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  double positive_rank_sum = 0.0;
  std::size_t positives = 0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && scores[order[j]] == scores[order[i]]) ++j;
    // Ranks are 1-based; the tied block [i, j) shares the mean rank.
    const double midrank = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t p = i; p < j; ++p) {
      if (labels[order[p]]) {
        positive_rank_sum += midrank;
        ++positives;
      }
    }
    i = j;
  }
  const std::size_t negatives = n - positives;
  if (positives == 0 || negatives == 0) return std::nullopt;
  const double np = static_cast<double>(positives);
  const double u = positive_rank_sum - np * (np + 1.0) / 2.0;
  return u / (np * static_cast<double>(negatives));
}

/// Per-(region, label) AUC cells with per-label averages over regions.
struct EvalReport {
  std::size_t regions = 0;
  std::size_t labels = 0;
  std::vector<std::string> region_names;
  std::vector<std::string> label_names;
  std::vector<std::optional<double>> cells;  // region-major
  std::vector<std::size_t> positives;
  std::vector<std::size_t> negatives;
  std::vector<std::optional<double>> per_label;
  std::optional<double> macro;

  std::size_t index(std::size_t region, std::size_t label) const { return region * labels + label; }
  const std::optional<double>& cell(std::size_t region, std::size_t label) const { return cells[index(region, label)]; }

  friend bool operator==(const EvalReport&, const EvalReport&) = default;
};

/// Mean of the defined cells restricted to the given label columns.
inline std::optional<double> macro_over_labels(const EvalReport& report, std::span<const std::size_t> label_ids) {
  double total = 0.0;
  std::size_t count = 0;
  for (std::size_t r = 0; r < report.regions; ++r) {
    for (auto m : label_ids) {
      if (m >= report.labels) throw ShapeError("label index " + std::to_string(m) + " out of range");
      if (const auto& c = report.cell(r, m)) {
        total += *c;
        ++count;
      }
    }
  }
  if (count == 0) return std::nullopt;
  return total / static_cast<double>(count);
}

namespace detail {

inline std::vector<std::string> default_names(std::vector<std::string> names, std::size_t n, const char* prefix) {
  if (names.size() == n) return names;
  names.clear();
  for (std::size_t i = 0; i < n; ++i) names.push_back(prefix + std::to_string(i + 1));
  return names;
}

}  // namespace detail

/**
 * AUC per (region, label) across images. Scores of one cell are only ranked
 * against labels of that same cell, so a finding predicted in the wrong region
 * counts against the model there.
 */
inline EvalReport evaluate(std::span<const Matrix> scores, std::span<const LabelTensor> labels,
                           std::vector<std::string> region_names = {}, std::vector<std::string> label_names = {}) {
  if (scores.empty()) throw ContractError("evaluate: no images to evaluate");
  if (scores.size() != labels.size()) throw ShapeError("evaluate: score and label counts differ");
  const std::size_t k = labels.front().regions();
  const std::size_t m_count = labels.front().labels();
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (scores[i].rows() != k || scores[i].cols() != m_count || labels[i].regions() != k || labels[i].labels() != m_count) {
      throw ShapeError("evaluate: image " + std::to_string(i) + " has scores " + scores[i].shape() + " and labels " +
                       labels[i].shape());
    }
  }

  EvalReport report;
  report.regions = k;
  report.labels = m_count;
  report.region_names = detail::default_names(std::move(region_names), k, "region_");
  report.label_names = detail::default_names(std::move(label_names), m_count, "L");
  report.cells.resize(k * m_count);
  report.positives.resize(k * m_count);
  report.negatives.resize(k * m_count);

  std::vector<double> s(scores.size());
  std::vector<std::uint8_t> y(scores.size());
  for (std::size_t r = 0; r < k; ++r) {
    for (std::size_t m = 0; m < m_count; ++m) {
      std::size_t pos = 0;
      for (std::size_t i = 0; i < scores.size(); ++i) {
        s[i] = scores[i](r, m);
        y[i] = labels[i].at(r, m) ? 1 : 0;
        pos += y[i];
      }
      const auto idx = report.index(r, m);
      report.cells[idx] = roc_auc(s, y);
      report.positives[idx] = pos;
      report.negatives[idx] = scores.size() - pos;
    }
  }

  report.per_label.resize(m_count);
  for (std::size_t m = 0; m < m_count; ++m) {
    const std::size_t ids[] = {m};
    report.per_label[m] = macro_over_labels(report, ids);
  }
  std::vector<std::size_t> all(m_count);
  std::iota(all.begin(), all.end(), std::size_t{0});
  report.macro = macro_over_labels(report, all);
  return report;
}

/// Signed differences a - b.
struct ReportComparison {
  std::vector<std::string> label_names;
  std::vector<std::optional<double>> per_label;
  std::optional<double> macro;
};

inline ReportComparison compare(const EvalReport& a, const EvalReport& b) {
  if (a.regions != b.regions || a.labels != b.labels) {
    throw ContractError("compare: report shapes differ (" + std::to_string(a.regions) + "x" + std::to_string(a.labels) +
                        " vs " + std::to_string(b.regions) + "x" + std::to_string(b.labels) + ")");
  }
  for (std::size_t i = 0; i < a.cells.size(); ++i) {
    if (a.cells[i].has_value() != b.cells[i].has_value()) throw ContractError("compare: reports define different cells");
  }
  ReportComparison c;
  c.label_names = a.label_names;
  for (std::size_t m = 0; m < a.labels; ++m) {
    if (a.per_label[m] && b.per_label[m]) {
      c.per_label.emplace_back(*a.per_label[m] - *b.per_label[m]);
    } else {
      c.per_label.emplace_back(std::nullopt);
    }
  }
  if (a.macro && b.macro) c.macro = *a.macro - *b.macro;
  return c;
}

namespace detail {

inline std::string fixed(const std::optional<double>& v, bool sign = false) {
  if (!v) return "NA";
  char buf[32];
  std::snprintf(buf, sizeof buf, sign ? "%+.4f" : "%.4f", *v);
  return buf;
}

inline std::string pad(const std::string& s, std::size_t width) {
  return s.size() >= width ? s + " " : s + std::string(width - s.size(), ' ');
}

}  // namespace detail

/// Human-readable table: one row per region plus an average row, label ids as columns.
inline std::string format_report(const EvalReport& report, const std::string& method = "model") {
  std::ostringstream out;
  out << "Labels:\n";
  for (std::size_t m = 0; m < report.labels; ++m) out << "  L" << (m + 1) << " = " << report.label_names[m] << "\n";
  out << "\n" << detail::pad("Region", 28);
  for (std::size_t m = 0; m < report.labels; ++m) out << detail::pad("L" + std::to_string(m + 1), 8);
  out << "AVG\n";
  for (std::size_t r = 0; r < report.regions; ++r) {
    out << detail::pad(report.region_names[r], 28);
    for (std::size_t m = 0; m < report.labels; ++m) out << detail::pad(detail::fixed(report.cell(r, m)), 8);
    out << "\n";
  }
  out << detail::pad(method, 28);
  for (std::size_t m = 0; m < report.labels; ++m) out << detail::pad(detail::fixed(report.per_label[m]), 8);
  out << detail::fixed(report.macro) << "\n";
  return out.str();
}

/// Two methods side by side with their per-label delta.
inline std::string format_comparison(const EvalReport& a, const std::string& name_a, const EvalReport& b,
                                     const std::string& name_b) {
  const auto delta = compare(a, b);
  std::ostringstream out;
  out << detail::pad("Method", 16);
  for (std::size_t m = 0; m < a.labels; ++m) out << detail::pad("L" + std::to_string(m + 1), 8);
  out << "AVG\n";
  auto row = [&](const std::string& name, const std::vector<std::optional<double>>& values,
                 const std::optional<double>& avg, bool sign) {
    out << detail::pad(name, 16);
    for (const auto& v : values) out << detail::pad(detail::fixed(v, sign), 8);
    out << detail::fixed(avg, sign) << "\n";
  };
  row(name_a, a.per_label, a.macro, false);
  row(name_b, b.per_label, b.macro, false);
  row("delta", delta.per_label, delta.macro, true);
  return out.str();
}

/// Tab-separated cells: region, label, auc|NA, n_pos, n_neg. Averages use region "ALL".
inline std::string format_report_tsv(const EvalReport& report) {
  std::ostringstream out;
  auto auc = [](const std::optional<double>& v) {
    if (!v) return std::string("NA");
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6f", *v);
    return std::string(buf);
  };
  for (std::size_t r = 0; r < report.regions; ++r) {
    for (std::size_t m = 0; m < report.labels; ++m) {
      const auto i = report.index(r, m);
      out << report.region_names[r] << '\t' << report.label_names[m] << '\t' << auc(report.cells[i]) << '\t'
          << report.positives[i] << '\t' << report.negatives[i] << '\n';
    }
  }
  std::size_t total_pos = 0, total_neg = 0;
  for (std::size_t m = 0; m < report.labels; ++m) {
    std::size_t pos = 0, neg = 0;
    for (std::size_t r = 0; r < report.regions; ++r) {
      pos += report.positives[report.index(r, m)];
      neg += report.negatives[report.index(r, m)];
    }
    total_pos += pos;
    total_neg += neg;
    out << "ALL\t" << report.label_names[m] << '\t' << auc(report.per_label[m]) << '\t' << pos << '\t' << neg << '\n';
  }
  out << "ALL\tALL\t" << auc(report.macro) << '\t' << total_pos << '\t' << total_neg << '\n';
  return out.str();
}

}  // namespace anaxnet
