// Copyright (c) 2026 The synthasr Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <charconv>
#include <cstdio>
#include <sstream>

#include "synthasr/error.hpp"
#include "synthasr/pipeline/stages.hpp"

namespace synthasr::pipeline {

const std::vector<std::string>& EvalSetNames() {
  static const std::vector<std::string> names = {"dev_clean", "dev_other", "test_clean", "test_other"};
  return names;
}

std::size_t SelectLmWeight(const std::vector<SweepRow>& rows) {
  Require(!rows.empty(), "lm sweep: no rows");
  std::size_t best = 0;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    if (rows[i].wer[0] < rows[best].wer[0]) best = i;
  }
  return best;
}

namespace {

std::string Num(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, r.ptr);
}

const char* YesNo(bool b) { return b ? "yes" : "no"; }

bool ParseFlag(const std::string& s) {
  if (s == "yes") return true;
  if (s == "no") return false;
  throw Error(ErrorCode::kFormat, "report: expected yes/no, got '" + s + "'");
}

double ParseNum(const std::string& s) {
  double v = 0.0;
  const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (r.ec != std::errc() || r.ptr != s.data() + s.size()) {
    throw Error(ErrorCode::kFormat, "report: bad number '" + s + "'");
  }
  return v;
}

std::vector<std::string> SplitCsv(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(line);
  while (std::getline(in, cur, ',')) out.push_back(cur);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

constexpr const char* kHeader = "spec_aug,syn_data,lm,dev_clean,dev_other,test_clean,test_other";

}  // namespace

std::string ReportCsv(const std::vector<ReportRow>& rows) {
  std::ostringstream out;
  out << kHeader << '\n';
  for (const auto& r : rows) {
    out << YesNo(r.condition.spec_aug) << ',' << YesNo(r.condition.syn_data) << ',' << YesNo(r.condition.lm);
    for (double w : r.wer) out << ',' << Num(w);
    out << '\n';
  }
  return out.str();
}

std::vector<ReportRow> ParseReportCsv(const std::string& csv) {
  std::istringstream in(csv);
  std::string line;
  if (!std::getline(in, line) || line != kHeader) throw Error(ErrorCode::kFormat, "report: unexpected header");
  std::vector<ReportRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = SplitCsv(line);
    if (f.size() != 3 + kEvalSets) throw Error(ErrorCode::kFormat, "report: wrong column count in '" + line + "'");
    ReportRow r;
    r.condition = {ParseFlag(f[0]), ParseFlag(f[1]), ParseFlag(f[2])};
    for (std::size_t k = 0; k < kEvalSets; ++k) r.wer[k] = ParseNum(f[3 + k]);
    rows.push_back(r);
  }
  return rows;
}

std::string ReportTable(const std::vector<ReportRow>& rows) {
  std::ostringstream out;
  char buf[160];
  std::snprintf(buf, sizeof(buf), "%-8s %-8s %-4s %6s | %9s %9s | %10s %10s\n", "SpecAug", "SynData", "LM",
                "lambda", "dev-clean", "dev-other", "test-clean", "test-other");
  out << buf << std::string(80, '-') << '\n';
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof(buf), "%-8s %-8s %-4s %6.2f | %9.1f %9.1f | %10.1f %10.1f\n",
                  YesNo(r.condition.spec_aug), YesNo(r.condition.syn_data), YesNo(r.condition.lm), r.lm_weight,
                  r.wer[0], r.wer[1], r.wer[2], r.wer[3]);
    out << buf;
  }
  return out.str();
}

std::string SweepCsv(const std::vector<SweepRow>& rows) {
  std::ostringstream out;
  out << "condition,lm_weight,dev_clean,dev_other,test_clean,test_other\n";
  for (const auto& r : rows) {
    out << r.condition << ',' << Num(r.lm_weight);
    for (double w : r.wer) out << ',' << Num(w);
    out << '\n';
  }
  return out.str();
}

}  // namespace synthasr::pipeline
