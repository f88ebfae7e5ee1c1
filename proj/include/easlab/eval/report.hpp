#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "easlab/eval/evaluate.hpp"
#include "easlab/eval/ttest.hpp"

namespace easlab::eval {

enum class ReportFormat { Csv, Json };

ReportFormat format_for(const std::filesystem::path& path);  // by extension

inline constexpr int kReportSchemaVersion = 1;

// Free-form run metadata (seed, alpha, scoring rules, ...).
using ReportMeta = std::map<std::string, std::string>;

// CSV: header noise_id,snr_db,method,mean_stoi,n; rows in key order, floats
// to 6 significant digits. JSON keeps full precision so it reads back exactly.
std::string score_table_csv(const ScoreTable& table);
std::string score_table_json(const ScoreTable& table, const ReportMeta& meta = {},
                             const std::vector<ItemScore>* items = nullptr);
ScoreTable parse_score_table_json(std::string_view json_text);

std::string ttest_csv(const TTestResult& r);
std::string ttest_json(const TTestResult& r, const ReportMeta& meta = {});

// Writes by format; a CSV report gets its metadata in "<path>.meta.json".
void emit_report(const ScoreTable& table, const std::filesystem::path& path,
                 const ReportMeta& meta = {}, const std::vector<ItemScore>* items = nullptr);
void emit_report(const TTestResult& result, const std::filesystem::path& path,
                 const ReportMeta& meta = {});

// Score lists for the t-test: a JSON array of numbers, or an object with a
// "scores" array, or a report JSON with "items" (filtered by method when given).
std::vector<double> load_scores(const std::filesystem::path& path, std::string_view method = {});

}  // namespace easlab::eval
