#include "easlab/eval/report.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "easlab/error.hpp"
#include "json.hpp"

namespace easlab::eval {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

std::string g6(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

// Ids end up in CSV cells; quote anything that would break the row.
std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

void write_text(const std::string& text, const fs::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("failed writing " + path.string());
}

json meta_json(const ReportMeta& meta) {
  json m = json::object();
  for (const auto& [k, v] : meta) m[k] = v;
  return m;
}

}  // namespace

ReportFormat format_for(const fs::path& path) {
  const std::string ext = path.extension().string();
  if (ext == ".csv") return ReportFormat::Csv;
  if (ext == ".json") return ReportFormat::Json;
  throw InvalidArgument("report path must end in .csv or .json: " + path.string());
}

std::string score_table_csv(const ScoreTable& table) {
  std::string out = "noise_id,snr_db,method,mean_stoi,n\n";
  for (const auto& [key, cell] : table) {
    out += csv_field(key.noise_id) + ',' + g6(key.snr_db) + ',' + csv_field(key.method) + ',' +
           g6(cell.mean_stoi) + ',' + std::to_string(cell.n) + '\n';
  }
  return out;
}

std::string score_table_json(const ScoreTable& table, const ReportMeta& meta,
                             const std::vector<ItemScore>* items) {
  json cells = json::array();
  for (const auto& [key, cell] : table) {
    cells.push_back({{"noise_id", key.noise_id},
                     {"snr_db", key.snr_db},
                     {"method", key.method},
                     {"mean_stoi", cell.mean_stoi},
                     {"n", cell.n}});
  }
  json j = {{"schema_version", kReportSchemaVersion}, {"meta", meta_json(meta)}, {"cells", cells}};
  if (items) {
    json list = json::array();
    for (const ItemScore& it : *items) {
      list.push_back({{"utterance_id", it.utterance_id},
                      {"noise_id", it.noise_id},
                      {"snr_db", it.snr_db},
                      {"method", it.method},
                      {"stoi", it.stoi}});
    }
    j["items"] = std::move(list);
  }
  return j.dump(2) + "\n";
}

ScoreTable parse_score_table_json(std::string_view json_text) {
  ScoreTable table;
  try {
    const json j = json::parse(json_text);
    if (j.at("schema_version").get<int>() != kReportSchemaVersion) {
      throw InvalidArgument("unsupported report schema version");
    }
    for (const json& c : j.at("cells")) {
      table[{c.at("noise_id").get<std::string>(), c.at("snr_db").get<double>(),
             c.at("method").get<std::string>()}] = {c.at("mean_stoi").get<double>(), c.at("n").get<int>()};
    }
  } catch (const json::exception& e) {
    throw InvalidArgument(std::string("malformed score report: ") + e.what());
  }
  return table;
}

std::string ttest_csv(const TTestResult& r) {
  return "t_statistic,df,p_value,mean_difference,n\n" + g6(r.t_statistic) + ',' +
         std::to_string(r.degrees_of_freedom) + ',' + g6(r.p_value) + ',' + g6(r.mean_difference) +
         ',' + std::to_string(r.n) + '\n';
}

std::string ttest_json(const TTestResult& r, const ReportMeta& meta) {
  const json j = {{"schema_version", kReportSchemaVersion},
                  {"meta", meta_json(meta)},
                  {"t_statistic", r.t_statistic},
                  {"df", r.degrees_of_freedom},
                  {"p_value", r.p_value},
                  {"mean_difference", r.mean_difference},
                  {"n", r.n}};
  return j.dump(2) + "\n";
}

void emit_report(const ScoreTable& table, const fs::path& path, const ReportMeta& meta,
                 const std::vector<ItemScore>* items) {
  if (table.empty()) throw InvalidArgument("score table is empty");
  if (format_for(path) == ReportFormat::Json) {
    write_text(score_table_json(table, meta, items), path);
    return;
  }
  write_text(score_table_csv(table), path);
  json side = {{"schema_version", kReportSchemaVersion}, {"meta", meta_json(meta)}};
  write_text(side.dump(2) + "\n", fs::path(path.string() + ".meta.json"));
}

void emit_report(const TTestResult& result, const fs::path& path, const ReportMeta& meta) {
  if (format_for(path) == ReportFormat::Json) {
    write_text(ttest_json(result, meta), path);
    return;
  }
  write_text(ttest_csv(result), path);
  json side = {{"schema_version", kReportSchemaVersion}, {"meta", meta_json(meta)}};
  write_text(side.dump(2) + "\n", fs::path(path.string() + ".meta.json"));
}

std::vector<double> load_scores(const fs::path& path, std::string_view method) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  std::vector<double> out;
  try {
    const json j = json::parse(ss.str());
    if (j.is_array()) return j.get<std::vector<double>>();
    if (j.contains("scores")) return j.at("scores").get<std::vector<double>>();
    if (j.contains("items")) {
      for (const json& it : j.at("items")) {
        if (method.empty() || it.at("method").get<std::string>() == method) {
          out.push_back(it.at("stoi").get<double>());
        }
      }
      return out;
    }
  } catch (const json::exception& e) {
    throw InvalidArgument("malformed score file " + path.string() + ": " + e.what());
  }
  throw InvalidArgument("score file " + path.string() + " has no scores");
}

}  // namespace easlab::eval
