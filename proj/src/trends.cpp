#include "leakeval/trends.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <set>

#include "leakeval/errors.hpp"
#include "leakeval/text_util.hpp"

namespace leakeval {

namespace {

using nlohmann::json;

constexpr int kYearMin = 2004;
constexpr int kYearMax = 2025;

/// RFC-4180-ish row splitter: quoted fields may contain commas and doubled
/// quotes.
std::vector<std::string> split_csv_row(const std::string& line) {
  std::vector<std::string> fields;
  std::string current;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          current.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        current.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(current);
      current.clear();
    } else {
      current.push_back(c);
    }
  }
  fields.push_back(current);
  return fields;
}

}  // namespace

std::string to_string(Dataset dataset) {
  return dataset == Dataset::kRobust04 ? "robust04" : "dl20";
}
std::string to_string(ModelCategory category) {
  switch (category) {
    case ModelCategory::kProbabilistic: return "probabilistic";
    case ModelCategory::kNeural: return "neural";
    case ModelCategory::kLlm: return "llm";
  }
  return "";
}
std::string to_string(ResultKind kind) {
  return kind == ResultKind::kBest ? "best" : "baseline";
}
std::string to_string(EvalProtocol protocol) {
  return protocol == EvalProtocol::kFull ? "full" : "cross_validation";
}

Dataset dataset_from_string(const std::string& s) {
  const std::string v = lower_copy(trim(s));
  if (v == "robust04") return Dataset::kRobust04;
  if (v == "dl20") return Dataset::kDl20;
  throw Error("unknown dataset '" + s + "' (expected robust04 or dl20)");
}
ModelCategory category_from_string(const std::string& s) {
  const std::string v = lower_copy(trim(s));
  if (v == "probabilistic") return ModelCategory::kProbabilistic;
  if (v == "neural") return ModelCategory::kNeural;
  if (v == "llm") return ModelCategory::kLlm;
  throw Error("unknown category '" + s + "' (expected probabilistic, neural, or llm)");
}
ResultKind kind_from_string(const std::string& s) {
  const std::string v = lower_copy(trim(s));
  if (v == "best") return ResultKind::kBest;
  if (v == "baseline") return ResultKind::kBaseline;
  throw Error("unknown kind '" + s + "' (expected best or baseline)");
}
EvalProtocol protocol_from_string(const std::string& s) {
  const std::string v = lower_copy(trim(s));
  if (v == "full") return EvalProtocol::kFull;
  if (v == "cross_validation" || v == "cv") return EvalProtocol::kCrossValidation;
  throw Error("unknown protocol '" + s + "' (expected full or cross_validation)");
}

std::vector<MetaRecord> load_meta_csv(const std::string& text) {
  const std::vector<std::string> lines = split_lines(text);
  if (lines.empty()) throw ParseError("meta CSV is empty");

  static const std::vector<std::string> kColumns = {
      "paper_id", "year", "dataset", "metric", "value", "category", "kind", "protocol"};
  const std::vector<std::string> header = split_csv_row(lines[0]);
  std::map<std::string, std::size_t> column_index;
  for (std::size_t i = 0; i < header.size(); ++i) column_index[lower_copy(trim(header[i]))] = i;
  for (const std::string& column : kColumns) {
    if (!column_index.count(column)) throw ParseError("meta CSV missing column '" + column + "'");
  }

  std::vector<MetaRecord> records;
  for (std::size_t row = 1; row < lines.size(); ++row) {
    if (trim(lines[row]).empty()) continue;
    const std::vector<std::string> fields = split_csv_row(lines[row]);
    const std::size_t row_no = row + 1;
    const auto field = [&](const std::string& column) -> std::string {
      const std::size_t idx = column_index.at(column);
      if (idx >= fields.size()) {
        throw ParseError("row " + std::to_string(row_no) + ": missing field '" + column + "'");
      }
      return trim(fields[idx]);
    };
    try {
      MetaRecord record;
      record.paper_id = field("paper_id");
      if (record.paper_id.empty()) throw Error("empty paper_id");
      const std::string year_str = field("year");
      auto res = std::from_chars(year_str.data(), year_str.data() + year_str.size(), record.year);
      if (res.ec != std::errc() || res.ptr != year_str.data() + year_str.size()) {
        throw Error("invalid year '" + year_str + "'");
      }
      if (record.year < kYearMin || record.year > kYearMax) {
        throw Error("year " + year_str + " outside " + std::to_string(kYearMin) + "-" +
                    std::to_string(kYearMax));
      }
      record.dataset = dataset_from_string(field("dataset"));
      record.metric = lower_copy(field("metric"));
      if (record.metric.empty()) throw Error("empty metric");
      const std::string value_str = field("value");
      auto vres =
          std::from_chars(value_str.data(), value_str.data() + value_str.size(), record.value);
      if (vres.ec != std::errc() || vres.ptr != value_str.data() + value_str.size()) {
        throw Error("invalid value '" + value_str + "'");
      }
      if (record.value < 0.0 || record.value > 1.0) {
        throw Error("value " + value_str + " outside [0, 1]");
      }
      record.category = category_from_string(field("category"));
      record.kind = kind_from_string(field("kind"));
      record.protocol = protocol_from_string(field("protocol"));
      records.push_back(std::move(record));
    } catch (const Error& e) {
      throw ParseError("row " + std::to_string(row_no) + ": " + e.what());
    }
  }
  return records;
}

std::map<int, double> best_series(const std::vector<MetaRecord>& records, Dataset dataset,
                                  const std::string& metric, ModelCategory category,
                                  ResultKind kind, EvalProtocol protocol) {
  const std::string canonical_metric = lower_copy(trim(metric));
  std::map<int, double> series;
  for (const MetaRecord& record : records) {
    if (record.dataset != dataset || record.metric != canonical_metric ||
        record.category != category || record.kind != kind || record.protocol != protocol) {
      continue;
    }
    auto it = series.find(record.year);
    if (it == series.end() || record.value > it->second) series[record.year] = record.value;
  }
  return series;
}

TrendLine fit_trend(const std::map<int, double>& series) {
  if (series.size() < 2) throw Error("trend fit needs at least 2 distinct years");
  double sum_x = 0.0, sum_y = 0.0;
  for (const auto& [year, value] : series) {
    sum_x += year;
    sum_y += value;
  }
  const double n = static_cast<double>(series.size());
  const double mean_x = sum_x / n;
  const double mean_y = sum_y / n;
  double sxx = 0.0, sxy = 0.0;
  for (const auto& [year, value] : series) {
    const double dx = year - mean_x;
    sxx += dx * dx;
    sxy += dx * (value - mean_y);
  }
  TrendLine line;
  line.slope = sxy / sxx;
  line.intercept = mean_y - line.slope * mean_x;
  line.points_used = series.size();
  return line;
}

ImprovementDelta improvement_delta(double candidate, double reference) {
  if (reference <= 0.0) throw Error("improvement reference must be > 0");
  ImprovementDelta delta;
  delta.absolute_points = (candidate - reference) * 100.0;
  delta.relative_pct = (candidate / reference - 1.0) * 100.0;
  return delta;
}

std::map<std::string, std::map<std::string, int>> metric_census(
    const std::vector<MetaRecord>& records) {
  std::map<std::string, std::map<std::string, std::set<std::string>>> papers;
  for (const MetaRecord& record : records) {
    papers[to_string(record.dataset)][record.metric].insert(record.paper_id);
  }
  std::map<std::string, std::map<std::string, int>> census;
  for (const auto& [dataset, metrics] : papers) {
    for (const auto& [metric, ids] : metrics) {
      census[dataset][metric] = static_cast<int>(ids.size());
    }
  }
  return census;
}

std::map<std::string, int> paper_census(const std::vector<MetaRecord>& records) {
  std::map<std::string, std::set<std::string>> papers;
  for (const MetaRecord& record : records) {
    papers[to_string(record.dataset)].insert(record.paper_id);
  }
  std::map<std::string, int> counts;
  for (const auto& [dataset, ids] : papers) counts[dataset] = static_cast<int>(ids.size());
  return counts;
}

namespace {

struct SeriesKey {
  ModelCategory category;
  ResultKind kind;
  EvalProtocol protocol;
  bool operator<(const SeriesKey& other) const {
    if (category != other.category) return category < other.category;
    if (kind != other.kind) return kind < other.kind;
    return protocol < other.protocol;
  }
};

std::string series_name(const SeriesKey& key) {
  std::string name = to_string(key.category) + "_" + to_string(key.kind);
  if (key.protocol == EvalProtocol::kCrossValidation) name += "_cv";
  return name;
}

std::string render_svg(const std::map<SeriesKey, std::vector<std::pair<int, double>>>& points,
                       const std::vector<std::pair<std::string, TrendLine>>& trends,
                       const std::vector<ReferenceLine>& reference_lines, int year_min,
                       int year_max, const std::string& title) {
  const double width = 720, height = 480;
  const double left = 60, right = 20, top = 40, bottom = 50;
  const double plot_w = width - left - right;
  const double plot_h = height - top - bottom;
  if (year_min >= year_max) year_max = year_min + 1;
  const auto sx = [&](double year) {
    return left + (year - year_min) / static_cast<double>(year_max - year_min) * plot_w;
  };
  const auto sy = [&](double value) { return top + (1.0 - value) * plot_h; };

  static const char* kColors[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728",
                                  "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};
  std::string svg = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + format_double(width) +
                    "\" height=\"" + format_double(height) + "\">\n";
  svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg += "<text x=\"" + format_double(width / 2) + "\" y=\"20\" text-anchor=\"middle\" " +
         "font-family=\"sans-serif\" font-size=\"14\">" + title + "</text>\n";

  // axes + gridlines at 0.0..1.0
  for (int tick = 0; tick <= 10; tick += 2) {
    const double v = tick / 10.0;
    svg += "<line x1=\"" + format_double(left) + "\" y1=\"" + format_double(sy(v)) + "\" x2=\"" +
           format_double(width - right) + "\" y2=\"" + format_double(sy(v)) +
           "\" stroke=\"#dddddd\"/>\n";
    svg += "<text x=\"" + format_double(left - 8) + "\" y=\"" + format_double(sy(v) + 4) +
           "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">" +
           format_fixed(v, 1) + "</text>\n";
  }
  for (int year = year_min; year <= year_max; ++year) {
    if ((year - year_min) % std::max(1, (year_max - year_min) / 8) != 0) continue;
    svg += "<text x=\"" + format_double(sx(year)) + "\" y=\"" + format_double(height - 28) +
           "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">" +
           std::to_string(year) + "</text>\n";
  }

  for (const ReferenceLine& ref : reference_lines) {
    svg += "<line x1=\"" + format_double(left) + "\" y1=\"" + format_double(sy(ref.value)) +
           "\" x2=\"" + format_double(width - right) + "\" y2=\"" + format_double(sy(ref.value)) +
           "\" stroke=\"#444444\" stroke-dasharray=\"6,3\"/>\n";
    svg += "<text x=\"" + format_double(width - right - 4) + "\" y=\"" +
           format_double(sy(ref.value) - 4) +
           "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"10\">" + ref.label +
           " (" + format_double(ref.value) + ")</text>\n";
  }

  int color_index = 0;
  double legend_y = top + 6;
  for (const auto& [key, pts] : points) {
    const char* color = kColors[color_index % 8];
    const bool filled = key.kind == ResultKind::kBest;
    const bool diamond = key.protocol == EvalProtocol::kCrossValidation;
    for (const auto& [year, value] : pts) {
      if (diamond) {
        const double x = sx(year), y = sy(value);
        svg += "<polygon points=\"" + format_double(x) + "," + format_double(y - 5) + " " +
               format_double(x + 5) + "," + format_double(y) + " " + format_double(x) + "," +
               format_double(y + 5) + " " + format_double(x - 5) + "," + format_double(y) +
               "\" stroke=\"" + color + "\" fill=\"" + (filled ? color : "white") + "\"/>\n";
      } else {
        svg += "<circle cx=\"" + format_double(sx(year)) + "\" cy=\"" + format_double(sy(value)) +
               "\" r=\"4\" stroke=\"" + std::string(color) + "\" fill=\"" +
               (filled ? color : "white") + "\"/>\n";
      }
    }
    svg += "<text x=\"" + format_double(left + 8) + "\" y=\"" + format_double(legend_y) +
           "\" font-family=\"sans-serif\" font-size=\"10\" fill=\"" + color + "\">" +
           series_name(key) + "</text>\n";
    legend_y += 13;
    ++color_index;
  }

  color_index = 0;
  for (const auto& [name, line] : trends) {
    const char* color = kColors[color_index % 8];
    const double y1 = line.intercept + line.slope * year_min;
    const double y2 = line.intercept + line.slope * year_max;
    svg += "<line x1=\"" + format_double(sx(year_min)) + "\" y1=\"" + format_double(sy(y1)) +
           "\" x2=\"" + format_double(sx(year_max)) + "\" y2=\"" + format_double(sy(y2)) +
           "\" stroke=\"" + color + "\" stroke-width=\"1.5\"/>\n";
    ++color_index;
  }

  svg += "</svg>\n";
  return svg;
}

}  // namespace

PlotBundle emit_plot_series(const std::vector<MetaRecord>& records, Dataset dataset,
                            const std::string& metric,
                            const std::vector<ReferenceLine>& reference_lines) {
  const std::string canonical_metric = lower_copy(trim(metric));
  std::map<SeriesKey, std::vector<std::pair<int, double>>> points;
  int year_min = kYearMax, year_max = kYearMin;
  for (const MetaRecord& record : records) {
    if (record.dataset != dataset || record.metric != canonical_metric) continue;
    points[{record.category, record.kind, record.protocol}].push_back({record.year, record.value});
    year_min = std::min(year_min, record.year);
    year_max = std::max(year_max, record.year);
  }
  for (auto& [key, pts] : points) std::sort(pts.begin(), pts.end());

  // Trend lines: best results, full protocol only.
  std::vector<std::pair<std::string, TrendLine>> trends;
  for (const ModelCategory category :
       {ModelCategory::kProbabilistic, ModelCategory::kNeural, ModelCategory::kLlm}) {
    const std::map<int, double> series =
        best_series(records, dataset, canonical_metric, category, ResultKind::kBest);
    if (series.size() >= 2) {
      trends.emplace_back(to_string(category) + "_best", fit_trend(series));
    }
  }

  PlotBundle bundle;
  json series_json = json::array();
  std::string csv = "series,category,kind,protocol,year,value\n";
  for (const auto& [key, pts] : points) {
    json pts_json = json::array();
    for (const auto& [year, value] : pts) {
      pts_json.push_back({{"year", year}, {"value", value}});
      csv += series_name(key) + "," + to_string(key.category) + "," + to_string(key.kind) + "," +
             to_string(key.protocol) + "," + std::to_string(year) + "," + format_double(value) +
             "\n";
    }
    series_json.push_back({{"name", series_name(key)},
                           {"category", to_string(key.category)},
                           {"kind", to_string(key.kind)},
                           {"protocol", to_string(key.protocol)},
                           {"points", pts_json}});
  }

  json trends_json = json::array();
  for (const auto& [name, line] : trends) {
    trends_json.push_back({{"name", name},
                           {"slope", line.slope},
                           {"intercept", line.intercept},
                           {"points_used", line.points_used}});
  }
  json refs_json = json::array();
  for (const ReferenceLine& ref : reference_lines) {
    refs_json.push_back({{"label", ref.label}, {"value", ref.value}});
  }

  bundle.series = json{{"dataset", to_string(dataset)},
                       {"metric", canonical_metric},
                       {"series", series_json},
                       {"trend_lines", trends_json},
                       {"reference_lines", refs_json}};
  bundle.csv = csv;
  if (!points.empty()) {
    bundle.svg = render_svg(points, trends, reference_lines, year_min, year_max,
                            to_string(dataset) + " " + canonical_metric);
  } else {
    bundle.svg = render_svg({}, {}, reference_lines, kYearMin, kYearMax,
                            to_string(dataset) + " " + canonical_metric);
  }
  return bundle;
}

}  // namespace leakeval
