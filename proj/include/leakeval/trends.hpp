#pragma once

#include <map>
#include <string>
#include <vector>

#include <json.hpp>

namespace leakeval {

enum class Dataset { kRobust04, kDl20 };
enum class ModelCategory { kProbabilistic, kNeural, kLlm };
enum class ResultKind { kBest, kBaseline };
enum class EvalProtocol { kFull, kCrossValidation };

std::string to_string(Dataset dataset);
std::string to_string(ModelCategory category);
std::string to_string(ResultKind kind);
std::string to_string(EvalProtocol protocol);

Dataset dataset_from_string(const std::string& s);
ModelCategory category_from_string(const std::string& s);
ResultKind kind_from_string(const std::string& s);
EvalProtocol protocol_from_string(const std::string& s);

/// One extracted literature result. Categorization (probabilistic / neural /
/// llm, by the >7B-parameters-or-"LLM"-in-name rule) is assigned upstream by
/// whoever extracts the data; this toolkit only validates the vocabulary.
struct MetaRecord {
  std::string paper_id;
  int year = 0;  // 2004..2025
  Dataset dataset = Dataset::kRobust04;
  std::string metric;  // canonical lowercase, e.g. "ndcg@10"
  double value = 0.0;  // in [0, 1]
  ModelCategory category = ModelCategory::kProbabilistic;
  ResultKind kind = ResultKind::kBest;
  EvalProtocol protocol = EvalProtocol::kFull;
};

/// CSV with header paper_id,year,dataset,metric,value,category,kind,protocol
/// (any column order). Rows failing the closed vocabularies or the value /
/// year ranges are rejected with their row number.
std::vector<MetaRecord> load_meta_csv(const std::string& text);

/// Per-year maximum over records matching (dataset, metric, category, kind,
/// protocol); years with no records are absent.
std::map<int, double> best_series(const std::vector<MetaRecord>& records, Dataset dataset,
                                  const std::string& metric, ModelCategory category,
                                  ResultKind kind, EvalProtocol protocol = EvalProtocol::kFull);

struct TrendLine {
  double slope = 0.0;  // value units per year
  double intercept = 0.0;
  std::size_t points_used = 0;
};

/// Ordinary least squares of value on year. Requires >= 2 distinct years.
TrendLine fit_trend(const std::map<int, double>& series);

struct ImprovementDelta {
  double absolute_points = 0.0;  // (candidate - reference) * 100
  double relative_pct = 0.0;     // (candidate / reference - 1) * 100
};

/// Both conventions side by side; "N% improvement" claims in the literature
/// mix them freely. reference must be > 0.
ImprovementDelta improvement_delta(double candidate, double reference);

/// dataset string -> metric -> number of distinct papers reporting it.
std::map<std::string, std::map<std::string, int>> metric_census(
    const std::vector<MetaRecord>& records);

/// Distinct papers per dataset string (census denominators).
std::map<std::string, int> paper_census(const std::vector<MetaRecord>& records);

struct ReferenceLine {
  std::string label;
  double value = 0.0;
};

struct PlotBundle {
  nlohmann::json series;  // scatter points, trend lines, reference lines
  std::string csv;        // flat series rows
  std::string svg;        // dependency-free scatter plot
};

/// Scatter series per (category, kind, protocol) — cross-validation points
/// tagged separately and never used for the trend fits — plus OLS trend
/// lines per category (best results, full protocol) and the given horizontal
/// reference lines.
PlotBundle emit_plot_series(const std::vector<MetaRecord>& records, Dataset dataset,
                            const std::string& metric,
                            const std::vector<ReferenceLine>& reference_lines);

}  // namespace leakeval
