#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "leakeval/trec_io.hpp"

namespace leakeval {

struct TopicScore {
  std::string topic_id;
  std::string metric;  // canonical lowercase, e.g. "ndcg@10", "map"
  double value = 0.0;
};

struct EvalReport {
  std::vector<TopicScore> per_topic;    // sorted by (metric, topic_id)
  std::map<std::string, double> mean;   // metric -> arithmetic mean over scored topics
  std::size_t topic_count = 0;
};

struct MetricSpec {
  std::string name;        // canonical form
  bool is_map = false;
  std::size_t cutoff = 0;  // for ndcg@k
};

/// Accepts "map" or "ndcg@k" (case-insensitive); throws Error otherwise.
MetricSpec parse_metric_name(const std::string& name);

/// nDCG@k with linear gain: DCG = sum grade_i / log2(i + 1) over the top k,
/// normalized by the ideal DCG computed from the judgment grades sorted
/// descending. Unjudged docs gain 0; topics without any grade > 0 score 0.
double ndcg_at_k(const std::vector<std::string>& ranked_docs, const Judgments& judgments,
                 std::size_t k);

/// Binary-relevance average precision: grade > 0 counts as relevant, the
/// divisor is the total number of relevant docs in the judgments.
double average_precision(const std::vector<std::string>& ranked_docs, const Judgments& judgments);

/// Scores every judged topic (intersected with topic_filter when given).
/// Topics judged but absent from the run score 0 and are included in the
/// mean; topics retrieved but not judged are ignored.
EvalReport evaluate(const Run& run, const QrelsSet& qrels, const std::vector<std::string>& metrics,
                    const std::optional<std::set<std::string>>& topic_filter = std::nullopt);

/// `topic_id,metric,value` rows.
std::string eval_report_csv(const EvalReport& report);

nlohmann::json eval_report_json(const EvalReport& report);

/// Human-readable summary; means printed with 4 decimals.
std::string eval_report_text(const EvalReport& report);

}  // namespace leakeval
