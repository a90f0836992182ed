#include "leakeval/metrics.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>

#include "leakeval/errors.hpp"
#include "leakeval/text_util.hpp"

namespace leakeval {

namespace {

double discount(std::size_t rank) {  // rank is 1-based
  return std::log2(static_cast<double>(rank) + 1.0);
}

std::vector<std::string> ranked_doc_ids(const std::vector<RunEntry>& entries) {
  std::vector<std::string> docs;
  docs.reserve(entries.size());
  for (const RunEntry& e : entries) docs.push_back(e.doc_id);
  return docs;
}

}  // namespace

MetricSpec parse_metric_name(const std::string& name) {
  const std::string canonical = lower_copy(trim(name));
  if (canonical == "map") return {"map", true, 0};
  if (canonical.rfind("ndcg@", 0) == 0) {
    const std::string cutoff_str = canonical.substr(5);
    std::size_t cutoff = 0;
    auto res = std::from_chars(cutoff_str.data(), cutoff_str.data() + cutoff_str.size(), cutoff);
    if (res.ec == std::errc() && res.ptr == cutoff_str.data() + cutoff_str.size() && cutoff >= 1) {
      return {canonical, false, cutoff};
    }
  }
  throw Error("unknown metric '" + name + "' (expected map or ndcg@k)");
}

double ndcg_at_k(const std::vector<std::string>& ranked_docs, const Judgments& judgments,
                 std::size_t k) {
  std::vector<int> grades;
  grades.reserve(judgments.size());
  for (const auto& [doc_id, grade] : judgments) {
    if (grade > 0) grades.push_back(grade);
  }
  if (grades.empty()) return 0.0;
  std::sort(grades.begin(), grades.end(), std::greater<int>());

  double ideal = 0.0;
  for (std::size_t i = 0; i < std::min(k, grades.size()); ++i) {
    ideal += grades[i] / discount(i + 1);
  }

  double dcg = 0.0;
  for (std::size_t i = 0; i < std::min(k, ranked_docs.size()); ++i) {
    auto it = judgments.find(ranked_docs[i]);
    if (it != judgments.end() && it->second > 0) {
      dcg += it->second / discount(i + 1);
    }
  }
  return dcg / ideal;
}

double average_precision(const std::vector<std::string>& ranked_docs, const Judgments& judgments) {
  std::size_t total_relevant = 0;
  for (const auto& [doc_id, grade] : judgments) {
    if (grade > 0) ++total_relevant;
  }
  if (total_relevant == 0) return 0.0;

  double sum = 0.0;
  std::size_t relevant_seen = 0;
  for (std::size_t i = 0; i < ranked_docs.size(); ++i) {
    auto it = judgments.find(ranked_docs[i]);
    if (it != judgments.end() && it->second > 0) {
      ++relevant_seen;
      sum += static_cast<double>(relevant_seen) / static_cast<double>(i + 1);
    }
  }
  return sum / static_cast<double>(total_relevant);
}

EvalReport evaluate(const Run& run, const QrelsSet& qrels, const std::vector<std::string>& metrics,
                    const std::optional<std::set<std::string>>& topic_filter) {
  std::vector<MetricSpec> specs;
  specs.reserve(metrics.size());
  for (const std::string& name : metrics) specs.push_back(parse_metric_name(name));
  if (specs.empty()) throw Error("no metrics requested");
  if (topic_filter) {
    for (const std::string& topic_id : *topic_filter) {
      if (qrels.find(topic_id) == qrels.end()) {
        throw Error("topic filter contains unjudged topic '" + topic_id + "'");
      }
    }
  }

  EvalReport report;
  static const std::vector<RunEntry> kNoEntries;
  for (const auto& [topic_id, judgments] : qrels) {
    if (topic_filter && topic_filter->find(topic_id) == topic_filter->end()) continue;
    auto run_it = run.topics.find(topic_id);
    const std::vector<RunEntry>& entries = run_it == run.topics.end() ? kNoEntries : run_it->second;
    const std::vector<std::string> docs = ranked_doc_ids(entries);
    for (const MetricSpec& spec : specs) {
      const double value =
          spec.is_map ? average_precision(docs, judgments) : ndcg_at_k(docs, judgments, spec.cutoff);
      report.per_topic.push_back({topic_id, spec.name, value});
    }
    ++report.topic_count;
  }

  std::sort(report.per_topic.begin(), report.per_topic.end(),
            [](const TopicScore& a, const TopicScore& b) {
              if (a.metric != b.metric) return a.metric < b.metric;
              return a.topic_id < b.topic_id;
            });

  for (const MetricSpec& spec : specs) {
    double sum = 0.0;
    for (const TopicScore& score : report.per_topic) {
      if (score.metric == spec.name) sum += score.value;
    }
    report.mean[spec.name] = report.topic_count == 0 ? 0.0 : sum / report.topic_count;
  }
  return report;
}

std::string eval_report_csv(const EvalReport& report) {
  std::string out = "topic_id,metric,value\n";
  for (const TopicScore& score : report.per_topic) {
    out += score.topic_id + "," + score.metric + "," + format_double(score.value) + "\n";
  }
  return out;
}

nlohmann::json eval_report_json(const EvalReport& report) {
  nlohmann::json per_topic = nlohmann::json::array();
  for (const TopicScore& score : report.per_topic) {
    per_topic.push_back({{"topic_id", score.topic_id}, {"metric", score.metric}, {"value", score.value}});
  }
  nlohmann::json mean = nlohmann::json::object();
  for (const auto& [metric, value] : report.mean) mean[metric] = value;
  return nlohmann::json{
      {"per_topic", per_topic}, {"mean", mean}, {"topic_count", report.topic_count}};
}

std::string eval_report_text(const EvalReport& report) {
  std::string out = "topics: " + std::to_string(report.topic_count) + "\n";
  for (const auto& [metric, value] : report.mean) {
    out += metric + "\t" + format_fixed(value, 4) + "\n";
  }
  return out;
}

}  // namespace leakeval
