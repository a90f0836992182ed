#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "leakeval/dcq.hpp"
#include "leakeval/metrics.hpp"
#include "leakeval/trec_io.hpp"

namespace leakeval {

/// PC = the full (potentially contaminated) topic set, NC = the subset whose
/// topics had no correctly identified passage. Topics that were never
/// quizzed (no usable relevant passage) stay in NC but are reported
/// separately.
struct TopicPartition {
  std::vector<std::string> pc_topics;
  std::vector<std::string> nc_topics;
  std::vector<std::string> unquizzed_topics;
};

TopicPartition partition_topics(const ContaminationReport& report,
                                const std::vector<std::string>& all_topics);

nlohmann::json topic_partition_json(const TopicPartition& partition);
TopicPartition topic_partition_from_json(const nlohmann::json& j);

struct BootstrapCi {
  std::string metric;
  double level = 0.95;
  std::size_t n_resamples = 10000;
  std::size_t sample_size = 0;
  double lo = 0.0;
  double hi = 0.0;
  std::uint64_t seed = 0;
};

/// Percentile bootstrap of the mean: each replicate draws sample_size topics
/// with replacement from the score pool (indexed over sorted topic ids) and
/// records the mean; lo/hi are the (1-level)/2 and 1-(1-level)/2 empirical
/// percentiles (linear interpolation between order statistics). Replicate r
/// uses the stream derived from (seed, r), so serial and parallel execution
/// produce bit-identical intervals.
BootstrapCi bootstrap_ci(const std::map<std::string, double>& per_topic_scores,
                         std::size_t sample_size, std::size_t n_resamples = 10000,
                         double level = 0.95, std::uint64_t seed = 0, int jobs = 1);

/// True iff nc_mean lies strictly outside [lo, hi]; boundary values count as
/// inside.
bool flag_outside_ci(double nc_mean, const BootstrapCi& ci);

enum class ResamplePool {
  kPcTopics,        // resample from the full PC set (default reading)
  kPcMinusNcTopics  // resample from the PC \ NC difference set
};

struct TableParams {
  std::vector<std::string> metrics{"ndcg@10", "map"};
  std::size_t n_resamples = 10000;
  double level = 0.95;
  std::uint64_t seed = 0;
  int jobs = 1;
  ResamplePool resample_pool = ResamplePool::kPcTopics;
};

struct SystemInputs {
  std::string name;
  Run run;
  TopicPartition partition;
  std::optional<ContaminationReport> contamination;
};

struct MetricRow {
  std::string metric;
  double pc_mean = 0.0;
  double nc_mean = 0.0;
  BootstrapCi ci;
  bool nc_outside_ci = false;
};

struct SystemReport {
  std::string name;
  std::size_t pc_count = 0;
  std::size_t nc_count = 0;
  std::size_t unquizzed_count = 0;
  std::optional<std::size_t> input_pairs;             // contamination quiz items
  std::optional<std::string> contamination_interval;  // "[lo%, hi%]"
  std::vector<MetricRow> rows;
};

struct ContaminationTable {
  std::string dataset_id;
  std::vector<SystemReport> systems;
};

/// PC and NC means come from evaluate() with the partition as topic filter
/// (no separate scoring path); the CI is bootstrapped from the per-topic PC
/// scores at sample_size = |NC|, with one index stream per replicate shared
/// across all metrics of a system.
ContaminationTable contamination_table(const std::vector<SystemInputs>& systems,
                                       const QrelsSet& qrels, const TableParams& params,
                                       const std::string& dataset_id = "");

std::string contamination_table_text(const ContaminationTable& table);
std::string contamination_table_csv(const ContaminationTable& table);
nlohmann::json contamination_table_json(const ContaminationTable& table);

}  // namespace leakeval
