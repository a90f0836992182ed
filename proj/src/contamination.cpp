#include "leakeval/contamination.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <thread>

#include "leakeval/errors.hpp"
#include "leakeval/rng.hpp"
#include "leakeval/text_util.hpp"

namespace leakeval {

namespace {

using nlohmann::json;

double percentile_type7(const std::vector<double>& sorted_values, double q) {
  if (sorted_values.empty()) throw Error("percentile of empty sample");
  const double h = q * static_cast<double>(sorted_values.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(std::floor(h));
  const double frac = h - static_cast<double>(lo);
  if (lo + 1 >= sorted_values.size()) return sorted_values.back();
  return sorted_values[lo] + (sorted_values[lo + 1] - sorted_values[lo]) * frac;
}

/// Core resampler. values_by_metric[m] is aligned to the sorted topic order
/// of one shared pool; replicate r draws its indices once (stream derived
/// from (seed, r)) and every metric reuses them.
std::vector<std::pair<double, double>> bootstrap_core(
    const std::vector<std::vector<double>>& values_by_metric, std::size_t sample_size,
    std::size_t n_resamples, double level, std::uint64_t seed, int jobs) {
  if (values_by_metric.empty()) throw Error("bootstrap needs at least one metric");
  const std::size_t pool = values_by_metric.front().size();
  if (pool == 0) throw Error("bootstrap pool is empty");
  if (sample_size < 1) throw Error("bootstrap sample_size must be >= 1");
  if (n_resamples < 1) throw Error("bootstrap n_resamples must be >= 1");
  if (level <= 0.0 || level >= 1.0) throw Error("bootstrap level must be in (0, 1)");

  const std::size_t metric_count = values_by_metric.size();
  std::vector<std::vector<double>> means(metric_count, std::vector<double>(n_resamples, 0.0));

  const auto run_range = [&](std::size_t begin, std::size_t end) {
    std::vector<std::size_t> indices(sample_size);
    for (std::size_t r = begin; r < end; ++r) {
      SplitMix64 rng(derive_stream(seed, static_cast<std::uint64_t>(r)));
      for (std::size_t i = 0; i < sample_size; ++i) {
        indices[i] = static_cast<std::size_t>(rng.bounded(pool));
      }
      for (std::size_t m = 0; m < metric_count; ++m) {
        double sum = 0.0;
        for (const std::size_t idx : indices) sum += values_by_metric[m][idx];
        means[m][r] = sum / static_cast<double>(sample_size);
      }
    }
  };

  const int thread_count =
      std::max(1, std::min<int>(jobs, static_cast<int>(std::min<std::size_t>(n_resamples, 64))));
  if (thread_count == 1) {
    run_range(0, n_resamples);
  } else {
    std::vector<std::thread> pool_threads;
    const std::size_t chunk = (n_resamples + thread_count - 1) / thread_count;
    for (int t = 0; t < thread_count; ++t) {
      const std::size_t begin = static_cast<std::size_t>(t) * chunk;
      const std::size_t end = std::min(n_resamples, begin + chunk);
      if (begin >= end) break;
      pool_threads.emplace_back(run_range, begin, end);
    }
    for (std::thread& t : pool_threads) t.join();
  }

  std::vector<std::pair<double, double>> out;
  out.reserve(metric_count);
  const double alpha = (1.0 - level) / 2.0;
  for (std::size_t m = 0; m < metric_count; ++m) {
    std::sort(means[m].begin(), means[m].end());
    out.emplace_back(percentile_type7(means[m], alpha), percentile_type7(means[m], 1.0 - alpha));
  }
  return out;
}

std::vector<double> scores_for_metric(const EvalReport& report, const std::string& metric,
                                      const std::vector<std::string>& topic_order) {
  std::map<std::string, double> by_topic;
  for (const TopicScore& score : report.per_topic) {
    if (score.metric == metric) by_topic[score.topic_id] = score.value;
  }
  std::vector<double> values;
  values.reserve(topic_order.size());
  for (const std::string& topic_id : topic_order) {
    auto it = by_topic.find(topic_id);
    if (it == by_topic.end()) throw Error("no " + metric + " score for topic '" + topic_id + "'");
    values.push_back(it->second);
  }
  return values;
}

}  // namespace

TopicPartition partition_topics(const ContaminationReport& report,
                                const std::vector<std::string>& all_topics) {
  std::set<std::string> pc(all_topics.begin(), all_topics.end());
  for (const auto& [topic_id, flagged] : report.per_topic_flags) {
    if (!pc.count(topic_id)) {
      throw Error("contamination report covers topic '" + topic_id +
                  "' that is not in the topic set");
    }
  }
  TopicPartition partition;
  partition.pc_topics.assign(pc.begin(), pc.end());
  for (const std::string& topic_id : partition.pc_topics) {
    auto it = report.per_topic_flags.find(topic_id);
    if (it == report.per_topic_flags.end()) {
      partition.unquizzed_topics.push_back(topic_id);
      partition.nc_topics.push_back(topic_id);
    } else if (!it->second) {
      partition.nc_topics.push_back(topic_id);
    }
  }
  return partition;
}

nlohmann::json topic_partition_json(const TopicPartition& partition) {
  return json{{"pc_topics", partition.pc_topics},
              {"nc_topics", partition.nc_topics},
              {"unquizzed_topics", partition.unquizzed_topics}};
}

TopicPartition topic_partition_from_json(const nlohmann::json& j) {
  TopicPartition partition;
  partition.pc_topics = j.at("pc_topics").get<std::vector<std::string>>();
  partition.nc_topics = j.at("nc_topics").get<std::vector<std::string>>();
  partition.unquizzed_topics = j.at("unquizzed_topics").get<std::vector<std::string>>();
  return partition;
}

BootstrapCi bootstrap_ci(const std::map<std::string, double>& per_topic_scores,
                         std::size_t sample_size, std::size_t n_resamples, double level,
                         std::uint64_t seed, int jobs) {
  std::vector<double> values;
  values.reserve(per_topic_scores.size());
  for (const auto& [topic_id, value] : per_topic_scores) values.push_back(value);

  const auto bounds = bootstrap_core({values}, sample_size, n_resamples, level, seed, jobs);
  BootstrapCi ci;
  ci.level = level;
  ci.n_resamples = n_resamples;
  ci.sample_size = sample_size;
  ci.lo = bounds.front().first;
  ci.hi = bounds.front().second;
  ci.seed = seed;
  return ci;
}

bool flag_outside_ci(double nc_mean, const BootstrapCi& ci) {
  return nc_mean < ci.lo || nc_mean > ci.hi;
}

ContaminationTable contamination_table(const std::vector<SystemInputs>& systems,
                                       const QrelsSet& qrels, const TableParams& params,
                                       const std::string& dataset_id) {
  if (systems.empty()) throw Error("contamination table needs at least one system");
  ContaminationTable table;
  table.dataset_id = dataset_id;

  for (const SystemInputs& system : systems) {
    if (system.run.topics.empty()) throw Error("system '" + system.name + "' has an empty run");
    SystemReport report;
    report.name = system.name;
    report.pc_count = system.partition.pc_topics.size();
    report.nc_count = system.partition.nc_topics.size();
    report.unquizzed_count = system.partition.unquizzed_topics.size();
    if (system.contamination) {
      report.input_pairs = system.contamination->items_total;
      report.contamination_interval = format_contamination_interval(*system.contamination);
    }

    const std::set<std::string> pc_filter(system.partition.pc_topics.begin(),
                                          system.partition.pc_topics.end());
    const std::set<std::string> nc_filter(system.partition.nc_topics.begin(),
                                          system.partition.nc_topics.end());
    if (nc_filter.empty()) throw Error("system '" + system.name + "' has an empty NC set");

    const EvalReport pc_eval = evaluate(system.run, qrels, params.metrics, pc_filter);
    const EvalReport nc_eval = evaluate(system.run, qrels, params.metrics, nc_filter);

    // Resample pool: PC per-topic scores, or the PC \ NC difference set.
    std::vector<std::string> pool_topics;
    if (params.resample_pool == ResamplePool::kPcTopics) {
      pool_topics = system.partition.pc_topics;
    } else {
      for (const std::string& topic_id : system.partition.pc_topics) {
        if (!nc_filter.count(topic_id)) pool_topics.push_back(topic_id);
      }
      if (pool_topics.empty()) {
        throw Error("system '" + system.name + "': PC minus NC resample pool is empty");
      }
    }

    std::vector<std::vector<double>> pool_values;
    std::vector<std::string> canonical_metrics;
    for (const std::string& metric : params.metrics) {
      const std::string canonical = parse_metric_name(metric).name;
      canonical_metrics.push_back(canonical);
      pool_values.push_back(scores_for_metric(pc_eval, canonical, pool_topics));
    }

    const auto bounds = bootstrap_core(pool_values, report.nc_count, params.n_resamples,
                                       params.level, params.seed, params.jobs);

    for (std::size_t m = 0; m < canonical_metrics.size(); ++m) {
      MetricRow row;
      row.metric = canonical_metrics[m];
      row.pc_mean = pc_eval.mean.at(row.metric);
      row.nc_mean = nc_eval.mean.at(row.metric);
      row.ci.metric = row.metric;
      row.ci.level = params.level;
      row.ci.n_resamples = params.n_resamples;
      row.ci.sample_size = report.nc_count;
      row.ci.lo = bounds[m].first;
      row.ci.hi = bounds[m].second;
      row.ci.seed = params.seed;
      row.nc_outside_ci = flag_outside_ci(row.nc_mean, row.ci);
      report.rows.push_back(std::move(row));
    }
    table.systems.push_back(std::move(report));
  }
  return table;
}

std::string contamination_table_text(const ContaminationTable& table) {
  const std::size_t label_width = 26;
  const std::size_t col_width = 22;
  const auto pad = [](std::string s, std::size_t width) {
    if (s.size() < width) s.append(width - s.size(), ' ');
    return s;
  };

  std::string out;
  if (!table.dataset_id.empty()) out += table.dataset_id + "\n";
  std::string header = pad("", label_width);
  std::string subheader = pad("", label_width);
  for (const SystemReport& system : table.systems) {
    header += pad(system.name, col_width);
    subheader += pad("PC", col_width / 2) + pad("NC", col_width - col_width / 2);
  }
  out += header + "\n" + subheader + "\n";

  std::string pairs_row = pad("Input pairs", label_width);
  std::string level_row = pad("Contamination level", label_width);
  bool any_contamination = false;
  for (const SystemReport& system : table.systems) {
    pairs_row += pad(system.input_pairs ? std::to_string(*system.input_pairs) : "-", col_width);
    level_row += pad(system.contamination_interval.value_or("-"), col_width);
    any_contamination = any_contamination || system.contamination_interval.has_value();
  }
  if (any_contamination) out += pairs_row + "\n" + level_row + "\n";

  std::string topics_row = pad("Topics evaluated", label_width);
  for (const SystemReport& system : table.systems) {
    topics_row += pad(std::to_string(system.pc_count), col_width / 2) +
                  pad(std::to_string(system.nc_count), col_width - col_width / 2);
  }
  out += topics_row + "\n";

  if (!table.systems.empty()) {
    for (std::size_t m = 0; m < table.systems.front().rows.size(); ++m) {
      const std::string metric = table.systems.front().rows[m].metric;
      std::string metric_row = pad(metric, label_width);
      std::string ci_row = pad("  CI95 " + metric, label_width);
      for (const SystemReport& system : table.systems) {
        const MetricRow& row = system.rows[m];
        metric_row += pad(format_fixed(row.pc_mean, 4), col_width / 2) +
                      pad(format_fixed(row.nc_mean, 4) + (row.nc_outside_ci ? "*" : ""),
                          col_width - col_width / 2);
        ci_row += pad("[" + format_fixed(row.ci.lo, 4) + ", " + format_fixed(row.ci.hi, 4) + "]",
                      col_width);
      }
      out += metric_row + "\n" + ci_row + "\n";
    }
  }
  out += "* = NC mean outside the bootstrapped CI\n";
  return out;
}

std::string contamination_table_csv(const ContaminationTable& table) {
  std::string out =
      "system,metric,pc_topics,nc_topics,pc_mean,nc_mean,ci_lo,ci_hi,nc_outside_ci\n";
  for (const SystemReport& system : table.systems) {
    for (const MetricRow& row : system.rows) {
      out += system.name + "," + row.metric + "," + std::to_string(system.pc_count) + "," +
             std::to_string(system.nc_count) + "," + format_double(row.pc_mean) + "," +
             format_double(row.nc_mean) + "," + format_double(row.ci.lo) + "," +
             format_double(row.ci.hi) + "," + (row.nc_outside_ci ? "true" : "false") + "\n";
    }
  }
  return out;
}

nlohmann::json contamination_table_json(const ContaminationTable& table) {
  json systems = json::array();
  for (const SystemReport& system : table.systems) {
    json rows = json::array();
    for (const MetricRow& row : system.rows) {
      rows.push_back({{"metric", row.metric},
                      {"pc_mean", row.pc_mean},
                      {"nc_mean", row.nc_mean},
                      {"ci", {{"level", row.ci.level},
                              {"n_resamples", row.ci.n_resamples},
                              {"sample_size", row.ci.sample_size},
                              {"lo", row.ci.lo},
                              {"hi", row.ci.hi},
                              {"seed", row.ci.seed}}},
                      {"nc_outside_ci", row.nc_outside_ci}});
    }
    json entry{{"system", system.name},
               {"pc_topics", system.pc_count},
               {"nc_topics", system.nc_count},
               {"unquizzed_topics", system.unquizzed_count},
               {"rows", rows}};
    if (system.input_pairs) entry["input_pairs"] = *system.input_pairs;
    if (system.contamination_interval) entry["contamination_level"] = *system.contamination_interval;
    systems.push_back(std::move(entry));
  }
  return json{{"dataset_id", table.dataset_id}, {"systems", systems}};
}

}  // namespace leakeval
