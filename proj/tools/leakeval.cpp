// leakeval: contamination-aware evaluation for TREC-style IR benchmarks.
//
// Subcommands: quiz build | quiz paraphrase | quiz run | quiz score,
// partition, eval, rerank, table, trends. Pipelines communicate only through
// files, so every stage can be re-run and audited on its own.

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "leakeval/artifact_meta.hpp"
#include "leakeval/config.hpp"
#include "leakeval/contamination.hpp"
#include "leakeval/dcq.hpp"
#include "leakeval/errors.hpp"
#include "leakeval/hashing.hpp"
#include "leakeval/llm_client.hpp"
#include "leakeval/metrics.hpp"
#include "leakeval/rerank.hpp"
#include "leakeval/text_util.hpp"
#include "leakeval/trec_io.hpp"
#include "leakeval/trends.hpp"
#include "leakeval/version.hpp"

namespace {

using json = nlohmann::json;
using namespace leakeval;

struct GlobalOptions {
  std::string config_path;
  KvMap kv;
  std::uint64_t seed = 42;
  bool seed_set_on_cli = false;
  int jobs = 1;
};

void load_global_config(GlobalOptions& opts) {
  if (!opts.config_path.empty()) {
    opts.kv = load_kv_config(opts.config_path);
    if (!opts.seed_set_on_cli) {
      opts.seed = static_cast<std::uint64_t>(kv_get_int(opts.kv, "seed", 42));
    }
  }
}

std::string config_hash(const GlobalOptions& opts) {
  return sha256_hex(canonical_kv_string(opts.kv)).substr(0, 16);
}

json meta_json(const GlobalOptions& opts) {
  return artifact_meta_json(make_artifact_meta(opts.seed, config_hash(opts)));
}

/// JSON artifacts carry the provenance block under "_meta".
void write_json_artifact(const std::string& path, json payload, const GlobalOptions& opts) {
  payload["_meta"] = meta_json(opts);
  write_file(path, payload.dump(2, ' ', false, json::error_handler_t::replace) + "\n");
}

/// JSONL artifacts carry it as a first {"_meta": ...} line; readers skip it.
void write_jsonl_artifact(const std::string& path, const std::string& body,
                          const GlobalOptions& opts) {
  const json meta{{"_meta", meta_json(opts)}};
  write_file(path, meta.dump() + "\n" + body);
}

/// CSV artifacts carry it as a leading '#' comment line.
void write_csv_artifact(const std::string& path, const std::string& body,
                        const GlobalOptions& opts) {
  write_file(path, "# " + meta_json(opts).dump() + "\n" + body);
}

LlmClient make_client(const GlobalOptions& opts) {
  if (opts.kv.empty()) {
    throw ConfigError("this subcommand needs --config with endpoint settings");
  }
  return LlmClient(client_config_from_kv(opts.kv));
}

std::string default_prompt_path(const GlobalOptions& opts, const std::string& key,
                                const std::string& flag_value) {
  if (!flag_value.empty()) return flag_value;
  const std::string from_config = kv_get(opts.kv, key, "");
  if (!from_config.empty()) return from_config;
  throw ConfigError("no prompt template: pass --template or set " + key + " in the config");
}

void print_warnings(const std::vector<std::string>& warnings) {
  for (const std::string& warning : warnings) std::cerr << "warning: " << warning << "\n";
}

std::vector<std::string> split_csv_flag(const std::string& value) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= value.size()) {
    const std::size_t comma = value.find(',', start);
    const std::string item =
        trim(value.substr(start, comma == std::string::npos ? std::string::npos : comma - start));
    if (!item.empty()) out.push_back(item);
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

// ---- subcommand bodies ----

void cmd_quiz_build(const GlobalOptions& opts, const std::string& qrels_path,
                    const std::string& corpus_path, const std::string& topics_path,
                    std::size_t n_per_topic, const std::string& out_path) {
  const QrelsSet qrels = load_qrels(qrels_path);
  const Corpus corpus = load_corpus(corpus_path);
  const TopicSet topics = load_topics(topics_path);
  std::vector<std::string> warnings;
  const std::vector<QuizItem> drafts =
      build_quiz_items(qrels, corpus, topics, n_per_topic, opts.seed, &warnings);
  print_warnings(warnings);
  write_jsonl_artifact(out_path, quiz_items_to_jsonl(drafts), opts);
  std::cout << "built " << drafts.size() << " quiz drafts -> " << out_path << "\n";
}

void cmd_quiz_paraphrase(const GlobalOptions& opts, const std::string& items_path,
                         const std::string& out_path) {
  const std::vector<QuizItem> drafts = quiz_items_from_jsonl(read_file(items_path));
  LlmClient client = make_client(opts);
  std::vector<QuizItem> filled;
  std::vector<std::string> warnings;
  std::size_t excluded = 0;
  for (const QuizItem& draft : drafts) {
    std::optional<QuizItem> item = fill_paraphrases(draft, client, 4, 3, &warnings);
    if (item) {
      filled.push_back(std::move(*item));
    } else {
      ++excluded;
    }
  }
  print_warnings(warnings);
  write_jsonl_artifact(out_path, quiz_items_to_jsonl(filled), opts);
  std::cout << "paraphrased " << filled.size() << " items (" << excluded << " excluded) -> "
            << out_path << "\n";
}

void cmd_quiz_run(const GlobalOptions& opts, const std::string& items_path,
                  const std::string& template_flag, const std::string& out_path) {
  const std::vector<QuizItem> items = quiz_items_from_jsonl(read_file(items_path));
  const std::string prompt_template =
      read_file(default_prompt_path(opts, "quiz_prompt", template_flag));
  std::vector<QuizTrial> trials;
  trials.reserve(items.size() * 4);
  for (const QuizItem& item : items) {
    for (QuizTrial& trial : assemble_trials(item)) trials.push_back(std::move(trial));
  }
  LlmClient client = make_client(opts);
  std::vector<std::string> warnings;
  const std::vector<QuizAnswer> answers =
      run_quiz(trials, client, prompt_template, opts.jobs, &warnings);
  print_warnings(warnings);
  write_jsonl_artifact(out_path, quiz_answers_to_jsonl(answers), opts);
  std::cout << "ran " << answers.size() << " trials (" << client.network_requests()
            << " network requests) -> " << out_path << "\n";
}

void cmd_quiz_score(const GlobalOptions& opts, const std::string& answers_path,
                    const std::string& items_path, const std::string& model_id,
                    const std::string& dataset_id, const std::string& out_path) {
  const std::vector<QuizAnswer> answers = quiz_answers_from_jsonl(read_file(answers_path));
  const std::vector<QuizItem> items = quiz_items_from_jsonl(read_file(items_path));
  const ContaminationReport report = score_contamination(answers, items, model_id, dataset_id);
  write_json_artifact(out_path, contamination_report_json(report), opts);
  std::cout << "contamination level " << format_contamination_interval(report) << " over "
            << report.items_total << " items -> " << out_path << "\n";
}

void cmd_partition(const GlobalOptions& opts, const std::string& report_path,
                   const std::string& topics_path, const std::string& out_path) {
  const json report_json = json::parse(read_file(report_path));
  const ContaminationReport report = contamination_report_from_json(report_json);
  const TopicSet topics = load_topics(topics_path);
  std::vector<std::string> all_topics;
  for (const auto& [topic_id, text] : topics) all_topics.push_back(topic_id);
  const TopicPartition partition = partition_topics(report, all_topics);
  write_json_artifact(out_path, topic_partition_json(partition), opts);
  std::cout << "PC " << partition.pc_topics.size() << " -> NC " << partition.nc_topics.size()
            << " (" << partition.unquizzed_topics.size() << " never quizzed) -> " << out_path
            << "\n";
}

std::optional<std::set<std::string>> load_topic_filter(const std::string& spec) {
  if (spec.empty()) return std::nullopt;
  // "<partition.json>:pc" or "<partition.json>:nc", or a plain text file with
  // one topic id per line.
  const std::size_t colon = spec.rfind(':');
  if (colon != std::string::npos) {
    const std::string suffix = spec.substr(colon + 1);
    if (suffix == "pc" || suffix == "nc") {
      const TopicPartition partition =
          topic_partition_from_json(json::parse(read_file(spec.substr(0, colon))));
      const std::vector<std::string>& topics =
          suffix == "pc" ? partition.pc_topics : partition.nc_topics;
      return std::set<std::string>(topics.begin(), topics.end());
    }
  }
  std::set<std::string> topics;
  for (const std::string& line : split_lines(read_file(spec))) {
    if (!trim(line).empty()) topics.insert(trim(line));
  }
  return topics;
}

void cmd_eval(const GlobalOptions& opts, const std::string& run_path,
              const std::string& qrels_path, const std::string& metrics_flag,
              const std::string& filter_spec, const std::string& out_prefix) {
  const Run run = load_run(run_path);
  const QrelsSet qrels = load_qrels(qrels_path);
  const std::vector<std::string> metrics = split_csv_flag(metrics_flag);
  const EvalReport report = evaluate(run, qrels, metrics, load_topic_filter(filter_spec));
  write_csv_artifact(out_prefix + ".csv", eval_report_csv(report), opts);
  write_json_artifact(out_prefix + ".json", eval_report_json(report), opts);
  std::cout << eval_report_text(report);
  std::cout << "wrote " << out_prefix << ".csv and " << out_prefix << ".json\n";
}

void cmd_rerank(const GlobalOptions& opts, const std::string& run_path,
                const std::string& corpus_path, const std::string& topics_path,
                const std::string& template_flag, std::size_t depth, std::size_t window,
                std::size_t stride, std::size_t max_tokens, const std::string& out_path) {
  const Run run = load_run(run_path);
  const Corpus corpus = load_corpus(corpus_path);
  const TopicSet topics = load_topics(topics_path);
  RerankConfig config;
  config.depth = depth;
  config.window_size = window;
  config.stride = stride;
  config.max_passage_tokens = max_tokens;
  config.prompt_template = read_file(default_prompt_path(opts, "rerank_prompt", template_flag));
  LlmClient client = make_client(opts);
  const std::string tag = client.config().endpoint.model_name + "-rerank";
  std::vector<std::string> warnings;
  const Run reranked = rerank_run(run, topics, corpus, config, client, tag, &warnings);
  print_warnings(warnings);
  write_file(out_path, write_run(reranked));
  std::cout << "reranked " << reranked.topics.size() << " topics ("
            << client.network_requests() << " network requests) -> " << out_path << "\n";
}

void cmd_table(const GlobalOptions& opts, const std::vector<std::string>& system_specs,
               const std::string& qrels_path, const std::string& metrics_flag,
               std::size_t n_resamples, double level, const std::string& resample_pool,
               const std::string& dataset_id, const std::string& out_prefix) {
  const QrelsSet qrels = load_qrels(qrels_path);
  TableParams params;
  params.metrics = split_csv_flag(metrics_flag);
  params.n_resamples = n_resamples;
  params.level = level;
  params.seed = opts.seed;
  params.jobs = opts.jobs;
  if (resample_pool == "pc") {
    params.resample_pool = ResamplePool::kPcTopics;
  } else if (resample_pool == "pc-minus-nc") {
    params.resample_pool = ResamplePool::kPcMinusNcTopics;
  } else {
    throw ConfigError("--resample-pool must be pc or pc-minus-nc");
  }

  std::vector<SystemInputs> systems;
  for (const std::string& spec : system_specs) {
    // name=run.txt:partition.json[:report.json]
    const std::size_t eq = spec.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("--system expects name=run:partition[:report], got '" + spec + "'");
    }
    std::vector<std::string> parts;
    std::size_t start = eq + 1;
    while (start <= spec.size()) {
      const std::size_t colon = spec.find(':', start);
      parts.push_back(
          spec.substr(start, colon == std::string::npos ? std::string::npos : colon - start));
      if (colon == std::string::npos) break;
      start = colon + 1;
    }
    if (parts.size() < 2 || parts.size() > 3) {
      throw ConfigError("--system expects name=run:partition[:report], got '" + spec + "'");
    }
    SystemInputs system;
    system.name = spec.substr(0, eq);
    system.run = load_run(parts[0]);
    system.partition = topic_partition_from_json(json::parse(read_file(parts[1])));
    if (parts.size() == 3) {
      system.contamination = contamination_report_from_json(json::parse(read_file(parts[2])));
    }
    systems.push_back(std::move(system));
  }

  const ContaminationTable table = contamination_table(systems, qrels, params, dataset_id);
  const std::string text = contamination_table_text(table);
  write_file(out_prefix + ".txt", text);
  write_csv_artifact(out_prefix + ".csv", contamination_table_csv(table), opts);
  write_json_artifact(out_prefix + ".json", contamination_table_json(table), opts);
  std::cout << text;
  std::cout << "wrote " << out_prefix << ".{txt,csv,json}\n";
}

void cmd_trends(const GlobalOptions& opts, const std::string& csv_path,
                const std::string& dataset_flag, const std::string& metric,
                const std::vector<std::string>& refline_flags,
                const std::vector<std::string>& delta_flags, bool svg,
                const std::string& out_dir) {
  const std::vector<MetaRecord> records = load_meta_csv(read_file(csv_path));
  const Dataset dataset = dataset_from_string(dataset_flag);

  std::vector<ReferenceLine> reference_lines;
  for (const std::string& flag : refline_flags) {
    // value:label
    const std::size_t colon = flag.find(':');
    if (colon == std::string::npos) {
      throw ConfigError("--refline expects value:label, got '" + flag + "'");
    }
    ReferenceLine line;
    line.value = std::stod(flag.substr(0, colon));
    line.label = flag.substr(colon + 1);
    reference_lines.push_back(std::move(line));
  }

  const PlotBundle bundle = emit_plot_series(records, dataset, metric, reference_lines);
  std::filesystem::create_directories(out_dir);
  const std::string prefix = (std::filesystem::path(out_dir) / "series").string();
  write_json_artifact(prefix + ".json", bundle.series, opts);
  write_csv_artifact(prefix + ".csv", bundle.csv, opts);
  if (svg) {
    write_file((std::filesystem::path(out_dir) / "figure.svg").string(), bundle.svg);
  }

  const auto census = metric_census(records);
  const auto papers = paper_census(records);
  const std::string dataset_name = to_string(dataset);
  if (census.count(dataset_name)) {
    std::cout << dataset_name << ": " << papers.at(dataset_name) << " papers, "
              << census.at(dataset_name).size() << " distinct metrics\n";
    for (const auto& [metric_name, count] : census.at(dataset_name)) {
      std::cout << "  " << metric_name << ": " << count << " papers\n";
    }
  }

  for (const std::string& flag : delta_flags) {
    // candidate:reference
    const std::size_t colon = flag.find(':');
    if (colon == std::string::npos) {
      throw ConfigError("--delta expects candidate:reference, got '" + flag + "'");
    }
    const double candidate = std::stod(flag.substr(0, colon));
    const double reference = std::stod(flag.substr(colon + 1));
    const ImprovementDelta delta = improvement_delta(candidate, reference);
    std::cout << "delta " << format_double(candidate) << " vs " << format_double(reference)
              << ": " << (delta.absolute_points >= 0 ? "+" : "")
              << format_fixed(delta.absolute_points, 1) << " points, "
              << (delta.relative_pct >= 0 ? "+" : "") << format_fixed(delta.relative_pct, 1)
              << "% relative\n";
  }
  if (!delta_flags.empty()) {
    std::cout << "note: \"N%\" improvement claims in the literature mix absolute points and "
                 "relative percent; both are printed above\n";
  }
  std::cout << "wrote " << prefix << ".json, " << prefix << ".csv"
            << (svg ? ", figure.svg" : "") << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Contamination-aware evaluation toolkit for IR benchmarks"};
  app.set_version_flag("--version", leakeval::kVersion);
  app.require_subcommand(1);

  GlobalOptions opts;
  app.add_option("--config", opts.config_path, "Key-value config file");
  bool seed_flag_seen = false;
  auto* seed_opt = app.add_option("--seed", opts.seed, "Random seed (overrides config)");
  app.add_option("--jobs", opts.jobs, "Bound on parallel LLM calls / bootstrap threads")
      ->check(CLI::PositiveNumber);

  // quiz
  auto* quiz = app.add_subcommand("quiz", "Data-contamination quiz pipeline");
  quiz->require_subcommand(1);

  std::string qb_qrels, qb_corpus, qb_topics, qb_out = "quiz_items.jsonl";
  std::size_t qb_n = 5;
  auto* quiz_build = quiz->add_subcommand("build", "Sample passages into quiz item drafts");
  quiz_build->add_option("--qrels", qb_qrels)->required();
  quiz_build->add_option("--corpus", qb_corpus)->required();
  quiz_build->add_option("--topics", qb_topics)->required();
  quiz_build->add_option("--n", qb_n, "Passages sampled per topic");
  quiz_build->add_option("--out", qb_out);

  std::string qp_items, qp_out = "quiz_items_filled.jsonl";
  auto* quiz_paraphrase =
      quiz->add_subcommand("paraphrase", "Generate paraphrase distractors for drafts");
  quiz_paraphrase->add_option("--items", qp_items)->required();
  quiz_paraphrase->add_option("--out", qp_out);

  std::string qr_items, qr_template, qr_out = "quiz_answers.jsonl";
  auto* quiz_run = quiz->add_subcommand("run", "Administer the quiz through the model endpoint");
  quiz_run->add_option("--items", qr_items)->required();
  quiz_run->add_option("--template", qr_template, "Quiz prompt template file");
  quiz_run->add_option("--out", qr_out);

  std::string qs_answers, qs_items, qs_model = "model", qs_dataset = "dataset",
              qs_out = "contamination.json";
  auto* quiz_score = quiz->add_subcommand("score", "Chance-corrected contamination report");
  quiz_score->add_option("--answers", qs_answers)->required();
  quiz_score->add_option("--items", qs_items)->required();
  quiz_score->add_option("--model-id", qs_model);
  quiz_score->add_option("--dataset-id", qs_dataset);
  quiz_score->add_option("--out", qs_out);

  // partition
  std::string pt_report, pt_topics, pt_out = "partition.json";
  auto* partition = app.add_subcommand("partition", "Split topics into PC / NC sets");
  partition->add_option("--report", pt_report)->required();
  partition->add_option("--topics", pt_topics)->required();
  partition->add_option("--out", pt_out);

  // eval
  std::string ev_run, ev_qrels, ev_metrics = "ndcg@10,map", ev_filter, ev_out = "eval";
  auto* eval_cmd = app.add_subcommand("eval", "Score a run against qrels");
  eval_cmd->add_option("--run", ev_run)->required();
  eval_cmd->add_option("--qrels", ev_qrels)->required();
  eval_cmd->add_option("--metrics", ev_metrics, "Comma-separated (ndcg@k, map)");
  eval_cmd->add_option("--topics-filter", ev_filter,
                       "partition.json:pc|nc or a file with one topic id per line");
  eval_cmd->add_option("--out-prefix", ev_out);

  // rerank
  std::string rr_run, rr_corpus, rr_topics, rr_template, rr_out = "reranked.txt";
  std::size_t rr_depth = 100, rr_window = 20, rr_stride = 10, rr_tokens = 300;
  auto* rerank_cmd = app.add_subcommand("rerank", "Listwise sliding-window LLM rerank");
  rerank_cmd->add_option("--run", rr_run)->required();
  rerank_cmd->add_option("--corpus", rr_corpus)->required();
  rerank_cmd->add_option("--topics", rr_topics)->required();
  rerank_cmd->add_option("--template", rr_template, "Rerank prompt template file");
  rerank_cmd->add_option("--depth", rr_depth);
  rerank_cmd->add_option("--window", rr_window);
  rerank_cmd->add_option("--stride", rr_stride);
  rerank_cmd->add_option("--max-passage-tokens", rr_tokens);
  rerank_cmd->add_option("--out", rr_out);

  // table
  std::vector<std::string> tb_systems;
  std::string tb_qrels, tb_metrics = "ndcg@10,map", tb_pool = "pc", tb_dataset,
              tb_out = "table";
  std::size_t tb_resamples = 10000;
  double tb_level = 0.95;
  auto* table_cmd = app.add_subcommand("table", "PC/NC comparison with bootstrap CIs");
  table_cmd->add_option("--system", tb_systems, "name=run.txt:partition.json[:report.json]")
      ->required()
      ->take_all();
  table_cmd->add_option("--qrels", tb_qrels)->required();
  table_cmd->add_option("--metrics", tb_metrics);
  table_cmd->add_option("--resamples", tb_resamples);
  table_cmd->add_option("--level", tb_level);
  table_cmd->add_option("--resample-pool", tb_pool, "pc (default) or pc-minus-nc");
  table_cmd->add_option("--dataset-id", tb_dataset);
  table_cmd->add_option("--out-prefix", tb_out);

  // trends
  std::string tr_csv, tr_dataset, tr_metric = "ndcg@10", tr_out = "trends_out";
  std::vector<std::string> tr_reflines, tr_deltas;
  bool tr_svg = false;
  auto* trends_cmd = app.add_subcommand("trends", "Longitudinal series, fits, and census");
  trends_cmd->add_option("--csv", tr_csv)->required();
  trends_cmd->add_option("--dataset", tr_dataset)->required();
  trends_cmd->add_option("--metric", tr_metric);
  trends_cmd->add_option("--refline", tr_reflines, "value:label horizontal reference line")
      ->take_all();
  trends_cmd->add_option("--delta", tr_deltas,
                         "candidate:reference improvement printed in both conventions")
      ->take_all();
  trends_cmd->add_flag("--svg", tr_svg, "Also write figure.svg");
  trends_cmd->add_option("--out-dir", tr_out);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);  // prints the diagnostic and usage hint
    return 2;
  }
  seed_flag_seen = seed_opt->count() > 0;
  opts.seed_set_on_cli = seed_flag_seen;

  try {
    load_global_config(opts);
    if (quiz_build->parsed()) {
      cmd_quiz_build(opts, qb_qrels, qb_corpus, qb_topics, qb_n, qb_out);
    } else if (quiz_paraphrase->parsed()) {
      cmd_quiz_paraphrase(opts, qp_items, qp_out);
    } else if (quiz_run->parsed()) {
      cmd_quiz_run(opts, qr_items, qr_template, qr_out);
    } else if (quiz_score->parsed()) {
      cmd_quiz_score(opts, qs_answers, qs_items, qs_model, qs_dataset, qs_out);
    } else if (partition->parsed()) {
      cmd_partition(opts, pt_report, pt_topics, pt_out);
    } else if (eval_cmd->parsed()) {
      cmd_eval(opts, ev_run, ev_qrels, ev_metrics, ev_filter, ev_out);
    } else if (rerank_cmd->parsed()) {
      cmd_rerank(opts, rr_run, rr_corpus, rr_topics, rr_template, rr_depth, rr_window, rr_stride,
                 rr_tokens, rr_out);
    } else if (table_cmd->parsed()) {
      cmd_table(opts, tb_systems, tb_qrels, tb_metrics, tb_resamples, tb_level, tb_pool,
                tb_dataset, tb_out);
    } else if (trends_cmd->parsed()) {
      cmd_trends(opts, tr_csv, tr_dataset, tr_metric, tr_reflines, tr_deltas, tr_svg, tr_out);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
