#include "leakeval/dcq.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <mutex>
#include <set>
#include <thread>

#include "leakeval/errors.hpp"
#include "leakeval/text_util.hpp"

namespace leakeval {

namespace {

using nlohmann::json;

std::string dump_line(const json& obj) {
  return obj.dump(-1, ' ', false, json::error_handler_t::replace);
}

}  // namespace

std::vector<QuizItem> build_quiz_items(const QrelsSet& qrels, const Corpus& corpus,
                                       const TopicSet& topics, std::size_t n_per_topic,
                                       std::uint64_t seed, std::vector<std::string>* warnings) {
  if (n_per_topic < 1) throw Error("n_per_topic must be >= 1");
  std::vector<QuizItem> drafts;
  for (const auto& [topic_id, judgments] : qrels) {
    auto topic_it = topics.find(topic_id);
    if (topic_it == topics.end()) {
      if (warnings) warnings->push_back("topic " + topic_id + ": no topic text, skipped");
      continue;
    }
    std::vector<SampledPassage> sampled;
    try {
      sampled = sample_relevant_passages(qrels, corpus, topic_id, n_per_topic, seed, warnings);
    } catch (const Error& e) {
      if (warnings) warnings->push_back(std::string("topic ") + topic_id + ": " + e.what());
      continue;
    }
    for (const SampledPassage& passage : sampled) {
      QuizItem item;
      item.item_id = topic_id + ":" + passage.doc_id;
      item.topic_id = topic_id;
      item.doc_id = passage.doc_id;
      item.topic_text = topic_it->second;
      item.original = passage.text;
      drafts.push_back(std::move(item));
    }
  }
  return drafts;
}

std::optional<QuizItem> fill_paraphrases(QuizItem draft, CompletionSource& paraphraser,
                                         std::size_t k, int max_attempts,
                                         std::vector<std::string>* warnings) {
  if (!draft.paraphrases.empty()) throw Error("item " + draft.item_id + " already has paraphrases");
  const std::string original_norm = normalize_for_compare(draft.original);
  std::vector<std::string> kept;
  std::set<std::string> kept_norms;

  for (int attempt = 1; attempt <= max_attempts && kept.size() < 3; ++attempt) {
    std::vector<std::string> candidates;
    try {
      candidates = paraphrase(paraphraser, draft.original, k);
    } catch (const MissingFixtureError&) {
      throw;  // replay-mode setup defect, never retried away
    } catch (const FormatError&) {
      if (warnings) {
        warnings->push_back("item " + draft.item_id + ": paraphrase attempt " +
                            std::to_string(attempt) + " unparseable");
      }
      continue;
    } catch (const TransportError& e) {
      if (warnings) {
        warnings->push_back("item " + draft.item_id + ": paraphrase attempt " +
                            std::to_string(attempt) + " failed: " + e.what());
      }
      continue;
    }
    // Keep the first 3 valid variants; the final generated variant is the
    // slot the original will occupy in the quiz.
    for (const std::string& candidate : candidates) {
      if (kept.size() >= 3) break;
      const std::string norm = normalize_for_compare(candidate);
      if (norm.empty() || norm == original_norm || kept_norms.count(norm)) continue;
      kept.push_back(trim(candidate));
      kept_norms.insert(norm);
    }
  }

  if (kept.size() < 3) {
    if (warnings) {
      warnings->push_back("item " + draft.item_id + ": only " + std::to_string(kept.size()) +
                          " usable paraphrases after retries, item excluded");
    }
    return std::nullopt;
  }
  draft.paraphrases = std::move(kept);
  return draft;
}

std::array<QuizTrial, 4> assemble_trials(const QuizItem& item) {
  if (item.paraphrases.size() != 3) {
    throw Error("item " + item.item_id + " needs exactly 3 paraphrases, has " +
                std::to_string(item.paraphrases.size()));
  }
  std::array<QuizTrial, 4> trials;
  for (int p = 0; p < 4; ++p) {
    QuizTrial& trial = trials[p];
    trial.item_id = item.item_id;
    trial.topic_id = item.topic_id;
    trial.doc_id = item.doc_id;
    trial.topic_text = item.topic_text;
    trial.permutation_index = p;
    trial.gold_position = p;
    int slot = 0;
    for (int pos = 0; pos < 4; ++pos) {
      trial.options[pos] = (pos == p) ? item.original : item.paraphrases[slot++];
    }
  }
  return trials;
}

int parse_choice(const std::string& raw) {
  const auto alnum = [](char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0; };
  for (std::size_t i = 0; i < raw.size(); ++i) {
    const char c = static_cast<char>(std::tolower(static_cast<unsigned char>(raw[i])));
    if (c < 'a' || c > 'd') continue;
    const bool left_ok = i == 0 || !alnum(raw[i - 1]);
    const bool right_ok = i + 1 == raw.size() || !alnum(raw[i + 1]);
    if (left_ok && right_ok) return c - 'a';
  }
  return kInvalidChoice;
}

std::string render_quiz_prompt(const std::string& prompt_template, const QuizTrial& trial) {
  std::string prompt = replace_all(prompt_template, "{topic}", trial.topic_text);
  prompt = replace_all(prompt, "{option_a}", trial.options[0]);
  prompt = replace_all(prompt, "{option_b}", trial.options[1]);
  prompt = replace_all(prompt, "{option_c}", trial.options[2]);
  prompt = replace_all(prompt, "{option_d}", trial.options[3]);
  return prompt;
}

std::vector<QuizAnswer> run_quiz(const std::vector<QuizTrial>& trials, CompletionSource& model,
                                 const std::string& prompt_template, int jobs,
                                 std::vector<std::string>* warnings) {
  for (const char* placeholder : {"{topic}", "{option_a}", "{option_b}", "{option_c}", "{option_d}"}) {
    if (prompt_template.find(placeholder) == std::string::npos) {
      throw Error(std::string("quiz prompt template is missing the ") + placeholder +
                  " placeholder");
    }
  }

  std::vector<QuizAnswer> answers(trials.size());
  std::vector<std::string> failures(trials.size());
  std::atomic<std::size_t> next{0};
  std::atomic<bool> missing_fixture{false};
  std::string missing_fixture_message;
  std::mutex missing_mutex;

  const auto worker = [&]() {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= trials.size() || missing_fixture.load()) return;
      const QuizTrial& trial = trials[i];
      QuizAnswer answer;
      answer.item_id = trial.item_id;
      answer.topic_id = trial.topic_id;
      answer.doc_id = trial.doc_id;
      answer.permutation_index = trial.permutation_index;
      answer.gold_position = trial.gold_position;
      try {
        answer.raw_response = model.complete(render_quiz_prompt(prompt_template, trial));
        answer.chosen_position = parse_choice(answer.raw_response);
      } catch (const MissingFixtureError& e) {
        std::lock_guard<std::mutex> lock(missing_mutex);
        missing_fixture.store(true);
        missing_fixture_message = e.what();
        return;
      } catch (const Error& e) {
        answer.chosen_position = kInvalidChoice;
        answer.raw_response = std::string("<error> ") + e.what();
        failures[i] = e.what();
      }
      answer.correct = answer.chosen_position == trial.gold_position;
      answers[i] = std::move(answer);
    }
  };

  const int thread_count = std::max(1, std::min<int>(jobs, static_cast<int>(trials.size())));
  if (thread_count == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(thread_count);
    for (int t = 0; t < thread_count; ++t) pool.emplace_back(worker);
    for (std::thread& t : pool) t.join();
  }

  if (missing_fixture.load()) {
    throw MissingFixtureError(missing_fixture_message, "");
  }
  if (warnings) {
    for (std::size_t i = 0; i < failures.size(); ++i) {
      if (!failures[i].empty()) {
        warnings->push_back("trial " + trials[i].item_id + "/p" +
                            std::to_string(trials[i].permutation_index) +
                            " failed, recorded INVALID: " + failures[i]);
      }
    }
  }
  return answers;
}

ContaminationReport score_contamination(const std::vector<QuizAnswer>& answers,
                                        const std::vector<QuizItem>& items,
                                        const std::string& model_id,
                                        const std::string& dataset_id) {
  ContaminationReport report;
  report.model_id = model_id;
  report.dataset_id = dataset_id;
  report.items_total = items.size();

  std::set<std::string> item_ids;
  for (const QuizItem& item : items) {
    item_ids.insert(item.item_id);
    report.per_topic_flags.emplace(item.topic_id, false);
  }

  std::array<std::size_t, 4> correct_per_position{};
  std::map<std::string, std::string> item_topic;
  for (const QuizItem& item : items) item_topic[item.item_id] = item.topic_id;

  for (const QuizAnswer& answer : answers) {
    if (!item_ids.count(answer.item_id)) {
      throw Error("answer references unknown item '" + answer.item_id + "'");
    }
    if (answer.gold_position < 0 || answer.gold_position > 3) {
      throw Error("answer for item '" + answer.item_id + "' has gold position out of range");
    }
    if (answer.correct) {
      ++correct_per_position[answer.gold_position];
      report.per_topic_flags[item_topic[answer.item_id]] = true;
    }
  }

  double lo = 1.0, hi = 0.0;
  for (int p = 0; p < 4; ++p) {
    const double accuracy =
        report.items_total == 0
            ? 0.0
            : static_cast<double>(correct_per_position[p]) / static_cast<double>(report.items_total);
    report.per_position_accuracy[p] = accuracy;
    const double corrected = std::max(0.0, (accuracy - 0.25) / 0.75);
    lo = std::min(lo, corrected);
    hi = std::max(hi, corrected);
  }
  report.corrected_lo = report.items_total == 0 ? 0.0 : lo;
  report.corrected_hi = report.items_total == 0 ? 0.0 : hi;
  return report;
}

std::string format_contamination_interval(const ContaminationReport& report) {
  return "[" + format_fixed(report.corrected_lo * 100.0, 2) + "%, " +
         format_fixed(report.corrected_hi * 100.0, 2) + "%]";
}

std::string quiz_items_to_jsonl(const std::vector<QuizItem>& items) {
  std::string out;
  for (const QuizItem& item : items) {
    json obj{{"item_id", item.item_id},
             {"topic_id", item.topic_id},
             {"doc_id", item.doc_id},
             {"topic_text", item.topic_text},
             {"original", item.original},
             {"paraphrases", item.paraphrases}};
    out += dump_line(obj) + "\n";
  }
  return out;
}

std::vector<QuizItem> quiz_items_from_jsonl(const std::string& text) {
  std::vector<QuizItem> items;
  const std::vector<std::string> lines = split_lines(text);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (trim(lines[i]).empty()) continue;
    json obj = json::parse(sanitize_utf8(lines[i]), nullptr, false);
    if (obj.is_discarded() || !obj.is_object()) {
      throw ParseError("line " + std::to_string(i + 1) + ": not a JSON object");
    }
    if (obj.contains("_meta")) continue;
    QuizItem item;
    item.item_id = obj.at("item_id").get<std::string>();
    item.topic_id = obj.at("topic_id").get<std::string>();
    item.doc_id = obj.at("doc_id").get<std::string>();
    item.topic_text = obj.at("topic_text").get<std::string>();
    item.original = obj.at("original").get<std::string>();
    item.paraphrases = obj.at("paraphrases").get<std::vector<std::string>>();
    items.push_back(std::move(item));
  }
  return items;
}

std::string quiz_answers_to_jsonl(const std::vector<QuizAnswer>& answers) {
  std::string out;
  for (const QuizAnswer& answer : answers) {
    json obj{{"item_id", answer.item_id},
             {"topic_id", answer.topic_id},
             {"doc_id", answer.doc_id},
             {"permutation_index", answer.permutation_index},
             {"gold_position", answer.gold_position},
             {"chosen_position", answer.chosen_position},
             {"raw_response", answer.raw_response},
             {"correct", answer.correct}};
    out += dump_line(obj) + "\n";
  }
  return out;
}

std::vector<QuizAnswer> quiz_answers_from_jsonl(const std::string& text) {
  std::vector<QuizAnswer> answers;
  const std::vector<std::string> lines = split_lines(text);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (trim(lines[i]).empty()) continue;
    json obj = json::parse(sanitize_utf8(lines[i]), nullptr, false);
    if (obj.is_discarded() || !obj.is_object()) {
      throw ParseError("line " + std::to_string(i + 1) + ": not a JSON object");
    }
    if (obj.contains("_meta")) continue;
    QuizAnswer answer;
    answer.item_id = obj.at("item_id").get<std::string>();
    answer.topic_id = obj.at("topic_id").get<std::string>();
    answer.doc_id = obj.at("doc_id").get<std::string>();
    answer.permutation_index = obj.at("permutation_index").get<int>();
    answer.gold_position = obj.at("gold_position").get<int>();
    answer.chosen_position = obj.at("chosen_position").get<int>();
    answer.raw_response = obj.at("raw_response").get<std::string>();
    answer.correct = answer.chosen_position == answer.gold_position &&
                     answer.chosen_position != kInvalidChoice;
    answers.push_back(std::move(answer));
  }
  return answers;
}

nlohmann::json contamination_report_json(const ContaminationReport& report) {
  json flags = json::object();
  for (const auto& [topic_id, flagged] : report.per_topic_flags) flags[topic_id] = flagged;
  return json{{"model_id", report.model_id},
              {"dataset_id", report.dataset_id},
              {"items_total", report.items_total},
              {"per_position_accuracy", report.per_position_accuracy},
              {"corrected_interval",
               {{"lo", report.corrected_lo},
                {"hi", report.corrected_hi},
                {"formatted", format_contamination_interval(report)}}},
              {"per_topic_flags", flags}};
}

ContaminationReport contamination_report_from_json(const nlohmann::json& j) {
  ContaminationReport report;
  report.model_id = j.at("model_id").get<std::string>();
  report.dataset_id = j.at("dataset_id").get<std::string>();
  report.items_total = j.at("items_total").get<std::size_t>();
  const auto acc = j.at("per_position_accuracy");
  for (int p = 0; p < 4; ++p) report.per_position_accuracy[p] = acc.at(p).get<double>();
  report.corrected_lo = j.at("corrected_interval").at("lo").get<double>();
  report.corrected_hi = j.at("corrected_interval").at("hi").get<double>();
  for (const auto& [topic_id, flagged] : j.at("per_topic_flags").items()) {
    report.per_topic_flags[topic_id] = flagged.get<bool>();
  }
  return report;
}

}  // namespace leakeval
