#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "leakeval/llm_client.hpp"
#include "leakeval/trec_io.hpp"

namespace leakeval {

/// One multiple-choice question: the original passage for a topic plus three
/// paraphrase distractors. Freshly built drafts have empty paraphrases.
struct QuizItem {
  std::string item_id;  // "<topic_id>:<doc_id>"
  std::string topic_id;
  std::string doc_id;
  std::string topic_text;
  std::string original;
  std::vector<std::string> paraphrases;  // exactly 3 once filled
};

/// One positional permutation of an item: the original sits at
/// gold_position, the paraphrases fill the remaining slots in order.
struct QuizTrial {
  std::string item_id;
  std::string topic_id;
  std::string doc_id;
  std::string topic_text;
  int permutation_index = 0;  // == gold_position
  std::array<std::string, 4> options;
  int gold_position = 0;
};

inline constexpr int kInvalidChoice = -1;

struct QuizAnswer {
  std::string item_id;
  std::string topic_id;
  std::string doc_id;
  int permutation_index = 0;
  int gold_position = 0;
  int chosen_position = kInvalidChoice;
  std::string raw_response;
  bool correct = false;
};

struct ContaminationReport {
  std::string model_id;
  std::string dataset_id;
  std::size_t items_total = 0;
  std::array<double, 4> per_position_accuracy{};
  double corrected_lo = 0.0;  // min over positions of chance-corrected accuracy
  double corrected_hi = 0.0;  // max
  std::map<std::string, bool> per_topic_flags;  // true = at least one correct identification
};

/// One draft per sampled (topic, passage) pair; topics with no usable
/// passage or missing from the topic set are skipped with a warning.
std::vector<QuizItem> build_quiz_items(const QrelsSet& qrels, const Corpus& corpus,
                                       const TopicSet& topics, std::size_t n_per_topic,
                                       std::uint64_t seed,
                                       std::vector<std::string>* warnings = nullptr);

/// Requests k paraphrases and keeps the first 3 that are pairwise distinct
/// and distinct from the original after whitespace/case normalization,
/// retrying generation up to max_attempts. Returns nullopt (item unusable)
/// when the retries are exhausted with fewer than 3 valid paraphrases.
std::optional<QuizItem> fill_paraphrases(QuizItem draft, CompletionSource& paraphraser,
                                         std::size_t k = 4, int max_attempts = 3,
                                         std::vector<std::string>* warnings = nullptr);

/// Trial p places the original at position p; paraphrases keep their
/// relative order. The four gold positions cover 0..3 exactly once.
std::array<QuizTrial, 4> assemble_trials(const QuizItem& item);

/// Case-insensitive scan for the first standalone option letter A-D
/// (bounded by non-alphanumerics); kInvalidChoice when none is found.
int parse_choice(const std::string& raw);

/// Fills the {topic} and {option_a}..{option_d} placeholders.
std::string render_quiz_prompt(const std::string& prompt_template, const QuizTrial& trial);

/// One answer per trial, in trial order. Transport failures are recorded as
/// INVALID answers (with the error text as raw_response) rather than
/// aborting a long quiz; MissingFixtureError still propagates because a
/// missing fixture in replay mode is a setup defect. `jobs` bounds the
/// number of in-flight model calls.
std::vector<QuizAnswer> run_quiz(const std::vector<QuizTrial>& trials, CompletionSource& model,
                                 const std::string& prompt_template, int jobs = 1,
                                 std::vector<std::string>* warnings = nullptr);

/// Per-position accuracies over all items, chance-corrected with
/// max(0, (acc - 1/4) / (1 - 1/4)); the reported interval is [min, max]
/// across the four positions. A topic is flagged as contaminated as soon as
/// any trial of any of its items is answered correctly. Trials without an
/// answer count as incorrect.
ContaminationReport score_contamination(const std::vector<QuizAnswer>& answers,
                                        const std::vector<QuizItem>& items,
                                        const std::string& model_id,
                                        const std::string& dataset_id);

/// "[12.36%, 16.10%]" (two decimals, mirroring how contamination levels are
/// reported).
std::string format_contamination_interval(const ContaminationReport& report);

// JSONL persistence. Lines whose object carries "_meta" are skipped on read.
std::string quiz_items_to_jsonl(const std::vector<QuizItem>& items);
std::vector<QuizItem> quiz_items_from_jsonl(const std::string& text);
std::string quiz_answers_to_jsonl(const std::vector<QuizAnswer>& answers);
std::vector<QuizAnswer> quiz_answers_from_jsonl(const std::string& text);

nlohmann::json contamination_report_json(const ContaminationReport& report);
ContaminationReport contamination_report_from_json(const nlohmann::json& j);

}  // namespace leakeval
