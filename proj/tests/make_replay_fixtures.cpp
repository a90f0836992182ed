// Regenerates tests/fixtures/replay: a small synthetic collection plus the
// response cache that lets the whole quiz -> score -> partition -> eval ->
// table pipeline run offline (replay_only mode, zero network).
//
// Usage: make_replay_fixtures <fixtures_replay_dir> <repo_dir>
//
// The cache is recorded by driving the same library entry points the CLI
// uses, capturing every prompt, and seeding the cache with scripted
// responses: a contaminated model persona that identifies the original
// passage for half the topics and answers a fixed wrong letter for the rest.

#include <cstdio>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "leakeval/dcq.hpp"
#include "leakeval/llm_client.hpp"
#include "leakeval/rerank.hpp"
#include "leakeval/text_util.hpp"
#include "leakeval/trec_io.hpp"

using namespace leakeval;
namespace fs = std::filesystem;

namespace {

constexpr std::uint64_t kSeed = 42;

struct Dataset {
  QrelsSet qrels;
  Corpus corpus;
  TopicSet topics;
  Run run;
};

Dataset build_dataset() {
  Dataset data;
  const std::vector<std::pair<std::string, std::string>> topics = {
      {"q1", "effects of volcanic ash on aviation"},
      {"q2", "history of the transatlantic telegraph cable"},
      {"q3", "deep sea hydrothermal vent ecosystems"},
      {"q4", "urban beekeeping regulations"},
      {"q5", "antibiotic resistance in livestock farming"},
      {"q6", "restoration of medieval fresco paintings"},
  };
  for (std::size_t t = 0; t < topics.size(); ++t) {
    const auto& [topic_id, text] = topics[t];
    data.topics[topic_id] = text;
    for (int d = 0; d < 3; ++d) {
      const std::string doc_id = topic_id + "-doc" + std::to_string(d);
      data.corpus[doc_id] = "Passage " + std::to_string(d) + " about " + text +
                            ", with distinctive sentence number " + std::to_string(t * 10 + d) +
                            " that a contaminated model would remember verbatim.";
      data.qrels[topic_id][doc_id] = (d == 2) ? 0 : 1;  // two relevant, one judged 0
    }
    // an extra retrieved-but-unjudged doc per topic
    const std::string extra = topic_id + "-extra";
    data.corpus[extra] = "Loosely related background passage about " + text + ".";
    std::vector<RunEntry> entries;
    int rank = 1;
    for (const std::string& doc :
         {topic_id + "-doc" + std::to_string((t + 1) % 3),
          topic_id + "-doc" + std::to_string(t % 3), extra,
          topic_id + "-doc" + std::to_string((t + 2) % 3)}) {
      entries.push_back({topic_id, doc, rank, 10.0 - rank, "stage1"});
      ++rank;
    }
    data.run.topics[topic_id] = entries;
  }
  return data;
}

/// Four paraphrase lines for a passage, deterministic per item.
std::string paraphrase_response(const QuizItem& draft) {
  std::string out;
  static const char* kStyles[] = {"Reworded", "Restated", "Paraphrased", "Reformulated"};
  for (int v = 0; v < 4; ++v) {
    out += std::to_string(v + 1) + ". " + kStyles[v] + " variant " + std::to_string(v + 1) +
           " of the passage for " + draft.item_id + ": " + draft.topic_text +
           " described with the same facts in different words (marker " + std::to_string(v) +
           ").\n";
  }
  return out;
}

bool is_contaminated_topic(const std::string& topic_id) {
  // q1..q3 behave contaminated, q4..q6 clean
  return topic_id == "q1" || topic_id == "q2" || topic_id == "q3";
}

class Capture : public CompletionSource {
 public:
  Capture(std::string* slot, std::string response) : slot_(slot), response_(std::move(response)) {}
  std::string complete(const std::string& prompt) override {
    *slot_ = prompt;
    return response_;
  }

 private:
  std::string* slot_;
  std::string response_;
};

}  // namespace

int main(int argc, char** argv) {
  if (argc != 3) {
    std::fprintf(stderr, "usage: %s <fixtures_replay_dir> <repo_dir>\n", argv[0]);
    return 2;
  }
  const fs::path out_dir = argv[1];
  const fs::path repo_dir = argv[2];
  fs::create_directories(out_dir);
  fs::remove_all(out_dir / "cache");

  const Dataset data = build_dataset();
  write_file((out_dir / "qrels.txt").string(), write_qrels(data.qrels));
  write_file((out_dir / "corpus.jsonl").string(), write_corpus_jsonl(data.corpus));
  std::string topics_tsv;
  for (const auto& [topic_id, text] : data.topics) topics_tsv += topic_id + "\t" + text + "\n";
  write_file((out_dir / "topics.tsv").string(), topics_tsv);
  write_file((out_dir / "run.txt").string(), write_run(parse_run(write_run(data.run))));

  ClientConfig cfg;
  cfg.endpoint.model_name = "replay-stub";
  cfg.endpoint.temperature = 0.0;
  cfg.endpoint.max_tokens = 512;
  cfg.cache_dir = (out_dir / "cache").string();
  cfg.replay_only = true;  // recording needs no endpoint
  LlmClient recorder(cfg);

  // Stage 1: paraphrase prompts. Capture the exact prompt per draft, then
  // seed the canned response under it.
  const std::vector<QuizItem> drafts =
      build_quiz_items(data.qrels, data.corpus, data.topics, 2, kSeed);
  std::vector<QuizItem> filled;
  std::size_t paraphrase_entries = 0;
  for (const QuizItem& draft : drafts) {
    std::string captured;
    Capture capture(&captured, paraphrase_response(draft));
    auto item = fill_paraphrases(draft, capture, 4, 3);
    if (!item.has_value()) {
      std::fprintf(stderr, "scripted paraphrases unexpectedly invalid for %s\n",
                   draft.item_id.c_str());
      return 1;
    }
    recorder.seed_cache_entry(captured, paraphrase_response(draft));
    ++paraphrase_entries;
    filled.push_back(std::move(*item));
  }

  // Stage 2: quiz prompts, rendered with the repo's default template.
  const std::string quiz_template =
      read_file((repo_dir / "data" / "prompts" / "quiz_prompt.txt").string());
  std::size_t quiz_entries = 0;
  for (const QuizItem& item : filled) {
    for (const QuizTrial& trial : assemble_trials(item)) {
      static const char* kLetters = "ABCD";
      const int answer = is_contaminated_topic(trial.topic_id) ? trial.gold_position
                                                               : (trial.gold_position + 1) % 4;
      const std::string response =
          std::string("The original passage is option ") + kLetters[answer] + ".";
      recorder.seed_cache_entry(render_quiz_prompt(quiz_template, trial), response);
      ++quiz_entries;
    }
  }

  // Stage 3: rerank windows, answered with the identity permutation. With
  // identity answers every window prompt is a pure function of the input
  // run, so the capture below sees exactly the prompts a replay run will ask
  // for.
  RerankConfig rerank_cfg;
  rerank_cfg.prompt_template =
      read_file((repo_dir / "data" / "prompts" / "rerank_prompt.txt").string());
  std::size_t rerank_entries = 0;
  class IdentityRecorder : public CompletionSource {
   public:
    IdentityRecorder(LlmClient* recorder, std::size_t* counter)
        : recorder_(recorder), counter_(counter) {}
    std::string complete(const std::string& prompt) override {
      std::string response;
      for (std::size_t i = 1; i <= 100; ++i) {
        if (prompt.find("[" + std::to_string(i) + "] ") == std::string::npos) break;
        if (!response.empty()) response += " > ";
        response += "[" + std::to_string(i) + "]";
      }
      recorder_->seed_cache_entry(prompt, response);
      ++*counter_;
      return response;
    }

   private:
    LlmClient* recorder_;
    std::size_t* counter_;
  } identity(&recorder, &rerank_entries);
  rerank_run(parse_run(write_run(data.run)), data.topics, data.corpus, rerank_cfg, identity,
             "replay-stub-rerank");

  std::printf("replay fixtures written to %s\n", out_dir.string().c_str());
  std::printf("  drafts: %zu, paraphrase entries: %zu, quiz entries: %zu, rerank entries: %zu\n",
              drafts.size(), paraphrase_entries, quiz_entries, rerank_entries);
  return 0;
}
