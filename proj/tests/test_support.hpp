#pragma once

#include <unistd.h>

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <mutex>
#include <string>
#include <vector>

#include "leakeval/llm_client.hpp"
#include "leakeval/rng.hpp"
#include "leakeval/trec_io.hpp"

namespace test_support {

/// Self-deleting temp directory for cache / artifact tests.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static std::uint64_t counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("leakeval_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  std::string str() const { return path_.string(); }
  std::string file(const std::string& name) const { return (path_ / name).string(); }

 private:
  std::filesystem::path path_;
};

/// CompletionSource driven by a callback; records every prompt it sees.
class ScriptedModel : public leakeval::CompletionSource {
 public:
  explicit ScriptedModel(std::function<std::string(const std::string&)> fn)
      : fn_(std::move(fn)) {}

  std::string complete(const std::string& prompt) override {
    {
      std::lock_guard<std::mutex> lock(mutex_);
      prompts.push_back(prompt);
    }
    return fn_(prompt);
  }

  std::vector<std::string> prompts;

 private:
  std::function<std::string(const std::string&)> fn_;
  std::mutex mutex_;
};

/// Model that answers every prompt with a fixed string.
inline ScriptedModel constant_model(const std::string& response) {
  return ScriptedModel([response](const std::string&) { return response; });
}

inline std::string fixtures_dir() {
  const char* env = ::getenv("FIXTURES_DIR");
  return env != nullptr ? env : "tests/fixtures";
}

/// Synthetic (qrels, corpus, topics) with `relevant_per_topic[i]` usable
/// relevant passages for topic i. Doc texts are generated sentences.
struct SyntheticCollection {
  leakeval::QrelsSet qrels;
  leakeval::Corpus corpus;
  leakeval::TopicSet topics;
};

inline SyntheticCollection make_collection(const std::vector<int>& relevant_per_topic) {
  SyntheticCollection data;
  for (std::size_t t = 0; t < relevant_per_topic.size(); ++t) {
    const std::string topic_id = std::to_string(101 + t);
    data.topics[topic_id] = "synthetic query about subject " + topic_id;
    for (int d = 0; d < relevant_per_topic[t]; ++d) {
      const std::string doc_id = "D" + topic_id + "-" + std::to_string(d);
      data.qrels[topic_id][doc_id] = 1 + (d % 2);
      data.corpus[doc_id] = "Passage " + std::to_string(d) + " describing subject " + topic_id +
                            " in enough detail to be judged relevant.";
    }
    // every topic also carries one judged non-relevant doc
    const std::string junk_id = "J" + topic_id;
    data.qrels[topic_id][junk_id] = 0;
    data.corpus[junk_id] = "Unrelated filler text for topic " + topic_id + ".";
  }
  return data;
}

}  // namespace test_support
