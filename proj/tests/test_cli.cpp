// End-to-end checks of the CLI binary (path in LEAKEVAL_BIN), working
// entirely offline against the committed replay fixtures.

#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "leakeval/trec_io.hpp"
#include "test_support.hpp"

using namespace leakeval;
namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

std::string cli_bin() {
  const char* bin = std::getenv("LEAKEVAL_BIN");
  return bin != nullptr ? bin : "";
}

std::string repo_dir() {
  const char* repo = std::getenv("REPO_DIR");
  return repo != nullptr ? repo : ".";
}

int run_cli(const std::string& args, const std::string& log_path) {
  const std::string command = cli_bin() + " " + args + " > " + log_path + " 2>&1";
  const int status = std::system(command.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string replay_config(const test_support::TempDir& dir) {
  const std::string fixtures = test_support::fixtures_dir();
  const std::string path = dir.file("replay.cfg");
  write_file(path,
             "model_name = replay-stub\n"
             "temperature = 0\n"
             "max_tokens = 512\n"
             "cache_dir = " + fixtures + "/replay/cache\n"
             "replay_only = true\n"
             "seed = 42\n"
             "quiz_prompt = " + repo_dir() + "/data/prompts/quiz_prompt.txt\n"
             "rerank_prompt = " + repo_dir() + "/data/prompts/rerank_prompt.txt\n");
  return path;
}

}  // namespace

TEST_CASE("cli reports its version and usage errors with the right exit codes" *
          doctest::skip(cli_bin().empty())) {
  test_support::TempDir dir("cli_codes");
  CHECK(run_cli("--version", dir.file("v.log")) == 0);
  CHECK(run_cli("definitely-not-a-subcommand", dir.file("bad.log")) == 2);
  CHECK(run_cli("eval --no-such-flag", dir.file("flag.log")) == 2);
  CHECK(run_cli("eval --run missing.txt --qrels missing.txt --out-prefix " + dir.file("x"),
                dir.file("err.log")) == 1);
  std::ifstream log(dir.file("err.log"));
  std::string contents((std::istreambuf_iterator<char>(log)), std::istreambuf_iterator<char>());
  CHECK(contents.find("error:") != std::string::npos);
}

TEST_CASE("cli reranks offline from the replay cache" * doctest::skip(cli_bin().empty())) {
  test_support::TempDir dir("cli_rerank");
  const std::string fixtures = test_support::fixtures_dir();
  const std::string config = replay_config(dir);
  const int exit_code =
      run_cli("--config " + config + " rerank --run " + fixtures + "/replay/run.txt" +
                  " --corpus " + fixtures + "/replay/corpus.jsonl" +
                  " --topics " + fixtures + "/replay/topics.tsv" +
                  " --out " + dir.file("reranked.txt"),
              dir.file("rerank.log"));
  REQUIRE(exit_code == 0);

  const Run before = load_run(fixtures + "/replay/run.txt");
  const Run after = load_run(dir.file("reranked.txt"));
  REQUIRE(after.topics.size() == before.topics.size());
  for (const auto& [topic_id, entries] : after.topics) {
    const auto& original = before.topics.at(topic_id);
    REQUIRE(entries.size() == original.size());
    for (std::size_t i = 0; i < entries.size(); ++i) {
      // the recorded answers are identity permutations
      CHECK(entries[i].doc_id == original[i].doc_id);
      CHECK(entries[i].tag == "replay-stub-rerank");
    }
  }
}

TEST_CASE("cli trends writes the bundle and prints census plus deltas" *
          doctest::skip(cli_bin().empty())) {
  test_support::TempDir dir("cli_trends");
  write_file(dir.file("meta.csv"),
             "paper_id,year,dataset,metric,value,category,kind,protocol\n"
             "p1,2021,dl20,ndcg@10,0.68,neural,best,full\n"
             "p2,2023,dl20,ndcg@10,0.72,neural,best,full\n"
             "p3,2025,dl20,ndcg@10,0.885,llm,best,full\n");
  const int exit_code = run_cli(
      "trends --csv " + dir.file("meta.csv") + " --dataset dl20 --metric ndcg@10" +
          " --refline 0.8031:trec-best-2020 --refline 0.7522:spladev3" +
          " --delta 0.885:0.8031 --svg --out-dir " + dir.file("bundle"),
      dir.file("trends.log"));
  REQUIRE(exit_code == 0);
  CHECK(fs::exists(dir.file("bundle") + "/series.json"));
  CHECK(fs::exists(dir.file("bundle") + "/series.csv"));
  CHECK(fs::exists(dir.file("bundle") + "/figure.svg"));

  const json series = json::parse(read_file(dir.file("bundle") + "/series.json"));
  CHECK(series.at("reference_lines").size() == 2);
  CHECK(series.contains("_meta"));

  std::ifstream log(dir.file("trends.log"));
  std::string output((std::istreambuf_iterator<char>(log)), std::istreambuf_iterator<char>());
  CHECK(output.find("ndcg@10: 3 papers") != std::string::npos);
  CHECK(output.find("+8.2 points, +10.2% relative") != std::string::npos);
  CHECK(output.find("mix absolute points and relative percent") != std::string::npos);
}

TEST_CASE("cli eval honors partition topic filters" * doctest::skip(cli_bin().empty())) {
  test_support::TempDir dir("cli_eval");
  const std::string fixtures = test_support::fixtures_dir();
  write_file(dir.file("partition.json"),
             json{{"pc_topics", {"q1", "q2", "q3", "q4", "q5", "q6"}},
                  {"nc_topics", {"q4", "q5", "q6"}},
                  {"unquizzed_topics", json::array()}}
                 .dump());
  const int exit_code =
      run_cli("eval --run " + fixtures + "/replay/run.txt --qrels " + fixtures +
                  "/replay/qrels.txt --metrics ndcg@10,map --topics-filter " +
                  dir.file("partition.json") + ":nc --out-prefix " + dir.file("nc"),
              dir.file("eval.log"));
  REQUIRE(exit_code == 0);
  const json report = json::parse(read_file(dir.file("nc.json")));
  CHECK(report.at("topic_count").get<int>() == 3);
  CHECK(report.at("_meta").at("seed").get<int>() == 42);
  // CSV artifact leads with the provenance comment line
  const std::string csv = read_file(dir.file("nc.csv"));
  CHECK(csv.rfind("# {", 0) == 0);
  CHECK(csv.find("topic_id,metric,value") != std::string::npos);
}
