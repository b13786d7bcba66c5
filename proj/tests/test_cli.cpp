#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <array>
#include <cstdio>
#include <map>
#include <sys/wait.h>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

using Json = nlohmann::json;

namespace {

struct CliResult {
  int code = -1;
  std::string out;
  std::string err;
};

std::string corpus(const std::string& name) {
  return std::string(PARTYPES_CORPUS_DIR) + "/" + name;
}

CliResult run_cli(const std::string& args) {
  std::string err_file = std::string(std::tmpnam(nullptr)) + ".err";
  std::string cmd = std::string(PARTYPES_CLI_PATH) + " " + args + " 2>" + err_file;
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  CliResult result;
  std::array<char, 4096> buf;
  std::size_t n;
  while ((n = fread(buf.data(), 1, buf.size(), pipe)) > 0) result.out.append(buf.data(), n);
  int status = pclose(pipe);
  result.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  std::ifstream err(err_file);
  std::ostringstream es;
  es << err.rdbuf();
  result.err = es.str();
  std::remove(err_file.c_str());
  return result;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  REQUIRE(in.good());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

}  // namespace

TEST_CASE("check: fdiff over 1..8 exits 0 with size 1 excluded") {
  auto r = run_cli("check " + corpus("fdiff.pt") + " --sizes 1..8");
  CHECK(r.code == 0);
  CHECK(r.out.find("size 1: excluded by precondition") != std::string::npos);
  CHECK(r.out.find("size 2: ok") != std::string::npos);
  CHECK(r.out.find("inferred minimum size: 2") != std::string::npos);
}

TEST_CASE("check: self-message protocol exits 1") {
  std::string path = std::string(std::tmpnam(nullptr)) + ".pt";
  std::ofstream(path) << "protocol bad (true) { message 0, 0 float }\n";
  auto r = run_cli("check " + path + " --sizes 1..4");
  CHECK(r.code == 1);
  CHECK(r.out.find("self-message") != std::string::npos);
  std::remove(path.c_str());
}

TEST_CASE("check: missing file exits 2") {
  auto r = run_cli("check /nonexistent.pt");
  CHECK(r.code == 2);
  CHECK(r.err.find("cannot read") != std::string::npos);
}

TEST_CASE("check: parse failure exits 2 with diagnostics on stderr") {
  std::string path = std::string(std::tmpnam(nullptr)) + ".pt";
  std::ofstream(path) << "protocol broken (true) { message }\n";
  auto r = run_cli("check " + path);
  CHECK(r.code == 2);
  CHECK(r.err.find("syntax-error") != std::string::npos);
  std::remove(path.c_str());
}

TEST_CASE("project: golden output for fdiff at size 5") {
  auto r = run_cli("project " + corpus("fdiff.pt") + " --size 5");
  CHECK(r.code == 0);
  CHECK(r.out == read_file(corpus("golden/fdiff_project_size5.txt")));
}

TEST_CASE("project: --rank restricts to one block") {
  auto r = run_cli("project " + corpus("fdiff.pt") + " --size 5 --rank 0");
  CHECK(r.code == 0);
  CHECK(r.out.find("rank 0:") != std::string::npos);
  CHECK(r.out.find("rank 1:") == std::string::npos);
}

TEST_CASE("project: size 1 is excluded by fdiff's precondition") {
  auto r = run_cli("project " + corpus("fdiff.pt") + " --size 1");
  CHECK(r.code == 2);
  CHECK(r.err.find("excluded") != std::string::npos);
}

TEST_CASE("project: json output carries per-rank actions") {
  auto r = run_cli("project " + corpus("fdiff.pt") + " --size 4 --format json");
  CHECK(r.code == 0);
  Json doc = Json::parse(r.out);
  CHECK(doc["protocol"] == "fdiff");
  CHECK(doc["size"] == 4);
  CHECK(doc["ranks"].size() == 4);
  CHECK(doc["ranks"][0]["actions"].size() > 0);
}

TEST_CASE("verify: corrected fdiff exits 0") {
  auto r = run_cli("verify " + corpus("fdiff.mpp") + " --protocol " + corpus("fdiff.pt") +
                   " --sizes 2..6 --bindings " + corpus("fdiff.bindings.json"));
  CHECK(r.code == 0);
  CHECK(r.out.find("size 2: pass") != std::string::npos);
}

TEST_CASE("verify: naive fdiff exits 1 with mismatch detail") {
  auto r = run_cli("verify " + corpus("fdiff_naive.mpp") + " --protocol " + corpus("fdiff.pt") +
                   " --sizes 3..3 --bindings " + corpus("fdiff.bindings.json"));
  CHECK(r.code == 1);
  CHECK(r.out.find("protocol mismatch") != std::string::npos);
  CHECK(r.out.find("recv 0") != std::string::npos);
  CHECK(r.out.find("send to 0") != std::string::npos);
}

TEST_CASE("verify: missing extern binding exits 2") {
  auto r = run_cli("verify " + corpus("fdiff.mpp") + " --protocol " + corpus("fdiff.pt") +
                   " --sizes 2..2");
  CHECK(r.code == 2);
  CHECK(r.err.find("missing binding") != std::string::npos);
}

TEST_CASE("verify: malformed bindings file exits 2") {
  std::string path = std::string(std::tmpnam(nullptr)) + ".json";
  std::ofstream(path) << "{ not json";
  auto r = run_cli("verify " + corpus("fdiff.mpp") + " --protocol " + corpus("fdiff.pt") +
                   " --bindings " + path);
  CHECK(r.code == 2);
  std::remove(path.c_str());
}

TEST_CASE("simulate: naive fdiff at size 3 reports the cycle and exits 1") {
  auto r = run_cli("simulate " + corpus("fdiff_naive.mpp") + " --size 3 --bindings " +
                   corpus("fdiff.bindings.json"));
  CHECK(r.code == 1);
  CHECK(r.out == read_file(corpus("golden/fdiff_naive_simulate_size3.txt")));
}

TEST_CASE("simulate: corrected fdiff at size 3 exits 0") {
  auto r = run_cli("simulate " + corpus("fdiff.mpp") + " --size 3 --bindings " +
                   corpus("fdiff.bindings.json"));
  CHECK(r.code == 0);
  CHECK(r.out.find("no deadlock") != std::string::npos);
}

TEST_CASE("simulate: --trace adds rendezvous lines") {
  auto r = run_cli("simulate " + corpus("fdiff.mpp") + " --size 3 --trace --bindings " +
                   corpus("fdiff.bindings.json"));
  CHECK(r.code == 0);
  CHECK(r.out.find("step 1: collective broadcast root 0") != std::string::npos);
  CHECK(r.out.find(" -> ") != std::string::npos);
}

TEST_CASE("PARTYPES_MAX_STEPS overrides the budget") {
  std::string path = std::string(std::tmpnam(nullptr)) + ".mpp";
  std::ofstream(path) << "let x = 0\nfor i in 0 .. 100000000 { x = x + 1 }\n";
  setenv("PARTYPES_MAX_STEPS", "1000", 1);
  auto r = run_cli("simulate " + path + " --size 1");
  unsetenv("PARTYPES_MAX_STEPS");
  CHECK(r.code == 2);
  CHECK(r.out.find("budget exhausted") != std::string::npos);
  std::remove(path.c_str());
}

TEST_CASE("json outputs match the shipped schemas structurally") {
  // shallow structural checks; full schema validation runs in the python
  // smoke tests
  auto check_keys = [](const Json& doc, std::initializer_list<const char*> keys) {
    for (const char* k : keys) CHECK(doc.contains(k));
  };
  Json wf = Json::parse(run_cli("check " + corpus("fdiff.pt") + " --format json").out);
  check_keys(wf, {"protocol", "minSize", "maxSize", "sizes", "inferredMinSize"});

  Json sim = Json::parse(run_cli("simulate " + corpus("fdiff_naive.mpp") +
                                 " --size 3 --format json --bindings " +
                                 corpus("fdiff.bindings.json"))
                             .out);
  check_keys(sim, {"deadlocked", "budgetExhausted", "stepsExecuted", "waitForCycle", "ranks"});

  Json ver = Json::parse(run_cli("verify " + corpus("pi.mpp") + " --protocol " + corpus("pi.pt") +
                                 " --sizes 2..3 --format json --bindings " +
                                 corpus("pi.bindings.json"))
                             .out);
  REQUIRE(ver.is_array());
  check_keys(ver[0], {"size", "verdict", "failure", "collectives"});
}
