#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <string>

// End-to-end checks of the installed binary; ELED_BIN is injected by CMake.

namespace {

int run(const std::string& args) {
  const std::string cmd = std::string(ELED_BIN) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WEXITSTATUS(status);
}

}  // namespace

TEST_CASE("cli: --help exists for every subcommand and exits 0") {
  CHECK(run("--help") == 0);
  for (const char* sub : {"synth", "train", "eval", "infer", "ablate", "gradcheck", "report"}) {
    CAPTURE(sub);
    CHECK(run(std::string(sub) + " --help") == 0);
  }
}

TEST_CASE("cli: unknown commands and missing required flags exit 1") {
  CHECK(run("frobnicate") == 1);
  CHECK(run("synth") == 1);               // --out required
  CHECK(run("train --out /tmp/x") == 1);  // --data required
}

TEST_CASE("cli: runtime failures exit 2") {
  CHECK(run("eval --data /nonexistent-dataset-path --identity") == 2);
  CHECK(run("report --in /nonexistent-report.json") == 2);
}
