#include <catch2/catch_amalgamated.hpp>

#include "comve/config.hpp"

#include "test_support.hpp"

using namespace comve;
using testsupport::TempDir;
using testsupport::write_text;

TEST_CASE("validate_config parses a minimal file") {
  TempDir tmp;
  write_text(tmp.file("run.cfg"), "# just a comment\n\nobjective = f1\n");
  const auto config = validate_config(tmp.file("run.cfg"));
  CHECK(config.get("objective") == "f1");
  CHECK_FALSE(config.has("data"));
}

TEST_CASE("validate_config resolves paths against the config directory") {
  TempDir tmp;
  write_text(tmp.file("data.csv"), "id,sent0,sent1\n1,a,b\n");
  write_text(tmp.file("run.cfg"), "data = data.csv\n");
  const auto config = validate_config(tmp.file("run.cfg"));
  CHECK(std::filesystem::path(*config.get("data")).is_absolute());
  CHECK(std::filesystem::exists(*config.get("data")));
}

TEST_CASE("validate_config rejects a bad objective naming key and values") {
  TempDir tmp;
  write_text(tmp.file("run.cfg"), "objective = f2\n");
  try {
    validate_config(tmp.file("run.cfg"));
    FAIL("expected validation_error");
  } catch (const validation_error& e) {
    const std::string msg = e.what();
    CHECK(msg.find("objective") != std::string::npos);
    CHECK(msg.find("f2") != std::string::npos);
    CHECK(msg.find("accuracy") != std::string::npos);
    CHECK(msg.find("f1") != std::string::npos);
  }
}

TEST_CASE("validate_config rejects dangling paths with the path") {
  TempDir tmp;
  write_text(tmp.file("run.cfg"), "probs_dir = no/such/dir\n");
  try {
    validate_config(tmp.file("run.cfg"));
    FAIL("expected validation_error");
  } catch (const validation_error& e) {
    const std::string msg = e.what();
    CHECK(msg.find("probs_dir") != std::string::npos);
    CHECK(msg.find("no/such/dir") != std::string::npos);
  }
}

TEST_CASE("validate_config rejects unknown and duplicate keys") {
  TempDir tmp;
  write_text(tmp.file("unknown.cfg"), "objectiv = f1\n");
  CHECK_THROWS_WITH(validate_config(tmp.file("unknown.cfg")),
                    Catch::Matchers::ContainsSubstring("objectiv"));

  write_text(tmp.file("dup.cfg"), "objective = f1\nobjective = accuracy\n");
  CHECK_THROWS_AS(validate_config(tmp.file("dup.cfg")), validation_error);

  write_text(tmp.file("noeq.cfg"), "objective f1\n");
  CHECK_THROWS_AS(validate_config(tmp.file("noeq.cfg")), validation_error);

  CHECK_THROWS_AS(validate_config(tmp.file("missing.cfg")),
                  validation_error);
}

TEST_CASE("validate_config checks every listed systems path") {
  TempDir tmp;
  write_text(tmp.file("a.jsonl"), "{\"id\": \"x\", \"text\": \"t\"}\n");
  write_text(tmp.file("ok.cfg"), "systems = a.jsonl\n");
  const auto config = validate_config(tmp.file("ok.cfg"));
  CHECK(config.get("systems")->find("a.jsonl") != std::string::npos);

  write_text(tmp.file("bad.cfg"), "systems = a.jsonl, b.jsonl\n");
  CHECK_THROWS_WITH(validate_config(tmp.file("bad.cfg")),
                    Catch::Matchers::ContainsSubstring("b.jsonl"));
}

TEST_CASE("validate_config checks numeric and enum values") {
  TempDir tmp;
  write_text(tmp.file("n.cfg"), "workers = many\n");
  CHECK_THROWS_AS(validate_config(tmp.file("n.cfg")), validation_error);
  write_text(tmp.file("neg.cfg"), "batch_size = -4\n");
  CHECK_THROWS_AS(validate_config(tmp.file("neg.cfg")), validation_error);
  write_text(tmp.file("fmt.cfg"), "format = yaml\n");
  CHECK_THROWS_WITH(validate_config(tmp.file("fmt.cfg")),
                    Catch::Matchers::ContainsSubstring("format"));
  write_text(tmp.file("task.cfg"), "task = essays\n");
  CHECK_THROWS_AS(validate_config(tmp.file("task.cfg")), validation_error);
  write_text(tmp.file("ks.cfg"), "top_ks = 5,three\n");
  CHECK_THROWS_AS(validate_config(tmp.file("ks.cfg")), validation_error);
}

TEST_CASE("the shipped smoke config validates") {
  const auto config =
      validate_config(testsupport::data_dir() / "smoke" / "smoke.cfg");
  CHECK(config.get("objective") == "f1");
  CHECK(config.get("forward_cmd") == "cat");
  CHECK(std::filesystem::exists(*config.get("leaderboard")));
}
