#include "lexchain/report.hpp"

#include <doctest.h>

#include <json.hpp>

#include "lexchain/errors.hpp"
#include "lexchain/mock_provider.hpp"
#include "test_support.hpp"

using namespace lexchain;

namespace {

SummaryCell cell(const std::string& prompt, const std::string& model, const std::string& question,
                 double em, double p, double r) {
  SummaryCell c;
  c.prompt = prompt;
  c.model = model;
  c.question = question;
  c.exact_match = em;
  c.precision = p;
  c.recall = r;
  return c;
}

// A three-run trace scored by hand: selected/gold pairs yield exact match 2/3.
TraceFile hand_trace() {
  TraceFile trace;
  auto run = [](const std::string& clause_id, const std::string& raw) {
    ChainRun r;
    r.clause_id = clause_id;
    r.question_id = "Q1";
    r.template_id = "P1";
    r.model_id = "mock-model";
    r.final_raw = raw;
    r.provider_calls = 1;
    return r;
  };
  trace.runs.push_back(run("ev-001", R"([{"bucket":"a"}])"));
  trace.runs.push_back(run("ev-002", R"([{"bucket":"c"}])"));
  trace.runs.push_back(run("ev-003", R"([{"bucket":"e"}])"));
  return trace;
}

Dataset demo_dataset() {
  return load_dataset(testsup::fixtures_dir() / "datasets" / "eval_demo.jsonl",
                      testsup::bundled_bank());
}

}  // namespace

TEST_CASE("score_trace re-parses raw output and scores against gold") {
  EvalReport report =
      score_trace(hand_trace(), demo_dataset(), testsup::bundled_bank(), ConstraintMode::observe);
  CHECK(report.exact_match == Ratio::of(2, 3));
  CHECK(report.exact_matches == 2);
  CHECK(report.counts.scored == 3);
  CHECK(report.template_id == "P1");
  CHECK(report.model_id == "mock-model");
}

TEST_CASE("score_trace errors") {
  SUBCASE("empty trace") {
    CHECK_THROWS_AS(
        score_trace(TraceFile{}, demo_dataset(), testsup::bundled_bank(), ConstraintMode::observe),
        ValidationError);
  }
  SUBCASE("unknown clause id") {
    TraceFile trace = hand_trace();
    trace.runs[1].clause_id = "ghost-999";
    CHECK_THROWS_WITH_AS(
        score_trace(trace, demo_dataset(), testsup::bundled_bank(), ConstraintMode::observe),
        doctest::Contains("ghost-999"), ValidationError);
  }
  SUBCASE("mixed identities") {
    TraceFile trace = hand_trace();
    trace.runs[2].template_id = "P2";
    CHECK_THROWS_WITH_AS(
        score_trace(trace, demo_dataset(), testsup::bundled_bank(), ConstraintMode::observe),
        doctest::Contains("mixes identities"), ValidationError);
  }
}

TEST_CASE("score_trace applies the requested constraint policy") {
  TraceFile trace = hand_trace();
  trace.runs[1].final_raw = R"([{"bucket":"g"},{"bucket":"a"}])";  // gold for ev-002 is {b}

  EvalReport observe =
      score_trace(trace, demo_dataset(), testsup::bundled_bank(), ConstraintMode::observe);
  EvalReport enforce =
      score_trace(trace, demo_dataset(), testsup::bundled_bank(), ConstraintMode::enforce);
  // Neither matches gold {b}, but the selected sets differ per policy: the
  // option-g row gains a false positive either way, option a only in observe.
  const auto row = [](const EvalReport& r, char option) {
    for (const auto& x : r.per_option) {
      if (x.confusion.option == option) return x.confusion;
    }
    FAIL("missing row");
    return OptionConfusion{};
  };
  CHECK(row(observe, 'a').fp == 1);
  CHECK(row(enforce, 'a').fp == 0);
  CHECK(row(observe, 'g').fp == 1);
  CHECK(row(enforce, 'g').fp == 1);
}

TEST_CASE("score_trace counts failures as empty selections") {
  TraceFile trace = hand_trace();
  trace.runs.pop_back();
  trace.failures.push_back({"ev-003", "scripted failure"});
  EvalReport report =
      score_trace(trace, demo_dataset(), testsup::bundled_bank(), ConstraintMode::observe);
  CHECK(report.counts.scored == 3);
  CHECK(report.counts.failures == 1);
  CHECK(report.exact_match == Ratio::of(1, 3));  // ev-002 wrong, ev-003 failed
}

TEST_CASE("summary grid places values in the right cells and blanks the rest") {
  std::vector<SummaryCell> cells = {
      cell("P1", "GPT-4o", "Q1", 0.47, 0.65, 0.89),
      cell("P1", "GPT-4o", "Q2", 0.84, 0.84, 0.67),
      cell("P2", "GPT-4o", "Q1", 0.49, 0.62, 0.82),
  };
  const std::string grid = render_summary_grid(cells);
  CHECK(grid.find("0.47") != std::string::npos);
  CHECK(grid.find("Exact Match") != std::string::npos);
  CHECK(grid.find("Precision") != std::string::npos);
  CHECK(grid.find("Recall") != std::string::npos);

  // Row structure: header (2 lines) + 3 metric rows per prompt.
  size_t lines = std::count(grid.begin(), grid.end(), '\n');
  CHECK(lines == 2 + 3 * 2);
}

TEST_CASE("duplicate summary cells name the collision") {
  std::vector<SummaryCell> cells = {
      cell("P1", "GPT-4o", "Q1", 0.47, 0.65, 0.89),
      cell("P1", "GPT-4o", "Q1", 0.48, 0.66, 0.90),
  };
  CHECK_THROWS_WITH_AS(render_summary_grid(cells), doctest::Contains("(P1, GPT-4o, Q1)"),
                       ValidationError);
}

TEST_CASE("published table fixtures parse into the right cell kinds") {
  ReportCells t1 = load_report_values(testsup::fixtures_dir() / "reports" / "table1_published.json");
  CHECK(t1.summary.size() == 32);  // 4 prompts x 2 models x 4 questions
  CHECK(t1.per_option.empty());

  ReportCells t2 = load_report_values(testsup::fixtures_dir() / "reports" / "table2_published.json");
  CHECK(t2.per_option.size() == 48);  // 2 models x 6 options x 4 prompts
  CHECK(t2.summary.empty());
}

TEST_CASE("csv emitters use the documented column set") {
  std::vector<SummaryCell> cells = {cell("P1", "m", "Q1", 0.5, 0.25, 0.75)};
  const std::string csv = summary_cells_to_csv(cells);
  CHECK(csv.rfind("prompt,model,question,metric,option,value\n", 0) == 0);
  CHECK(csv.find("P1,m,Q1,exact_match,,0.50\n") != std::string::npos);
  CHECK(csv.find("P1,m,Q1,precision,,0.25\n") != std::string::npos);

  PerOptionCell pc;
  pc.prompt = "P2";
  pc.model = "m";
  pc.question = "Q4";
  pc.option = 'd';
  pc.precision = 1.0;
  pc.recall = 0.44;
  const std::string pcsv = per_option_cells_to_csv({pc});
  CHECK(pcsv.find("P2,m,Q4,precision,d,1.00\n") != std::string::npos);
  CHECK(pcsv.find("P2,m,Q4,recall,d,0.44\n") != std::string::npos);
}

TEST_CASE("eval emitters are stable and complete") {
  EvalReport report =
      score_trace(hand_trace(), demo_dataset(), testsup::bundled_bank(), ConstraintMode::observe);

  const std::string text = render_eval_text(report, AverageKind::macro);
  CHECK(text.find("exact match: 0.67 (2/3)") != std::string::npos);
  CHECK(text.find("question: Q1") != std::string::npos);

  const std::string csv = eval_report_to_csv(report, AverageKind::macro);
  CHECK(csv.find("P1,mock-model,Q1,exact_match,,0.67") != std::string::npos);

  auto doc = nlohmann::json::parse(eval_report_to_json(report, AverageKind::macro));
  CHECK(doc.at("exact_match").at("matches") == 2);
  CHECK(doc.at("exact_match").at("scored") == 3);
  CHECK(doc.at("counts").at("scored") == 3);
  CHECK(doc.at("per_option").size() == 7);
  CHECK(doc.at("average") == "macro");
}

TEST_CASE("report cells derived from an eval report carry its identity") {
  EvalReport report =
      score_trace(hand_trace(), demo_dataset(), testsup::bundled_bank(), ConstraintMode::observe);
  SummaryCell c = summary_cell_from_report(report, AverageKind::macro);
  CHECK(c.prompt == "P1");
  CHECK(c.model == "mock-model");
  CHECK(c.question == "Q1");
  REQUIRE(c.exact_match.has_value());
  CHECK(*c.exact_match == doctest::Approx(2.0 / 3.0));

  auto per_option = per_option_cells_from_report(report);
  CHECK(per_option.size() == 7);
}
