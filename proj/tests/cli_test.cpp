#include "sdc/cli.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "sdc/csv.hpp"
#include "sdc/permutation.hpp"
#include "sdc/randomized_response.hpp"

namespace sdc {
namespace {

using json = nlohmann::ordered_json;

struct RunResult {
  int code = -1;
  std::string out;
  std::string err;
  json report;  // parsed from out when it looks like JSON
};

RunResult run_cli(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  RunResult result;
  result.code = cli::run(args, out, err);
  result.out = out.str();
  result.err = err.str();
  if (!result.out.empty() && result.out.front() == '{')
    result.report = json::parse(result.out);
  return result;
}

class CliTest : public ::testing::Test {
 protected:
  // Writes a scratch file named uniquely per test and returns its path.
  std::string write_file(const std::string& name, const std::string& content) {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    const std::filesystem::path path = std::filesystem::path(::testing::TempDir()) /
                                       (std::string(info->name()) + "_" + name);
    std::ofstream out(path);
    out << content;
    return path.string();
  }

  std::string warner_matrix() {
    return write_file("warner.csv",
                      ",yes,no\n"
                      "yes,0.75,0.25\n"
                      "no,0.25,0.75\n");
  }

  std::string clustered_table() {
    return write_file("clusters.csv",
                      "disease,__cluster\n"
                      "low,g1\nlow,g1\nlow,g1\nhigh,g1\n"
                      "high,g2\nhigh,g2\nhigh,g2\nlow,g2\n");
  }
};

TEST_F(CliTest, AuditDpReportsTheEpsilonFloor) {
  const RunResult r = run_cli({"audit-dp", "--matrix", warner_matrix()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.report.at("command"), "audit-dp");
  EXPECT_EQ(r.report.at("version"), cli::kVersion);
  EXPECT_EQ(r.report.at("config").at("seed"), 0);
  EXPECT_DOUBLE_EQ(r.report.at("results").at("min_epsilon").get<double>(),
                   1.0986122886681098);
  EXPECT_DOUBLE_EQ(r.report.at("results").at("worst_pair").at("ratio").get<double>(), 3.0);
  EXPECT_EQ(r.report.at("results").at("columns").size(), 2u);
  EXPECT_TRUE(r.report.at("witnesses").empty());
  EXPECT_FALSE(r.report.at("timestamp").get<std::string>().empty());
}

TEST_F(CliTest, AuditDpExitCodeFollowsTheVerdict) {
  const std::string matrix = warner_matrix();
  const RunResult tight = run_cli({"audit-dp", "--matrix", matrix, "--epsilon", "1.0"});
  EXPECT_EQ(tight.code, 1);
  EXPECT_EQ(tight.report.at("results").at("satisfies"), false);
  ASSERT_EQ(tight.report.at("witnesses").size(), 1u);
  EXPECT_DOUBLE_EQ(tight.report.at("witnesses")[0].at("min_epsilon").get<double>(),
                   1.0986122886681098);

  const RunResult loose = run_cli({"audit-dp", "--matrix", matrix, "--epsilon", "1.2"});
  EXPECT_EQ(loose.code, 0);
  EXPECT_EQ(loose.report.at("results").at("satisfies"), true);
  EXPECT_TRUE(loose.report.at("witnesses").empty());
}

TEST_F(CliTest, AuditClosenessAcceptsAndRejectsAroundTheThreshold) {
  const std::string table = clustered_table();
  const RunResult ok =
      run_cli({"audit-closeness", "--table", table, "--sensitive", "disease", "--t", "2.0"});
  ASSERT_EQ(ok.code, 0) << ok.err;
  EXPECT_EQ(ok.report.at("results").at("satisfies"), true);
  EXPECT_DOUBLE_EQ(ok.report.at("results").at("max_distance").get<double>(), 2.0);
  ASSERT_EQ(ok.report.at("results").at("clusters").size(), 2u);
  EXPECT_EQ(ok.report.at("results").at("clusters")[0].at("cluster"), "g1");
  EXPECT_EQ(ok.report.at("results").at("clusters")[0].at("violates"), false);

  const RunResult bad =
      run_cli({"audit-closeness", "--table", table, "--sensitive", "disease", "--t", "1.9"});
  EXPECT_EQ(bad.code, 1);
  EXPECT_EQ(bad.report.at("results").at("satisfies"), false);
  ASSERT_EQ(bad.report.at("witnesses").size(), 2u);
  EXPECT_DOUBLE_EQ(bad.report.at("witnesses")[0].at("distance").get<double>(), 2.0);

  const RunResult both = run_cli({"audit-closeness", "--table", table, "--sensitive",
                                  "disease", "--t", "2.0", "--epsilon", "1.0"});
  EXPECT_EQ(both.code, 2);
}

TEST_F(CliTest, AuditClosenessTranslatesEpsilonIntoT) {
  const RunResult r = run_cli({"audit-closeness", "--table", clustered_table(),
                               "--sensitive", "disease", "--epsilon", "1.4"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NEAR(r.report.at("config").at("t").get<double>(), 2.0137527074704766, 1e-12);
  EXPECT_EQ(r.report.at("results").at("satisfies"), true);
}

TEST_F(CliTest, PosteriorMatchesTheLibraryNumbers) {
  const std::string matrix = warner_matrix();
  const RunResult uniform = run_cli({"posterior", "--matrix", matrix, "--value", "yes"});
  ASSERT_EQ(uniform.code, 0) << uniform.err;
  EXPECT_DOUBLE_EQ(uniform.report.at("results").at("posterior").at("yes").get<double>(), 0.75);
  EXPECT_NEAR(uniform.report.at("results").at("entropy_bits").get<double>(),
              0.8112781244591328, 1e-12);
  EXPECT_EQ(uniform.report.at("results").at("max_posterior_label"), "yes");

  const RunResult skewed =
      run_cli({"posterior", "--matrix", matrix, "--value", "yes", "--prior", "0.3,0.7"});
  EXPECT_DOUBLE_EQ(skewed.report.at("results").at("posterior").at("yes").get<double>(),
                   0.5625);

  const RunResult unknown = run_cli({"posterior", "--matrix", matrix, "--value", "maybe"});
  EXPECT_EQ(unknown.code, 2);
  EXPECT_NE(unknown.err.find("unknown_category"), std::string::npos) << unknown.err;
}

TEST_F(CliTest, EstimateInvertsTheChannel) {
  const RunResult r = run_cli(
      {"estimate", "--matrix", warner_matrix(), "--lambda", "0.4,0.6", "--project"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NEAR(r.report.at("results").at("estimate").at("yes").get<double>(), 0.3, 1e-12);
  EXPECT_NEAR(r.report.at("results").at("estimate").at("no").get<double>(), 0.7, 1e-12);
  EXPECT_EQ(r.report.at("results").at("sums_to_one"), true);
  EXPECT_NEAR(r.report.at("results").at("projected").at("yes").get<double>(), 0.3, 1e-12);
}

TEST_F(CliTest, RrDesignWritesALoadableChannel) {
  const std::string out_path = write_file("designed.csv", "");
  const RunResult r = run_cli({"rr-design", "--labels", "a,b,c", "--p-stay", "0.7",
                               "--matrix-out", out_path});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NEAR(r.report.at("results").at("min_epsilon").get<double>(), 1.540445040947149,
              1e-12);
  const TransitionMatrix designed = load_matrix_file(out_path);
  EXPECT_EQ(designed.prob(0, 0), 0.7);
  EXPECT_DOUBLE_EQ(designed.prob(0, 1), 0.15);  // (1 - 0.7) / 2 rounds off 0.15

  EXPECT_EQ(run_cli({"rr-design", "--labels", "a,b,c"}).code, 2);
  EXPECT_EQ(run_cli({"rr-design", "--labels", "a,b,c", "--p-stay", "0.7", "--epsilon", "1"})
                .code,
            2);
  EXPECT_EQ(run_cli({"rr-design", "--labels", "solo", "--p-stay", "0.7"}).code, 2);
}

TEST_F(CliTest, RrApplyIsReproducibleAndMatchesTheLibrary) {
  const std::string matrix = warner_matrix();
  const std::string table = write_file("answers.csv", "answer\nyes\nno\nyes\nyes\nno\n");
  const std::string out_table = write_file("reported.csv", "");

  const std::vector<std::string> args{"rr-apply",    "--matrix", matrix,
                                      "--table",     table,      "--sensitive",
                                      "answer",      "--seed",   "7",
                                      "--table-out", out_table};
  const RunResult first = run_cli(args);
  ASSERT_EQ(first.code, 0) << first.err;
  const RunResult second = run_cli(args);

  json a = first.report, b = second.report;
  a.erase("timestamp");
  b.erase("timestamp");
  EXPECT_EQ(a, b);
  EXPECT_EQ(first.report.at("config").at("seed"), 7);

  // The written table holds exactly what the library produces for this seed.
  const TransitionMatrix channel = load_matrix_file(matrix);
  const std::vector<std::string> expected =
      randomize(std::vector<std::string>{"yes", "no", "yes", "yes", "no"}, channel, 7);
  const MicrodataTable reported = load_table_file(out_table);
  const Column& column = reported.column("answer");
  for (std::size_t i = 0; i < expected.size(); ++i)
    EXPECT_EQ(column.domain->label(column.codes[i]), expected[i]) << "record " << i;
  EXPECT_EQ(first.report.at("results").at("reported_values").size(), expected.size());
}

TEST_F(CliTest, PramApplyPerturbsTheTableInPlace) {
  const std::string matrix = warner_matrix();
  const std::string table =
      write_file("micro.csv", "age,answer\n30,yes\n40,no\n50,yes\n60,no\n");
  const std::string out_table = write_file("perturbed.csv", "");
  const RunResult r = run_cli({"pram-apply", "--matrix", matrix, "--table", table,
                               "--sensitive", "answer", "--seed", "3", "--table-out",
                               out_table});
  ASSERT_EQ(r.code, 0) << r.err;
  const MicrodataTable perturbed = load_table_file(out_table);
  EXPECT_EQ(perturbed.column("age").numeric, (std::vector<double>{30, 40, 50, 60}));
  EXPECT_TRUE(r.report.at("results").contains("output_distribution"));

  const MicrodataTable original = load_table_file(table);
  const MicrodataTable expected =
      pram_apply(original, "answer", load_matrix_file(matrix), 3);
  EXPECT_EQ(perturbed.column("answer").codes, expected.column("answer").codes);
}

TEST_F(CliTest, EstimateTalliesTheTableByLabel) {
  // The reported file happens to list "no" first, so its inferred label
  // order is the reverse of the matrix file's.
  const std::string table =
      write_file("reported_rev.csv", "answer\nno\nno\nno\nyes\nno\nno\nyes\nno\n");
  const RunResult r = run_cli(
      {"estimate", "--matrix", warner_matrix(), "--table", table, "--sensitive", "answer"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_DOUBLE_EQ(r.report.at("results").at("lambda_hat").at("yes").get<double>(), 0.25);
  EXPECT_DOUBLE_EQ(r.report.at("results").at("lambda_hat").at("no").get<double>(), 0.75);

  // A sample that never reports one of the categories still estimates.
  const std::string partial = write_file("reported_no.csv", "answer\nno\nno\nno\nno\n");
  const RunResult all_no = run_cli({"estimate", "--matrix", warner_matrix(), "--table",
                                    partial, "--sensitive", "answer"});
  ASSERT_EQ(all_no.code, 0) << all_no.err;
  EXPECT_EQ(all_no.report.at("results").at("lambda_hat").at("yes").get<double>(), 0.0);

  // A label the channel does not know is a data error.
  const std::string foreign = write_file("reported_bad.csv", "answer\nyes\nmaybe\n");
  const RunResult bad = run_cli({"estimate", "--matrix", warner_matrix(), "--table",
                                 foreign, "--sensitive", "answer"});
  EXPECT_EQ(bad.code, 2);
  EXPECT_NE(bad.err.find("unknown_category"), std::string::npos) << bad.err;
}

TEST_F(CliTest, PramApplyMatchesTheChannelByLabel) {
  // An asymmetric channel, so a wrongly permuted matrix could not hide.
  const std::string matrix =
      write_file("skewed.csv", ",yes,no\nyes,0.9,0.1\nno,0.3,0.7\n");
  // This table's first record makes the inferred label order the reverse of
  // the matrix file's; the channel must still apply per label.
  const std::string table = write_file(
      "micro_rev.csv", "answer\nno\nyes\nno\nno\nyes\nno\nyes\nno\nno\nyes\nno\nno\n");
  const std::string out_table = write_file("perturbed_rev.csv", "");
  const RunResult r = run_cli({"pram-apply", "--matrix", matrix, "--table", table,
                               "--sensitive", "answer", "--seed", "11", "--table-out",
                               out_table});
  ASSERT_EQ(r.code, 0) << r.err;

  // The same channel, spelled over the table's own [no, yes] domain.
  const MicrodataTable original = load_table_file(table);
  const TransitionMatrix aligned(*original.column("answer").domain,
                                 {{0.7, 0.3}, {0.1, 0.9}});
  const MicrodataTable expected = pram_apply(original, "answer", aligned, 11);
  const MicrodataTable perturbed = load_table_file(out_table);
  const Column& got = perturbed.column("answer");
  const Column& want = expected.column("answer");
  ASSERT_EQ(got.size(), want.size());
  for (std::size_t i = 0; i < want.size(); ++i)
    EXPECT_EQ(got.domain->label(got.codes[i]), want.domain->label(want.codes[i]))
        << "record " << i;

  // Category sets that genuinely differ are still rejected.
  const std::string foreign = write_file("micro_bad.csv", "answer\nyes\nmaybe\n");
  const RunResult bad = run_cli({"pram-apply", "--matrix", matrix, "--table", foreign,
                                 "--sensitive", "answer", "--seed", "1"});
  EXPECT_EQ(bad.code, 2);
  EXPECT_NE(bad.err.find("domain_mismatch"), std::string::npos) << bad.err;

  const std::string wide =
      write_file("micro_three.csv", "answer\nyes\nno\ndecline\n");
  const RunResult three = run_cli({"pram-apply", "--matrix", matrix, "--table", wide,
                                   "--sensitive", "answer", "--seed", "1"});
  EXPECT_EQ(three.code, 2);
  EXPECT_NE(three.err.find("domain_mismatch"), std::string::npos) << three.err;
}

TEST_F(CliTest, RevmapRecoversThePermutedOriginals) {
  const std::string original = write_file("orig.csv", "v\n10\n20\n30\n");
  const std::string released = write_file("rel.csv", "v\n5\n1\n2\n");
  const RunResult r = run_cli({"revmap", "--original", original, "--table", released});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.report.at("results").at("reverse_mapped"), json::array({30.0, 10.0, 20.0}));

  const std::string wide = write_file("wide.csv", "a,b\n1,2\n3,4\n");
  EXPECT_EQ(run_cli({"revmap", "--original", wide, "--table", wide}).code, 2);
}

TEST_F(CliTest, DeclaredOrdersUnlockCategoricalRanks) {
  const std::string original = write_file("orig.csv", "size\nm\ns\nl\n");
  const std::string released = write_file("rel.csv", "size\ns\nm\nl\n");

  // Without an order the attribute has no ordinal scale.
  const RunResult untyped = run_cli({"revmap", "--original", original, "--table", released});
  EXPECT_EQ(untyped.code, 2);
  EXPECT_NE(untyped.err.find("unordered_categorical"), std::string::npos) << untyped.err;

  const RunResult flagged = run_cli(
      {"revmap", "--original", original, "--table", released, "--order", "size=s,m,l"});
  ASSERT_EQ(flagged.code, 0) << flagged.err;
  EXPECT_EQ(flagged.report.at("results").at("reverse_mapped"),
            json::array({"s", "m", "l"}));
  EXPECT_EQ(flagged.report.at("config").at("order").at("size"),
            json::array({"s", "m", "l"}));

  // The config file spells the same order as a JSON map.
  const std::string config =
      write_file("order.json", R"({"order": {"size": ["s", "m", "l"]}})");
  const RunResult configured =
      run_cli({"revmap", "--original", original, "--table", released, "--config", config});
  ASSERT_EQ(configured.code, 0) << configured.err;
  EXPECT_EQ(configured.report.at("results"), flagged.report.at("results"));

  // A flag-supplied order for the same column wins over the config file.
  const RunResult overridden =
      run_cli({"revmap", "--original", original, "--table", released, "--config", config,
               "--order", "size=l,m,s"});
  ASSERT_EQ(overridden.code, 0) << overridden.err;
  EXPECT_EQ(overridden.report.at("config").at("order").at("size"),
            json::array({"l", "m", "s"}));
}

TEST_F(CliTest, NumericDeclarationTurnsStrayTextIntoAParseError) {
  const std::string table = write_file("bad.csv", "x\n1\ntwo\n");
  const RunResult r =
      run_cli({"revmap", "--original", table, "--table", table, "--numeric", "x"});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("parse_error"), std::string::npos) << r.err;
  EXPECT_NE(r.err.find("line 3"), std::string::npos) << r.err;
}

TEST_F(CliTest, DecomposeReportsTheProfile) {
  const std::string original = write_file("orig.csv", "v\n3\n1\n4\n9\n");
  const std::string released = write_file("rel.csv", "v\n9\n3\n1\n4\n");
  const std::string out_table = write_file("revmapped.csv", "");
  const RunResult r = run_cli(
      {"decompose", "--original", original, "--table", released, "--table-out", out_table});
  ASSERT_EQ(r.code, 0) << r.err;
  const json& attr = r.report.at("results").at("attributes")[0];
  EXPECT_EQ(attr.at("rank_distances"), json::array({2, 1, 2, 1}));
  EXPECT_DOUBLE_EQ(attr.at("mean_rank_distance").get<double>(), 1.5);
  EXPECT_EQ(attr.at("max_rank_distance"), 2);
  EXPECT_EQ(attr.at("max_abs_residual"), 0.0);
  EXPECT_EQ(r.report.at("results").at("identity_map_assumed"), true);
  EXPECT_EQ(load_table_file(out_table).column("v").numeric, (std::vector<double>{9, 3, 1, 4}));
}

TEST_F(CliTest, CheckDvfListsFailingRecordsOneBased) {
  std::string x = "v\n", y = "v\n";
  for (int i = 1; i <= 10; ++i) x += std::to_string(i) + "\n";
  for (int i = 10; i >= 1; --i) y += std::to_string(i) + "\n";
  const std::string original = write_file("orig.csv", x);
  const std::string released = write_file("rel.csv", y);

  const RunResult bad = run_cli({"check-dvf", "--original", original, "--table", released,
                                 "--d", "5", "--v", "4", "--criterion", "distinct-count"});
  EXPECT_EQ(bad.code, 1);
  EXPECT_EQ(bad.report.at("results").at("satisfied"), false);
  EXPECT_EQ(bad.report.at("results").at("failing_records"), json::array({4, 5, 6, 7}));
  EXPECT_EQ(bad.report.at("witnesses")[0].at("required_distance"), 5);

  const RunResult ok = run_cli({"check-dvf", "--original", original, "--table", released,
                                "--d", "1", "--v", "-1"});
  EXPECT_EQ(ok.code, 0) << ok.err;
  EXPECT_EQ(ok.report.at("results").at("satisfied"), true);

  EXPECT_EQ(run_cli({"check-dvf", "--original", original, "--table", released, "--v", "0"})
                .code,
            2);
}

TEST_F(CliTest, RiskLossUsesDocumentedDefaultOrders) {
  const std::string original = write_file("orig.csv", "v\n1\n2\n3\n4\n");
  const std::string released = write_file("rel.csv", "v\n4\n3\n2\n1\n");
  const RunResult r = run_cli({"risk-loss", "--original", original, "--table", released});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.report.at("config").at("alphas"), json::array({-2.0, 2.0}));
  EXPECT_EQ(r.report.at("results").at("alpha_risk"), -2.0);
  const json& attr = r.report.at("results").at("attributes")[0];
  EXPECT_NEAR(attr.at("risk").get<double>(), 1.3416407864998738, 1e-12);
  EXPECT_NEAR(attr.at("loss").get<double>(), 2.23606797749979, 1e-12);

  EXPECT_EQ(
      run_cli({"risk-loss", "--original", original, "--table", released, "--alphas", "1,2"})
          .code,
      2);
  EXPECT_EQ(
      run_cli({"risk-loss", "--original", original, "--table", released, "--alphas", "-1"})
          .code,
      2);
}

TEST_F(CliTest, ConfigSuppliesValuesButFlagsWin) {
  const std::string matrix = warner_matrix();
  const std::string config =
      write_file("audit.json", "{\"matrix\": \"" + matrix + "\", \"epsilon\": 0.9}");
  const RunResult from_config = run_cli({"audit-dp", "--config", config});
  EXPECT_EQ(from_config.code, 1);
  EXPECT_EQ(from_config.report.at("config").at("epsilon"), 0.9);

  const RunResult overridden = run_cli({"audit-dp", "--config", config, "--epsilon", "1.2"});
  EXPECT_EQ(overridden.code, 0);
  EXPECT_EQ(overridden.report.at("config").at("epsilon"), 1.2);

  EXPECT_EQ(run_cli({"audit-dp", "--config", "/nonexistent.json"}).code, 2);
  const std::string broken = write_file("broken.json", "{not json");
  EXPECT_EQ(run_cli({"audit-dp", "--config", broken}).code, 2);
}

TEST_F(CliTest, OutFlagRedirectsTheReport) {
  const std::string out_path = write_file("report.json", "");
  const RunResult r = run_cli({"audit-dp", "--matrix", warner_matrix(), "--out", out_path});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(r.out.empty());
  std::ifstream in(out_path);
  const json report = json::parse(in);
  EXPECT_EQ(report.at("command"), "audit-dp");
}

TEST_F(CliTest, UsageAndIoProblemsExitWithTwo) {
  EXPECT_EQ(run_cli({}).code, 2);
  EXPECT_EQ(run_cli({"no-such-command"}).code, 2);
  EXPECT_EQ(run_cli({"audit-dp", "--bogus-flag"}).code, 2);

  const RunResult missing = run_cli({"audit-dp"});
  EXPECT_EQ(missing.code, 2);
  EXPECT_NE(missing.err.find("--matrix"), std::string::npos) << missing.err;

  const RunResult absent = run_cli({"audit-dp", "--matrix", "/nonexistent/m.csv"});
  EXPECT_EQ(absent.code, 2);
  EXPECT_NE(absent.err.find("cannot open"), std::string::npos) << absent.err;

  const RunResult help = run_cli({"--help"});
  EXPECT_EQ(help.code, 0);
  EXPECT_NE(help.out.find("sdcaudit"), std::string::npos);
}

}  // namespace
}  // namespace sdc
