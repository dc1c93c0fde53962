#include <gtest/gtest.h>

#include <sstream>

#include "cli.hpp"
#include "support.hpp"

namespace gmner {
namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run run(std::vector<std::string> args) {
  args.insert(args.begin(), "gmner");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli::run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

const std::string kData = GMNER_TEST_DATA;
const std::string kGold = kData + "/fixture_gold.jsonl";
const std::string kGens = kData + "/fixture_generations.jsonl";

ojson read_json(const std::string& path) { return ojson::parse(testing::read_file(path)); }

TEST(CliScore, MatchesGoldenReport) {
  testing::TempDir dir;
  const auto r = run({"score", "--gold", kGold, "--generations", kGens, "--out", dir.file("r.json")});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(read_json(dir.file("r.json")), read_json(kData + "/fixture_report.json"));
  EXPECT_NE(r.err.find("unknown id 'zz'"), std::string::npos);
}

TEST(CliScore, GoldenAgreesWithHandCount) {
  // GMNER: g01, g07, g09, g10, both g11, g13 correct; 12 distinct
  // predictions against 14 gold records.
  const auto j = read_json(kData + "/fixture_report.json");
  EXPECT_EQ(j["GMNER"]["n_correct"], 7);
  EXPECT_EQ(j["GMNER"]["n_pred"], 12);
  EXPECT_EQ(j["GMNER"]["n_gold"], 14);
  EXPECT_EQ(j["MNER"]["n_correct"], 10);
  EXPECT_EQ(j["EEG"]["n_correct"], 8);
  EXPECT_EQ(j["acc_at"]["0.5"], 0.5);
  EXPECT_EQ(j["acc_at"]["0.75"], 0.4);
  EXPECT_EQ(j["n_gold_with_box"], 10);
}

TEST(CliScore, TableAndThresholds) {
  testing::TempDir dir;
  const auto r = run({"score", "--gold", kGold, "--generations", kGens, "--thresholds", "0.3,0.9",
                      "--table", dir.file("t.txt"), "--vocab", kData + "/vocab.txt"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("GMNER"), std::string::npos);
  EXPECT_NE(r.out.find("Acc@0.3"), std::string::npos);
  EXPECT_NE(r.out.find("Acc@0.9"), std::string::npos);
  EXPECT_NE(r.out.find("denominator is 0"), std::string::npos);
  EXPECT_EQ(testing::read_file(dir.file("t.txt")), r.out);
}

TEST(CliScore, EmptyGenerationsScoreZero) {
  testing::TempDir dir;
  testing::write_file(dir.file("empty.jsonl"), "");
  const auto r = run({"score", "--gold", kGold, "--generations", dir.file("empty.jsonl"), "--out",
                      dir.file("r.json")});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = read_json(dir.file("r.json"));
  EXPECT_EQ(j["GMNER"]["f1"], 0.0);
  EXPECT_EQ(j["inputs"]["missing_predictions"], 13);
}

TEST(CliScore, PerfectPredictionFixedPoint) {
  testing::TempDir dir;
  const auto gold = testing::make_dataset(200, 9);
  write_dataset(gold, dir.file("gold.jsonl"));
  std::vector<Generation> gens;
  for (const auto& ex : gold) gens.push_back({ex.id, "reasoning\n" + serialize_records(ex.gold)});
  write_generations(gens, dir.file("g.jsonl"));
  const auto r = run({"score", "--gold", dir.file("gold.jsonl"), "--generations",
                      dir.file("g.jsonl"), "--out", dir.file("r.json")});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = read_json(dir.file("r.json"));
  for (const char* t : {"MNER", "EEG", "GMNER"}) EXPECT_EQ(j[t]["f1"], 1.0) << t;
  EXPECT_EQ(j["acc_at"]["0.5"], 1.0);
  EXPECT_EQ(j["acc_at"]["0.75"], 1.0);
  EXPECT_EQ(j["mean_iou"], 1.0);
}

TEST(CliScore, NormalizedFrame) {
  testing::TempDir dir;
  // 640x480 image: [156.25, 208.33, 312.5, 625] per mille of g01's box.
  write_generations({{"g01", "Messi | PER | [156.25, 208.3333, 312.5, 625]"}},
                    dir.file("g.jsonl"));
  const auto r = run({"score", "--gold", kGold, "--generations", dir.file("g.jsonl"), "--frame",
                      "normalized-1000", "--out", dir.file("r.json")});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(read_json(dir.file("r.json"))["GMNER"]["n_correct"], 1);
}

TEST(CliErrors, ExitCodes) {
  testing::TempDir dir;
  EXPECT_EQ(run({}).code, cli::kConfigError);
  EXPECT_EQ(run({"bogus"}).code, cli::kConfigError);
  EXPECT_EQ(run({"score", "--gold", kGold}).code, cli::kConfigError);
  EXPECT_EQ(run({"--version"}).code, cli::kOk);
  EXPECT_EQ(run({"score", "--gold", "/missing.jsonl", "--generations", kGens}).code,
            cli::kInputError);
  EXPECT_EQ(run({"score", "--gold", kGold, "--generations", kGens, "--thresholds", "2"}).code,
            cli::kConfigError);
  EXPECT_EQ(run({"score", "--gold", kGold, "--generations", kGens, "--frame", "polar"}).code,
            cli::kConfigError);
  EXPECT_EQ(run({"--config", "/missing.ini", "score", "--gold", kGold, "--generations", kGens}).code,
            cli::kConfigError);
  testing::write_file(dir.file("bad.jsonl"), "{\"id\": \"x\"\n");
  const auto bad = run({"score", "--gold", dir.file("bad.jsonl"), "--generations", kGens});
  EXPECT_EQ(bad.code, cli::kInputError);
  EXPECT_NE(bad.err.find("bad.jsonl:1:"), std::string::npos) << bad.err;
  EXPECT_EQ(run({"perturb", "--dataset", kGold, "--out", dir.file("p.jsonl"), "--tau", "3"}).code,
            cli::kConfigError);
  EXPECT_EQ(run({"build-train", "--dataset", kGold, "--out", dir.file("t.jsonl"), "--no-cot",
                 "--traces", kGens})
                .code,
            cli::kConfigError);
}

TEST(CliPerturb, DeterministicAcrossWorkersAndWritesManifest) {
  testing::TempDir dir;
  write_dataset(testing::make_dataset(500, 4), dir.file("d.jsonl"));
  const auto a = run({"--seed", "9", "--workers", "1", "perturb", "--dataset", dir.file("d.jsonl"),
                      "--out", dir.file("a.jsonl")});
  const auto b = run({"--seed", "9", "--workers", "8", "perturb", "--dataset", dir.file("d.jsonl"),
                      "--out", dir.file("b.jsonl")});
  ASSERT_EQ(a.code, 0) << a.err;
  ASSERT_EQ(b.code, 0) << b.err;
  EXPECT_EQ(testing::read_file(dir.file("a.jsonl")), testing::read_file(dir.file("b.jsonl")));
  EXPECT_NE(testing::read_file(dir.file("a.jsonl")), testing::read_file(dir.file("d.jsonl")));
  const auto m = read_json(dir.file("a.jsonl.manifest.json"));
  EXPECT_EQ(m["command"], "perturb");
  EXPECT_EQ(m["base_seed"], 9);
  EXPECT_EQ(m["grbp"]["tau"], 0.7);
}

TEST(CliPerturb, ZeroNoiseIsIdentity) {
  testing::TempDir dir;
  write_dataset(testing::make_dataset(100, 5), dir.file("d.jsonl"));
  const auto r = run({"perturb", "--dataset", dir.file("d.jsonl"), "--out", dir.file("p.jsonl"),
                      "--beta", "0", "--gamma", "0"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(testing::read_file(dir.file("p.jsonl")), testing::read_file(dir.file("d.jsonl")));
}

TEST(CliPerturb, ConfigFileAndFlagPrecedence) {
  testing::TempDir dir;
  write_dataset(testing::make_dataset(50, 6), dir.file("d.jsonl"));
  testing::write_file(dir.file("c.ini"), "[grbp]\nbeta = 0.1\ntau = 0.5\nseed = 17\n");
  const auto r = run({"--config", dir.file("c.ini"), "perturb", "--dataset", dir.file("d.jsonl"),
                      "--out", dir.file("p.jsonl"), "--tau", "0.6"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto m = read_json(dir.file("p.jsonl.manifest.json"));
  EXPECT_EQ(m["grbp"]["beta"], 0.1);
  EXPECT_EQ(m["grbp"]["tau"], 0.6);
  EXPECT_EQ(m["base_seed"], 17);
}

TEST(CliBuild, BuildThenValidate) {
  testing::TempDir dir;
  write_dataset(testing::make_dataset(300, 7), dir.file("d.jsonl"));
  const auto b = run({"--seed", "3", "build-train", "--dataset", dir.file("d.jsonl"), "--out",
                      dir.file("train.jsonl")});
  ASSERT_EQ(b.code, 0) << b.err;
  const auto v = run({"validate-train", "--train", dir.file("train.jsonl"), "--gold",
                      dir.file("d.jsonl"), "--manifest", dir.file("train.jsonl.manifest.json"),
                      "--out", dir.file("v.json")});
  ASSERT_EQ(v.code, 0) << v.err;
  const auto j = read_json(dir.file("v.json"));
  EXPECT_EQ(j["examples"], 300);
  EXPECT_EQ(j["malformed_lines"], 0);
  EXPECT_EQ(j["guard_violations"], 0);
  EXPECT_EQ(j["tau"], 0.7);
  const auto m = read_json(dir.file("train.jsonl.manifest.json"));
  EXPECT_EQ(m["mode"], "cot");
  EXPECT_EQ(m["template"], "default");
}

TEST(CliBuild, TracesTemplateAndNoCot) {
  testing::TempDir dir;
  testing::write_file(dir.file("brief.txt"), "Tag the entities in: {text}");
  testing::write_file(dir.file("traces.jsonl"),
                      "{\"id\":\"g01\",\"reasoning\":\"A footballer.\"}\n"
                      "{\"id\":\"g02\",\"reasoning\":\"Paris | LOC | None\"}\n");
  auto r = run({"build-train", "--dataset", kGold, "--traces", dir.file("traces.jsonl"),
                "--template", dir.file("brief.txt"), "--out", dir.file("t.jsonl")});
  ASSERT_EQ(r.code, 0) << r.err;
  auto train = load_training_set(dir.file("t.jsonl"));
  ASSERT_EQ(train.size(), 1u);
  EXPECT_EQ(train[0].instruction, "Tag the entities in: Messi scores again");
  EXPECT_EQ(read_json(dir.file("t.jsonl.manifest.json"))["counts"]["skipped"], 12);
  EXPECT_NE(r.err.find("skipped g02"), std::string::npos);

  r = run({"build-train", "--dataset", kGold, "--no-cot", "--beta", "0", "--gamma", "0", "--out",
           dir.file("n.jsonl")});
  ASSERT_EQ(r.code, 0) << r.err;
  train = load_training_set(dir.file("n.jsonl"));
  // g10's span contains " | " and cannot be serialized.
  ASSERT_EQ(train.size(), 12u);
  EXPECT_EQ(train[0].target, "Messi | PER | [100, 100, 200, 300]");
  EXPECT_NE(r.err.find("skipped g10: span 'A | B Band' contains the field separator"),
            std::string::npos)
      << r.err;
}

TEST(CliSweep, CsvAndDeterminism) {
  testing::TempDir dir;
  const auto a = run({"--workers", "1", "sweep", "--n-samples", "2000", "--tau", "0", "--out",
                      dir.file("a.csv")});
  const auto b = run({"--workers", "8", "sweep", "--n-samples", "2000", "--tau", "0", "--out",
                      dir.file("b.csv")});
  ASSERT_EQ(a.code, 0) << a.err;
  ASSERT_EQ(b.code, 0) << b.err;
  const auto csv = testing::read_file(dir.file("a.csv"));
  EXPECT_EQ(csv, testing::read_file(dir.file("b.csv")));
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 6);
  EXPECT_EQ(csv.rfind("beta,gamma,tau", 0), 0u);
  EXPECT_NE(csv.find("\n0,0,0,10,4,0.8,1.2,2000,1.000000,"), std::string::npos) << csv;
  EXPECT_EQ(read_json(dir.file("a.csv.manifest.json"))["sampler"]["kind"], "synthetic");
}

TEST(CliSweep, DatasetSamplerAndGrid) {
  testing::TempDir dir;
  const auto r = run({"sweep", "--dataset", kGold, "--betas", "0.02,0.04", "--gammas", "0,0.05",
                      "--n-samples", "500", "--out", dir.file("s.csv")});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto csv = testing::read_file(dir.file("s.csv"));
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 5);
  EXPECT_EQ(run({"sweep", "--image", "0x5", "--out", dir.file("x.csv")}).code, cli::kConfigError);
  EXPECT_EQ(run({"sweep", "--box-frac", "0.1", "--out", dir.file("x.csv")}).code, cli::kConfigError);
}

TEST(CliParse, CountsInjectedFaults) {
  testing::TempDir dir;
  const auto r = run({"parse", "--generations", kGens, "--out", dir.file("p.jsonl")});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("1 malformed"), std::string::npos) << r.out;
  std::size_t malformed = 0, lines = 0;
  std::istringstream in(testing::read_file(dir.file("p.jsonl")));
  for (std::string line; std::getline(in, line); ++lines) {
    malformed += ojson::parse(line)["malformed"].size();
  }
  EXPECT_EQ(lines, 13u);
  EXPECT_EQ(malformed, 1u);
}

TEST(CliParse, WellFormedFixtureHasNoMalformedLines) {
  testing::TempDir dir;
  std::vector<Generation> gens;
  for (const auto& ex : testing::make_dataset(100, 8)) {
    gens.push_back({ex.id, *ex.reasoning + "\n" + serialize_records(ex.gold)});
  }
  write_generations(gens, dir.file("g.jsonl"));
  const auto r = run({"parse", "--generations", dir.file("g.jsonl")});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find(" 0 malformed"), std::string::npos) << r.out;
}

TEST(CliParse, FuzzedGenerationsNeverFail) {
  testing::TempDir dir;
  testing::Gen gen(40);
  static const std::string alphabet = "ab |[],.-0123456789\nNone\t";
  std::vector<Generation> gens;
  for (int i = 0; i < 10000; ++i) {
    std::string s;
    const int n = gen.integer(0, 80);
    for (int k = 0; k < n; ++k) s.push_back(alphabet[gen.integer(0, int(alphabet.size()) - 1)]);
    gens.push_back({"f" + std::to_string(i), s});
  }
  write_generations(gens, dir.file("g.jsonl"));
  const auto r = run({"parse", "--generations", dir.file("g.jsonl"), "--out", dir.file("p.jsonl")});
  EXPECT_EQ(r.code, 0) << r.err;
  const auto s = run({"score", "--gold", kGold, "--generations", dir.file("g.jsonl")});
  EXPECT_EQ(s.code, 0) << s.err;
}

TEST(CliSamples, ShippedFilesLoad) {
  const std::string samples = kData + "/../../samples";
  testing::TempDir dir;
  const auto r = run({"--config", samples + "/config.ini", "build-train", "--dataset", kGold,
                      "--template", samples + "/instruction.txt", "--no-cot", "--out",
                      dir.file("t.jsonl")});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto m = read_json(dir.file("t.jsonl.manifest.json"));
  EXPECT_EQ(m["template"], "instruction");
  EXPECT_EQ(m["base_seed"], 42);
  EXPECT_EQ(load_vocabulary(samples + "/vocab.txt").size(), 4u);
}

TEST(CliScore, DeterministicAcrossWorkers) {
  testing::TempDir dir;
  const auto a = run({"--workers", "1", "score", "--gold", kGold, "--generations", kGens, "--out",
                      dir.file("a.json")});
  const auto b = run({"--workers", "8", "score", "--gold", kGold, "--generations", kGens, "--out",
                      dir.file("b.json")});
  ASSERT_EQ(a.code, 0);
  ASSERT_EQ(b.code, 0);
  EXPECT_EQ(testing::read_file(dir.file("a.json")), testing::read_file(dir.file("b.json")));
  EXPECT_EQ(a.out, b.out);
}

}  // namespace
}  // namespace gmner
