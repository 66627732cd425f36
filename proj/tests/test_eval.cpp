#include <gtest/gtest.h>

#include "cmdground/eval.hpp"
#include "support.hpp"

using namespace cmdground;
using testsupport::blocks_spec;
using testsupport::page_spec;

namespace {

std::filesystem::path dataset_path(const AppSpec& spec) {
  return testsupport::data_dir() / "datasets" / (spec.app_name + ".jsonl");
}
std::filesystem::path script_path(const AppSpec& spec) {
  return testsupport::data_dir() / "datasets" / (spec.app_name + ".learner.jsonl");
}

EvalReport run(const AppSpec& spec, const std::string& variant, bool learner = false) {
  AscStore store(spec);
  const auto v = Variant::parse(variant);
  std::shared_ptr<const EmbeddingTable> table;
  if (v.backend == Backend::embedding) table = std::make_shared<const EmbeddingTable>(EmbeddingTable::load(*spec.embedding_path));
  const auto data = load_dataset(dataset_path(spec), spec);
  std::vector<LearnerScriptEntry> script;
  if (learner) script = parse_learner_script(read_file(script_path(spec)), spec);
  return evaluate(data, store, v, load_lexicon_for(spec), table, learner ? &script : nullptr);
}

}  // namespace

TEST(Eval, Categorize) {
  EXPECT_EQ(categorize({}), Category::nog);
  EXPECT_EQ(categorize({3}), Category::uc0);
  EXPECT_EQ(categorize({8, 3}), Category::uc1);
  EXPECT_EQ(categorize({8, 10, 3}), Category::uc2);
  EXPECT_EQ(categorize({8, 10, 12, 3}), Category::uc_many);
  for (auto c : {Category::uc0, Category::uc1, Category::uc2, Category::uc_many, Category::nog})
    EXPECT_EQ(category_from_string(to_string(c)), c);
  EXPECT_THROW(category_from_string("3-UC"), DatasetError);
}

TEST(Eval, Correctness) {
  EXPECT_TRUE(is_correct({}, {}));
  EXPECT_FALSE(is_correct({2}, {}));
  EXPECT_FALSE(is_correct({}, {2}));
  EXPECT_TRUE(is_correct({9, 2}, {8, 2}));
  EXPECT_FALSE(is_correct({8, 3}, {8, 2}));
}

TEST(Eval, VariantNames) {
  EXPECT_EQ(Variant::parse("vsm").label(), "vsm");
  const auto v = Variant::parse("jaccard-R-U");
  EXPECT_EQ(v.backend, Backend::jaccard);
  EXPECT_FALSE(v.rephrase);
  EXPECT_FALSE(v.utilities);
  EXPECT_EQ(v.label(), "jaccard-R-U");
  EXPECT_THROW(Variant::parse("vsm-X"), Error);
}

TEST(Eval, DatasetErrors) {
  const auto& spec = blocks_spec();
  EXPECT_THROW(parse_dataset("{not json", spec), DatasetError);
  EXPECT_THROW(parse_dataset(R"({"gold_aids": [2]})", spec), DatasetError);
  EXPECT_THROW(parse_dataset(R"({"text": "x", "gold_aids": [8, 2], "category": "0-UC"})", spec), DatasetError);
  EXPECT_THROW(parse_dataset(R"({"text": "x", "gold_aids": [2, 8]})", spec), DatasetError);
  EXPECT_THROW(parse_dataset(R"({"text": "x", "gold_aids": [42]})", spec), DatasetError);
  EXPECT_THROW(parse_dataset(R"({"text": "x", "gold_aids": [2], "world": {"app": "webpage"}})", spec), DatasetError);
  EXPECT_THROW(
      parse_dataset(R"({"text": "x", "gold_aids": [2], "world": {"blocks": [{"location": [20, 20]}]}})", spec),
      DatasetError);
  try {
    parse_dataset("# header\n{\"text\": \"x\", \"gold_aids\": [2]}\n\n[1, 2\n", spec);
    FAIL();
  } catch (const DatasetError& e) {
    EXPECT_NE(std::string(e.what()).find("line 4"), std::string::npos);
  }
  const auto ok = parse_dataset("{\"text\": \"x\", \"gold_aids\": []}\n", spec);
  ASSERT_EQ(ok.size(), 1u);
  EXPECT_EQ(ok[0].category, Category::nog);
}

TEST(Eval, BundledDatasetsCoverAllCategories) {
  for (const auto* spec : {&blocks_spec(), &page_spec()}) {
    const auto data = load_dataset(dataset_path(*spec), *spec);
    EXPECT_GE(data.size(), 50u);
    std::map<Category, int> n;
    for (const auto& c : data) ++n[c.category];
    for (auto c : {Category::uc0, Category::uc1, Category::uc2, Category::uc_many, Category::nog})
      EXPECT_GT(n[c], 0) << spec->app_name << " " << to_string(c);
  }
}

TEST(Eval, AblationOrdering) {
  for (const auto* spec : {&blocks_spec(), &page_spec()}) {
    const auto full = run(*spec, "vsm");
    const auto no_utils = run(*spec, "vsm-U");
    const auto no_rephrase = run(*spec, "vsm-R");
    EXPECT_GT(full.overall_accuracy, no_utils.overall_accuracy) << spec->app_name;
    EXPECT_GE(full.overall_accuracy, no_rephrase.overall_accuracy) << spec->app_name;
  }
}

TEST(Eval, NonGroundableCommandsReturnEmpty) {
  for (const auto* spec : {&blocks_spec(), &page_spec()})
    for (const auto* variant : {"vsm", "jaccard", "emb"}) {
      const auto rep = run(*spec, variant);
      for (const auto& r : rep.records) {
        if (r.category == Category::nog) EXPECT_TRUE(r.predicted.empty()) << variant << ": " << r.command;
        if (!r.predicted.empty()) EXPECT_GT(r.score, 0.0) << variant << ": " << r.command;
      }
      EXPECT_DOUBLE_EQ(rep.accuracy("NOG"), 1.0) << spec->app_name << " " << variant;
    }
}

TEST(Eval, LearnerDoesNotHurt) {
  for (const auto* spec : {&blocks_spec(), &page_spec()}) {
    const auto base = run(*spec, "vsm");
    const auto learned = run(*spec, "vsm", true);
    EXPECT_TRUE(learned.learner);
    EXPECT_FALSE(learned.learner_outcomes.empty());
    EXPECT_GE(learned.overall_accuracy, base.overall_accuracy) << spec->app_name;
  }
}

TEST(Eval, ReportShapes) {
  const auto rep = run(blocks_spec(), "vsm");
  std::size_t total = 0, correct = 0;
  for (const auto& [cat, v] : rep.per_category) {
    total += v.second;
    correct += v.first;
  }
  EXPECT_EQ(total, rep.total);
  EXPECT_EQ(correct, rep.correct);
  EXPECT_NEAR(rep.overall_accuracy, static_cast<double>(rep.correct) / static_cast<double>(rep.total), 1e-12);
  const auto j = to_json(rep);
  EXPECT_EQ(j.at("confusion").size(), rep.total);
  EXPECT_EQ(j.at("variant"), "vsm");
  const auto table = format_table(rep);
  EXPECT_NE(table.find("1-UC"), std::string::npos);
  EXPECT_NE(table.find("NOG"), std::string::npos);
}
