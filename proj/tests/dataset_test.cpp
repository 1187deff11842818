#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "cltr/dataset.hpp"

namespace cltr {
namespace {

LtrFile parse(const std::string& text) {
  std::istringstream in(text);
  return parse_ltr(in);
}

std::string write(const std::vector<Query>& queries) {
  std::ostringstream out;
  write_ltr(out, queries);
  return out.str();
}

TEST(Binarize, ThresholdIsStrict) {
  EXPECT_EQ(binarize(3), 1);
  EXPECT_EQ(binarize(4), 1);
  EXPECT_EQ(binarize(2), 0);
  EXPECT_EQ(binarize(0), 0);
  EXPECT_THROW(binarize(5), std::invalid_argument);
  EXPECT_THROW(binarize(-1), std::invalid_argument);
}

TEST(ParseLtr, SparseLineIsDensified) {
  const auto file = parse("3 qid:7 1:0.5 3:1.0\n");
  ASSERT_EQ(file.queries.size(), 1u);
  EXPECT_EQ(file.feature_dim, 3);
  const auto& doc = file.queries[0].documents.at(0);
  EXPECT_EQ(file.queries[0].query_id, 7);
  EXPECT_EQ(doc.features, (std::vector<double>{0.5, 0.0, 1.0}));
  EXPECT_EQ(doc.graded_label, 3);
  EXPECT_EQ(doc.binary_label, 1);
}

TEST(ParseLtr, LabelTwoIsNotRelevant) {
  const auto file = parse("2 qid:7 1:0.1\n");
  EXPECT_EQ(file.queries[0].documents[0].binary_label, 0);
}

TEST(ParseLtr, CommentsAndPaddingToMaxFeatureId) {
  const auto file = parse(
      "# header comment\n"
      "1 qid:1 2:0.25 # docid=abc\n"
      "4 qid:1 1:1 5:-2\n"
      "\n"
      "0 qid:2 3:7\n");
  ASSERT_EQ(file.queries.size(), 2u);
  EXPECT_EQ(file.feature_dim, 5);
  for (const auto& q : file.queries)
    for (const auto& d : q.documents) EXPECT_EQ(d.features.size(), 5u);
  EXPECT_EQ(file.queries[0].documents[1].doc_id, 1);
  EXPECT_DOUBLE_EQ(file.queries[0].documents[1].features[4], -2.0);
  EXPECT_EQ(file.queries[1].documents[0].doc_id, 0);
}

TEST(ParseLtr, NonContiguousBlocksRejected) {
  try {
    parse("1 qid:1 1:0\n1 qid:2 1:0\n1 qid:1 1:0\n");
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3u);
    EXPECT_NE(std::string(e.what()).find("non-contiguous qid blocks"), std::string::npos);
  }
}

TEST(ParseLtr, MalformedLinesCarryLineNumber) {
  const std::vector<std::pair<std::string, std::size_t>> cases = {
      {"1 qid:1 1:0\nx qid:1 1:0\n", 2},
      {"1 qid:1 1:0\n1 1:0\n", 2},
      {"7 qid:1 1:0\n", 1},
      {"1 qid:1 0:1\n", 1},
      {"1 qid:1 2:1 1:1\n", 1},
      {"1 qid:1 1:abc\n", 1},
      {"# c\n\n1 qid:z 1:1\n", 3},
  };
  for (const auto& [text, line] : cases) {
    try {
      parse(text);
      ADD_FAILURE() << "accepted: " << text;
    } catch (const ParseError& e) {
      EXPECT_EQ(e.line(), line) << text;
    }
  }
}

TEST(ParseLtr, EmptyFileIsError) {
  EXPECT_THROW(parse(""), ParseError);
  EXPECT_THROW(parse("# only a comment\n\n"), ParseError);
  EXPECT_THROW(parse_ltr_file("/nonexistent/cltr/train.txt"), std::runtime_error);
}

TEST(GenerateSynthetic, Deterministic) {
  EXPECT_EQ(generate_synthetic(10, 5, 8, 1), generate_synthetic(10, 5, 8, 1));
  EXPECT_NE(generate_synthetic(10, 5, 8, 1), generate_synthetic(10, 5, 8, 2));
}

TEST(GenerateSynthetic, QuintileLabelsGiveFortyPercentPositives) {
  const auto ds = generate_synthetic(1000, 20, 8, 1);
  std::size_t docs = 0, positive = 0;
  std::vector<std::size_t> per_grade(5, 0);
  for (const auto* split : {&ds.train, &ds.validation, &ds.test})
    for (const auto& q : *split)
      for (const auto& d : q.documents) {
        ++docs;
        positive += static_cast<std::size_t>(d.binary_label);
        ++per_grade.at(static_cast<std::size_t>(d.graded_label));
      }
  EXPECT_NEAR(static_cast<double>(positive) / docs, 0.40, 0.02);
  for (auto n : per_grade) EXPECT_EQ(n, docs / 5);
}

TEST(GenerateSynthetic, SplitsAndInvariants) {
  const auto ds = generate_synthetic(100, 7, 4, 3);
  EXPECT_EQ(ds.train.size(), 70u);
  EXPECT_EQ(ds.validation.size(), 15u);
  EXPECT_EQ(ds.test.size(), 15u);
  EXPECT_EQ(ds.feature_dim, 4);
  EXPECT_NO_THROW(validate(ds));
  std::set<int> ids;
  for (const auto* split : {&ds.train, &ds.validation, &ds.test})
    for (const auto& q : *split) {
      EXPECT_TRUE(ids.insert(q.query_id).second);
      ASSERT_EQ(q.documents.size(), 7u);
      for (std::size_t d = 0; d < q.documents.size(); ++d) {
        EXPECT_EQ(q.documents[d].doc_id, static_cast<int>(d));
        EXPECT_EQ(q.documents[d].binary_label, binarize(q.documents[d].graded_label));
      }
    }
  EXPECT_EQ(ids.size(), 100u);
}

TEST(GenerateSynthetic, RejectsEmptyCounts) {
  EXPECT_THROW(generate_synthetic(10, 0, 8, 1), std::invalid_argument);
  EXPECT_THROW(generate_synthetic(0, 5, 8, 1), std::invalid_argument);
  EXPECT_THROW(generate_synthetic(10, 5, 0, 1), std::invalid_argument);
}

TEST(LtrRoundTrip, ParseOfWriteIsIdentity) {
  for (std::uint64_t seed : {1, 2, 3}) {
    const auto ds = generate_synthetic(20, 6, 5, seed);
    for (const auto* split : {&ds.train, &ds.validation, &ds.test}) {
      const auto back = parse(write(*split));
      EXPECT_EQ(back.queries, *split);
      EXPECT_EQ(back.feature_dim, ds.feature_dim);
    }
  }
}

TEST(LoadLtrDataset, PadsToWidestFile) {
  const auto dir = std::filesystem::temp_directory_path() / "cltr_dataset_test";
  std::filesystem::create_directories(dir);
  std::ofstream(dir / "train.txt") << "3 qid:1 1:1 2:2\n0 qid:1 1:0\n";
  std::ofstream(dir / "vali.txt") << "1 qid:2 4:1\n";
  std::ofstream(dir / "test.txt") << "4 qid:3 1:1\n";
  const auto ds = load_ltr_dataset(dir / "train.txt", dir / "vali.txt", dir / "test.txt");
  EXPECT_EQ(ds.feature_dim, 4);
  EXPECT_EQ(ds.train[0].documents[1].features, (std::vector<double>{0, 0, 0, 0}));
  EXPECT_EQ(ds.validation[0].documents[0].features, (std::vector<double>{0, 0, 0, 1}));

  std::ofstream(dir / "test.txt") << "4 qid:1 1:1\n";
  EXPECT_THROW(load_ltr_dataset(dir / "train.txt", dir / "vali.txt", dir / "test.txt"),
               std::invalid_argument);
  std::filesystem::remove_all(dir);
}

TEST(Validate, RejectsBrokenDocuments) {
  auto ds = generate_synthetic(10, 3, 2, 1);
  ds.train[0].documents[1].doc_id = 5;
  EXPECT_THROW(validate(ds), std::invalid_argument);
  ds = generate_synthetic(10, 3, 2, 1);
  ds.train[0].documents[0].binary_label = 1 - ds.train[0].documents[0].binary_label;
  EXPECT_THROW(validate(ds), std::invalid_argument);
  ds = generate_synthetic(10, 3, 2, 1);
  ds.test[0].documents[0].features.pop_back();
  EXPECT_THROW(validate(ds), std::invalid_argument);
}

}  // namespace
}  // namespace cltr
