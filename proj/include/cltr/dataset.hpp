#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace cltr {

struct Document {
  int doc_id = 0;
  std::vector<double> features;
  int graded_label = 0;
  int binary_label = 0;

  bool operator==(const Document&) const = default;
};

struct Query {
  int query_id = 0;
  std::vector<Document> documents;

  bool operator==(const Query&) const = default;
};

struct Dataset {
  std::vector<Query> train;
  std::vector<Query> validation;
  std::vector<Query> test;
  int feature_dim = 0;

  bool operator==(const Dataset&) const = default;
};

/// Queries read from one LTR text file.
struct LtrFile {
  std::vector<Query> queries;
  int feature_dim = 0;
};

class ParseError : public std::runtime_error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}

  /// 1-based line number of the offending input line (0 for whole-file errors).
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

/// 1 iff graded_label > 2. Throws std::invalid_argument outside 0..4.
int binarize(int graded_label);

/// Reads `<label> qid:<q> <fid>:<val> ... [# comment]` lines. Feature ids are
/// 1-based and may be sparse; absent ids become 0.0. Documents of one query
/// must form a contiguous block.
LtrFile parse_ltr(std::istream& in);
LtrFile parse_ltr_file(const std::filesystem::path& path);

/// Dense output with 6 significant digits per feature.
void write_ltr(std::ostream& out, std::span<const Query> queries);
void write_ltr_file(const std::filesystem::path& path, std::span<const Query> queries);

/// Loads train/validation/test files and pads all features to the largest
/// dimension seen.
Dataset load_ltr_dataset(const std::filesystem::path& train,
                         const std::filesystem::path& validation,
                         const std::filesystem::path& test);

/// Gaussian features, a planted linear scorer plus N(0, 0.5^2) noise, and
/// graded labels from the dataset-wide quintile of the latent score.
/// Queries are split 70/15/15.
Dataset generate_synthetic(int n_queries, int docs_per_query, int feature_dim,
                           std::uint64_t seed);

/// Throws std::invalid_argument when any Document/Query/Dataset invariant is
/// broken.
void validate(const Dataset& dataset);
void validate_queries(std::span<const Query> queries, int feature_dim);

std::size_t max_documents(std::span<const Query> queries);

}  // namespace cltr
