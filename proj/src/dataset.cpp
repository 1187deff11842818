#include "cltr/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <random>
#include <set>
#include <sstream>
#include <string_view>
#include <utility>

namespace cltr {
namespace {

constexpr double kLatentNoiseStddev = 0.5;

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

template <typename T>
bool parse_number(std::string_view token, T& value) {
  const char* end = token.data() + token.size();
  auto [ptr, ec] = std::from_chars(token.data(), end, value);
  return ec == std::errc() && ptr == end;
}

std::vector<std::string_view> split_ws(std::string_view s) {
  std::vector<std::string_view> tokens;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) ++i;
    std::size_t j = i;
    while (j < s.size() && s[j] != ' ' && s[j] != '\t') ++j;
    if (j > i) tokens.push_back(s.substr(i, j - i));
    i = j;
  }
  return tokens;
}

// Round-trips a value through the 6-significant-digit text form.
double quantize(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  double out = 0.0;
  parse_number(std::string_view(buf), out);
  return out;
}

void pad_features(std::vector<Query>& queries, int dim) {
  for (auto& q : queries)
    for (auto& d : q.documents) d.features.resize(static_cast<std::size_t>(dim), 0.0);
}

}  // namespace

int binarize(int graded_label) {
  if (graded_label < 0 || graded_label > 4)
    throw std::invalid_argument("graded label out of range 0..4: " +
                                std::to_string(graded_label));
  return graded_label > 2 ? 1 : 0;
}

LtrFile parse_ltr(std::istream& in) {
  LtrFile result;
  std::set<int> finished_qids;
  std::string raw;
  std::size_t line_no = 0;

  while (std::getline(in, raw)) {
    ++line_no;
    std::string_view line(raw);
    if (const auto hash = line.find('#'); hash != std::string_view::npos)
      line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;

    const auto tokens = split_ws(line);
    if (tokens.size() < 2) throw ParseError(line_no, "expected '<label> qid:<q> ...'");

    int label = 0;
    if (!parse_number(tokens[0], label)) throw ParseError(line_no, "bad label '" + std::string(tokens[0]) + "'");
    if (label < 0 || label > 4) throw ParseError(line_no, "label out of range 0..4");

    if (tokens[1].substr(0, 4) != "qid:") throw ParseError(line_no, "missing qid");
    int qid = 0;
    if (!parse_number(tokens[1].substr(4), qid)) throw ParseError(line_no, "bad qid");

    Document doc;
    doc.graded_label = label;
    doc.binary_label = binarize(label);
    int last_fid = 0;
    for (std::size_t t = 2; t < tokens.size(); ++t) {
      const auto colon = tokens[t].find(':');
      if (colon == std::string_view::npos)
        throw ParseError(line_no, "expected <fid>:<value>, got '" + std::string(tokens[t]) + "'");
      int fid = 0;
      double value = 0.0;
      if (!parse_number(tokens[t].substr(0, colon), fid) || fid < 1)
        throw ParseError(line_no, "bad feature id");
      if (fid <= last_fid) throw ParseError(line_no, "feature ids must be increasing");
      if (!parse_number(tokens[t].substr(colon + 1), value))
        throw ParseError(line_no, "bad feature value");
      last_fid = fid;
      doc.features.resize(static_cast<std::size_t>(fid), 0.0);
      doc.features[static_cast<std::size_t>(fid - 1)] = value;
    }
    result.feature_dim = std::max(result.feature_dim, last_fid);

    if (result.queries.empty() || result.queries.back().query_id != qid) {
      if (!result.queries.empty()) finished_qids.insert(result.queries.back().query_id);
      if (finished_qids.count(qid))
        throw ParseError(line_no, "non-contiguous qid blocks (qid " + std::to_string(qid) + ")");
      result.queries.push_back(Query{qid, {}});
    }
    auto& docs = result.queries.back().documents;
    doc.doc_id = static_cast<int>(docs.size());
    docs.push_back(std::move(doc));
  }

  if (result.queries.empty()) throw ParseError(0, "empty LTR file");
  pad_features(result.queries, result.feature_dim);
  return result;
}

LtrFile parse_ltr_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return parse_ltr(in);
}

void write_ltr(std::ostream& out, std::span<const Query> queries) {
  char buf[64];
  for (const auto& q : queries) {
    for (const auto& d : q.documents) {
      out << d.graded_label << " qid:" << q.query_id;
      for (std::size_t f = 0; f < d.features.size(); ++f) {
        std::snprintf(buf, sizeof(buf), " %zu:%.6g", f + 1, d.features[f]);
        out << buf;
      }
      out << '\n';
    }
  }
}

void write_ltr_file(const std::filesystem::path& path, std::span<const Query> queries) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  write_ltr(out, queries);
}

Dataset load_ltr_dataset(const std::filesystem::path& train,
                         const std::filesystem::path& validation,
                         const std::filesystem::path& test) {
  auto tr = parse_ltr_file(train);
  auto va = parse_ltr_file(validation);
  auto te = parse_ltr_file(test);
  Dataset ds;
  ds.feature_dim = std::max({tr.feature_dim, va.feature_dim, te.feature_dim});
  ds.train = std::move(tr.queries);
  ds.validation = std::move(va.queries);
  ds.test = std::move(te.queries);
  pad_features(ds.train, ds.feature_dim);
  pad_features(ds.validation, ds.feature_dim);
  pad_features(ds.test, ds.feature_dim);
  validate(ds);
  return ds;
}

Dataset generate_synthetic(int n_queries, int docs_per_query, int feature_dim,
                           std::uint64_t seed) {
  if (n_queries < 1 || docs_per_query < 1 || feature_dim < 1)
    throw std::invalid_argument("generate_synthetic: all counts must be >= 1");

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);

  std::vector<double> planted(static_cast<std::size_t>(feature_dim));
  // Unit-variance signal against the fixed 0.5 noise.
  for (auto& w : planted) w = normal(rng) / std::sqrt(static_cast<double>(feature_dim));

  std::vector<Query> queries(static_cast<std::size_t>(n_queries));
  std::vector<double> latent;
  latent.reserve(static_cast<std::size_t>(n_queries) * docs_per_query);
  for (int q = 0; q < n_queries; ++q) {
    auto& query = queries[static_cast<std::size_t>(q)];
    query.query_id = q;
    query.documents.resize(static_cast<std::size_t>(docs_per_query));
    for (int d = 0; d < docs_per_query; ++d) {
      auto& doc = query.documents[static_cast<std::size_t>(d)];
      doc.doc_id = d;
      doc.features.resize(static_cast<std::size_t>(feature_dim));
      double s = 0.0;
      for (int f = 0; f < feature_dim; ++f) {
        doc.features[f] = quantize(normal(rng));
        s += planted[f] * doc.features[f];
      }
      latent.push_back(s + kLatentNoiseStddev * normal(rng));
    }
  }

  // Global quintile buckets of the latent score.
  std::vector<std::size_t> order(latent.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return latent[a] < latent[b]; });
  for (std::size_t pos = 0; pos < order.size(); ++pos) {
    const std::size_t flat = order[pos];
    auto& doc = queries[flat / docs_per_query].documents[flat % docs_per_query];
    doc.graded_label = static_cast<int>(pos * 5 / order.size());
    doc.binary_label = binarize(doc.graded_label);
  }

  std::vector<std::size_t> perm(queries.size());
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  const auto n = static_cast<std::size_t>(n_queries);
  const auto n_train = static_cast<std::size_t>(std::lround(0.70 * n_queries));
  const auto n_val = std::min(n - n_train, static_cast<std::size_t>(std::lround(0.15 * n_queries)));
  std::sort(perm.begin(), perm.begin() + n_train);
  std::sort(perm.begin() + n_train, perm.begin() + n_train + n_val);
  std::sort(perm.begin() + n_train + n_val, perm.end());

  Dataset ds;
  ds.feature_dim = feature_dim;
  for (std::size_t i = 0; i < n; ++i) {
    auto& target = i < n_train ? ds.train : (i < n_train + n_val ? ds.validation : ds.test);
    target.push_back(std::move(queries[perm[i]]));
  }
  return ds;
}

void validate_queries(std::span<const Query> queries, int feature_dim) {
  for (const auto& q : queries) {
    if (q.documents.empty())
      throw std::invalid_argument("query " + std::to_string(q.query_id) + " has no documents");
    for (std::size_t i = 0; i < q.documents.size(); ++i) {
      const auto& d = q.documents[i];
      if (d.doc_id != static_cast<int>(i))
        throw std::invalid_argument("doc ids must be 0..n-1 in query " + std::to_string(q.query_id));
      if (static_cast<int>(d.features.size()) != feature_dim)
        throw std::invalid_argument("feature length mismatch in query " + std::to_string(q.query_id));
      if (d.binary_label != binarize(d.graded_label))
        throw std::invalid_argument("binary label inconsistent with graded label");
    }
  }
}

void validate(const Dataset& dataset) {
  std::set<int> seen;
  for (const auto* split : {&dataset.train, &dataset.validation, &dataset.test}) {
    validate_queries(*split, dataset.feature_dim);
    for (const auto& q : *split)
      if (!seen.insert(q.query_id).second)
        throw std::invalid_argument("duplicate query id " + std::to_string(q.query_id));
  }
}

std::size_t max_documents(std::span<const Query> queries) {
  std::size_t m = 0;
  for (const auto& q : queries) m = std::max(m, q.documents.size());
  return m;
}

}  // namespace cltr
