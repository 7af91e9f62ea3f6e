#pragma once

#include <fstream>
#include <string>
#include <vector>

#include "kgr/graph.hpp"
#include "kgr/io.hpp"
#include "kgr/rng.hpp"
#include "kgr/training.hpp"

namespace kgr {

// Train/valid/test partition of the query pairs. File format (TSV,
// no header): compound<TAB>disease<TAB>{train|valid|test}.
struct QuerySplit {
  std::vector<Query> train, valid, test;

  std::vector<Query> all() const {
    std::vector<Query> out = train;
    out.insert(out.end(), valid.begin(), valid.end());
    out.insert(out.end(), test.begin(), test.end());
    return out;
  }
};

// Seeded 80/10/10 shuffle split, persisted for reproducibility.
inline QuerySplit make_split(std::vector<Query> pairs, std::uint64_t seed,
                             double train_fraction = 0.8, double valid_fraction = 0.1) {
  Rng rng(derive_seed(seed, fnv1a("split")));
  rng.shuffle(pairs);
  QuerySplit split;
  const std::size_t n = pairs.size();
  const auto n_train = static_cast<std::size_t>(train_fraction * static_cast<double>(n));
  const auto n_valid = static_cast<std::size_t>(valid_fraction * static_cast<double>(n));
  for (std::size_t i = 0; i < n; ++i) {
    if (i < n_train) {
      split.train.push_back(pairs[i]);
    } else if (i < n_train + n_valid) {
      split.valid.push_back(pairs[i]);
    } else {
      split.test.push_back(pairs[i]);
    }
  }
  return split;
}

inline void write_split(const QuerySplit& split, const Vocabulary& vocab,
                        const std::string& path) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw DataError("cannot write split file: " + path);
  auto emit = [&](const std::vector<Query>& queries, const char* label) {
    for (const Query& q : queries) {
      os << vocab.entity_name(q.source) << '\t' << vocab.entity_name(q.target) << '\t' << label
         << '\n';
    }
  };
  emit(split.train, "train");
  emit(split.valid, "valid");
  emit(split.test, "test");
}

inline QuerySplit read_split(const std::string& path, const Vocabulary& vocab) {
  QuerySplit out;
  std::size_t lineno = 0;
  for (const std::string& line : read_lines(path)) {
    ++lineno;
    if (line.empty()) continue;
    auto cols = split(line, '\t');
    const std::string where = path + ":" + std::to_string(lineno);
    if (cols.size() != 3) throw MalformedRow(where + ": expected 3 columns");
    auto src = vocab.entity_id(cols[0]);
    auto dst = vocab.entity_id(cols[1]);
    if (!src || !dst) {
      throw DataError(where + ": split references an entity that is not in the graph");
    }
    const Query q{*src, *dst};
    if (cols[2] == "train") {
      out.train.push_back(q);
    } else if (cols[2] == "valid") {
      out.valid.push_back(q);
    } else if (cols[2] == "test") {
      out.test.push_back(q);
    } else {
      throw MalformedRow(where + ": unknown split label '" + std::string(cols[2]) + "'");
    }
  }
  return out;
}

}  // namespace kgr
