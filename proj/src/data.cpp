#include "ncc/data.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>

namespace ncc {

Vec Dataset::dense_row(std::size_t i) const {
  Vec row(d, 0.0);
  for (std::uint64_t k = row_ptr[i]; k < row_ptr[i + 1]; ++k) {
    row[col[k]] = val[k];
  }
  return row;
}

Dataset Dataset::subset(const std::vector<std::uint32_t>& rows) const {
  Dataset out;
  out.d = d;
  out.n = rows.size();
  out.labels.reserve(rows.size());
  out.row_ptr.reserve(rows.size() + 1);
  out.row_ptr.push_back(0);
  for (std::uint32_t r : rows) {
    out.labels.push_back(labels[r]);
    for (std::uint64_t k = row_ptr[r]; k < row_ptr[r + 1]; ++k) {
      out.col.push_back(col[k]);
      out.val.push_back(val[k]);
    }
    out.row_ptr.push_back(out.col.size());
  }
  return out;
}

namespace {

[[noreturn]] void parse_fail(std::size_t line_no, const std::string& msg) {
  throw ParseError("libsvm parse error at line " + std::to_string(line_no) +
                   ": " + msg);
}

std::int8_t map_label(double raw, std::size_t line_no) {
  if (raw == 0.0 || raw == -1.0) return -1;
  if (raw == 1.0) return 1;
  parse_fail(line_no, "unsupported label " + std::to_string(raw));
}

}  // namespace

Dataset parse_libsvm(std::istream& in, std::size_t min_dim) {
  Dataset ds;
  ds.row_ptr.push_back(0);
  std::string line;
  std::size_t line_no = 0;
  std::size_t max_index = 0;  // 1-based
  while (std::getline(in, line)) {
    ++line_no;
    std::size_t pos = line.find_first_not_of(" \t\r");
    if (pos == std::string::npos || line[pos] == '#') continue;

    std::istringstream ls(line.substr(pos));
    std::string tok;
    if (!(ls >> tok)) continue;
    double raw_label;
    {
      auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), raw_label);
      if (ec != std::errc() || p != tok.data() + tok.size()) {
        // from_chars does not accept a leading '+'
        if (!tok.empty() && tok[0] == '+') {
          auto [p2, ec2] = std::from_chars(tok.data() + 1, tok.data() + tok.size(), raw_label);
          if (ec2 != std::errc() || p2 != tok.data() + tok.size()) {
            parse_fail(line_no, "malformed label '" + tok + "'");
          }
        } else {
          parse_fail(line_no, "malformed label '" + tok + "'");
        }
      }
    }
    ds.labels.push_back(map_label(raw_label, line_no));

    std::size_t prev_index = 0;
    while (ls >> tok) {
      if (tok[0] == '#') break;  // trailing comment
      const std::size_t colon = tok.find(':');
      if (colon == std::string::npos || colon == 0 || colon + 1 == tok.size()) {
        parse_fail(line_no, "malformed feature token '" + tok + "'");
      }
      std::size_t index = 0;
      {
        auto [p, ec] = std::from_chars(tok.data(), tok.data() + colon, index);
        if (ec != std::errc() || p != tok.data() + colon || index == 0) {
          parse_fail(line_no, "malformed feature index in '" + tok + "'");
        }
      }
      if (index <= prev_index) {
        parse_fail(line_no, "feature indices must be strictly increasing");
      }
      prev_index = index;
      double value = 0.0;
      {
        const char* b = tok.data() + colon + 1;
        const char* e = tok.data() + tok.size();
        auto [p, ec] = std::from_chars(b, e, value);
        if (ec != std::errc() || p != e) {
          parse_fail(line_no, "malformed feature value in '" + tok + "'");
        }
      }
      ds.col.push_back(static_cast<std::uint32_t>(index - 1));
      ds.val.push_back(value);
      max_index = std::max(max_index, index);
    }
    ds.row_ptr.push_back(ds.col.size());
  }
  ds.n = ds.labels.size();
  if (ds.n == 0) throw ParseError("empty dataset");
  ds.d = std::max(max_index, min_dim);
  return ds;
}

Dataset load_libsvm(const std::string& path, std::size_t min_dim) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open dataset file: " + path);
  return parse_libsvm(in, min_dim);
}

void serialize_libsvm(const Dataset& ds, std::ostream& out) {
  char buf[64];
  for (std::size_t i = 0; i < ds.n; ++i) {
    out << (ds.labels[i] > 0 ? "+1" : "-1");
    for (std::uint64_t k = ds.row_ptr[i]; k < ds.row_ptr[i + 1]; ++k) {
      std::snprintf(buf, sizeof(buf), " %u:%.17g", ds.col[k] + 1, ds.val[k]);
      out << buf;
    }
    out << '\n';
  }
}

Dataset subsample(const Dataset& ds, std::size_t m, std::uint64_t seed) {
  if (m == 0 || m > ds.n) {
    throw std::invalid_argument("subsample: need 0 < m <= n");
  }
  RngStream rng(seed, fnv1a("subsample"));
  std::vector<std::uint32_t> rows, scratch;
  rng.sample_without_replacement(ds.n, m, rows, scratch);
  std::sort(rows.begin(), rows.end());
  return ds.subset(rows);
}

PoisonData gen_poison_data(std::uint64_t seed, std::size_t n, std::size_t d,
                           double noise_var) {
  if (n == 0 || d == 0) throw std::invalid_argument("gen_poison_data: n, d must be positive");
  RngStream rng(seed, fnv1a("poison-data"));
  PoisonData out;
  out.theta_star.resize(d);
  for (auto& v : out.theta_star) v = rng.normal();

  Dataset& ds = out.data;
  ds.n = n;
  ds.d = d;
  ds.labels.resize(n);
  ds.row_ptr.resize(n + 1);
  ds.col.resize(n * d);
  ds.val.resize(n * d);
  const double noise_sd = std::sqrt(noise_var);
  Vec z(d);
  for (std::size_t i = 0; i < n; ++i) {
    ds.row_ptr[i] = i * d;
    for (std::size_t j = 0; j < d; ++j) z[j] = rng.normal();
    const double nu = noise_var > 0.0 ? noise_sd * rng.normal() : 0.0;
    const double logit = dot(z, out.theta_star) + nu;
    // sigmoid(logit) > 0.5 iff logit > 0
    ds.labels[i] = logit > 0.0 ? 1 : 0;
    for (std::size_t j = 0; j < d; ++j) {
      ds.col[i * d + j] = static_cast<std::uint32_t>(j);
      ds.val[i * d + j] = z[j];
    }
  }
  ds.row_ptr[n] = n * d;
  return out;
}

PoisonSplit split_poison(const Dataset& ds, std::uint64_t seed,
                         double test_frac, double poison_ratio) {
  if (!(test_frac > 0.0 && test_frac < 1.0)) {
    throw std::invalid_argument("split_poison: need 0 < test_frac < 1");
  }
  if (!(poison_ratio > 0.0 && poison_ratio < 1.0)) {
    throw std::invalid_argument("split_poison: need 0 < poison_ratio < 1");
  }
  std::vector<std::uint32_t> perm(ds.n);
  std::iota(perm.begin(), perm.end(), 0u);
  RngStream rng(seed, fnv1a("poison-split"));
  for (std::size_t i = 0; i + 1 < ds.n; ++i) {
    std::size_t j = i + static_cast<std::size_t>(rng.uniform_index(ds.n - i));
    std::swap(perm[i], perm[j]);
  }
  const std::size_t n_test = static_cast<std::size_t>(
      std::floor(test_frac * static_cast<double>(ds.n)));
  const std::size_t n_train = ds.n - n_test;
  const std::size_t n_tr1 = static_cast<std::size_t>(
      std::floor(poison_ratio * static_cast<double>(n_train)));
  const std::size_t n_tr2 = n_train - n_tr1;
  if (n_test == 0 || n_tr1 == 0 || n_tr2 == 0) {
    throw std::invalid_argument("split_poison: degenerate empty part");
  }
  PoisonSplit sp;
  sp.test_rows.assign(perm.begin(), perm.begin() + n_test);
  sp.tr1_rows.assign(perm.begin() + n_test, perm.begin() + n_test + n_tr1);
  sp.tr2_rows.assign(perm.begin() + n_test + n_tr1, perm.end());
  sp.test = ds.subset(sp.test_rows);
  sp.tr1 = ds.subset(sp.tr1_rows);
  sp.tr2 = ds.subset(sp.tr2_rows);
  return sp;
}

}  // namespace ncc
