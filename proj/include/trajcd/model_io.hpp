#pragma once

#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>
#include <type_traits>
#include <vector>

#include <boost/crc.hpp>

#include "trajcd/error.hpp"
#include "trajcd/model.hpp"

// Model file layout (one record per line, '\n' separated):
//
//   trajcd-model 1
//   scalar_digits <mantissa bits of the stored scalar>
//   degree_d <d>
//   degree_n <n>
//   epsilon <17 significant digits>
//   samples <N>
//   domain <lo> <hi>
//   basis graded-lex
//   dimension <m>
//   meta <key> <value>            (zero or more, sorted by key)
//   moment_sum
//   <m lines of m space-separated entries, row-major, max_digits10 digits>
//   checksum crc32 <8 lowercase hex digits over every preceding byte>

namespace trajcd {

inline constexpr int kModelFormatVersion = 1;

namespace detail {

inline std::string format_double(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

template <typename Real>
std::string format_real(Real x) {
  char buf[96];
  if constexpr (std::is_same_v<Real, long double>) {
    std::snprintf(buf, sizeof buf, "%.*Lg", std::numeric_limits<long double>::max_digits10, x);
  } else {
    std::snprintf(buf, sizeof buf, "%.*g", std::numeric_limits<double>::max_digits10,
                  static_cast<double>(x));
  }
  return buf;
}

template <typename Real>
Real parse_real(const std::string& token, const std::string& what) {
  if (token.empty()) throw InputError("model file: empty value for " + what);
  errno = 0;
  char* end = nullptr;
  Real value;
  if constexpr (std::is_same_v<Real, long double>) {
    value = std::strtold(token.c_str(), &end);
  } else {
    value = static_cast<Real>(std::strtod(token.c_str(), &end));
  }
  if (end != token.c_str() + token.size() || errno == ERANGE) {
    throw InputError("model file: cannot parse '" + token + "' as " + what);
  }
  return value;
}

inline long long parse_integer(const std::string& token, const std::string& what) {
  try {
    std::size_t used = 0;
    const long long value = std::stoll(token, &used);
    if (used != token.size()) throw std::invalid_argument(token);
    return value;
  } catch (const std::logic_error&) {
    throw InputError("model file: cannot parse '" + token + "' as " + what);
  }
}

inline std::string crc32_hex(const std::string& bytes) {
  boost::crc_32_type crc;
  crc.process_bytes(bytes.data(), bytes.size());
  char buf[16];
  std::snprintf(buf, sizeof buf, "%08x", static_cast<unsigned>(crc.checksum()));
  return buf;
}

inline std::vector<std::string> split_words(const std::string& line) {
  std::vector<std::string> words;
  std::istringstream in(line);
  for (std::string w; in >> w;) words.push_back(w);
  return words;
}

// Pops the next line, requiring `key` as first word; returns the remaining words.
inline std::vector<std::string> expect_record(std::istream& in, const std::string& key,
                                              std::size_t arity) {
  std::string line;
  if (!std::getline(in, line)) throw InputError("model file: truncated before '" + key + "'");
  auto words = split_words(line);
  if (words.empty() || words.front() != key || words.size() != arity + 1) {
    throw InputError("model file: expected '" + key + "' record, got '" + line + "'");
  }
  words.erase(words.begin());
  return words;
}

}  // namespace detail

template <typename Real>
std::string serialize(const BasicChristoffelModel<Real>& model) {
  std::ostringstream out;
  out << "trajcd-model " << kModelFormatVersion << '\n';
  out << "scalar_digits " << std::numeric_limits<Real>::digits << '\n';
  out << "degree_d " << model.algebraic_degree() << '\n';
  out << "degree_n " << model.harmonic_degree() << '\n';
  out << "epsilon " << detail::format_double(model.epsilon()) << '\n';
  out << "samples " << model.sample_count() << '\n';
  out << "domain " << detail::format_double(model.domain().lo) << ' '
      << detail::format_double(model.domain().hi) << '\n';
  out << "basis " << BasisEnumeration::ordering_name() << '\n';
  out << "dimension " << model.dimension() << '\n';
  for (const auto& [key, value] : model.metadata()) {
    if (key.empty() || key.find_first_of(" \t\r\n") != std::string::npos ||
        value.find_first_of("\r\n") != std::string::npos) {
      throw InputError("metadata key '" + key + "' or its value cannot be stored on one line");
    }
    out << "meta " << key << ' ' << value << '\n';
  }
  out << "moment_sum\n";
  const auto& sum = model.moment_sum();
  for (Eigen::Index i = 0; i < sum.rows(); ++i) {
    for (Eigen::Index j = 0; j < sum.cols(); ++j) {
      if (j > 0) out << ' ';
      out << detail::format_real<Real>(sum(i, j));
    }
    out << '\n';
  }
  std::string body = out.str();
  body += "checksum crc32 " + detail::crc32_hex(body) + '\n';
  return body;
}

template <typename Real = long double>
BasicChristoffelModel<Real> deserialize(const std::string& text) {
  using Matrix = typename BasicChristoffelModel<Real>::Matrix;
  if (text.empty()) throw InputError("model file is empty");

  const auto tail = text.rfind("checksum ");
  if (tail == std::string::npos || (tail > 0 && text[tail - 1] != '\n')) {
    throw InputError("model file: missing checksum record");
  }
  {
    const auto words = detail::split_words(text.substr(tail));
    if (words.size() != 3 || words[1] != "crc32") {
      throw InputError("model file: malformed checksum record");
    }
    if (words[2] != detail::crc32_hex(text.substr(0, tail))) {
      throw InputError("model file: checksum mismatch (file is corrupt or was edited)");
    }
  }

  std::istringstream in(text.substr(0, tail));
  const auto header = detail::expect_record(in, "trajcd-model", 1);
  if (detail::parse_integer(header[0], "format version") != kModelFormatVersion) {
    throw InputError("model file: unsupported format version " + header[0]);
  }
  const auto digits = detail::parse_integer(detail::expect_record(in, "scalar_digits", 1)[0],
                                            "scalar digits");
  if (digits != std::numeric_limits<Real>::digits) {
    throw InputError("model file: stored with a " + std::to_string(digits) +
                     "-bit mantissa, this build reads " +
                     std::to_string(std::numeric_limits<Real>::digits));
  }
  const auto d = detail::parse_integer(detail::expect_record(in, "degree_d", 1)[0], "degree d");
  const auto n = detail::parse_integer(detail::expect_record(in, "degree_n", 1)[0], "degree n");
  const double epsilon =
      detail::parse_real<double>(detail::expect_record(in, "epsilon", 1)[0], "epsilon");
  const auto samples =
      detail::parse_integer(detail::expect_record(in, "samples", 1)[0], "sample count");
  const auto dom = detail::expect_record(in, "domain", 2);
  const Domain domain(detail::parse_real<double>(dom[0], "domain"),
                      detail::parse_real<double>(dom[1], "domain"));
  if (detail::expect_record(in, "basis", 1)[0] != BasisEnumeration::ordering_name()) {
    throw InputError("model file: unknown basis ordering");
  }
  const auto dim = detail::parse_integer(detail::expect_record(in, "dimension", 1)[0], "dimension");
  if (d < 0 || n < 1 || d > 10000 || n > 10000) throw InputError("model file: invalid degrees");
  if (dim < 0 || static_cast<std::size_t>(dim) != basis_dimension(static_cast<int>(d),
                                                                  static_cast<int>(n))) {
    throw InputError("model file: dimension " + std::to_string(dim) +
                     " does not match binomial(n+d, n) for d=" + std::to_string(d) +
                     ", n=" + std::to_string(n));
  }
  if (samples < 1) throw InputError("model file: sample count must be positive");

  Metadata metadata;
  std::string line;
  while (true) {
    if (!std::getline(in, line)) throw InputError("model file: missing moment_sum");
    if (line == "moment_sum") break;
    if (line.rfind("meta ", 0) != 0) throw InputError("model file: unexpected record '" + line + "'");
    const auto rest = line.substr(5);
    const auto space = rest.find(' ');
    if (space == std::string::npos) throw InputError("model file: malformed meta record");
    metadata[rest.substr(0, space)] = rest.substr(space + 1);
  }

  Matrix sum(dim, dim);
  for (Eigen::Index i = 0; i < dim; ++i) {
    if (!std::getline(in, line)) throw InputError("model file: moment_sum is truncated");
    const auto words = detail::split_words(line);
    if (static_cast<Eigen::Index>(words.size()) != dim) {
      throw InputError("model file: moment_sum row " + std::to_string(i + 1) + " has " +
                       std::to_string(words.size()) + " entries, expected " +
                       std::to_string(dim));
    }
    for (Eigen::Index j = 0; j < dim; ++j) {
      sum(i, j) = detail::parse_real<Real>(words[static_cast<std::size_t>(j)], "moment entry");
    }
  }
  if (std::getline(in, line)) throw InputError("model file: trailing data after moment_sum");

  return BasicChristoffelModel<Real>::from_moment_sum(
      static_cast<int>(d), static_cast<int>(n), std::move(sum), static_cast<std::size_t>(samples),
      epsilon, domain, std::move(metadata), false);
}

template <typename Real>
void save(const BasicChristoffelModel<Real>& model, std::ostream& sink) {
  sink << serialize(model);
  if (!sink) throw InputError("failed to write the model");
}

template <typename Real = long double>
BasicChristoffelModel<Real> load(std::istream& source) {
  std::ostringstream buffer;
  buffer << source.rdbuf();
  return deserialize<Real>(buffer.str());
}

template <typename Real>
void save_file(const BasicChristoffelModel<Real>& model, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot open '" + path + "' for writing");
  save(model, out);
}

template <typename Real = long double>
BasicChristoffelModel<Real> load_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open model file '" + path + "'");
  return load<Real>(in);
}

}  // namespace trajcd
