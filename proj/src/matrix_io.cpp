#include "sopbound/matrix_io.hpp"

#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <vector>

#include <fmt/format.h>

#include "sopbound/error.hpp"

namespace sopbound::io {

namespace {

double parse_real(std::string_view s, std::string_view whole) {
  if (s.empty() || s == "+") return 1.0;
  if (s == "-") return -1.0;
  if (s.front() == '+') s.remove_prefix(1);
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw DomainError("cannot parse number '" + std::string(whole) + "'");
  }
  return value;
}

bool is_blank(const std::string& line) {
  return line.find_first_not_of(" \t\r") == std::string::npos;
}

Eigen::MatrixXcd to_matrix(const std::vector<std::vector<std::complex<double>>>& rows) {
  if (rows.empty()) return {};
  const auto cols = rows.front().size();
  Eigen::MatrixXcd m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != cols) throw DimensionError("matrix rows have different lengths");
    for (std::size_t j = 0; j < cols; ++j) {
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    }
  }
  return m;
}

std::vector<std::complex<double>> parse_row(std::string_view line) {
  std::vector<std::complex<double>> row;
  std::istringstream ss{std::string(line)};
  std::string token;
  while (ss >> token) row.push_back(parse_complex(token));
  return row;
}

}  // namespace

std::complex<double> parse_complex(std::string_view token) {
  if (token.empty()) throw DomainError("empty numeric token");
  const char last = token.back();
  if (last != 'j' && last != 'i') return {parse_real(token, token), 0.0};
  const std::string_view body = token.substr(0, token.size() - 1);
  // Split at the last sign that is not a leading sign or an exponent sign.
  std::size_t split = std::string_view::npos;
  for (std::size_t k = body.size(); k-- > 1;) {
    if ((body[k] == '+' || body[k] == '-') && body[k - 1] != 'e' && body[k - 1] != 'E') {
      split = k;
      break;
    }
  }
  if (split == std::string_view::npos) return {0.0, parse_real(body, token)};
  return {parse_real(body.substr(0, split), token), parse_real(body.substr(split), token)};
}

std::string format_complex(std::complex<double> value) {
  if (value.imag() == 0.0 && !std::signbit(value.imag())) return fmt::format("{:.17g}", value.real());
  return fmt::format("{:.17g}{}{:.17g}j", value.real(), std::signbit(value.imag()) ? "-" : "+",
                     std::abs(value.imag()));
}

Eigen::MatrixXcd read_matrix(std::istream& in) {
  std::vector<std::vector<std::complex<double>>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.front() == '#') continue;
    if (is_blank(line)) {
      if (rows.empty()) continue;
      break;
    }
    rows.push_back(parse_row(line));
  }
  return to_matrix(rows);
}

void write_matrix(std::ostream& out, const Eigen::MatrixXcd& m) {
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j > 0) out << ' ';
      out << format_complex(m(i, j));
    }
    out << '\n';
  }
}

Eigen::MatrixXcd parse_inline_matrix(std::string_view text) {
  std::vector<std::vector<std::complex<double>>> rows;
  std::size_t start = 0;
  while (start <= text.size()) {
    const std::size_t end = std::min(text.find(';', start), text.size());
    const auto row = parse_row(text.substr(start, end - start));
    if (!row.empty()) rows.push_back(row);
    start = end + 1;
  }
  if (rows.empty()) throw DomainError("inline matrix is empty");
  return to_matrix(rows);
}

pencil::MatrixPencil read_pencil(std::istream& in) {
  Eigen::MatrixXcd b = read_matrix(in);
  Eigen::MatrixXcd a = read_matrix(in);
  if (b.size() == 0 || a.size() == 0) throw DimensionError("pencil file needs two matrix blocks");
  return {std::move(b), std::move(a)};
}

pencil::MatrixPencil read_pencil_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DomainError("cannot open pencil file '" + path + "'");
  return read_pencil(in);
}

void write_pencil(std::ostream& out, const pencil::MatrixPencil& p) {
  write_matrix(out, p.b());
  out << '\n';
  write_matrix(out, p.a());
}

}  // namespace sopbound::io
